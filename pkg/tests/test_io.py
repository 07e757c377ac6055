import numpy as np
import pytest

from ccforce.contact import ContactClassifier, ContactClassifierParams, crowd_contact, stack_training_set
from ccforce.io import (
    FormatError,
    dumps_params,
    loads_params,
    read_classifier,
    read_contact_signals,
    read_demos,
    read_force_series,
    read_params,
    read_posdiff_fits,
    read_stiffness_fits,
    sniff_format,
    write_classifier,
    write_contact_signals,
    write_demos,
    write_force_series,
    write_params,
    write_posdiff_fits,
    write_stiffness_fits,
)
from ccforce.posnet import train_estimator, TrainingConfig
from ccforce.types import ContactSignal, ForceSeries, PosDiffModel, StiffnessModel

DEMO_FIELDS = ("t", "p", "p_des", "f_psm", "f_gt", "keypoints", "contact_gt", "crowd_labels")


def test_demo_round_trip_is_lossless(tmp_path, noisy_demos):
    manifest = write_demos(noisy_demos, tmp_path / "a")
    back = read_demos(manifest)
    assert [d.id for d in back] == [d.id for d in noisy_demos]
    for a, b in zip(noisy_demos, back):
        for name in DEMO_FIELDS:
            assert np.array_equal(getattr(a, name), getattr(b, name)), name
        assert a.k_true == b.k_true and a.sample_rate_hz == b.sample_rate_hz
    write_demos(back, tmp_path / "b")
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
    assert sniff_format(manifest) == "ccforce-demos"


def test_stiffness_and_posdiff_round_trip(tmp_path):
    fits = {"d1": StiffnessModel(1.5, 2.0, 3.25, 4.0, c=np.array([0.1, -0.2, 0.3]), fit_residual=0.01, c_z_minus=-0.4)}
    write_stiffness_fits(fits, "C_V-K_PSM", tmp_path / "s.json", contact_source="crowd", force_source="psm")
    method, back = read_stiffness_fits(tmp_path / "s.json")
    assert method == "C_V-K_PSM"
    m = back["d1"]
    assert np.array_equal(m.k, fits["d1"].k) and np.array_equal(m.c, fits["d1"].c) and m.c_z_minus == -0.4
    pd = {"d1": PosDiffModel(d=np.array([500.0, 499.5, 501.0]), e=np.array([0.01, 0.0, -0.02]))}
    write_posdiff_fits(pd, tmp_path / "p.json")
    got = read_posdiff_fits(tmp_path / "p.json")["d1"]
    assert np.array_equal(got.d, pd["d1"].d) and np.array_equal(got.e, pd["d1"].e)


def test_contact_signal_round_trip(tmp_path):
    sig = {"d1": ContactSignal(contact=np.array([False, True]), probability=np.array([0.2, 0.8]))}
    write_contact_signals(sig, "crowd", tmp_path / "c.json")
    source, back = read_contact_signals(tmp_path / "c.json")
    assert source == "crowd"
    assert np.array_equal(back["d1"].contact, sig["d1"].contact)
    assert np.array_equal(back["d1"].probability, sig["d1"].probability)


def test_classifier_round_trip(tmp_path, noisy_demos):
    X, y = stack_training_set(noisy_demos[:1], [crowd_contact(noisy_demos[0])])
    params = ContactClassifier(epochs=5).fit(X, y).to_params()
    write_classifier(params, tmp_path / "clf.json")
    back = read_classifier(tmp_path / "clf.json")
    assert np.array_equal(back.weights, params.weights) and back.bias == params.bias
    assert np.array_equal(back.feature_mean, params.feature_mean)
    assert back.final_loss == params.final_loss
    bare = ContactClassifierParams(weights=np.zeros(6), bias=0.0)
    write_classifier(bare, tmp_path / "bare.json")
    assert np.isnan(read_classifier(tmp_path / "bare.json").final_loss)


def test_force_series_round_trip(tmp_path):
    f = np.random.default_rng(0).normal(size=(5, 3))
    t = np.arange(5) / 100.0
    write_force_series(ForceSeries(f=f, source="PosDiff"), t, tmp_path / "f.csv")
    t2, back = read_force_series(tmp_path / "f.csv", "PosDiff")
    assert np.array_equal(t2, t) and np.array_equal(back.f, f)
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(FormatError):
        read_force_series(tmp_path / "bad.csv", "PosDiff")


@pytest.mark.parametrize("kind", ["fcn", "gnn"])
def test_params_round_trip(tmp_path, kind):
    rng = np.random.default_rng(0)
    X, Y = rng.random((16, 32)), rng.random((16, 3))
    params = train_estimator(kind, X, Y, TrainingConfig(epochs=2, batch_size=8), hidden=4)
    write_params(params, tmp_path / "m.params")
    back = read_params(tmp_path / "m.params")
    assert back.model_kind == kind and back.hidden == 4
    for k, v in params.arrays.items():
        assert np.array_equal(back.arrays[k], v)
    assert np.array_equal(back.input_mean, params.input_mean)
    assert back.loss_history == params.loss_history
    data = dumps_params(params)
    with pytest.raises(FormatError):
        loads_params(data[: len(data) // 2])


def test_wrong_format_is_rejected(tmp_path):
    write_posdiff_fits({"d": PosDiffModel(d=np.ones(3), e=np.zeros(3))}, tmp_path / "p.json")
    with pytest.raises(FormatError):
        read_stiffness_fits(tmp_path / "p.json")
    (tmp_path / "junk.json").write_text("{not json")
    with pytest.raises(FormatError):
        read_classifier(tmp_path / "junk.json")
