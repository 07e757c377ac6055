import copy
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccforce import config as cfgmod
from ccforce.contact import ContactClassifier, crowd_contact, stack_training_set
from ccforce.eval import (
    _classifier_kwargs,
    _mean_accuracy,
    _sweep_seed,
    classification_metrics,
    data_efficiency_sweep,
    nrmse,
    rmse_normalized_position,
    run_benchmark,
    simulate_split,
    stiffness_error_report,
    summarize,
)
from ccforce.report import dumps_report
from ccforce.simulator import SILICONE
from ccforce.types import StiffnessModel

ZERO_NOISE = dict(
    f_psm_bias=0.0,
    f_psm_gain_std=0.0,
    f_psm_std=0.0,
    f_psm_lowpass_hz=0.0,
    encoder_std=0.0,
    pixel_std=0.0,
    servo_lag_s=0.0,
    friction=0.0,
    servo_coulomb=0.0,
)


def _naive_nrmse(est, gt):
    n = len(gt)
    sq = 0.0
    for i in range(n):
        sq += (est[i] - gt[i]) ** 2
    return math.sqrt(sq / n) / (max(gt) - min(gt))


def test_nrmse_examples():
    f = np.random.default_rng(0).normal(size=(10, 3))
    r = nrmse(f, f)
    assert r.norm == 0.0 and r.axes == (0.0, 0.0, 0.0)
    gt = np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    est = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    r = nrmse(est, gt)
    assert r.axes[0] == pytest.approx(0.5)
    # flags are ordered norm, x, y, z
    assert math.isnan(r.axes[1]) and r.degenerate == (False, False, True, True)


def test_nrmse_matches_loop_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        gt, est = rng.normal(size=(50, 3)), rng.normal(size=(50, 3))
        r = nrmse(est, gt)
        for a in range(3):
            assert r.axes[a] == pytest.approx(_naive_nrmse(est[:, a], gt[:, a]), rel=1e-12)
        assert r.norm == pytest.approx(
            _naive_nrmse(np.linalg.norm(est, axis=1), np.linalg.norm(gt, axis=1)), rel=1e-12
        )


@settings(max_examples=40)
@given(st.floats(0.01, 100.0), st.floats(-10.0, 10.0), st.integers(0, 2**31))
def test_nrmse_axis_affine_invariance(a, b, seed):
    rng = np.random.default_rng(seed)
    gt, est = rng.normal(size=(30, 3)), rng.normal(size=(30, 3))
    r0, r1 = nrmse(est, gt), nrmse(a * est + b, a * gt + b)
    assert np.allclose(r1.axes, r0.axes, rtol=1e-9)


def test_nrmse_symmetric_when_ranges_match():
    gt = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 0.0], [0.5, 0.5, 1.0]])
    est = gt[::-1].copy()
    assert np.allclose(nrmse(est, gt).axes, nrmse(gt, est).axes, rtol=1e-15)


def test_position_rmse_examples():
    rng = np.random.default_rng(2)
    gt = rng.random((40, 3))
    assert rmse_normalized_position(gt, gt).overall == 0.0
    est = gt.copy()
    est[:, 1] += 0.1
    r = rmse_normalized_position(est, gt)
    assert r.axes[1] == pytest.approx(0.1) and r.axes[0] == 0.0
    est = rng.random((40, 3))
    r = rmse_normalized_position(est, gt)
    diffs = [(est[i, j] - gt[i, j]) ** 2 for i in range(40) for j in range(3)]
    assert r.overall == pytest.approx(math.sqrt(sum(diffs) / len(diffs)), rel=1e-12)
    for j in range(3):
        assert r.axes[j] == pytest.approx(math.sqrt(sum((est[i, j] - gt[i, j]) ** 2 for i in range(40)) / 40), rel=1e-12)
    with pytest.raises(ValueError):
        rmse_normalized_position(est[:-1], gt)


def test_classification_examples():
    truth = np.array([True, False, True, False])
    m = classification_metrics(truth, truth)
    assert (m.accuracy, m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0, 1.0)
    m = classification_metrics(np.ones(4, dtype=bool), truth)
    assert (m.precision, m.recall) == (0.5, 1.0) and m.f1 == pytest.approx(2 / 3)
    m = classification_metrics(~truth, truth)
    assert m.accuracy == 0.0 and m.f1 == 0.0
    m = classification_metrics(np.zeros(4, dtype=bool), np.zeros(4, dtype=bool))
    assert math.isnan(m.recall) and m.accuracy == 1.0


def test_summarize_skips_degenerate():
    s = summarize([1.0, 3.0, float("nan")])
    assert s.mean == 2.0 and s.std == pytest.approx(math.sqrt(2)) and s.n == 2 and s.n_degenerate == 1
    assert summarize([4.0]).std is None


def test_stiffness_report_examples():
    ref = StiffnessModel(168.0, 182.0, 108.0, 332.0)
    other = StiffnessModel(124.0, 219.0, 109.0, 322.0)
    rows = {r.method: r for r in stiffness_error_report({"C_FS-K_FS": [ref], "C_V-K_PSM": [other]}, truth=SILICONE)}
    assert rows["C_V-K_PSM"].diff_vs_reference == (-44.0, 37.0, 1.0, -10.0)
    assert rows["C_V-K_PSM"].std is None
    assert rows["C_FS-K_FS"].rel_err_vs_truth == (0.0, 0.0, 0.0, 0.0)
    two = stiffness_error_report({"C_FS-K_FS": [ref, other]})
    assert two[0].std is not None and two[0].n == 2


def _small_config(**over):
    doc = {
        "seed": 4,
        "scene": {"duration_s": 20.0},
        "benchmark": {"n_train": 2, "n_test": 3},
        "position": {"epochs": 5},
    }
    for k, v in over.items():
        doc.setdefault(k, {}).update(v)
    return cfgmod.from_dict(doc)


def test_zero_noise_benchmark_is_exact():
    cfg = _small_config(scene={"noise": ZERO_NOISE, "workers": {"flip_rate": 0.0, "lag_frames": 0}})
    report = run_benchmark(cfg)
    assert report.nrmse["C_FS-K_FS"]["norm"].mean < 1e-6
    for row in report.stiffness:
        if row.method == "C_FS-K_FS":
            assert max(abs(v) for v in row.rel_err_vs_truth) < 1e-6


def test_benchmark_is_deterministic_and_f1_consistent():
    cfg = _small_config()
    a, b = run_benchmark(cfg), run_benchmark(cfg)
    assert dumps_report(a) == dumps_report(b)
    assert set(a.nrmse) == set(cfg.benchmark.methods)
    for row in a.classification_rows:
        p, r, f1 = row["precision"], row["recall"], row["f1"]
        if p is None or r is None or (isinstance(p, float) and math.isnan(p)):
            continue
        expected = 0.0 if p + r == 0 else 2 * p * r / (p + r)
        assert abs(f1 - expected) < 1e-12


def test_sweep_at_full_pool_equals_direct_fine_tune():
    cfg = _small_config(sweep={"n_pretrain": 2, "n_pool": 1, "n_test": 1})
    seed = 9
    pool = simulate_split(cfg.transfer_scene, seed, "pool", 1)
    n_pool = len(pool[0])
    curve = data_efficiency_sweep("contact", (n_pool,), 1, seed, cfg)
    source = simulate_split(cfg.scene, seed, "pretrain", 2)
    test = simulate_split(cfg.transfer_scene, seed, "transfer_test", 1)
    base = ContactClassifier(**_classifier_kwargs(cfg.contact.classifier, seed)).fit(
        *stack_training_set(source, [crowd_contact(d) for d in source])
    )
    # mini-batch order follows the per-repeat training seed the sweep derives
    _, train_seed = (int(s.generate_state(1)[0]) for s in _sweep_seed(seed, 0, n_pool).spawn(2))
    tune_kw = _classifier_kwargs(cfg.contact.finetune, train_seed)
    tuned = copy.deepcopy(base).set_params(warm_start=True, **tune_kw)
    tuned.fit(*stack_training_set(pool, [crowd_contact(d) for d in pool]))
    assert curve.values[0][0] == pytest.approx(_mean_accuracy(tuned, test), abs=1e-12)
    assert curve.zero_shot == pytest.approx(_mean_accuracy(base, test), abs=1e-12)
    with pytest.raises(ValueError, match="exceeds"):
        data_efficiency_sweep("contact", (n_pool + 1,), 1, seed, cfg)
    with pytest.raises(ValueError):
        data_efficiency_sweep("contact", (100, 50), 1, seed, cfg)
