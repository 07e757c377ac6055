import numpy as np
import pytest

from ccforce.estimators import (
    MethodArtifacts,
    estimate_force_contact_conditional,
    estimate_force_fullvision,
    estimate_force_posdiff,
    run_method,
    smooth_force,
)
from ccforce.stiffness import fit_fullvision_scale, fit_posdiff, fit_stiffness, normalized_displacement
from ccforce.types import ContactSignal, ForceSeries, PosDiffModel, StiffnessModel

SIL = StiffnessModel(168.0, 182.0, 108.0, 332.0)


def test_contact_conditional_examples(make_demo):
    p = np.array([[0, 0, 0.0], [0, 0, 0.0], [0, 0, -0.003], [0, 0, 0.001]])
    c = ContactSignal(contact=np.array([False, True, True, False]))
    f = estimate_force_contact_conditional(make_demo(p), c, SIL).f
    assert np.all(f[0] == 0) and np.all(f[3] == 0)
    assert np.all(f[1] == 0)
    assert f[2, 2] == pytest.approx(-0.996, abs=1e-12)


def test_posdiff_examples(make_demo):
    p = np.zeros((3, 3))
    m = PosDiffModel(d=np.full(3, 100.0), e=np.zeros(3))
    assert np.all(estimate_force_posdiff(make_demo(p), m).f == 0.0)
    f = estimate_force_posdiff(make_demo(p, p_des=np.full((3, 3), 0.002)), m).f
    assert np.allclose(f, 0.2)


def test_posdiff_matches_truth_without_noise(zero_demo):
    f = estimate_force_posdiff(zero_demo, fit_posdiff(zero_demo)).f
    assert np.max(np.abs(f - zero_demo.f_gt)) < 1e-6


def test_fullvision_modes():
    rng = np.random.default_rng(1)
    p_hat = np.cumsum(rng.normal(0, 0.01, (30, 3)), axis=0)
    c = np.zeros(30, dtype=bool)
    c[4:20] = True
    k = np.array([2.0, 3.0, 4.0])
    f = estimate_force_fullvision(p_hat, c, k).f
    assert np.all(f[4] == 0) and np.all(f[~c] == 0)
    const = np.ones((30, 3))
    for mode in ("onset", "diff"):
        assert np.all(estimate_force_fullvision(const, c, k, mode=mode).f == 0.0)
    diff = estimate_force_fullvision(p_hat, c, k, mode="diff").f
    assert np.allclose(diff[10], k * (p_hat[11] - p_hat[10]))
    c_end = np.ones(30, dtype=bool)
    held = estimate_force_fullvision(p_hat, c_end, k, mode="diff").f
    assert np.array_equal(held[-1], held[-2])


def test_fullvision_round_trip_and_equivariance():
    rng = np.random.default_rng(2)
    p_hat = np.cumsum(rng.normal(0, 0.01, (50, 3)), axis=0)
    c = np.zeros(50, dtype=bool)
    c[10:40] = True
    f_gt = np.array([7.0, -2.0, 11.0]) * normalized_displacement(p_hat, c)
    k = fit_fullvision_scale(p_hat, c, f_gt)
    est = estimate_force_fullvision(p_hat, c, k)
    assert est.unitless
    assert np.max(np.abs(est.f - f_gt)) < 1e-9
    # a power of two scales without rounding, so the identity is exact
    assert np.array_equal(estimate_force_fullvision(p_hat, c, 4.0 * k).f, 4.0 * est.f)
    assert np.allclose(estimate_force_fullvision(p_hat, c, 3.7 * k).f, 3.7 * est.f, rtol=1e-15, atol=0)


def test_smoothing_examples():
    rng = np.random.default_rng(3)
    f = rng.normal(size=(20, 3))
    assert np.array_equal(smooth_force(f, 1).f, f)
    assert np.allclose(smooth_force(np.full((10, 3), 2.5), 5).f, 2.5)
    imp = np.zeros((9, 3))
    imp[4, 0] = 1.0
    out = smooth_force(imp, 3).f[:, 0]
    assert np.allclose(out[3:6], 1 / 3) and np.all(out[:3] == 0) and np.all(out[6:] == 0)
    with pytest.raises(ValueError):
        smooth_force(f, 4)


def test_smoothing_preserves_interior_mean():
    f = np.zeros((101, 3))
    f[20:80] = np.random.default_rng(4).normal(size=(60, 3))
    out = smooth_force(ForceSeries(f=f, source="F_PSM"), 5)
    assert np.allclose(out.f.mean(axis=0), f.mean(axis=0), atol=1e-12)
    assert out.source == "F_PSM"


def _artifacts(demo, **kw):
    truth = ContactSignal(contact=demo.contact_gt)
    return MethodArtifacts(
        contact_truth=truth,
        contact_vision=kw.pop("vision", truth),
        stiffness={"C_FS-K_FS": fit_stiffness(demo, truth, "gt"), **kw.pop("stiffness", {})},
        **kw,
    )


def test_run_method_passthrough_and_exactness(zero_demo):
    art = _artifacts(zero_demo)
    psm = run_method("F_PSM", zero_demo, art)
    assert np.array_equal(psm.f, zero_demo.f_psm) and psm.source == "F_PSM"
    cfs = run_method("C_FS-K_FS", zero_demo, art)
    assert np.max(np.abs(cfs.f - zero_demo.f_gt)) < 1e-6
    assert np.all(cfs.f[~zero_demo.contact_gt] == 0.0)


def test_run_method_input_coincidence(zero_demo):
    # on zero-noise data F_PSM equals F_GT, so a PSM fit with true contact is the C_FS fit
    truth = ContactSignal(contact=zero_demo.contact_gt)
    art = _artifacts(zero_demo, stiffness={"C_V-K_PSM": fit_stiffness(zero_demo, truth, "psm")})
    a = run_method("C_V-K_PSM", zero_demo, art).f
    b = run_method("C_FS-K_FS", zero_demo, art).f
    assert np.array_equal(a, b)


def test_run_method_names_missing_artifact(zero_demo):
    with pytest.raises(ValueError, match="C_V-K_PSM"):
        run_method("C_V-K_PSM", zero_demo, _artifacts(zero_demo))
    with pytest.raises(ValueError, match="PosDiff"):
        run_method("PosDiff", zero_demo, MethodArtifacts())
