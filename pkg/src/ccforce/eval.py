"""Metrics, benchmark orchestration and data-efficiency sweeps.

Every aggregate is a mean and sample standard deviation over per-demonstration
values, never a pooled-frame statistic. A quantity that is undefined for a
demonstration (zero ground-truth range, no positive frames) is flagged as
degenerate and left out of the aggregate instead of being reported as 0 or
infinity.
"""

import copy
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import check_aligned, check_series
from .config import ExperimentConfig
from .contact import (
    ContactClassifier,
    contact_from_force,
    crowd_contact,
    debounce,
    demo_features,
    predict_contact,
    stack_training_set,
    train_contact_classifier,
    truth_contact,
)
from .estimators import MethodArtifacts, run_method
from .posnet.estimator import REGRESSORS, position_dataset, subsample
from .posnet.normalize import normalize_positions, rescale_to_test_range
from .stiffness import fit_fullvision_scale, fit_posdiff, fit_stiffness
from .types import (
    C_FS_K_FS,
    C_V_K_FS,
    C_V_K_PSM,
    FULLVISION,
    POSDIFF,
    ContactSignal,
    ForceSeries,
    NormalizedPositionSeries,
)

AXES = ("norm", "x", "y", "z")
REGIME_LABELS = ("x", "y", "z_plus", "z_minus")
CLASSIFICATION_FIELDS = ("accuracy", "precision", "recall", "f1")

# Stiffness fit recipe per contact-conditional method: (contact artifact, force channel).
CC_RECIPES = {
    C_FS_K_FS: ("contact_truth", "gt"),
    C_V_K_FS: ("contact_vision", "gt"),
    C_V_K_PSM: ("contact_vision", "psm"),
}


class BenchmarkError(RuntimeError):
    """A module failure during a benchmark, annotated with demonstration and method."""


# -- aggregation ---------------------------------------------------------------


@dataclass(frozen=True)
class Stat:
    """Mean and sample std over per-demonstration values; std is None for a single value."""

    mean: Optional[float]
    std: Optional[float]
    n: int
    n_degenerate: int = 0

    def to_dict(self):
        return {"mean": self.mean, "std": self.std, "n": self.n, "n_degenerate": self.n_degenerate}

    @classmethod
    def from_dict(cls, d):
        return cls(d["mean"], d["std"], int(d["n"]), int(d.get("n_degenerate", 0)))


def summarize(values):
    """Aggregate per-demonstration values; NaN marks a degenerate entry and is skipped."""
    arr = np.asarray(list(values), dtype=np.float64).ravel()
    ok = arr[~np.isnan(arr)]
    n_bad = int(arr.size - ok.size)
    if ok.size == 0:
        return Stat(None, None, 0, n_bad)
    mean = float(ok.mean())
    std = float(ok.std(ddof=1)) if ok.size > 1 else None
    return Stat(mean, std, int(ok.size), n_bad)


# -- force error -----------------------------------------------------------------


@dataclass(frozen=True)
class NRMSEResult:
    """Normalized RMSE on the force norm and each axis; NaN where the truth range is zero."""

    norm: float
    axes: tuple
    degenerate: tuple

    def as_row(self):
        return (self.norm,) + tuple(self.axes)

    def as_dict(self):
        return dict(zip(AXES, self.as_row()))


def _nrmse_channel(est, gt):
    rng = float(np.max(gt) - np.min(gt))
    if rng <= 0:
        return math.nan, True
    return float(np.sqrt(np.mean((est - gt) ** 2)) / rng), False


def nrmse(f_est, f_gt):
    """RMSE divided by the ground-truth range, per axis and on the Euclidean norm.

    The norm row applies the same formula to ``||f_est||`` against ``||f_gt||``
    with the range of ``||f_gt||`` as denominator.
    """
    est = check_series(f_est.f if isinstance(f_est, ForceSeries) else f_est, "f_est", width=3)
    gt = check_series(f_gt.f if isinstance(f_gt, ForceSeries) else f_gt, "f_gt", width=3)
    check_aligned(len(gt), f_est=est)
    norm, norm_bad = _nrmse_channel(np.linalg.norm(est, axis=1), np.linalg.norm(gt, axis=1))
    axes, bad = [], [norm_bad]
    for a in range(3):
        v, b = _nrmse_channel(est[:, a], gt[:, a])
        axes.append(v)
        bad.append(b)
    return NRMSEResult(norm=norm, axes=tuple(axes), degenerate=tuple(bad))


# -- position error --------------------------------------------------------------


@dataclass(frozen=True)
class PositionRMSE:
    axes: tuple
    overall: float

    def as_row(self):
        return (self.overall,) + tuple(self.axes)


def _p_hat(x, name):
    if isinstance(x, NormalizedPositionSeries):
        return x.p_hat
    return check_series(x, name, width=3)


def rmse_normalized_position(est, gt):
    """Per-axis RMSE of normalized positions and the RMSE pooled over all three axes."""
    e, g = _p_hat(est, "est"), _p_hat(gt, "gt")
    check_aligned(len(g), est=e)
    sq = (e - g) ** 2
    return PositionRMSE(axes=tuple(float(v) for v in np.sqrt(sq.mean(axis=0))), overall=float(np.sqrt(sq.mean())))


# -- contact classification -----------------------------------------------------


@dataclass(frozen=True)
class ClassificationMetrics:
    """Confusion-matrix metrics for the contact class.

    ``precision`` is NaN when nothing is predicted positive, ``recall`` when no
    truth frame is positive; F1 is NaN whenever either is.
    """

    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def degenerate(self):
        return math.isnan(self.precision) or math.isnan(self.recall)

    def as_row(self):
        return (self.accuracy, self.precision, self.recall, self.f1)


def _contact_array(x):
    c = x.contact if isinstance(x, ContactSignal) else np.asarray(x)
    return np.asarray(c, dtype=bool).ravel()


def classification_metrics(pred, truth):
    p, t = _contact_array(pred), _contact_array(truth)
    check_aligned(len(t), pred=p)
    if len(t) == 0:
        raise ValueError("classification metrics need at least one frame")
    tp = int(np.sum(p & t))
    fp = int(np.sum(p & ~t))
    tn = int(np.sum(~p & ~t))
    fn = int(np.sum(~p & t))
    accuracy = (tp + tn) / len(t)
    precision = tp / (tp + fp) if tp + fp else math.nan
    recall = tp / (tp + fn) if tp + fn else math.nan
    if math.isnan(precision) or math.isnan(recall):
        f1 = math.nan
    elif precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return ClassificationMetrics(accuracy, precision, recall, f1, tp, fp, tn, fn)


# -- stiffness table ---------------------------------------------------------------


@dataclass(frozen=True)
class StiffnessRow:
    method: str
    mean: tuple
    std: Optional[tuple]
    n: int
    diff_vs_reference: Optional[tuple]
    rel_err_vs_reference: Optional[tuple]
    rel_err_vs_truth: Optional[tuple]

    def to_dict(self):
        return {
            "method": self.method,
            "mean": list(self.mean),
            "std": None if self.std is None else list(self.std),
            "n": self.n,
            "diff_vs_reference": _maybe_list(self.diff_vs_reference),
            "rel_err_vs_reference": _maybe_list(self.rel_err_vs_reference),
            "rel_err_vs_truth": _maybe_list(self.rel_err_vs_truth),
        }

    @classmethod
    def from_dict(cls, d):
        tup = lambda v: None if v is None else tuple(v)  # noqa: E731
        return cls(
            d["method"],
            tuple(d["mean"]),
            tup(d["std"]),
            int(d["n"]),
            tup(d["diff_vs_reference"]),
            tup(d["rel_err_vs_reference"]),
            tup(d["rel_err_vs_truth"]),
        )


def _maybe_list(v):
    return None if v is None else list(v)


def _truth_k(truth):
    if truth is None:
        return None
    k = getattr(truth, "k_true", truth)
    k = np.asarray(k, dtype=np.float64).reshape(4)
    if np.any(k <= 0):
        raise ValueError("truth stiffness must be positive")
    return k


def stiffness_error_report(fits, truth=None, reference=C_FS_K_FS):
    """Mean and std of (k_x, k_y, k_z+, k_z-) per method, with differences to the reference and truth.

    ``fits`` maps a method tag to the per-demonstration :class:`StiffnessModel`
    list. ``truth`` is a :class:`MaterialProfile` or four stiffness values.
    """
    k_true = _truth_k(truth)
    stats = {}
    for method, models in fits.items():
        models = list(models)
        if not models:
            raise ValueError(f"{method}: at least one stiffness fit is required")
        K = np.array([m.k for m in models])
        std = tuple(float(v) for v in K.std(axis=0, ddof=1)) if len(K) > 1 else None
        stats[method] = (K.mean(axis=0), std, len(K))
    ref = stats.get(reference, (None,))[0]
    rows = []
    for method, (mean, std, n) in stats.items():
        diff = rel_ref = rel_true = None
        if ref is not None:
            diff = tuple(float(v) for v in mean - ref)
            rel_ref = tuple(float(v) for v in (mean - ref) / ref)
        if k_true is not None:
            rel_true = tuple(float(v) for v in (mean - k_true) / k_true)
        rows.append(StiffnessRow(method, tuple(float(v) for v in mean), std, n, diff, rel_ref, rel_true))
    return rows


# -- helpers shared by benchmark and sweeps ------------------------------------------


SPLIT_OFFSETS = {"train": 0, "test": 10_000, "pool": 20_000, "transfer_test": 30_000, "pretrain": 40_000}


def simulate_split(scene_cfg, seed, split, n):
    """Demonstrations for one split; split seed ranges never overlap while ``n`` < 10000."""
    if n >= 10_000:
        raise ValueError("a split holds at most 9999 demonstrations")
    base = int(seed) * 100_000 + SPLIT_OFFSETS[split]
    return scene_cfg.scene().simulate_many(n, base_seed=base, prefix=f"{scene_cfg.material.name}-{split}")


def _classifier_kwargs(cc, seed):
    return dict(
        learning_rate=cc.learning_rate,
        l2=cc.l2,
        epochs=cc.epochs,
        batch_size=cc.batch_size or None,
        random_state=int(seed),
    )


def vision_contact(demo, source, contact_cfg, classifier=None):
    """Contact signal standing in for vision: the classifier, crowd votes or the ground-truth channel."""
    if source == "classifier":
        if classifier is None:
            raise ValueError("contact source 'classifier' needs trained classifier parameters")
        sig = predict_contact(classifier, demo)
    elif source == "crowd":
        sig = crowd_contact(demo, contact_cfg.vote_threshold)
    elif source == "gt-force":
        sig = truth_contact(demo)
    else:
        raise ValueError(f"unknown contact source {source!r}")
    if contact_cfg.debounce_frames > 1:
        sig = debounce(sig, contact_cfg.debounce_frames)
    return sig


def _train_position(cfg, demos, seed):
    X, Y = position_dataset(demos, stride=cfg.position.stride)
    est = REGRESSORS[cfg.position.model](random_state=seed, **cfg.position.estimator_kwargs())
    return est.fit(X, Y)


# -- benchmark ---------------------------------------------------------------------


@dataclass
class EvalReport:
    """Tables 1-4 in structured form plus optional sweep curves.

    ``nrmse`` maps method -> axis -> :class:`Stat`; ``nrmse_rows`` keeps the
    per-demonstration values behind them. ``classification`` maps a contact
    source to its metric stats with per-demonstration rows alongside.
    """

    meta: dict
    nrmse: dict = field(default_factory=dict)
    nrmse_rows: list = field(default_factory=list)
    position: Optional[dict] = None
    position_rows: list = field(default_factory=list)
    classification: dict = field(default_factory=dict)
    classification_rows: list = field(default_factory=list)
    stiffness: list = field(default_factory=list)
    sweeps: list = field(default_factory=list)

    def to_dict(self):
        return {
            "meta": dict(self.meta),
            "nrmse": {m: {a: s.to_dict() for a, s in ax.items()} for m, ax in self.nrmse.items()},
            "nrmse_rows": [dict(r) for r in self.nrmse_rows],
            "position": None
            if self.position is None
            else {k: {a: s.to_dict() for a, s in v.items()} for k, v in self.position.items()},
            "position_rows": [dict(r) for r in self.position_rows],
            "classification": {
                src: {m: s.to_dict() for m, s in metrics.items()} for src, metrics in self.classification.items()
            },
            "classification_rows": [dict(r) for r in self.classification_rows],
            "stiffness": [r.to_dict() for r in self.stiffness],
            "sweeps": [c.to_dict() for c in self.sweeps],
        }

    @classmethod
    def from_dict(cls, d):
        stats = lambda m: {k: Stat.from_dict(v) for k, v in m.items()}  # noqa: E731
        return cls(
            meta=dict(d["meta"]),
            nrmse={m: stats(ax) for m, ax in d["nrmse"].items()},
            nrmse_rows=[dict(r) for r in d["nrmse_rows"]],
            position=None if d["position"] is None else {k: stats(v) for k, v in d["position"].items()},
            position_rows=[dict(r) for r in d["position_rows"]],
            classification={src: stats(m) for src, m in d["classification"].items()},
            classification_rows=[dict(r) for r in d["classification_rows"]],
            stiffness=[StiffnessRow.from_dict(r) for r in d["stiffness"]],
            sweeps=[SweepCurve.from_dict(c) for c in d["sweeps"]],
        )

    def mean_nrmse(self, method, axis="norm"):
        return self.nrmse[method][axis].mean


def _none_if_nan(v):
    return None if isinstance(v, float) and math.isnan(v) else v


def _wrap(demo, method):
    """Context manager turning module errors into BenchmarkError naming demo and method."""

    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc_type is not None and issubclass(exc_type, ValueError):
                raise BenchmarkError(f"demonstration {demo.id}, {method}: {exc}") from exc
            return False

    return _Ctx()


def score_methods(demo, methods, artifacts):
    """Per-method NRMSE rows for one demonstration; errors name the demo and method."""
    rows = []
    for m in methods:
        with _wrap(demo, m):
            res = nrmse(run_method(m, demo, artifacts), demo.f_gt)
        rows.append({"demo": demo.id, "method": m, **{a: _none_if_nan(v) for a, v in res.as_dict().items()}})
    return rows


def score_contact(demo, vision, contact_cfg, vision_label=None):
    """Classification rows against true contact for vision (if given), crowd and force-threshold labels."""
    truth = truth_contact(demo)
    sources = {}
    if vision is not None:
        sources[vision_label or f"vision ({contact_cfg.source})"] = vision
    if demo.crowd_labels is not None:
        sources["crowd"] = crowd_contact(demo, contact_cfg.vote_threshold)
    sources["force_threshold"] = contact_from_force(demo.f_gt, contact_cfg.threshold_n)
    rows = []
    for src, sig in sources.items():
        cm = classification_metrics(sig, truth)
        rows.append(
            {"demo": demo.id, "source": src, **{k: _none_if_nan(v) for k, v in zip(CLASSIFICATION_FIELDS, cm.as_row())}}
        )
    return rows


def score_position(demo, p_hat):
    """Normalized and rescaled (mm) position RMSE row for one demonstration."""
    gt = normalize_positions(demo.p)
    r = rmse_normalized_position(p_hat, gt)
    r_m = rmse_normalized_position(rescale_to_test_range(p_hat, gt.range), demo.p)
    return {"demo": demo.id, "normalized": list(r.as_row()), "rescaled_mm": [1000.0 * v for v in r_m.as_row()]}


def _nan(v):
    return math.nan if v is None else v


def assemble_report(meta, methods, nrmse_rows=(), classification_rows=(), position_rows=(), fits=None, truth=None):
    """Aggregate per-demonstration rows into an :class:`EvalReport`.

    Aggregation depends only on row order, so results are identical however
    the rows were produced.
    """
    nrmse_rows, classification_rows, position_rows = list(nrmse_rows), list(classification_rows), list(position_rows)
    nrmse_stats = {}
    for m in methods:
        rows = [r for r in nrmse_rows if r["method"] == m]
        nrmse_stats[m] = {a: summarize([_nan(r[a]) for r in rows]) for a in AXES}
    classification = {}
    for row in classification_rows:
        classification.setdefault(row["source"], {k: [] for k in CLASSIFICATION_FIELDS})
        for k in CLASSIFICATION_FIELDS:
            classification[row["source"]][k].append(_nan(row[k]))
    classification = {s: {k: summarize(v) for k, v in m.items()} for s, m in classification.items()}
    position = None
    if position_rows:
        position = {}
        for key in ("normalized", "rescaled_mm"):
            arr = np.array([r[key] for r in position_rows])
            position[key] = {a: summarize(arr[:, i]) for i, a in enumerate(("overall", "x", "y", "z"))}
    return EvalReport(
        meta=dict(meta),
        nrmse=nrmse_stats,
        nrmse_rows=nrmse_rows,
        position=position,
        position_rows=position_rows,
        classification=classification,
        classification_rows=classification_rows,
        stiffness=stiffness_error_report(fits, truth) if fits else [],
    )


def run_benchmark(config=None, test_demos=None, train_demos=None):
    """Simulate, fit and score every configured method; deterministic per ``config.seed``.

    Training data feeds the contact classifier and the position regressor.
    Stiffness, PosDiff and the FullVision scale are fitted per test
    demonstration, as each demonstration carries its own local tissue model.
    """
    cfg = config or ExperimentConfig()
    bench = cfg.benchmark
    methods = bench.methods
    seed = int(cfg.seed)
    needs_vision = any(m in (C_V_K_FS, C_V_K_PSM) or m.startswith(FULLVISION) for m in methods)
    needs_classifier = needs_vision and cfg.contact.source == "classifier"
    needs_position = any(m.startswith(FULLVISION) for m in methods)

    if test_demos is None:
        test_demos = simulate_split(cfg.scene, seed, "test", bench.n_test)
    if (needs_classifier or needs_position) and train_demos is None:
        train_demos = simulate_split(cfg.scene, seed, "train", bench.n_train)

    classifier = None
    if needs_classifier:
        cc = cfg.contact.classifier
        classifier = train_contact_classifier(
            train_demos,
            [crowd_contact(d, cfg.contact.vote_threshold) for d in train_demos],
            learning_rate=cc.learning_rate,
            l2=cc.l2,
            epochs=cc.epochs,
            seed=seed,
            batch_size=cc.batch_size or None,
        )
    position_model = _train_position(cfg, train_demos, seed) if needs_position else None

    nrmse_rows, class_rows, pos_rows = [], [], []
    fits = {m: [] for m in methods if m in CC_RECIPES}
    for demo in test_demos:
        truth = truth_contact(demo)
        vision = vision_contact(demo, cfg.contact.source, cfg.contact, classifier) if needs_vision else None
        art = MethodArtifacts(contact_truth=truth, contact_vision=vision, fullvision_mode=bench.fullvision_mode)
        stiff = {}
        for m in fits:
            contact_attr, force = CC_RECIPES[m]
            with _wrap(demo, m):
                stiff[m] = fit_stiffness(demo, getattr(art, contact_attr), force, min_frames=bench.min_stiffness_frames)
            fits[m].append(stiff[m])
        art.stiffness = stiff
        if POSDIFF in methods:
            with _wrap(demo, POSDIFF):
                art.posdiff = fit_posdiff(demo)
        if position_model is not None:
            art.p_hat = position_model.predict(demo.keypoint_vectors())
            pos_rows.append(score_position(demo, art.p_hat))
            with _wrap(demo, FULLVISION):
                art.fullvision_scale = fit_fullvision_scale(art.p_hat, vision, demo.f_gt, mode=bench.fullvision_mode)
        nrmse_rows.extend(score_methods(demo, methods, art))
        class_rows.extend(score_contact(demo, vision, cfg.contact))

    meta = {
        "seed": seed,
        "material": cfg.scene.material.name,
        "n_train": 0 if train_demos is None else len(train_demos),
        "n_test": len(test_demos),
        "methods": list(methods),
        "contact_source": cfg.contact.source,
        "position_model": cfg.position.model if needs_position else None,
        "fullvision_mode": bench.fullvision_mode,
    }
    return assemble_report(meta, methods, nrmse_rows, class_rows, pos_rows, fits, cfg.scene.material)


# -- data-efficiency sweep -----------------------------------------------------------


@dataclass(frozen=True)
class SweepCurve:
    """Metric per repeat at each training-set size; ``zero_shot`` is the model before adaptation."""

    task: str
    arm: str
    metric: str
    sizes: tuple
    values: tuple  # one tuple of per-repeat values per size
    zero_shot: Optional[float] = None

    def means(self):
        return np.array([np.mean(v) for v in self.values])

    def stats(self):
        return [summarize(v) for v in self.values]

    def to_dict(self):
        return {
            "task": self.task,
            "arm": self.arm,
            "metric": self.metric,
            "sizes": list(self.sizes),
            "values": [list(v) for v in self.values],
            "zero_shot": self.zero_shot,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            d["task"], d["arm"], d["metric"], tuple(d["sizes"]), tuple(tuple(v) for v in d["values"]), d["zero_shot"]
        )


def _sweep_seed(base_seed, repeat, size):
    return np.random.SeedSequence([int(base_seed), int(repeat), int(size)])


def _mean_accuracy(model, demos):
    return float(np.mean([np.mean(model.predict(demo_features(d)) == d.contact_gt) for d in demos]))


def _mean_position_rmse(model, demos):
    out = []
    for d in demos:
        out.append(rmse_normalized_position(model.predict(d.keypoint_vectors()), normalize_positions(d.p)).overall)
    return float(np.mean(out))


def data_efficiency_sweep(task, sizes, repeats, base_seed, config=None, arm=None):
    """Adapt to the transfer scene with growing seeded subsets of its training pool.

    For each size and repeat a subset of the pool is drawn, a model is either
    fine-tuned from one pretrained on the primary scene (``arm="pretrained"``)
    or trained from scratch with the same hyperparameters, and scored on a
    fixed transfer test set: mean accuracy against true contact for the
    contact task, mean overall normalized-position RMSE for the position task.
    """
    cfg = config or ExperimentConfig()
    arm = arm or cfg.sweep.arm
    if task not in ("contact", "position"):
        raise ValueError(f"task must be 'contact' or 'position', got {task!r}")
    if arm not in ("pretrained", "scratch"):
        raise ValueError(f"arm must be 'pretrained' or 'scratch', got {arm!r}")
    sizes = tuple(int(s) for s in sizes)
    if not sizes or list(sizes) != sorted(sizes) or sizes[0] < 1:
        raise ValueError("sizes must be positive and sorted ascending")
    if int(repeats) != repeats or repeats < 1:
        raise ValueError("repeats must be an integer >= 1")
    sw = cfg.sweep
    source = simulate_split(cfg.scene, base_seed, "pretrain", sw.n_pretrain)
    pool = simulate_split(cfg.transfer_scene, base_seed, "pool", sw.n_pool)
    test = simulate_split(cfg.transfer_scene, base_seed, "transfer_test", sw.n_test)
    vote = cfg.contact.vote_threshold

    if task == "contact":
        X_src, y_src = stack_training_set(source, [crowd_contact(d, vote) for d in source])
        X_pool, y_pool = stack_training_set(pool, [crowd_contact(d, vote) for d in pool])
        base = ContactClassifier(**_classifier_kwargs(cfg.contact.classifier, base_seed)).fit(X_src, y_src)
        tune_kw = _classifier_kwargs(cfg.contact.finetune, 0)
        score, metric = _mean_accuracy, "accuracy"
    else:
        X_src, y_src = position_dataset(source, stride=cfg.position.stride)
        X_pool, y_pool = position_dataset(pool, stride=cfg.position.stride)
        base = REGRESSORS[cfg.position.model](random_state=int(base_seed), **cfg.position.estimator_kwargs())
        base.fit(X_src, y_src)
        score, metric = _mean_position_rmse, "rmse_normalized"

    if sizes[-1] > len(X_pool):
        raise ValueError(f"sweep size {sizes[-1]} exceeds the transfer pool of {len(X_pool)} examples")

    values = []
    for size in sizes:
        per_repeat = []
        for r in range(int(repeats)):
            ss = _sweep_seed(base_seed, r, size)
            sub_seed, train_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
            Xs, ys = subsample(X_pool, y_pool, size, sub_seed)
            if task == "contact":
                if arm == "pretrained":
                    model = copy.deepcopy(base).set_params(warm_start=True, **{**tune_kw, "random_state": train_seed})
                else:
                    model = ContactClassifier(**{**tune_kw, "random_state": train_seed})
                if len(np.unique(ys > 0.5)) < 2:
                    raise ValueError(f"sweep subset of size {size} holds a single contact class; use larger sizes")
                model.fit(Xs, ys)
            else:
                if arm == "pretrained":
                    model = copy.deepcopy(base).set_params(random_state=train_seed).fine_tune(Xs, ys)
                else:
                    model = copy.deepcopy(base).set_params(random_state=train_seed).fit(Xs, ys)
            per_repeat.append(score(model, test))
        values.append(tuple(per_repeat))
    return SweepCurve(
        task=task,
        arm=arm,
        metric=metric,
        sizes=sizes,
        values=tuple(values),
        zero_shot=score(base, test) if arm == "pretrained" else None,
    )

