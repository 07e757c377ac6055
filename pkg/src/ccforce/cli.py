"""Command-line interface: simulate, label, fit, estimate, train, finetune, gradcheck, evaluate, sweep, report.

Commands that produce fitted artifacts share one artifact directory
(``--out``)::

    classifier.json          contact classifier          (train/finetune contact)
    position.params          position regressor          (train/finetune position)
    contact_vision.json      vision contact per demo     (fit, label)
    stiffness_<TAG>.json     local stiffness fits        (fit)
    posdiff.json             PosDiff fits                (fit)
    fullvision.json          FullVision scales           (fit)
    forces/<TAG>/<demo>.csv  estimated force series      (estimate)

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as config_mod
from .config import CONTACT_SOURCES, FORCE_SOURCES, FULLVISION_MODES, ConfigError, ExperimentConfig
from .contact import ContactClassifier, crowd_contact, stack_training_set, truth_contact
from .estimators import MethodArtifacts, run_method
from .eval import (
    CC_RECIPES,
    SPLIT_OFFSETS,
    assemble_report,
    data_efficiency_sweep,
    run_benchmark,
    score_contact,
    score_methods,
    score_position,
    simulate_split,
    vision_contact,
    _classifier_kwargs,
)
from .io import (
    FormatError,
    _read_json,
    _write_text,
    dumps_json,
    read_classifier,
    read_contact_signals,
    read_demos,
    read_params,
    read_posdiff_fits,
    read_stiffness_fits,
    write_classifier,
    write_contact_signals,
    write_demos,
    write_force_series,
    write_params,
    write_posdiff_fits,
    write_stiffness_fits,
)
from .posnet.estimator import REGRESSORS, position_dataset, subsample
from .posnet.training import gradient_check_inits
from .report import dumps_sweep, format_report, format_sweep, read_report, read_sweep, sweep_csv, write_report
from .stiffness import fit_fullvision_scale, fit_posdiff, fit_stiffness
from .types import FULLVISION, METHOD_TAGS, POSDIFF, canonical_tag

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

CLASSIFIER_FILE = "classifier.json"
POSITION_FILE = "position.params"
VISION_FILE = "contact_vision.json"
POSDIFF_FILE = "posdiff.json"
FULLVISION_FILE = "fullvision.json"


class MissingArtifact(ValueError):
    """A prerequisite file for a method is absent."""


def stiffness_file(tag):
    return f"stiffness_{tag}.json"


# -- shared helpers ---------------------------------------------------------------


def _config(args):
    cfg = config_mod.load(args.config) if getattr(args, "config", None) else ExperimentConfig()
    cfg = cfg.with_seed(getattr(args, "seed", None))
    source = getattr(args, "contact_source", None)
    if source is not None:
        cfg = replace(cfg, contact=replace(cfg.contact, source=source))
    mode = getattr(args, "mode", None)
    if mode is not None:
        cfg = replace(cfg, benchmark=replace(cfg.benchmark, fullvision_mode=mode))
    return cfg


def _methods(args, cfg):
    tags = getattr(args, "method", None)
    return tuple(canonical_tag(t) for t in tags) if tags else cfg.benchmark.methods


def _demos(path):
    demos = read_demos(path)
    if not demos:
        raise ValueError(f"no demonstrations in {path}")
    return demos


def _require(path, tag, hint):
    if not Path(path).exists():
        raise MissingArtifact(f"{tag} needs {path}, which does not exist ({hint})")
    return path


def _by_demo(fits, demos, tag, path):
    missing = [d.id for d in demos if d.id not in fits]
    if missing:
        raise MissingArtifact(f"{tag}: {path} has no entry for demonstration {missing[0]}")
    return [fits[d.id] for d in demos]


def _classifier(out, cfg, tag):
    if cfg.contact.source != "classifier":
        return None
    return read_classifier(_require(Path(out) / CLASSIFIER_FILE, tag, "run `ccforce train contact`"))


def _vision_signals(demos, cfg, out, tag):
    clf = _classifier(out, cfg, tag)
    return [vision_contact(d, cfg.contact.source, cfg.contact, clf) for d in demos]


def _position_model(out, tag):
    return read_params(_require(Path(out) / POSITION_FILE, tag, "run `ccforce train position`"))


def _predict_positions(params, demos):
    from .posnet.training import predict

    return [predict(params, d.keypoint_vectors()) for d in demos]


def _emit(text):
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


# -- commands ------------------------------------------------------------------------


def cmd_simulate(args):
    cfg = _config(args)
    scene = cfg.transfer_scene if args.split in ("pool", "transfer_test") else cfg.scene
    defaults = {
        "train": cfg.benchmark.n_train,
        "test": cfg.benchmark.n_test,
        "pool": cfg.sweep.n_pool,
        "transfer_test": cfg.sweep.n_test,
        "pretrain": cfg.sweep.n_pretrain,
    }
    n = defaults[args.split] if args.n is None else args.n
    if n < 1:
        raise ValueError("--n must be >= 1")
    demos = simulate_split(scene, cfg.seed, args.split, n)
    write_demos(demos, args.out)
    _emit(f"wrote {len(demos)} demonstrations to {args.out}")


def cmd_label(args):
    cfg = _config(args)
    demos = _demos(args.demos)
    signals = _vision_signals(demos, cfg, args.out, "labelling")
    path = Path(args.out) / VISION_FILE
    write_contact_signals({d.id: s for d, s in zip(demos, signals)}, cfg.contact.source, path)
    _emit(f"wrote {cfg.contact.source} contact for {len(demos)} demonstrations to {path}")


def cmd_train(args):
    cfg = _config(args)
    demos = _demos(args.demos)
    out = Path(args.out)
    if args.target == "contact":
        labels = [crowd_contact(d, cfg.contact.vote_threshold) for d in demos]
        X, y = stack_training_set(demos, labels)
        clf = ContactClassifier(**_classifier_kwargs(cfg.contact.classifier, cfg.seed)).fit(X, y)
        write_classifier(clf.to_params(), out / CLASSIFIER_FILE)
        _emit(f"trained contact classifier on {len(X)} frames, loss {clf.final_loss_:.6f}")
    else:
        X, Y = position_dataset(demos, stride=cfg.position.stride)
        est = REGRESSORS[cfg.position.model](random_state=cfg.seed, **cfg.position.estimator_kwargs()).fit(X, Y)
        write_params(est.params_, out / POSITION_FILE)
        _emit(f"trained {cfg.position.model} on {len(X)} frames, loss {est.params_.final_loss:.6g}")


def cmd_finetune(args):
    cfg = _config(args)
    demos = _demos(args.demos)
    out = Path(args.out)
    if args.target == "contact":
        labels = [crowd_contact(d, cfg.contact.vote_threshold) for d in demos]
        X, y = stack_training_set(demos, labels)
        X, y = _maybe_subsample(X, y, args.size, cfg.seed)
        kw = {**_classifier_kwargs(cfg.contact.finetune, cfg.seed), "warm_start": True}
        clf = ContactClassifier.from_params(read_classifier(args.model), **kw).fit(X, y)
        write_classifier(clf.to_params(), out / CLASSIFIER_FILE)
        _emit(f"fine-tuned contact classifier on {len(X)} frames, loss {clf.final_loss_:.6f}")
    else:
        params = read_params(args.model)
        X, Y = position_dataset(demos, stride=cfg.position.stride)
        X, Y = _maybe_subsample(X, Y, args.size, cfg.seed)
        est = REGRESSORS[params.model_kind](random_state=cfg.seed, **cfg.position.estimator_kwargs())
        est.params_ = params
        est.fine_tune(X, Y)
        write_params(est.params_, out / POSITION_FILE)
        _emit(f"fine-tuned {params.model_kind} on {len(X)} frames, loss {est.params_.final_loss:.6g}")


def _maybe_subsample(X, Y, size, seed):
    if size is None:
        return X, Y
    if size < 1:
        raise ValueError("--size must be >= 1")
    return subsample(X, Y, size, seed)


def _fit_tags(args, cfg):
    tags = _methods(args, cfg)
    if args.force_source is not None:
        if getattr(args, "method", None):
            for t in tags:
                if t in CC_RECIPES and CC_RECIPES[t][1] != args.force_source:
                    raise ValueError(f"{t} is fitted on {CC_RECIPES[t][1]} force, not {args.force_source}")
        else:
            tags = tuple(t for t in tags if t in CC_RECIPES and CC_RECIPES[t][1] == args.force_source)
    return tags


def cmd_fit(args):
    cfg = _config(args)
    demos = _demos(args.demos)
    out = Path(args.out)
    tags = _fit_tags(args, cfg)
    needs_vision = [t for t in tags if (t in CC_RECIPES and CC_RECIPES[t][0] == "contact_vision") or t == FULLVISION]
    vision = None
    if needs_vision:
        vision = _vision_signals(demos, cfg, out, needs_vision[0])
        write_contact_signals({d.id: s for d, s in zip(demos, vision)}, cfg.contact.source, out / VISION_FILE)
    for tag in tags:
        if tag in CC_RECIPES:
            contact_attr, force = CC_RECIPES[tag]
            fits = {}
            for i, d in enumerate(demos):
                contact = truth_contact(d) if contact_attr == "contact_truth" else vision[i]
                try:
                    fits[d.id] = fit_stiffness(d, contact, force, min_frames=cfg.benchmark.min_stiffness_frames)
                except ValueError as exc:
                    raise ValueError(f"{tag}, demonstration {d.id}: {exc}") from None
            source = "truth" if contact_attr == "contact_truth" else cfg.contact.source
            write_stiffness_fits(fits, tag, out / stiffness_file(tag), contact_source=source, force_source=force)
        elif tag == POSDIFF:
            write_posdiff_fits({d.id: fit_posdiff(d) for d in demos}, out / POSDIFF_FILE)
        elif tag == FULLVISION:
            params = _position_model(out, tag)
            mode = cfg.benchmark.fullvision_mode
            scales = {}
            for d, p_hat, c in zip(demos, _predict_positions(params, demos), vision):
                scales[d.id] = list(fit_fullvision_scale(p_hat, c, d.f_gt, mode=mode))
            doc = {"format": "ccforce-fullvision", "version": 1, "mode": mode, "scales": scales}
            _write_text(out / FULLVISION_FILE, dumps_json(doc))
    _emit(f"fitted {', '.join(tags) or 'nothing'} for {len(demos)} demonstrations")


def load_artifacts(out, demos, methods):
    """Per-demonstration :class:`MethodArtifacts` from an artifact directory.

    Raises :class:`MissingArtifact` naming the method whose prerequisite file
    or entry is absent.
    """
    out = Path(out)
    arts = [MethodArtifacts(contact_truth=truth_contact(d)) for d in demos]
    vision_tags = [t for t in methods if t in ("C_V-K_FS", "C_V-K_PSM", FULLVISION)]
    if vision_tags:
        path = _require(out / VISION_FILE, vision_tags[0], "run `ccforce fit` or `ccforce label`")
        _, signals = read_contact_signals(path)
        for a, s in zip(arts, _by_demo(signals, demos, vision_tags[0], path)):
            a.contact_vision = s
    for tag in methods:
        if tag in CC_RECIPES:
            path = _require(out / stiffness_file(tag), tag, f"run `ccforce fit --method {tag}`")
            _, fits = read_stiffness_fits(path)
            for a, m in zip(arts, _by_demo(fits, demos, tag, path)):
                a.stiffness = {**a.stiffness, tag: m}
        elif tag == POSDIFF:
            path = _require(out / POSDIFF_FILE, tag, f"run `ccforce fit --method {tag}`")
            for a, m in zip(arts, _by_demo(read_posdiff_fits(path), demos, tag, path)):
                a.posdiff = m
        elif tag == FULLVISION:
            path = _require(out / FULLVISION_FILE, tag, f"run `ccforce fit --method {tag}`")
            doc = _read_json(path, "ccforce-fullvision")
            scales = _by_demo(doc["scales"], demos, tag, path)
            p_hats = _predict_positions(_position_model(out, tag), demos)
            for a, s, p in zip(arts, scales, p_hats):
                a.fullvision_scale = np.asarray(s, dtype=np.float64)
                a.fullvision_mode = doc["mode"]
                a.p_hat = p
    return arts


def cmd_estimate(args):
    cfg = _config(args)
    demos = _demos(args.demos)
    methods = _methods(args, cfg)
    arts = load_artifacts(args.out, demos, methods)
    for tag in methods:
        for d, a in zip(demos, arts):
            write_force_series(run_method(tag, d, a), d.t, Path(args.out) / "forces" / tag / f"{d.id}.csv")
    _emit(f"estimated {len(methods)} methods on {len(demos)} demonstrations")


def cmd_evaluate(args):
    cfg = _config(args)
    methods = _methods(args, cfg)
    if args.demos is None:
        report = run_benchmark(replace(cfg, benchmark=replace(cfg.benchmark, methods=methods)))
    else:
        report = evaluate_artifacts(cfg, _demos(args.demos), methods, args.artifacts or args.out)
    path = write_report(report, args.out)
    _emit(format_report(report))
    _emit(f"report written to {path}")


def evaluate_artifacts(cfg, demos, methods, artifact_dir):
    """Score fitted artifacts against the demonstrations' ground truth."""
    arts = load_artifacts(artifact_dir, demos, methods)
    nrmse_rows, class_rows, pos_rows = [], [], []
    vision_label = None
    vision_path = Path(artifact_dir) / VISION_FILE
    if vision_path.exists():
        source, _ = read_contact_signals(vision_path)
        vision_label = f"vision ({source})"
    for d, a in zip(demos, arts):
        nrmse_rows.extend(score_methods(d, methods, a))
        class_rows.extend(score_contact(d, a.contact_vision, cfg.contact, vision_label))
        if a.p_hat is not None:
            pos_rows.append(score_position(d, a.p_hat))
    fits = {t: [a.stiffness[t] for a in arts] for t in methods if t in CC_RECIPES}
    k_true = [d.k_true for d in demos if d.k_true is not None]
    truth = np.mean(k_true, axis=0) if len(k_true) == len(demos) else None
    meta = {
        "seed": cfg.seed,
        "material": demos[0].material_profile,
        "n_train": None,
        "n_test": len(demos),
        "methods": list(methods),
        "contact_source": cfg.contact.source,
        "position_model": None if not pos_rows else "fcn",
        "fullvision_mode": next((a.fullvision_mode for a in arts if a.p_hat is not None), None),
    }
    if pos_rows:
        meta["position_model"] = read_params(Path(artifact_dir) / POSITION_FILE).model_kind
    return assemble_report(meta, methods, nrmse_rows, class_rows, pos_rows, fits, truth)


def cmd_sweep(args):
    cfg = _config(args)
    sw = cfg.sweep
    task = args.task or sw.task
    arm = args.arm or sw.arm
    curve = data_efficiency_sweep(task, sw.sizes, sw.repeats, cfg.seed, config=cfg, arm=arm)
    out = Path(args.out)
    stem = f"sweep_{task}_{arm}"
    _write_text(out / f"{stem}.json", dumps_sweep(curve))
    _write_text(out / f"{stem}.csv", sweep_csv(curve))
    text = format_sweep(curve)
    _write_text(out / f"{stem}.txt", text)
    _emit(text)


def cmd_report(args):
    if args.report is None and not args.sweep:
        raise ValueError("give --report and/or --sweep files to render")
    from .eval import EvalReport

    report = read_report(args.report) if args.report else EvalReport(meta={})
    report.sweeps = list(report.sweeps) + [read_sweep(p) for p in args.sweep or ()]
    path = write_report(report, args.out)
    _emit(format_report(report))
    _emit(f"report written to {path}")


def cmd_gradcheck(args):
    cfg = _config(args)
    kinds = [args.kind] if args.kind else ["fcn", "gnn"]
    doc = {"format": "ccforce-gradcheck", "version": 1, "eps": args.eps, "tolerance": args.tolerance, "checks": []}
    ok = True
    for kind in kinds:
        hidden = args.hidden if args.hidden else None
        results = gradient_check_inits(
            kind, args.inits, hidden=hidden, seed=cfg.seed, eps=args.eps, max_checks=args.max_checks
        )
        for i, r in enumerate(results):
            passed = r.max_rel_error < args.tolerance
            ok &= passed
            doc["checks"].append(
                {
                    "kind": kind,
                    "hidden": hidden,
                    "init": i,
                    "max_rel_error": r.max_rel_error,
                    "n_checked": r.n_checked,
                    "n_skipped": r.n_skipped,
                    "passed": passed,
                }
            )
            _emit(
                f"{kind} init {i}: max relative error {r.max_rel_error:.3e} over {r.n_checked} entries"
                f" ({r.n_skipped} at ReLU kinks) {'ok' if passed else 'FAIL'}"
            )
    if args.out:
        _write_text(Path(args.out) / "gradcheck.json", dumps_json(doc))
    if not ok:
        raise RuntimeError(f"gradient check exceeded tolerance {args.tolerance:g}")


# -- argument parsing ------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the validation code rather than argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _common(p, out_required=True, out_help="output directory"):
    p.add_argument("--config", help="experiment YAML file (defaults apply when omitted)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", required=out_required, help=out_help)


def _method_flag(p):
    p.add_argument(
        "--method",
        action="append",
        metavar="TAG",
        help=f"method tag, repeatable; one of {', '.join(METHOD_TAGS)} (default: all configured)",
    )


def build_parser():
    parser = _Parser(prog="ccforce", description=__doc__.split("\n")[0])
    parser.add_argument("--dump-defaults", action="store_true", help="print the default config and exit")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("simulate", help="simulate demonstrations")
    _common(p, out_help="directory for demonstration files and manifest")
    p.add_argument("--split", choices=sorted(SPLIT_OFFSETS), default="test")
    p.add_argument("--n", type=int, help="number of demonstrations (default from the config)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("label", help="write vision contact labels")
    _common(p, out_help="artifact directory")
    p.add_argument("--demos", required=True)
    p.add_argument("--contact-source", choices=CONTACT_SOURCES)
    p.set_defaults(func=cmd_label)

    for name, func, helptext in (
        ("train", cmd_train, "train the contact classifier or position regressor"),
        ("finetune", cmd_finetune, "fine-tune a trained model on new demonstrations"),
    ):
        p = sub.add_parser(name, help=helptext)
        _common(p, out_help="artifact directory")
        p.add_argument("target", choices=("contact", "position"))
        p.add_argument("--demos", required=True)
        if name == "finetune":
            p.add_argument("--model", required=True, help="classifier JSON or position parameter file")
            p.add_argument("--size", type=int, help="seeded subset of this many frames")
        p.set_defaults(func=func)

    p = sub.add_parser("fit", help="fit stiffness, PosDiff and FullVision models per demonstration")
    _common(p, out_help="artifact directory")
    p.add_argument("--demos", required=True)
    _method_flag(p)
    p.add_argument("--contact-source", choices=CONTACT_SOURCES)
    p.add_argument("--force-source", choices=FORCE_SOURCES)
    p.add_argument("--mode", choices=FULLVISION_MODES)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("estimate", help="write force estimates from fitted artifacts")
    _common(p, out_help="artifact directory")
    p.add_argument("--demos", required=True)
    _method_flag(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("evaluate", help="score methods; simulate from the config when --demos is omitted")
    _common(p, out_help="report directory")
    p.add_argument("--demos")
    p.add_argument("--artifacts", help="artifact directory (default: --out)")
    _method_flag(p)
    p.add_argument("--contact-source", choices=CONTACT_SOURCES)
    p.add_argument("--mode", choices=FULLVISION_MODES)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="data-efficiency sweep on the transfer scene")
    _common(p)
    p.add_argument("--task", choices=("contact", "position"))
    p.add_argument("--arm", choices=("pretrained", "scratch"))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="render report and sweep files as text and CSV")
    _common(p)
    p.add_argument("--report", help="report.json from evaluate")
    p.add_argument("--sweep", action="append", help="sweep JSON file, repeatable")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("gradcheck", help="compare backprop with central finite differences")
    _common(p, out_required=False)
    p.add_argument("--kind", choices=("fcn", "gnn"))
    p.add_argument("--hidden", type=int, help="hidden width (default: architecture default)")
    p.add_argument("--inits", type=int, default=5)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--max-checks", type=int, help="check a seeded subset of this many entries")
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.dump_defaults:
            sys.stdout.write(config_mod.dump_defaults())
            return EXIT_OK
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_INVALID
        args.func(args)
    except (ConfigError, FormatError, ValueError, FileNotFoundError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(f"runtime error: {type(exc).__name__}: {exc}\n")
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
