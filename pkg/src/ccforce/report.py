"""Text tables and columnar files for an :class:`EvalReport`."""

import csv
import io as _io
from pathlib import Path

from .eval import AXES, CLASSIFICATION_FIELDS, REGIME_LABELS, EvalReport, SweepCurve
from .io import FormatError, _read_json, _write_text, dumps_json, format_float

REPORT_FORMAT = "ccforce-report"


def _pm(stat, scale=1.0, digits=3):
    if stat is None or stat.mean is None:
        return "n/a"
    text = f"{stat.mean * scale:.{digits}f}"
    if stat.std is not None:
        text += f" ± {stat.std * scale:.{digits}f}"
    if stat.n_degenerate:
        text += f" ({stat.n_degenerate} degenerate)"
    return text


def _table(title, header, rows):
    widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
    line = lambda r: "  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip()  # noqa: E731
    rule = "-" * len(line(header))
    return "\n".join([title, rule, line(header), rule] + [line(r) for r in rows] + [rule, ""])


def format_report(report):
    """Contact metrics, position RMSE, stiffness and force NRMSE as plain-text tables."""
    meta = report.meta
    shown = [("material", "material"), ("seed", "seed"), ("train demos", "n_train"), ("test demos", "n_test")]
    header = "   ".join(f"{label}: {meta[key]}" for label, key in shown if meta.get(key) is not None)
    out = [header, ""] if header else []
    if report.classification:
        rows = [[src] + [_pm(m[k]) for k in CLASSIFICATION_FIELDS] for src, m in report.classification.items()]
        out.append(_table("Contact detection (per-demonstration mean ± std)", ["source", *CLASSIFICATION_FIELDS], rows))
    if report.position is not None:
        rows = [
            ["normalized (%)"] + [_pm(report.position["normalized"][a], 100.0, 2) for a in ("overall", "x", "y", "z")],
            ["rescaled (mm)"] + [_pm(report.position["rescaled_mm"][a], 1.0, 3) for a in ("overall", "x", "y", "z")],
        ]
        title = f"Position RMSE, {meta.get('position_model', '').upper()}"
        out.append(_table(title, ["", "overall", "x", "y", "z"], rows))
    if report.stiffness:
        rows = []
        for r in report.stiffness:
            cells = []
            for i in range(4):
                cell = f"{r.mean[i]:.1f}"
                if r.std is not None:
                    cell += f" ± {r.std[i]:.1f}"
                cells.append(cell)
            rows.append([r.method, *cells])
            if r.diff_vs_reference is not None and any(abs(v) > 0 for v in r.diff_vs_reference):
                rows.append(["  difference vs reference", *[f"{v:+.1f}" for v in r.diff_vs_reference]])
            if r.rel_err_vs_truth is not None:
                rows.append(["  relative error vs truth", *[f"{v:+.2%}" for v in r.rel_err_vs_truth]])
        out.append(_table("Stiffness (N/m)", ["method", *REGIME_LABELS], rows))
    if report.nrmse:
        rows = [[m] + [_pm(ax[a]) for a in AXES] for m, ax in report.nrmse.items()]
        out.append(_table("Force NRMSE (per-demonstration mean ± std)", ["method", "Norm", "X", "Y", "Z"], rows))
    for curve in report.sweeps:
        out.append(format_sweep(curve))
    return "\n".join(out)


def format_sweep(curve):
    from .eval import summarize

    rows = [[str(s), _pm(summarize(v), digits=4)] for s, v in zip(curve.sizes, curve.values)]
    title = f"Data-efficiency sweep: {curve.task} task, {curve.arm} arm ({curve.metric})"
    if curve.zero_shot is not None:
        title += f"; before adaptation {curve.zero_shot:.4f}"
    return _table(title, ["size", curve.metric], rows)


def _csv(header, rows):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if v is None else (format_float(v) if isinstance(v, float) else v) for v in r])
    return buf.getvalue()


def report_columns(report):
    """Plot-ready CSV tables keyed by file name."""
    files = {}
    if report.nrmse_rows:
        files["nrmse.csv"] = _csv(
            ["demo", "method", *AXES], [[r["demo"], r["method"]] + [r[a] for a in AXES] for r in report.nrmse_rows]
        )
    if report.classification_rows:
        files["classification.csv"] = _csv(
            ["demo", "source", *CLASSIFICATION_FIELDS],
            [[r["demo"], r["source"]] + [r[k] for k in CLASSIFICATION_FIELDS] for r in report.classification_rows],
        )
    if report.position_rows:
        cols = ["overall", "x", "y", "z"]
        files["position.csv"] = _csv(
            ["demo"] + [f"normalized_{c}" for c in cols] + [f"rescaled_mm_{c}" for c in cols],
            [[r["demo"], *r["normalized"], *r["rescaled_mm"]] for r in report.position_rows],
        )
    if report.stiffness:
        files["stiffness.csv"] = _csv(
            ["method", "n"] + [f"mean_{k}" for k in REGIME_LABELS] + [f"std_{k}" for k in REGIME_LABELS],
            [[r.method, r.n, *r.mean, *(r.std or (None,) * 4)] for r in report.stiffness],
        )
    for curve in report.sweeps:
        files[f"sweep_{curve.task}_{curve.arm}.csv"] = sweep_csv(curve)
    return files


def sweep_csv(curve):
    """One row per training-set size: mean, std and the per-repeat values."""
    from .eval import summarize

    n_rep = max(len(v) for v in curve.values)
    rows = []
    for size, vals in zip(curve.sizes, curve.values):
        s = summarize(vals)
        rows.append([size, s.mean, s.std, *vals])
    return _csv(["size", "mean", "std"] + [f"repeat_{i}" for i in range(n_rep)], rows)


def dumps_report(report):
    return dumps_json({"format": REPORT_FORMAT, "version": 1, **report.to_dict()})


def loads_report_dict(doc, source="report"):
    if doc.get("format") != REPORT_FORMAT or doc.get("version") != 1:
        raise FormatError(f"{source}: expected a {REPORT_FORMAT} version 1 file")
    body = {k: v for k, v in doc.items() if k not in ("format", "version")}
    return EvalReport.from_dict(body)


def read_report(path):
    return loads_report_dict(_read_json(path, REPORT_FORMAT), str(path))


def write_report(report, out_dir):
    """``report.json`` (round-trippable), ``report.txt`` and the CSV columns."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "report.json", dumps_report(report))
    _write_text(out / "report.txt", format_report(report))
    for name, text in report_columns(report).items():
        _write_text(out / name, text)
    return out / "report.json"


def dumps_sweep(curve):
    return dumps_json({"format": "ccforce-sweep", "version": 1, **curve.to_dict()})


def read_sweep(path):
    doc = _read_json(path, "ccforce-sweep")
    return SweepCurve.from_dict({k: v for k, v in doc.items() if k not in ("format", "version")})
