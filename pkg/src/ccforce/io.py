"""File formats: demonstration logs, fitted models, network parameters and reports.

Text formats write floats with 17 significant digits so that reading a file
and writing it again reproduces it byte for byte. Network parameters use a
JSON header line followed by little-endian float64 data.
"""

import csv
import io as _io
import json
import math
from pathlib import Path

import numpy as np

from .contact import ContactClassifierParams
from .posnet.training import PositionEstimatorParams
from .types import ContactSignal, Demonstration, ForceSeries, PosDiffModel, StiffnessModel

FORMAT_VERSION = 1
UNITS = {"t": "s", "p": "m", "p_des": "m", "f_psm": "N", "f_gt": "N", "keypoints": "normalized image coordinates"}


class FormatError(ValueError):
    """A file does not match the expected format or version."""


# -- number and JSON encoding -------------------------------------------------------


def format_float(x):
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x}")
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _encode(obj, indent, level):
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    end = "" if indent is None else "\n" + " " * (indent * level)
    sep = ", " if indent is None else ","
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, None, 0) for v in obj) + "]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in obj]
        return "[" + sep.join(items) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj, indent=2):
    """Deterministic JSON: insertion-ordered keys, floats at 17 significant digits."""
    return _encode(obj, indent, 0) + ("\n" if indent is not None else "")


def _write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _read_json(path, expected_format):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc.msg}, line {exc.lineno})") from None
    _check_header(data, expected_format, path)
    return data


def _check_header(data, expected_format, path):
    if not isinstance(data, dict) or data.get("format") != expected_format:
        raise FormatError(f"{path}: expected a {expected_format} file")
    if data.get("version") != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported {expected_format} version {data.get('version')!r}")


# -- demonstrations ---------------------------------------------------------------------


def _frame_record(demo, i):
    kp = demo.keypoints[i] if demo.keypoints is not None else None
    return {
        "t": demo.t[i],
        "p": demo.p[i],
        "p_des": demo.p_des[i],
        "f_psm": demo.f_psm[i],
        "f_gt": None if demo.f_gt is None else demo.f_gt[i],
        "contact_gt": None if demo.contact_gt is None else bool(demo.contact_gt[i]),
        "crowd": None if demo.crowd_labels is None else [int(v) for v in demo.crowd_labels[i]],
        "kp_left": None if kp is None else kp[0].ravel(),
        "kp_right": None if kp is None else kp[1].ravel(),
    }


def dumps_demo(demo):
    """One JSON object per frame, one frame per line."""
    return "".join(_encode(_frame_record(demo, i), None, 0) + "\n" for i in range(len(demo)))


def _demo_meta(demo, filename):
    return {
        "id": demo.id,
        "file": filename,
        "material_profile": demo.material_profile,
        "sample_rate_hz": demo.sample_rate_hz,
        "n_frames": len(demo),
        "k_true": None if demo.k_true is None else list(demo.k_true),
    }


def _demo_filename(demo_id):
    safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in demo_id)
    return f"{safe}.ndjson"


def write_demos(demos, out_dir):
    """Write each demonstration as an NDJSON log plus ``manifest.json``; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for demo in demos:
        name = _demo_filename(demo.id)
        _write_text(out / name, dumps_demo(demo))
        entries.append(_demo_meta(demo, name))
    manifest = {"format": "ccforce-demos", "version": FORMAT_VERSION, "units": UNITS, "demos": entries}
    _write_text(out / "manifest.json", dumps_json(manifest))
    return out / "manifest.json"


def _stack(records, key, width=None):
    vals = [r[key] for r in records]
    if all(v is None for v in vals):
        return None
    if any(v is None for v in vals):
        raise FormatError(f"channel {key} is present in some frames only")
    return np.asarray(vals, dtype=np.float64 if key != "contact_gt" else bool)


def loads_demo(text, meta):
    records = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{meta.get('file', 'demo')}: line {lineno} is not valid JSON ({exc.msg})") from None
    if not records:
        raise FormatError(f"{meta.get('file', 'demo')}: no frames")
    n = len(records)
    kp_left, kp_right = _stack(records, "kp_left"), _stack(records, "kp_right")
    keypoints = None
    if kp_left is not None:
        keypoints = np.stack([kp_left.reshape(n, 8, 2), kp_right.reshape(n, 8, 2)], axis=1)
    crowd = _stack(records, "crowd")
    return Demonstration(
        id=meta["id"],
        material_profile=meta["material_profile"],
        sample_rate_hz=meta["sample_rate_hz"],
        t=_stack(records, "t"),
        p=_stack(records, "p"),
        p_des=_stack(records, "p_des"),
        f_psm=_stack(records, "f_psm"),
        f_gt=_stack(records, "f_gt"),
        keypoints=keypoints,
        contact_gt=_stack(records, "contact_gt"),
        crowd_labels=None if crowd is None else crowd.astype(bool),
        k_true=None if meta.get("k_true") is None else tuple(meta["k_true"]),
    )


def read_demos(path):
    """Load every demonstration listed in a manifest (a directory or the manifest file itself)."""
    path = Path(path)
    manifest_path = path / "manifest.json" if path.is_dir() else path
    if not manifest_path.exists():
        raise FileNotFoundError(f"no demonstration manifest at {manifest_path}")
    manifest = _read_json(manifest_path, "ccforce-demos")
    demos = []
    for meta in manifest["demos"]:
        file = manifest_path.parent / meta["file"]
        with open(file, encoding="utf-8") as fh:
            demos.append(loads_demo(fh.read(), meta))
    return demos


# -- fitted models ---------------------------------------------------------------------------


def stiffness_to_dict(m):
    return {
        "k_x": m.k_x,
        "k_y": m.k_y,
        "k_z_plus": m.k_z_plus,
        "k_z_minus": m.k_z_minus,
        "c": list(m.c),
        "c_z_minus": m.c_z_minus,
        "fit_residual": m.fit_residual,
    }


def stiffness_from_dict(d):
    return StiffnessModel(
        k_x=d["k_x"],
        k_y=d["k_y"],
        k_z_plus=d["k_z_plus"],
        k_z_minus=d["k_z_minus"],
        c=np.asarray(d["c"], dtype=np.float64),
        c_z_minus=d["c_z_minus"],
        fit_residual=d["fit_residual"],
    )


def write_stiffness_fits(fits, method, path, contact_source=None, force_source=None):
    doc = {
        "format": "ccforce-stiffness",
        "version": FORMAT_VERSION,
        "method": method,
        "contact_source": contact_source,
        "force_source": force_source,
        "fits": {demo_id: stiffness_to_dict(m) for demo_id, m in fits.items()},
    }
    _write_text(path, dumps_json(doc))


def read_stiffness_fits(path):
    doc = _read_json(path, "ccforce-stiffness")
    return doc["method"], {k: stiffness_from_dict(v) for k, v in doc["fits"].items()}


def write_posdiff_fits(fits, path):
    doc = {
        "format": "ccforce-posdiff",
        "version": FORMAT_VERSION,
        "fits": {k: {"d": list(m.d), "e": list(m.e)} for k, m in fits.items()},
    }
    _write_text(path, dumps_json(doc))


def read_posdiff_fits(path):
    doc = _read_json(path, "ccforce-posdiff")
    return {k: PosDiffModel(np.asarray(v["d"]), np.asarray(v["e"])) for k, v in doc["fits"].items()}


def write_contact_signals(signals, source, path):
    """Contact per demo as a compact 0/1 string, with the probability channel when present."""
    doc = {
        "format": "ccforce-contact",
        "version": FORMAT_VERSION,
        "source": source,
        "signals": {
            k: {
                "contact": "".join("1" if c else "0" for c in s.contact),
                "probability": None if s.probability is None else list(s.probability),
            }
            for k, s in signals.items()
        },
    }
    _write_text(path, dumps_json(doc))


def read_contact_signals(path):
    doc = _read_json(path, "ccforce-contact")
    out = {}
    for k, v in doc["signals"].items():
        if set(v["contact"]) - {"0", "1"}:
            raise FormatError(f"{path}: contact string for {k} must hold only 0 and 1")
        c = np.frombuffer(v["contact"].encode(), dtype=np.uint8) == ord("1")
        prob = None if v["probability"] is None else np.asarray(v["probability"], dtype=np.float64)
        out[k] = ContactSignal(contact=c, probability=prob)
    return doc["source"], out


def write_classifier(params, path):
    doc = {
        "format": "ccforce-contact-classifier",
        "version": FORMAT_VERSION,
        "feature_spec": list(params.feature_spec),
        "weights": list(params.weights),
        "bias": params.bias,
        "final_loss": None if math.isnan(params.final_loss) else params.final_loss,
        "feature_mean": None if params.feature_mean is None else list(params.feature_mean),
        "feature_scale": None if params.feature_scale is None else list(params.feature_scale),
    }
    _write_text(path, dumps_json(doc))


def read_classifier(path):
    doc = _read_json(path, "ccforce-contact-classifier")
    return ContactClassifierParams(
        weights=np.asarray(doc["weights"], dtype=np.float64),
        bias=doc["bias"],
        feature_spec=tuple(doc["feature_spec"]),
        final_loss=math.nan if doc["final_loss"] is None else doc["final_loss"],
        feature_mean=doc.get("feature_mean"),
        feature_scale=doc.get("feature_scale"),
    )


def write_force_series(series, t, path):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "f_x", "f_y", "f_z"])
    for ti, f in zip(t, series.f):
        w.writerow([format_float(ti)] + [format_float(v) for v in f])
    _write_text(path, buf.getvalue())


def read_force_series(path, source):
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["t", "f_x", "f_y", "f_z"]:
        raise FormatError(f"{path}: expected header t,f_x,f_y,f_z")
    data = np.asarray(rows[1:], dtype=np.float64)
    return data[:, 0], ForceSeries(f=data[:, 1:], source=source)


# -- network parameters -------------------------------------------------------------------------


def dumps_params(params):
    """Header line (architecture, array layout, training metadata) then raw float64 data."""
    names = list(params.arrays)
    header = {
        "format": "ccforce-position-params",
        "version": FORMAT_VERSION,
        "model_kind": params.model_kind,
        "hidden": int(params.hidden),
        "seed": int(params.seed),
        "epochs": int(params.epochs),
        "final_loss": None if math.isnan(params.final_loss) else params.final_loss,
        "loss_history": list(params.loss_history),
        "arrays": [[n, list(params.arrays[n].shape)] for n in names] + [["input_mean", [32]], ["input_scale", [32]]],
    }
    blob = b"".join(
        np.ascontiguousarray(a, dtype="<f8").tobytes()
        for a in [params.arrays[n] for n in names] + [params.input_mean, params.input_scale]
    )
    return dumps_json(header, indent=None).encode("utf-8") + b"\n" + blob


def loads_params(data):
    head, sep, blob = data.partition(b"\n")
    if not sep:
        raise FormatError("parameter file lacks a header line")
    try:
        header = json.loads(head.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise FormatError("parameter file header is not valid JSON") from None
    _check_header(header, "ccforce-position-params", "parameter file")
    arrays, offset = {}, 0
    for name, shape in header["arrays"]:
        size = int(np.prod(shape)) * 8
        if offset + size > len(blob):
            raise FormatError(f"parameter file is truncated inside {name}")
        arrays[name] = np.frombuffer(blob[offset : offset + size], dtype="<f8").reshape(shape).astype(np.float64)
        offset += size
    if offset != len(blob):
        raise FormatError("parameter file has trailing bytes")
    mean, scale = arrays.pop("input_mean"), arrays.pop("input_scale")
    return PositionEstimatorParams(
        model_kind=header["model_kind"],
        arrays=arrays,
        input_mean=mean,
        input_scale=scale,
        hidden=header["hidden"],
        seed=header["seed"],
        epochs=header["epochs"],
        final_loss=math.nan if header["final_loss"] is None else header["final_loss"],
        loss_history=tuple(header["loss_history"]),
    )


def write_params(params, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps_params(params))


def read_params(path):
    return loads_params(Path(path).read_bytes())


def sniff_format(path):
    """The ``format`` tag of a JSON artifact or parameter file."""
    with open(path, "rb") as fh:
        first = fh.readline()
    try:
        head = json.loads(first.decode("utf-8"))
        if isinstance(head, dict) and "format" in head:
            return head["format"]
    except (UnicodeDecodeError, json.JSONDecodeError):
        pass
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh).get("format")
    except (UnicodeDecodeError, json.JSONDecodeError, AttributeError):
        return None


__all__ = [
    "FormatError",
    "dumps_json",
    "format_float",
    "read_classifier",
    "read_contact_signals",
    "read_demos",
    "read_force_series",
    "read_params",
    "read_posdiff_fits",
    "read_stiffness_fits",
    "write_classifier",
    "write_contact_signals",
    "write_demos",
    "write_force_series",
    "write_params",
    "write_posdiff_fits",
    "write_stiffness_fits",
]
