"""File formats: JSON field documents, JSON-lines trajectories and CSV energy logs.

Every writer goes through :func:`atomic_write` (temporary file + rename), so a
reader never sees a half-written file.
"""

import csv
import io as _io
import json
import os
import tempfile

import numpy as np

from .errors import SobgeoError, ValidationError

SCHEMA_VERSION = 1


class FileError(SobgeoError):
    """Unreadable or unwritable file (as opposed to malformed content)."""


def atomic_write(path, text: str):
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(folder, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise FileError(f"cannot write {path}: {exc}") from exc


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, allow_nan=False)


def field_document(points, config=None) -> dict:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    doc = {
        "schema_version": SCHEMA_VERSION,
        "n": int(pts.shape[0]),
        "d": int(pts.shape[1]),
        "points": pts.tolist(),
    }
    if config is not None:
        doc["config"] = config
    return doc


def write_field(path, points, config=None):
    """Write a loop, tangent field or scalar field (``d = 1``)."""
    atomic_write(path, _dumps(field_document(points, config)) + "\n")


def parse_field(doc, n=None, d=None) -> np.ndarray:
    """Validate a field document and return its ``(n, d)`` array."""
    if not isinstance(doc, dict):
        raise ValidationError("field document must be a JSON object")
    missing = [k for k in ("schema_version", "n", "d", "points") if k not in doc]
    if missing:
        raise ValidationError(f"field document lacks {', '.join(missing)}")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ValidationError(f"unsupported schema_version {doc['schema_version']!r}")
    try:
        pts = np.array(doc["points"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"points are not a numeric array: {exc}") from exc
    if pts.ndim != 2 or pts.shape != (doc["n"], doc["d"]):
        raise ValidationError(f"points have shape {pts.shape}, header says ({doc['n']}, {doc['d']})")
    if not np.all(np.isfinite(pts)):
        raise ValidationError("points contain non-finite values")
    if n is not None and pts.shape[0] != n:
        raise ValidationError(f"field has n = {pts.shape[0]}, config expects {n}")
    if d is not None and pts.shape[1] != d:
        raise ValidationError(f"field has d = {pts.shape[1]}, expected {d}")
    return pts


def read_field(path, n=None, d=None) -> np.ndarray:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise FileError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from exc
    return parse_field(doc, n, d)


def read_scalar(path, n=None) -> np.ndarray:
    return read_field(path, n, 1)[:, 0]


def write_json(path, obj):
    atomic_write(path, json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n")


def write_jsonl(path, records):
    atomic_write(path, "".join(_dumps(r) + "\n" for r in records))


def read_jsonl(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def trajectory_records(times, points, velocities, energies, tails, config=None) -> list:
    """One JSON-lines record per snapshot; the config rides on the first one."""
    out = []
    for i, t in enumerate(times):
        rec = {
            "t": float(t),
            "points": np.asarray(points[i]).tolist(),
            "velocity": np.asarray(velocities[i]).tolist(),
            "energy": float(energies[i]),
            "tail_energy": float(tails[i]),
        }
        if i == 0 and config is not None:
            rec["config"] = config
        out.append(rec)
    return out


def write_csv(path, header, rows, config=None):
    """CSV with an optional leading ``# config: {...}`` comment line."""
    buf = _io.StringIO()
    if config is not None:
        buf.write("# config: " + _dumps(config) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(x)) for x in row])
    atomic_write(path, buf.getvalue())


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], np.array(rows[1:], dtype=float)
