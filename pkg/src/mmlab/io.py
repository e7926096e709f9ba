"""CSV and JSON serialization for reports, sample dumps and curvature fields.

Floats are written with 17 significant digits so every number round-trips
exactly and reruns produce byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

__all__ = [
    "fmt",
    "write_csv",
    "read_csv",
    "write_json",
    "write_sample_dump",
    "read_sample_dump",
    "write_field",
    "read_field",
]


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        if isinstance(row, dict):
            row = [row[h] for h in header]
        w.writerow([fmt(v) for v in row])
    path.write_text(buf.getvalue())
    return path


def read_csv(path):
    """Header and rows (as strings) of a CSV file, skipping ``#`` comment lines."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    return header, list(reader)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_json(path, doc) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
    return path


def write_sample_dump(path, samples, space, sampler) -> tuple:
    """One row per sample (flattened coordinates) plus a JSON seed manifest.

    The first line is a comment carrying the space descriptor; the header
    names each flattened coordinate by its index.
    """
    samples = np.asarray(samples)
    shape = samples.shape[1:]
    flat = samples.reshape(len(samples), -1)
    desc = space.descriptor()
    meta_line = "# " + " ".join(f"{k}={v}" for k, v in desc.items()) + f" shape={'x'.join(map(str, shape))} count={len(samples)}"
    names = ["x[" + ",".join(map(str, idx)) + "]" for idx in np.ndindex(*shape)]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write(meta_line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in flat:
        w.writerow([fmt(v) for v in row])
    path.write_text(buf.getvalue())
    manifest = {
        "space": desc,
        "shape": list(shape),
        "count": len(samples),
        "seed": sampler.seed,
        "stream_id": sampler.stream_id,
        "path": list(sampler.path),
    }
    mpath = write_json(path.with_suffix(".manifest.json"), manifest)
    return path, mpath


def read_sample_dump(path) -> np.ndarray:
    path = Path(path)
    manifest = json.loads(path.with_suffix(".manifest.json").read_text())
    _, rows = read_csv(path)
    data = np.array(rows, dtype=float)
    return data.reshape((len(rows), *manifest["shape"]))


def write_field(path, field) -> tuple:
    """Curvature field as CSV (flattened frame columns + value) and JSON manifest."""
    planes = field.planes
    n, k = planes.shape[1:]
    header = [f"p[{i},{j}]" for i in range(n) for j in range(k)] + ["value"]
    rows = [list(p.ravel()) + [v] for p, v in zip(planes, field.values)]
    path = write_csv(path, header, rows)
    manifest = {"n": n, "k": k, "count": len(field), **{k_: v for k_, v in field.meta.items() if k_ not in ("n", "count")}}
    mpath = write_json(Path(path).with_suffix(".manifest.json"), manifest)
    return path, mpath


def read_field(path):
    from .curvature_pinching import CurvatureField

    path = Path(path)
    manifest = json.loads(path.with_suffix(".manifest.json").read_text())
    header, rows = read_csv(path)
    if header[-1] != "value":
        raise ValueError("curvature field CSV must end with a 'value' column")
    data = np.array(rows, dtype=float)
    n, k = int(manifest["n"]), int(manifest.get("k", 2))
    if data.shape[1] != n * k + 1:
        raise ValueError(f"expected {n * k + 1} columns for n={n}, k={k}, got {data.shape[1]}")
    if len(data) != int(manifest["count"]):
        raise ValueError("row count does not match the manifest")
    return CurvatureField(data[:, :-1].reshape(-1, n, k), data[:, -1], manifest)
