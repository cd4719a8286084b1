"""File formats: edge lists, feature matrices, a binary observation cache,
model snapshots, metrics CSV, and the run manifest.

All writes go through a temp file plus atomic rename.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import struct
import warnings

import numpy as np

from .core import InductiveModel, LowRankFactors, ObservedOnes
from .errors import DataError

BINARY_MAGIC = b"PUMC1"
METRICS_COLUMNS = ["task", "solver", "n", "k", "rho", "alpha", "lambda",
                   "metric", "value", "sweeps", "wall_clock"]


def _atomic_write_bytes(path, payload: bytes):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def _atomic_write_text(path, payload: str):
    _atomic_write_bytes(path, payload.encode("utf-8"))


def read_edge_list(path, undirected=True) -> ObservedOnes:
    """Parse `src<TAB>dst[<TAB>weight]` lines; `#` comments skipped.

    `%`-prefixed header lines may declare `base=1` (1-based indices) and
    `nodes=N` (index space size). Undirected mode applies symmetric closure.
    """
    base = 0
    declared = None
    srcs, dsts = [], []
    warned_weight = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("%"):
                for token in line[1:].split():
                    if token.startswith("base="):
                        base = int(token[5:])
                    elif token.startswith("nodes="):
                        declared = int(token[6:])
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise DataError(f"{path}:{lineno}: expected 'src dst [weight]', got {line!r}")
            if len(parts) == 3 and not warned_weight:
                warnings.warn(f"{path}: edge weights present, ignored", stacklevel=2)
                warned_weight = True
            try:
                s, d = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: non-integer node index") from exc
            srcs.append(s - base)
            dsts.append(d - base)
    if not srcs:
        raise DataError(f"{path}: no edges found")
    srcs = np.asarray(srcs, dtype=np.int64)
    dsts = np.asarray(dsts, dtype=np.int64)
    if srcs.min() < 0 or dsts.min() < 0:
        raise DataError(f"{path}: negative index after base adjustment")
    n = declared if declared is not None else int(max(srcs.max(), dsts.max())) + 1
    obs = ObservedOnes(n, n, srcs, dsts)
    return obs.symmetrized() if undirected else obs


def write_edge_list(obs: ObservedOnes, path):
    """One stored (row, col) pair per line; read back with undirected=False."""
    buf = _io.StringIO()
    buf.write(f"% nodes={max(obs.m, obs.n)}\n")
    for r, c in zip(obs.rows.tolist(), obs.cols.tolist()):
        buf.write(f"{r}\t{c}\n")
    _atomic_write_text(path, buf.getvalue())


def write_observed_binary(obs: ObservedOnes, path):
    """Compact cache: magic PUMC1, little-endian u64 m, n, count, then u32 pairs."""
    if max(obs.m, obs.n) >= 2**32:
        raise DataError("indices overflow the u32 pair format")
    pairs = np.empty((obs.nnz, 2), dtype="<u4")
    pairs[:, 0] = obs.rows
    pairs[:, 1] = obs.cols
    payload = BINARY_MAGIC + struct.pack("<QQQ", obs.m, obs.n, obs.nnz) + pairs.tobytes()
    _atomic_write_bytes(path, payload)


def read_observed_binary(path) -> ObservedOnes:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:5] != BINARY_MAGIC:
        raise DataError(f"{path}: bad magic, not a PUMC1 cache")
    m, n, count = struct.unpack("<QQQ", blob[5:29])
    expected = 29 + 8 * count
    if len(blob) != expected:
        raise DataError(f"{path}: truncated cache ({len(blob)} bytes, expected {expected})")
    pairs = np.frombuffer(blob[29:], dtype="<u4").reshape(count, 2)
    return ObservedOnes(m, n, pairs[:, 0].astype(np.int64), pairs[:, 1].astype(np.int64))


def read_feature_matrix(path, normalize_rows=False) -> np.ndarray:
    """Whitespace-separated numeric rows of constant arity; optional `% rows cols` header."""
    declared = None
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("%"):
                parts = line[1:].split()
                if len(parts) == 2:
                    declared = (int(parts[0]), int(parts[1]))
                continue
            try:
                vals = [float(tok) for tok in line.split()]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: non-numeric token") from exc
            if rows and len(vals) != len(rows[0]):
                raise DataError(f"{path}:{lineno}: ragged row, expected {len(rows[0])} values")
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: empty feature matrix")
    mat = np.asarray(rows, dtype=np.float64)
    if declared is not None and mat.shape != declared:
        raise DataError(f"{path}: header declares {declared}, found {mat.shape}")
    if normalize_rows:
        norms = np.linalg.norm(mat, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        mat = mat / norms
    return mat


def read_labels(path) -> np.ndarray:
    labels = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#") or line.startswith("%"):
                continue
            try:
                labels.append(int(line.split()[0]))
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: non-integer label") from exc
    if not labels:
        raise DataError(f"{path}: empty label file")
    return np.asarray(labels, dtype=np.int64)


def save_model(model, path):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        if isinstance(model, LowRankFactors):
            np.savez(fh, kind="factors", w=model.w, h=model.h)
        elif isinstance(model, InductiveModel):
            np.savez(fh, kind="inductive", f_u=model.f_u, f_v=model.f_v, d_core=model.d_core)
        else:
            raise DataError(f"cannot save model of type {type(model).__name__}")
    os.replace(tmp, path)


def load_model(path):
    with np.load(path) as data:
        kind = str(data["kind"])
        if kind == "factors":
            return LowRankFactors(data["w"], data["h"])
        if kind == "inductive":
            return InductiveModel(data["f_u"], data["f_v"], data["d_core"])
    raise DataError(f"{path}: unknown model kind {kind!r}")


def format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def metrics_rows_to_cells(rows):
    """Normalize metric row dicts to the fixed column order as strings."""
    out = []
    for row in rows:
        out.append([format_cell(row.get(col)) for col in METRICS_COLUMNS])
    return out


def render_metrics_csv(cells) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    writer.writerow(METRICS_COLUMNS)
    writer.writerows(cells)
    return buf.getvalue()


def write_metrics_csv(cells, path):
    _atomic_write_text(path, render_metrics_csv(cells))


def write_curve_csv(points, path):
    """points: iterable of (label, k, fpr, fnr)."""
    buf = _io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    writer.writerow(["method", "k", "fpr", "fnr"])
    for label, k, fpr, fnr in points:
        writer.writerow([label, str(k), repr(float(fpr)), repr(float(fnr))])
    _atomic_write_text(path, buf.getvalue())


def write_manifest(manifest: dict, path):
    _atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
