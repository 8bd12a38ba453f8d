"""File formats: edge lists, DD matrices, vertex pairs, and sketches.

Text formats are line-oriented with ``#`` comments:

* edge list — ``u v w`` per line (0-based ids, positive float weight);
* DD matrix — first non-comment line ``n``, then ``u v value`` entries
  (symmetric entries may be given once; ``u == v`` sets the diagonal);
* pairs — ``u v`` per line.

Sketches have two interchangeable encodings:

* a canonical little-endian binary form (header then per-vertex
  records, entries sorted by vertex id) that round-trips bit-exactly;
* a JSON mirror carrying the same numbers (Python's float repr
  round-trips IEEE doubles losslessly, so the mirror loses nothing).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .ddmatrix import DDMatrix
from .errors import ValidationError
from .graphs import WeightedGraph, build_graph
from .sketch import ResistanceSketch, SketchParams

__all__ = [
    "read_edge_list", "write_edge_list",
    "read_dd_matrix", "write_dd_matrix",
    "read_pairs",
    "sketch_to_bytes", "sketch_from_bytes",
    "save_sketch_binary", "load_sketch_binary",
    "sketch_to_json", "sketch_from_json",
    "save_sketch_json", "load_sketch_json",
]

SKETCH_MAGIC = b"RSKB"
SKETCH_VERSION = 1
# magic, version, n, epsilon, nu2, t0, s, threshold, seed
_HEADER = struct.Struct("<4sIQddQQdQ")


# =============================================================================
# Text formats
# =============================================================================


def _data_lines(path: str | Path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line


def read_edge_list(path: str | Path, n: int | None = None) -> WeightedGraph:
    """Parse a ``u v w`` edge-list file into a graph."""
    edges = []
    for lineno, line in _data_lines(path):
        parts = line.split()
        if len(parts) != 3:
            raise ValidationError(f"{path}:{lineno}: expected 'u v w', got {line!r}")
        try:
            u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from None
        edges.append((u, v, w))
    if not edges and n is None:
        raise ValidationError(f"{path}: no edges found")
    return build_graph(edges, n=n)


def write_edge_list(g: WeightedGraph, path: str | Path, header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for u, v, w in zip(g.edge_u, g.edge_v, g.edge_w):
            fh.write(f"{u} {v} {float(w)!r}\n")


def read_dd_matrix(path: str | Path) -> DDMatrix:
    """Parse a DD-matrix file: a size line ``n`` then ``u v value`` rows."""
    it = _data_lines(path)
    try:
        lineno, first = next(it)
    except StopIteration:
        raise ValidationError(f"{path}: empty matrix file") from None
    try:
        n = int(first)
    except ValueError:
        raise ValidationError(f"{path}:{lineno}: first line must be the size n, got {first!r}") from None
    entries = []
    for lineno, line in it:
        parts = line.split()
        if len(parts) != 3:
            raise ValidationError(f"{path}:{lineno}: expected 'u v value', got {line!r}")
        try:
            entries.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from None
    return DDMatrix.from_entries(n, entries)


def write_dd_matrix(m: DDMatrix, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{m.n}\n")
        for u in range(m.n):
            fh.write(f"{u} {u} {float(m.values[u, u])!r}\n")
        iu, iv = np.nonzero(np.triu(m.values, k=1))
        for u, v in zip(iu, iv):
            fh.write(f"{u} {v} {float(m.values[u, v])!r}\n")


def read_pairs(path: str | Path) -> np.ndarray:
    """Parse a ``u v`` pairs file into an ``(k, 2)`` int array."""
    pairs = []
    for lineno, line in _data_lines(path):
        parts = line.split()
        if len(parts) != 2:
            raise ValidationError(f"{path}:{lineno}: expected 'u v', got {line!r}")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from None
    if not pairs:
        raise ValidationError(f"{path}: no pairs found")
    return np.asarray(pairs, dtype=np.int64)


# =============================================================================
# Sketch binary form
# =============================================================================


def sketch_to_bytes(sk: ResistanceSketch) -> bytes:
    """Canonical binary encoding (little-endian, entries sorted by id)."""
    out = bytearray()
    p = sk.params
    out += _HEADER.pack(SKETCH_MAGIC, SKETCH_VERSION, sk.n, p.epsilon, p.nu2,
                        p.t0, p.s, p.threshold, sk.seed)
    for u in range(sk.n):
        idx = sk.entry_vertices[u]
        val = sk.entry_values[u]
        out += struct.pack("<QdQ", u, float(sk.degrees[u]), len(idx))
        for i, v in zip(idx.tolist(), val.tolist()):
            out += struct.pack("<Qd", i, v)
    return bytes(out)


def sketch_from_bytes(data: bytes) -> ResistanceSketch:
    if len(data) < _HEADER.size:
        raise ValidationError("sketch data truncated before header")
    magic, version, n, eps, nu2, t0, s, thr, seed = _HEADER.unpack_from(data, 0)
    if magic != SKETCH_MAGIC:
        raise ValidationError(f"bad sketch magic {magic!r}")
    if version != SKETCH_VERSION:
        raise ValidationError(f"unsupported sketch version {version}")
    params = SketchParams(epsilon=eps, nu2=nu2, t0=t0, s=s, threshold=thr)
    off = _HEADER.size
    rec = struct.Struct("<QdQ")
    ent = struct.Struct("<Qd")
    degrees = np.zeros(n, dtype=np.float64)
    entry_vertices: list[np.ndarray] = []
    entry_values: list[np.ndarray] = []
    for u in range(n):
        if off + rec.size > len(data):
            raise ValidationError(f"sketch data truncated at vertex {u}")
        uu, deg, count = rec.unpack_from(data, off)
        off += rec.size
        if uu != u:
            raise ValidationError(f"vertex record out of order: expected {u}, got {uu}")
        degrees[u] = deg
        idx = np.empty(count, dtype=np.int64)
        val = np.empty(count, dtype=np.float64)
        for i in range(count):
            if off + ent.size > len(data):
                raise ValidationError(f"sketch data truncated in vertex {u} entries")
            idx[i], val[i] = ent.unpack_from(data, off)
            off += ent.size
        if count > 1 and np.any(np.diff(idx) <= 0):
            raise ValidationError(f"vertex {u} entries are not strictly ascending")
        entry_vertices.append(idx)
        entry_values.append(val)
    if off != len(data):
        raise ValidationError(f"{len(data) - off} trailing bytes after sketch records")
    return ResistanceSketch(n=n, params=params, seed=seed, degrees=degrees,
                            entry_vertices=entry_vertices, entry_values=entry_values)


def save_sketch_binary(sk: ResistanceSketch, path: str | Path) -> None:
    Path(path).write_bytes(sketch_to_bytes(sk))


def load_sketch_binary(path: str | Path) -> ResistanceSketch:
    return sketch_from_bytes(Path(path).read_bytes())


# =============================================================================
# Sketch JSON mirror
# =============================================================================


def sketch_to_json(sk: ResistanceSketch) -> str:
    p = sk.params
    doc = {
        "format": "excess-sketch",
        "version": SKETCH_VERSION,
        "n": sk.n,
        "epsilon": p.epsilon,
        "nu2": p.nu2,
        "t0": p.t0,
        "s": p.s,
        "threshold": p.threshold,
        "seed": sk.seed,
        "vertices": [
            {
                "u": u,
                "degree": float(sk.degrees[u]),
                "entries": [[int(i), float(v)] for i, v in
                            zip(sk.entry_vertices[u].tolist(), sk.entry_values[u].tolist())],
            }
            for u in range(sk.n)
        ],
    }
    return json.dumps(doc, indent=1)


def sketch_from_json(text: str) -> ResistanceSketch:
    doc = json.loads(text)
    if doc.get("format") != "excess-sketch":
        raise ValidationError(f"not a sketch document (format={doc.get('format')!r})")
    if doc.get("version") != SKETCH_VERSION:
        raise ValidationError(f"unsupported sketch version {doc.get('version')!r}")
    n = int(doc["n"])
    params = SketchParams(epsilon=float(doc["epsilon"]), nu2=float(doc["nu2"]),
                          t0=int(doc["t0"]), s=int(doc["s"]),
                          threshold=float(doc["threshold"]))
    if len(doc["vertices"]) != n:
        raise ValidationError(f"expected {n} vertex records, got {len(doc['vertices'])}")
    degrees = np.zeros(n, dtype=np.float64)
    entry_vertices: list[np.ndarray] = []
    entry_values: list[np.ndarray] = []
    for u, rec in enumerate(doc["vertices"]):
        if int(rec["u"]) != u:
            raise ValidationError(f"vertex record out of order at {u}")
        degrees[u] = float(rec["degree"])
        ids = np.asarray([e[0] for e in rec["entries"]], dtype=np.int64)
        vals = np.asarray([e[1] for e in rec["entries"]], dtype=np.float64)
        entry_vertices.append(ids)
        entry_values.append(vals)
    return ResistanceSketch(n=n, params=params, seed=int(doc["seed"]), degrees=degrees,
                            entry_vertices=entry_vertices, entry_values=entry_values)


def save_sketch_json(sk: ResistanceSketch, path: str | Path) -> None:
    Path(path).write_text(sketch_to_json(sk), encoding="utf-8")


def load_sketch_json(path: str | Path) -> ResistanceSketch:
    return sketch_from_json(Path(path).read_text(encoding="utf-8"))
