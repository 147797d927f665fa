"""Embedding container and the text import/export format.

File format: header line "N d", then N lines "node_id v1 ... vd" where
node_id is the external user id known to the trust graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..datasets import TrustGraph
from ..errors import DataError, DataFormatError

__all__ = [
    "EmbeddingMatrix",
    "zero_isolated_rows",
    "export_embedding",
    "import_embedding",
    "write_meta_sidecar",
]


@dataclass
class EmbeddingMatrix:
    """Dense row-per-node latent vectors plus provenance metadata."""

    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] < 1:
            raise ValueError(f"embedding must be 2-D with dim >= 1, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("embedding contains non-finite entries")

    @property
    def num_nodes(self) -> int:
        return int(self.values.shape[0])

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])


def zero_isolated_rows(values: np.ndarray, g: TrustGraph) -> np.ndarray:
    """Zero the rows of degree-0 nodes in place and return the array.

    Nodes without trust connections carry no structural signal; a zero
    vector makes the kNN stage treat them as "no neighbors", which keeps
    coverage semantics uniform across embedding methods.
    """
    isolated = g.degrees() == 0
    values[isolated, :] = 0.0
    return values


def export_embedding(e: EmbeddingMatrix, g: TrustGraph, path) -> None:
    if e.num_nodes != g.num_nodes:
        raise DataError(
            f"embedding has {e.num_nodes} rows but graph has {g.num_nodes} nodes"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{e.num_nodes} {e.dim}\n")
        for i in range(e.num_nodes):
            row = " ".join(repr(float(x)) for x in e.values[i])
            fh.write(f"{g.node_ids[i]} {row}\n")


def import_embedding(source, g: TrustGraph) -> EmbeddingMatrix:
    """Read an embedding file and align rows to the graph's dense index.

    Raises on dimension mismatch, unknown or missing node ids, and
    non-finite values.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.exists():
            raise DataError(f"embedding file not found: {path}")
        lines = path.read_text(encoding="utf-8").splitlines()
    else:
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        lines = data.splitlines()
    if not lines:
        raise DataFormatError("line 1: missing 'N d' header")
    header = lines[0].split()
    if len(header) != 2:
        raise DataFormatError(f"line 1: expected 'N d' header, got {lines[0]!r}")
    try:
        n, dim = int(header[0]), int(header[1])
    except ValueError:
        raise DataFormatError(f"line 1: expected integer 'N d' header, got {lines[0]!r}") from None
    if dim < 1:
        raise DataFormatError(f"line 1: dimension must be >= 1, got {dim}")

    values = np.zeros((g.num_nodes, dim), dtype=np.float64)
    seen = np.zeros(g.num_nodes, dtype=bool)
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != n:
        raise DataFormatError(f"header announces {n} rows, file has {len(body)}")
    for lineno, line in enumerate(body, start=2):
        tokens = line.split()
        if len(tokens) != dim + 1:
            raise DataFormatError(
                f"line {lineno}: expected node id + {dim} values, got {len(tokens)} fields"
            )
        try:
            node = g.index_of(int(tokens[0]))
        except (KeyError, ValueError):
            raise DataError(f"line {lineno}: unknown node id {tokens[0]!r}") from None
        row = np.array([float(t) for t in tokens[1:]], dtype=np.float64)
        if not np.all(np.isfinite(row)):
            raise DataError(f"line {lineno}: non-finite value for node id {tokens[0]}")
        values[node] = row
        seen[node] = True
    if not np.all(seen):
        missing = [int(g.node_ids[i]) for i in np.flatnonzero(~seen)[:20]]
        raise DataError(
            f"embedding misses {int((~seen).sum())} graph nodes, e.g. ids {missing}"
        )
    return EmbeddingMatrix(values, meta={"method": "imported", "params": {}})


def write_meta_sidecar(e: EmbeddingMatrix, path) -> None:
    """JSON sidecar: {method, params, seed, wall_time}."""
    meta = {
        "method": e.meta.get("method", "unknown"),
        "params": e.meta.get("params", {}),
        "seed": e.meta.get("seed"),
        "wall_time": e.meta.get("wall_time"),
    }
    Path(path).write_text(json.dumps(meta, sort_keys=True, indent=2), encoding="utf-8")
