"""JSON reading and writing of spaces, measures, targets and kernels.

Floats are written with Python's shortest round-trip representation,
so a dump followed by a load reproduces every value bit for bit.  The
schemas are documented in ``docs/formats.md``.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Union

import numpy as np

from .core import (INTERVAL, DiscreteDistribution, FiniteMetric, FiniteMMSpace, QMMSpace,
                   from_graph, graph_adjacency, new_finite_mm, new_qmm)
from .distances import GridKernel
from .errors import BadDistribution, DimensionMismatch, MMSpaceError

Loaded = Union[FiniteMMSpace, QMMSpace, DiscreteDistribution, FiniteMetric, GridKernel]


class FormatError(MMSpaceError):
    """Malformed JSON document."""


def _floats(x):
    return [float(v) for v in np.asarray(x, dtype=float).ravel()]


def _matrix(d):
    return [_floats(row) for row in np.asarray(d, dtype=float)]


def _dist_pairs(e: DiscreteDistribution):
    return [[float(v), float(w)] for v, w in e.atoms]


def space_to_dict(obj) -> dict:
    """JSON-ready dictionary for any object :func:`space_from_dict` reads."""
    if isinstance(obj, FiniteMMSpace):
        out = {"kind": "mm", "weights": _floats(obj.weights), "dist": _matrix(obj.dist)}
        if obj.pseudometric:
            out["pseudometric"] = True
        return out
    if isinstance(obj, QMMSpace):
        return {"kind": "qmm", "weights": _floats(obj.weights),
                "dstar": [[_dist_pairs(e) for e in row] for row in obj.dstar]}
    if isinstance(obj, DiscreteDistribution):
        return {"kind": "measure", "values": _floats(obj.values), "weights": _floats(obj.weights)}
    if isinstance(obj, FiniteMetric):
        return {"kind": "metric", "dist": _matrix(obj.dist)}
    if isinstance(obj, GridKernel):
        if obj.is_distributional:
            cells = [[_dist_pairs(e) for e in row] for row in obj.cells]
        else:
            cells = _matrix(obj.cells)
        return {"kind": "grid", "cell_weights": _floats(obj.cell_weights), "cells": cells}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _require(doc, *keys):
    missing = [k for k in keys if k not in doc]
    if missing:
        raise FormatError(f"{doc.get('kind')!r} document lacks {', '.join(missing)}")


def _distribution(pairs):
    if not pairs:
        raise BadDistribution("empty distribution")
    try:
        values, weights = zip(*pairs)
    except (TypeError, ValueError) as exc:
        raise FormatError("distributions are lists of [value, weight] pairs") from exc
    return DiscreteDistribution.from_atoms(values, weights)


def space_from_dict(doc: dict) -> Loaded:
    """Build the object described by a JSON document (validated)."""
    if not isinstance(doc, dict) or "kind" not in doc:
        raise FormatError("document must be an object with a 'kind' field")
    kind = doc["kind"]
    if kind == "mm":
        _require(doc, "weights", "dist")
        return new_finite_mm(doc["weights"], doc["dist"], bool(doc.get("pseudometric", False)))
    if kind == "qmm":
        _require(doc, "weights", "dstar")
        dstar = [[_distribution(e) for e in row] for row in doc["dstar"]]
        return new_qmm(doc["weights"], dstar)
    if kind == "graph":
        _require(doc, "n", "edges")
        n = doc["n"]
        if not isinstance(n, int) or n < 1:
            raise FormatError("graph 'n' must be a positive integer")
        edges = doc["edges"]
        for e in edges:
            if len(e) != 2 or not all(isinstance(v, int) and 0 <= v < n for v in e):
                raise DimensionMismatch(f"edge {e!r} is not a pair of vertices in 0..{n - 1}")
        return from_graph(graph_adjacency(n, edges))
    if kind == "measure":
        _require(doc, "values", "weights")
        return DiscreteDistribution.from_atoms(doc["values"], doc["weights"])
    if kind == "metric":
        _require(doc, "dist")
        return FiniteMetric.from_matrix(doc["dist"])
    if kind == "grid":
        _require(doc, "cell_weights", "cells")
        cells = doc["cells"]
        n = len(cells)
        distributional = n > 0 and isinstance(cells[0][0], list)
        if distributional:
            cells = tuple(tuple(_distribution(e) for e in row) for row in cells)
        else:
            cells = np.asarray(cells, dtype=float)
        return GridKernel(cells, np.asarray(doc["cell_weights"], dtype=float))
    raise FormatError(f"unknown kind {kind!r}")


def dumps(obj) -> str:
    """Serialize with sorted keys and a trailing newline (byte-stable)."""
    return json.dumps(space_to_dict(obj), sort_keys=True) + "\n"


def loads(text: str) -> Loaded:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    return space_from_dict(doc)


def dump_space(obj, path) -> None:
    Path(path).write_text(dumps(obj))


def load_space(path) -> Loaded:
    return loads(Path(path).read_text())


def load_target(spec: str):
    """``"interval"`` or the path of a ``metric`` document."""
    if spec == INTERVAL:
        return INTERVAL
    obj = load_space(spec)
    if not isinstance(obj, FiniteMetric):
        raise FormatError("target file must hold a 'metric' document")
    return obj


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
