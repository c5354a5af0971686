"""Example sequences of spaces and moment-based convergence checks.

Weak convergence of the sampling distributions is approximated by the
Cauchy behaviour of finitely many monomial moments.  This is a finite
proxy: agreeing moments up to the chosen order do not prove weak
convergence.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .core import FiniteMMSpace, complete_graph_space, from_graph, sphere_empirical
from .errors import NotConverged, UnknownFamily
from .sampling import MomentSignature, moment_signature

FAMILIES = ("complete_graphs", "spheres", "random_graphs", "user_files")
_ALIASES = {"complete": "complete_graphs", "sphere": "spheres",
            "random-graph": "random_graphs", "random_graph": "random_graphs",
            "files": "user_files"}


@dataclass
class SequenceSpec:
    """A sequence of spaces indexed by ``indices``.

    ``spheres`` uses the index as the dimension and ``count`` points;
    ``random_graphs`` draws G(index, p); ``user_files`` takes one space
    per index from ``spaces`` (already loaded) or ``files`` (JSON paths).
    """

    family: str
    indices: Sequence[int]
    seed: int = 0
    p: Optional[float] = None
    count: int = 400
    spaces: Optional[Sequence[FiniteMMSpace]] = None
    files: Optional[Sequence[str]] = None

    def __post_init__(self):
        self.family = _ALIASES.get(self.family, self.family)
        if self.family not in FAMILIES:
            raise UnknownFamily(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        self.indices = [int(i) for i in self.indices]
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("indices must be strictly increasing")
        if self.family == "random_graphs" and (self.p is None or not 0 <= self.p <= 1):
            raise ValueError("random_graphs needs p in [0, 1]")
        if self.family == "user_files":
            src = self.spaces if self.spaces is not None else self.files
            if src is None or len(src) != len(self.indices):
                raise ValueError("user_files needs one space or file per index")

    def to_dict(self):
        out = {"family": self.family, "indices": list(self.indices), "seed": self.seed}
        if self.family == "random_graphs":
            out["p"] = self.p
        if self.family == "spheres":
            out["count"] = self.count
        if self.files is not None:
            out["files"] = list(self.files)
        return out


def _derived_seed(seed, index):
    return np.random.SeedSequence([int(seed), int(index)])


def generate(spec: SequenceSpec, index: int) -> FiniteMMSpace:
    """The space at ``index`` of the sequence."""
    if index not in spec.indices:
        raise ValueError(f"index {index} is not part of the sequence")
    if spec.family == "complete_graphs":
        return complete_graph_space(index)
    if spec.family == "spheres":
        return sphere_empirical(index, spec.count, _derived_seed(spec.seed, index))
    if spec.family == "random_graphs":
        rng = np.random.default_rng(_derived_seed(spec.seed, index))
        upper = np.triu(rng.random((index, index)) < spec.p, 1)
        return from_graph(upper | upper.T)
    pos = spec.indices.index(index)
    if spec.spaces is not None:
        return spec.spaces[pos]
    from .jsonio import load_space
    return load_space(spec.files[pos])


@dataclass
class ConvergenceReport:
    """Moment trajectories along a sequence and the verdicts drawn from them.

    A moment converges when its last two estimates differ by less than
    ``tol`` plus their combined standard error.
    """

    spec: SequenceSpec
    signatures: Dict[int, MomentSignature]
    tol: float
    r_max: int
    k_max: int
    samples: int
    verdicts: Dict[str, bool] = field(default_factory=dict)
    note: str = ("finite proxy: Cauchy behaviour of monomial moments up to the "
                 "stated order, not a proof of weak convergence")

    def __post_init__(self):
        if not self.verdicts:
            self.verdicts = self.recompute_verdicts()

    @property
    def keys(self):
        first = self.signatures[self.spec.indices[0]]
        return list(first.keys())

    def trajectory(self, key):
        return [(i, self.signatures[i][key]) for i in self.spec.indices]

    def recompute_verdicts(self) -> Dict[str, bool]:
        out = {}
        a, b = self.spec.indices[-2], self.spec.indices[-1]
        for key in self.keys:
            ea, eb = self.signatures[a][key], self.signatures[b][key]
            slack = self.tol + float(np.hypot(ea.stderr, eb.stderr))
            out[MomentSignature.key_label(key)] = bool(abs(ea.estimate - eb.estimate) < slack)
        return out

    @property
    def converged(self) -> bool:
        return all(self.verdicts.values())

    def tail(self) -> MomentSignature:
        return self.signatures[self.spec.indices[-1]]

    def to_dict(self):
        return {
            "spec": self.spec.to_dict(),
            "r_max": self.r_max, "k_max": self.k_max,
            "samples": self.samples, "tol": self.tol,
            "converged": self.converged,
            "verdicts": self.verdicts,
            "note": self.note,
            "trajectories": {
                MomentSignature.key_label(k): [
                    {"index": i, "estimate": e.estimate, "stderr": e.stderr,
                     "mode": "exact" if e.exact else "mc"}
                    for i, e in self.trajectory(k)]
                for k in self.keys},
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["moment", "r", "powers", "index", "estimate", "stderr", "mode"])
        for k in self.keys:
            for i, e in self.trajectory(k):
                w.writerow([MomentSignature.key_label(k), k[0], " ".join(map(str, k[1])), i,
                            repr(e.estimate), repr(e.stderr), "exact" if e.exact else "mc"])
        return buf.getvalue()


def converge_test(spec: SequenceSpec, r_max: int = 2, k_max: int = 2, samples: int = 100_000,
                  tol: float = 0.02, seed=0, workers: int = 1,
                  mode: str = "auto") -> ConvergenceReport:
    """Moment signatures for every index of the sequence plus per-moment
    verdicts comparing the last two indices."""
    if len(spec.indices) < 2:
        raise ValueError("need at least two indices")
    sigs = {}
    for i in spec.indices:
        sigs[i] = moment_signature(generate(spec, i), r_max, k_max, samples,
                                   seed=(int(seed), int(i)), mode=mode, workers=workers)
    return ConvergenceReport(spec, sigs, tol, r_max, k_max, samples)


@dataclass
class LimitComparison:
    verdict: bool
    gaps: Dict[str, float]
    slack: Dict[str, float]
    reports: List[ConvergenceReport]

    def to_dict(self):
        return {"verdict": self.verdict, "gaps": self.gaps, "slack": self.slack,
                "reports": [r.to_dict() for r in self.reports]}


def compare_limits(spec_a: SequenceSpec, spec_b: SequenceSpec, r_max: int = 2, k_max: int = 2,
                   samples: int = 100_000, tol: float = 0.02, seed=0, workers: int = 1,
                   mode: str = "auto") -> LimitComparison:
    """Whether two convergent sequences share their moment limits.

    Raises
    ------
    NotConverged
        naming the sequence (``"a"`` or ``"b"``) that fails
        :func:`converge_test`.
    """
    reports = []
    for name, spec in (("a", spec_a), ("b", spec_b)):
        rep = converge_test(spec, r_max, k_max, samples, tol, seed, workers, mode)
        if not rep.converged:
            raise NotConverged(name)
        reports.append(rep)
    ta, tb = reports[0].tail(), reports[1].tail()
    gaps, slack = {}, {}
    for key in ta.keys():
        label = MomentSignature.key_label(key)
        gaps[label] = abs(ta[key].estimate - tb[key].estimate)
        slack[label] = tol + float(np.hypot(ta[key].stderr, tb[key].stderr))
    verdict = all(gaps[k] <= slack[k] for k in gaps)
    return LimitComparison(verdict, gaps, slack, reports)
