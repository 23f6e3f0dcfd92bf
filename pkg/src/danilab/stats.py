"""Monte Carlo statistics along curve orbits of the diagonal flow.

Every estimator draws curve parameters from a counter-based Sampler, pushes
the corresponding lattices through a_t (optionally normalized by the
centralizer element of the curve derivative), evaluates a box-count /
membership / shortest-vector observable, and aggregates. Per-sample values
are pure functions of (seed, index), and aggregation is numpy pairwise
summation over the index-ordered value array, so results are bit-identical
for any thread count.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .curve import MatrixPolyCurve
from .errors import DomainError
from .flow import orbit_point, u_embed
from .lattice import LatticeBasis, count_in_box, in_kmu, in_mahler_compact, shortest_supnorm
from .rng import Sampler


@dataclass(frozen=True)
class Observable:
    """A scalar function of a lattice basis, with a stable display name."""

    kind: str
    mu: Optional[float] = None
    box: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in ("siegel_count", "kmu_indicator", "lambda1"):
            raise DomainError(f"unknown observable kind {self.kind!r}")
        if self.kind == "siegel_count" and not self.box:
            raise DomainError("siegel_count needs box halfwidths")
        if self.kind == "kmu_indicator" and self.mu is None:
            raise DomainError("kmu_indicator needs mu")

    @property
    def name(self) -> str:
        if self.kind == "siegel_count":
            return "siegel_count[" + ",".join(repr(float(w)) for w in self.box) + "]"
        if self.kind == "kmu_indicator":
            return f"kmu_indicator[{float(self.mu)!r}]"
        return "lambda1"

    def evaluate(self, basis: LatticeBasis) -> float:
        if self.kind == "siegel_count":
            return float(count_in_box(basis, self.box))
        if self.kind == "kmu_indicator":
            return 1.0 if in_kmu(basis, self.mu) else 0.0
        return float(shortest_supnorm(basis).length)


def siegel_count(box) -> Observable:
    return Observable(kind="siegel_count", box=tuple(box))


def kmu_indicator(mu: float) -> Observable:
    return Observable(kind="kmu_indicator", mu=float(mu))


def lambda1() -> Observable:
    return Observable(kind="lambda1")


@dataclass(frozen=True)
class ObservableRecord:
    op: str
    t: float
    observable: str
    mean: float
    stderr: float
    M: int
    seed: int

    def payload(self) -> dict:
        return {
            "module": "stats",
            "op": self.op,
            "t": self.t,
            "observable": self.observable,
            "mean": self.mean,
            "stderr": self.stderr,
            "M": self.M,
            "seed": self.seed,
        }


def _map_samples(fn, points, threads: int):
    # Values depend only on the point, never on evaluation order, so any
    # executor yields the same array.
    if threads <= 1:
        return np.array([fn(s) for s in points], dtype=float)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return np.array(list(pool.map(fn, points)), dtype=float)


def _mean_stderr(values: np.ndarray):
    mean = float(np.mean(values))
    if values.size < 2:
        return mean, 0.0
    stderr = float(np.std(values, ddof=1) / math.sqrt(values.size))
    return mean, stderr


def siegel_average(curve: MatrixPolyCurve, t: float, box, sampler: Sampler,
                   basepoint: LatticeBasis = None, normalize: bool = False,
                   threads: int = 1) -> ObservableRecord:
    """Mean count of nonzero lattice vectors in the box along the orbit; the
    Haar expectation of the count is the box volume."""
    obs = siegel_count(box)
    points = sampler.points(curve.interval)

    def one(s):
        return obs.evaluate(orbit_point(curve, s, t, basepoint=basepoint, normalize=normalize))

    values = _map_samples(one, points, threads)
    mean, se = _mean_stderr(values)
    return ObservableRecord(op="siegel_average", t=float(t), observable=obs.name,
                            mean=mean, stderr=se, M=sampler.count, seed=sampler.seed)


def kmu_fraction(curve: MatrixPolyCurve, t: float, mu: float, sampler: Sampler,
                 normalize: bool = False, threads: int = 1) -> ObservableRecord:
    """Fraction of sampled orbit lattices avoiding the open mu-ball."""
    obs = kmu_indicator(mu)
    points = sampler.points(curve.interval)

    def one(s):
        return obs.evaluate(orbit_point(curve, s, t, normalize=normalize))

    values = _map_samples(one, points, threads)
    mean, se = _mean_stderr(values)
    return ObservableRecord(op="kmu_fraction", t=float(t), observable=obs.name,
                            mean=mean, stderr=se, M=sampler.count, seed=sampler.seed)


def nondivergence_profile(curve: MatrixPolyCurve, t_list, eps: float, sampler: Sampler,
                          threads: int = 1):
    """Per flow time, the fraction of samples whose lattice has a nonzero
    vector of sup-norm below eps (the mass outside the Mahler compact)."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    points = sampler.points(curve.interval)
    records = []
    for t in t_list:
        def one(s, t=t):
            basis = orbit_point(curve, s, t)
            return 0.0 if in_mahler_compact(basis, eps) else 1.0

        values = _map_samples(one, points, threads)
        mean, se = _mean_stderr(values)
        records.append(ObservableRecord(op="nondivergence_profile", t=float(t),
                                        observable=f"lambda1_below[{float(eps)!r}]",
                                        mean=mean, stderr=se, M=sampler.count,
                                        seed=sampler.seed))
    return records


def w_invariance_gap(curve: MatrixPolyCurve, t: float, r: float, observable: Observable,
                     sampler: Sampler, threads: int = 1) -> dict:
    """Difference of observable means between normalized orbit lattices and
    their translates by the unipotent u(r I); decay of the gap with t is the
    expected approach to translation invariance."""
    points = sampler.points(curve.interval)
    shift = u_embed(float(r) * np.eye(curve.n))

    def one_pair(s):
        base = orbit_point(curve, s, t, normalize=True)
        translated = LatticeBasis(shift.entries @ base.cols)
        return observable.evaluate(base), observable.evaluate(translated)

    if threads <= 1:
        pairs = [one_pair(s) for s in points]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pairs = list(pool.map(one_pair, points))
    base_vals = np.array([p[0] for p in pairs], dtype=float)
    tr_vals = np.array([p[1] for p in pairs], dtype=float)
    mean_b, se_b = _mean_stderr(base_vals)
    mean_t, se_t = _mean_stderr(tr_vals)
    return {
        "module": "stats",
        "op": "w_invariance_gap",
        "t": float(t),
        "r": float(r),
        "observable": observable.name,
        "mean_base": mean_b,
        "mean_translated": mean_t,
        "stderr_base": se_b,
        "stderr_translated": se_t,
        "gap": abs(mean_b - mean_t),
        "M": sampler.count,
        "seed": sampler.seed,
    }


def convergence_gap(curve: MatrixPolyCurve, t1: float, t2: float, observable: Observable,
                    sampler: Sampler, normalize_pair=("raw", "normalized"),
                    threads: int = 1) -> dict:
    """Compare the two basepoint conventions at equal flow times.

    Returns the raw-vs-normalized gap at t1 and t2 plus the t1 -> t2 drift of
    each mode; mixing of the flow should shrink the gap as t grows.
    """
    modes = tuple(normalize_pair)
    for mode in modes:
        if mode not in ("raw", "normalized"):
            raise DomainError(f"unknown mode {mode!r} in normalize_pair")
    if len(modes) != 2:
        raise DomainError("normalize_pair must name exactly two modes")
    points = sampler.points(curve.interval)
    means = {}
    errs = {}
    for t in (t1, t2):
        for mode in set(modes):
            def one(s, t=t, mode=mode):
                basis = orbit_point(curve, s, t, normalize=(mode == "normalized"))
                return observable.evaluate(basis)

            values = _map_samples(one, points, threads)
            means[(t, mode)], errs[(t, mode)] = _mean_stderr(values)
    a, b = modes
    return {
        "module": "stats",
        "op": "convergence_gap",
        "t1": float(t1),
        "t2": float(t2),
        "observable": observable.name,
        "modes": list(modes),
        "gap_t1": abs(means[(t1, a)] - means[(t1, b)]),
        "gap_t2": abs(means[(t2, a)] - means[(t2, b)]),
        "drift": {mode: abs(means[(t2, mode)] - means[(t1, mode)]) for mode in modes},
        "stderr_max": max(errs.values()),
        "M": sampler.count,
        "seed": sampler.seed,
    }
