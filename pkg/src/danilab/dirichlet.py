"""Solvability of the two-sided Dirichlet system and its lattice mirror.

For an n x n matrix phi, scale N and quality mu the system asks for integer
vectors p, q with ||phi p - q||_inf < mu / N and ||p||_inf < mu N (both
strict). Insolubility is equivalent to the unimodular lattice
a_log(N) u(phi) Z^2n missing the open sup-norm mu-ball, which is what
correspondence_check verifies cell by cell, exactly when phi and mu are
rational.
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import _linalg
from .curve import MatrixPolyCurve
from .errors import DomainError, InvariantError
from .flow import a_scale, u_embed
from .lattice import LatticeBasis, in_kmu

CONVENTIONS = ("lattice_p_nonzero", "paper_both_nonzero")


@dataclass(frozen=True)
class DirichletQuery:
    phi: np.ndarray
    N: int
    mu: object  # float or Fraction in (0, 1]

    def __post_init__(self):
        phi = self.phi
        if phi.ndim != 2 or phi.shape[0] != phi.shape[1]:
            raise InvariantError("phi must be square")
        if not (isinstance(self.N, int) and self.N >= 1):
            raise InvariantError(f"N must be an integer >= 1, got {self.N!r}")
        if not 0 < self.mu <= 1:
            raise InvariantError(f"mu must lie in (0, 1], got {self.mu}")

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    @property
    def exact(self) -> bool:
        return _linalg.is_exact(self.phi) and isinstance(self.mu, (int, Fraction))


def _strict_bound(x) -> int:
    """Largest integer K with K < x (so |p_i| <= K encodes |p_i| < x)."""
    if isinstance(x, Fraction):
        return int(x) - 1 if x.denominator == 1 else math.floor(x)
    return math.ceil(x) - 1


def _signed_order(bound: int):
    """0, 1, -1, 2, -2, ... up to |bound| (the deterministic witness order)."""
    yield 0
    for k in range(1, bound + 1):
        yield k
        yield -k


def _open_interval_ints(lo, hi):
    """Integers q with lo < q < hi, in ascending order."""
    first = math.floor(lo) + 1
    last = math.ceil(hi) - 1
    return range(first, last + 1)


def solvable(query: DirichletQuery, convention: str = "lattice_p_nonzero"
             ) -> Optional[tuple]:
    """First witness (p, q) of the system, or None if insoluble.

    Enumerates p over 0 < ||p||_inf < mu N with each coordinate in
    magnitude-then-positive order (0, 1, -1, 2, -2, ...); for each p the q
    coordinates range over the open interval (phi p)_i +- mu/N. Under
    lattice_p_nonzero q is unrestricted; under paper_both_nonzero the zero
    vector q is rejected as well. Exact arithmetic whenever phi and mu are
    rational.
    """
    if convention not in CONVENTIONS:
        raise DomainError(f"unknown convention {convention!r}, expected one of {CONVENTIONS}")
    exact = query.exact
    n = query.n
    mu = Fraction(query.mu) if exact else float(query.mu)
    N = query.N
    p_bound = _strict_bound(mu * N)
    if p_bound < 1:
        return None
    q_radius = mu / N
    if exact:
        phi_rows = [[Fraction(query.phi[i, j]) for j in range(n)] for i in range(n)]
    else:
        phi_f = _linalg.to_float(query.phi)
        phi_rows = [[float(phi_f[i, j]) for j in range(n)] for i in range(n)]

    for p in itertools.product(*[list(_signed_order(p_bound))] * n):
        if not any(p):
            continue
        x = [sum(row[j] * p[j] for j in range(n)) for row in phi_rows]
        cand = [_open_interval_ints(xi - q_radius, xi + q_radius) for xi in x]
        if any(len(c) == 0 for c in cand):
            continue
        for q in itertools.product(*cand):
            if convention == "paper_both_nonzero" and not any(q):
                continue
            return tuple(p), tuple(q)
    return None


def correspondence_basis(query: DirichletQuery) -> LatticeBasis:
    """Basis of a_log(N) u(phi) Z^2n; exact when phi is rational."""
    if query.exact:
        g = a_scale(Fraction(query.N), query.n) @ u_embed(query.phi)
    else:
        g = a_scale(float(query.N), query.n) @ u_embed(_linalg.to_float(query.phi))
    return LatticeBasis(g.entries)


def correspondence_check(query: DirichletQuery) -> dict:
    """Compare insolubility of the system against the lattice-ball criterion.

    Returns {insoluble, in_kmu, agree, witness}; the two sides must agree
    for every query, which is the content of the correspondence. Uses the
    lattice_p_nonzero convention (q unrestricted), the one the unimodular
    lattice actually sees. Requires mu < 1 so the ball test is defined.
    """
    witness = solvable(query, convention="lattice_p_nonzero")
    insoluble = witness is None
    in_ball_complement = in_kmu(correspondence_basis(query), query.mu)
    return {
        "insoluble": insoluble,
        "in_kmu": in_ball_complement,
        "agree": insoluble == in_ball_complement,
        "witness": witness,
    }


@dataclass(frozen=True)
class ScanTable:
    """Insolubility table over an s-grid and a set of scales N."""

    s_grid: tuple
    N_set: tuple
    mu: object
    insoluble: np.ndarray  # shape (len(s_grid), len(N_set)), entries 0/1
    convention: str

    def counts_per_s(self) -> np.ndarray:
        return self.insoluble.sum(axis=1)

    def fraction_with_at_least(self, k: int) -> float:
        if k < 1:
            raise DomainError("k must be >= 1")
        return float(np.mean(self.counts_per_s() >= k))

    def summary(self) -> dict:
        return {
            "mu": float(self.mu),
            "convention": self.convention,
            "grid_points": len(self.s_grid),
            "scales": len(self.N_set),
            "fraction_with_at_least": {str(k): self.fraction_with_at_least(k)
                                       for k in (1, 3, 10)},
        }

    def to_csv_text(self) -> str:
        lines = ["s,N,insoluble"]
        for i, s in enumerate(self.s_grid):
            for j, N in enumerate(self.N_set):
                lines.append(f"{float(s)!r},{N},{int(self.insoluble[i, j])}")
        return "\n".join(lines) + "\n"


def improvability_scan(curve: MatrixPolyCurve, mu, s_grid, N_set,
                       convention: str = "lattice_p_nonzero") -> ScanTable:
    """Tabulate insolubility of the mu-system at phi(s) over s in s_grid and
    N in N_set. One cell = one solvable() call; no correspondence checking."""
    s_vals = tuple(s_grid)
    n_vals = tuple(int(N) for N in N_set)
    if not s_vals or not n_vals:
        raise DomainError("s_grid and N_set must be nonempty")
    table = np.zeros((len(s_vals), len(n_vals)), dtype=np.int8)
    for i, s in enumerate(s_vals):
        phi = curve.eval(s)
        for j, N in enumerate(n_vals):
            query = DirichletQuery(phi=phi, N=N, mu=mu)
            if solvable(query, convention=convention) is None:
                table[i, j] = 1
    table.flags.writeable = False
    return ScanTable(s_grid=s_vals, N_set=n_vals, mu=mu, insoluble=table,
                     convention=convention)
