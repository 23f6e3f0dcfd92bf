"""Unimodular lattices: reduction, exact sup-norm minima, box counts.

Bases are square matrices whose columns generate the lattice. Everything
runs in one of two scalar modes, python floats or Fractions, chosen by the
basis dtype; the algorithms are identical. Enumeration is exhaustive inside
provably sufficient coefficient boxes derived from the reduced basis, so
minima and counts are exact (in the Fraction mode, exactly exact).
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _linalg
from .errors import (DegenerateInputError, DomainError, InternalIdentityError,
                     InvariantError, UnsupportedSizeError)

UNIMODULAR_TOL = 1e-8
MAX_DIM = 8
_MAX_CANDIDATES = 4_000_000


@dataclass(frozen=True)
class LatticeBasis:
    """Columns of a unimodular matrix (|det| = 1 within 1e-8; exactly 1 in
    Fraction mode)."""

    cols: np.ndarray

    def __post_init__(self):
        c = self.cols
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise InvariantError(f"basis must be square, got shape {c.shape}")
        d = _linalg.det(c)
        if isinstance(d, Fraction):
            if abs(d) != 1:
                raise InvariantError(f"exact |det| = {abs(d)} != 1")
        elif abs(abs(d) - 1.0) > UNIMODULAR_TOL:
            raise InvariantError(f"|det| = {abs(d)!r} deviates from 1 beyond {UNIMODULAR_TOL}")
        c.flags.writeable = False

    @classmethod
    def from_rational(cls, rows) -> "LatticeBasis":
        return cls(_linalg.frac_matrix(rows))

    @property
    def m(self) -> int:
        return self.cols.shape[0]

    @property
    def exact(self) -> bool:
        return _linalg.is_exact(self.cols)


@dataclass(frozen=True)
class ShortVectorResult:
    vector: np.ndarray
    length: object  # float or Fraction
    coeffs: np.ndarray


def _columns_as_lists(cols: np.ndarray):
    exact = _linalg.is_exact(cols)
    m = cols.shape[0]
    if exact:
        out = [[Fraction(cols[i, j]) for i in range(m)] for j in range(m)]
    else:
        out = [[float(cols[i, j]) for i in range(m)] for j in range(m)]
    return out, exact


def _dot(x, y):
    return sum(a * b for a, b in zip(x, y))


def _gram_schmidt(b):
    m = len(b)
    mu = [[0] * m for _ in range(m)]
    bstar = []
    norms = []
    for i in range(m):
        v = list(b[i])
        for j in range(i):
            if norms[j] == 0:
                continue
            mu_ij = _dot(b[i], bstar[j]) / norms[j]
            mu[i][j] = mu_ij
            v = [x - mu_ij * y for x, y in zip(v, bstar[j])]
        bstar.append(v)
        norms.append(_dot(v, v))
    return mu, norms


def _lll(cols, exact: bool, delta=None):
    """LLL reduction of the column list; returns (reduced columns, U columns)
    with reduced[j] = sum_i original[i] * U[j][i]."""
    if delta is None:
        delta = Fraction(99, 100) if exact else 0.99
    m = len(cols)
    b = [list(c) for c in cols]
    u = [[1 if i == j else 0 for i in range(m)] for j in range(m)]
    mu, norms = _gram_schmidt(b)
    k = 1
    steps = 0
    while k < m:
        steps += 1
        if steps > 20000:
            raise InternalIdentityError("LLL failed to terminate at desk scale")
        for j in range(k - 1, -1, -1):
            q = round(mu[k][j])
            if q:
                b[k] = [x - q * y for x, y in zip(b[k], b[j])]
                u[k] = [x - q * y for x, y in zip(u[k], u[j])]
                mu, norms = _gram_schmidt(b)
        if norms[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * norms[k - 1]:
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            u[k], u[k - 1] = u[k - 1], u[k]
            mu, norms = _gram_schmidt(b)
            k = max(k - 1, 1)
    return b, u


def _sup(v):
    return max(abs(x) for x in v)


def _inverse_rows(bred, exact: bool):
    """Rows of the inverse of the matrix whose columns are bred."""
    m = len(bred)
    if exact:
        mat = _linalg.frac_matrix([[bred[j][i] for j in range(m)] for i in range(m)])
        inv = _linalg._inv_exact(mat)
        return [[inv[i, j] for j in range(m)] for i in range(m)]
    mat = np.array(bred, dtype=float).T
    inv = np.linalg.inv(mat)
    return [list(map(float, inv[i])) for i in range(m)]


def _coeff_bounds(inv_rows, weights, exact: bool):
    """Per-coordinate integer bound K_i >= |c_i| for any lattice vector inside
    the weighted box: c = B^-1 v gives |c_i| <= sum_j |B^-1_ij| w_j."""
    bounds = []
    for row in inv_rows:
        s = sum(abs(x) * w for x, w in zip(row, weights))
        if exact:
            bounds.append(int(s))  # floor for nonnegative Fraction
        else:
            bounds.append(int(math.floor(s * (1 + 1e-12) + 1e-12)))
    return bounds


def _check_box(bounds):
    total = 1
    for k in bounds:
        total *= 2 * k + 1
        if total > _MAX_CANDIDATES:
            raise DegenerateInputError(
                "enumeration box exceeds the desk-scale candidate budget; "
                "basis is too ill-conditioned after reduction")
    return total


def _iter_candidates(bounds):
    """All integer coefficient tuples in the box with first nonzero entry
    positive (one representative per +-v pair)."""
    ranges = [range(-k, k + 1) for k in bounds]
    for c in itertools.product(*ranges):
        lead = next((x for x in c if x != 0), None)
        if lead is None or lead < 0:
            continue
        yield c


def _combine(bred, c):
    m = len(bred[0])
    v = [0] * m
    for cj, col in zip(c, bred):
        if cj:
            for i in range(m):
                v[i] += cj * col[i]
    return v


def reduce(basis: LatticeBasis, delta: float = None):
    """LLL-reduce the basis (delta defaults to 0.99); returns the reduced
    basis together with the unimodular integer transform for audit:
    reduced.cols = basis.cols @ transform."""
    cols, exact = _columns_as_lists(basis.cols)
    if exact and delta is not None:
        delta = Fraction(delta).limit_denominator(10**6)
    bred, ucols = _lll(cols, exact, delta)
    m = basis.m
    if exact:
        out = _linalg.frac_matrix([[bred[j][i] for j in range(m)] for i in range(m)])
    else:
        out = np.array(bred, dtype=float).T
    transform = np.array([[ucols[j][i] for j in range(m)] for i in range(m)], dtype=np.int64)
    return LatticeBasis(out), transform


def _prepare(basis: LatticeBasis):
    if basis.m > MAX_DIM:
        raise UnsupportedSizeError(f"dimension {basis.m} exceeds the supported bound {MAX_DIM}")
    cols, exact = _columns_as_lists(basis.cols)
    bred, ucols = _lll(cols, exact)
    return cols, bred, ucols, exact


def shortest_supnorm(basis: LatticeBasis) -> ShortVectorResult:
    """Exact shortest nonzero vector in sup-norm.

    After LLL reduction the minimum-norm reduced column gives an upper bound
    L; every candidate with ||v|| <= L has |c_i| <= ||row_i(B^-1)||_1 * L,
    so exhausting that coefficient box is a proof of minimality. The box is
    re-derived and re-exhausted whenever the bound improves. Ties are broken
    by the lexicographically smallest sign-normalized coefficient vector in
    the input basis.
    """
    cols, bred, ucols, exact = _prepare(basis)
    m = basis.m
    inv_rows = _inverse_rows(bred, exact)
    best = min(_sup(col) for col in bred)
    if best == 0:
        raise InvariantError("reduced basis contains the zero vector")
    while True:
        bounds = _coeff_bounds(inv_rows, [best] * m, exact)
        _check_box(bounds)
        best_len = None
        best_cands = []
        for c in _iter_candidates(bounds):
            length = _sup(_combine(bred, c))
            if best_len is None or length < best_len:
                best_len = length
                best_cands = [c]
            elif length == best_len:
                best_cands.append(c)
        if best_len is None:
            raise InternalIdentityError("enumeration box unexpectedly empty")
        if best_len < best:
            best = best_len
            continue
        break

    originals = []
    for c in best_cands:
        oc = tuple(sum(ucols[j][i] * c[j] for j in range(m)) for i in range(m))
        lead = next((x for x in oc if x != 0), 0)
        if lead < 0:
            oc = tuple(-x for x in oc)
        originals.append(oc)
    coeffs = np.array(min(originals), dtype=np.int64)
    vector = basis.cols @ coeffs if not exact else basis.cols @ _linalg.frac_vector(coeffs)
    length = max(abs(x) for x in vector)
    if not exact:
        length = float(length)
        vector = np.asarray(vector, dtype=float)
    return ShortVectorResult(vector=vector, length=length, coeffs=coeffs)


def count_in_box(basis: LatticeBasis, halfwidths) -> int:
    """Number of nonzero lattice vectors v with |v_i| <= halfwidths_i."""
    w = list(halfwidths)
    if len(w) != basis.m:
        raise DomainError("halfwidths length must match basis dimension")
    if any(x <= 0 for x in w):
        raise DomainError("halfwidths must be positive")
    cols, bred, ucols, exact = _prepare(basis)
    if exact:
        w = [Fraction(x) if isinstance(x, (int, Fraction)) else x for x in w]
    else:
        w = [float(x) for x in w]
    inv_rows = _inverse_rows(bred, exact)
    bounds = _coeff_bounds(inv_rows, w, exact)
    _check_box(bounds)
    count = 0
    for c in _iter_candidates(bounds):
        v = _combine(bred, c)
        if all(abs(x) <= wx for x, wx in zip(v, w)):
            count += 1
    return 2 * count


def _exists_shorter(basis: LatticeBasis, bound) -> bool:
    """Is there a nonzero lattice vector with ||v||_inf strictly below bound?"""
    if bound <= 0:
        return False
    cols, bred, ucols, exact = _prepare(basis)
    if any(_sup(col) < bound for col in bred):
        return True
    inv_rows = _inverse_rows(bred, exact)
    bounds = _coeff_bounds(inv_rows, [bound] * basis.m, exact)
    _check_box(bounds)
    for c in _iter_candidates(bounds):
        if _sup(_combine(bred, c)) < bound:
            return True
    return False


def in_kmu(basis: LatticeBasis, mu) -> bool:
    """True iff the lattice misses the open sup-norm ball of radius mu, i.e.
    the shortest nonzero vector has length >= mu. Requires 0 < mu < 1."""
    if not 0 < mu < 1:
        raise DomainError(f"mu must lie in (0, 1), got {mu}")
    return not _exists_shorter(basis, mu)


def in_mahler_compact(basis: LatticeBasis, eps) -> bool:
    """True iff the shortest nonzero vector has sup-norm >= eps (eps > 0)."""
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    return not _exists_shorter(basis, eps)
