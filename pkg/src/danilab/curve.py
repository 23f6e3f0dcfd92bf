"""Matrix polynomial curves s -> phi(s) and their local invertibility geometry.

A curve is a polynomial with n x n matrix coefficients on an interval.
The operations here answer one question in several forms: how does the
family of shifted inverses s -> (phi(s) - phi(s0))^-1 sit inside matrix
space near s0? Full affine span (rank n^2) is the generic case; anything
lower is a witness of degeneracy.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import _linalg
from .errors import (DegenerateInputError, DomainError, InvariantError,
                     OrientationError, SingularMatrixError)

INVERTIBILITY_TOL = 1e-9


def _is_exact_scalar(s) -> bool:
    return isinstance(s, (int, Fraction)) and not isinstance(s, bool)


@dataclass(frozen=True)
class MatrixPolyCurve:
    """Polynomial curve phi(s) = sum_k coeffs[k] s^k on [a, b].

    coeffs[k] is the n x n coefficient of s^k. If every entry of every
    coefficient is an int/Fraction the curve is exact and evaluation at
    rational s stays in exact arithmetic.
    """

    n: int
    degree: int
    coeffs: tuple
    interval: tuple

    def __post_init__(self):
        a, b = self.interval
        if not a < b:
            raise DomainError(f"curve interval must satisfy a < b, got [{a}, {b}]")
        if self.degree != len(self.coeffs) - 1:
            raise InvariantError("degree must equal len(coeffs) - 1")
        for c in self.coeffs:
            if c.shape != (self.n, self.n):
                raise InvariantError(f"coefficient shape {c.shape} != ({self.n}, {self.n})")

    @classmethod
    def from_coeffs(cls, coeffs, interval) -> "MatrixPolyCurve":
        """Build a curve from per-power n x n array-likes (outer index = power).

        All-rational entries (int/Fraction/"p/q" strings) give an exact curve;
        any float demotes the whole curve to float mode.
        """
        exact = True
        parsed = []
        for c in coeffs:
            rows = []
            for row in c:
                vals = []
                for x in row:
                    if isinstance(x, str):
                        x = Fraction(x)
                    elif not _is_exact_scalar(x):
                        exact = False
                    vals.append(x)
                rows.append(vals)
            parsed.append(rows)
        mats = []
        for rows in parsed:
            if exact:
                mats.append(_linalg.frac_matrix(rows))
            else:
                mats.append(np.array([[float(x) for x in row] for row in rows], dtype=float))
        n = mats[0].shape[0]
        frozen = []
        for m in mats:
            m = m.copy()
            m.flags.writeable = False
            frozen.append(m)
        a, b = interval
        a = Fraction(a) if isinstance(a, str) else a
        b = Fraction(b) if isinstance(b, str) else b
        return cls(n=n, degree=len(frozen) - 1, coeffs=tuple(frozen), interval=(a, b))

    @property
    def exact(self) -> bool:
        return all(_linalg.is_exact(c) for c in self.coeffs)

    def _float_coeffs(self):
        return [_linalg.to_float(c) for c in self.coeffs]

    def _check_domain(self, s):
        a, b = self.interval
        if self.exact and _is_exact_scalar(s):
            if not a <= Fraction(s) <= b:
                raise DomainError(f"s = {s} outside the curve interval [{a}, {b}]")
            return
        lo, hi = float(a), float(b)
        slack = (hi - lo) * 1e-12  # float samplers may land one ulp outside
        if not lo - slack <= float(s) <= hi + slack:
            raise DomainError(f"s = {s} outside the curve interval [{a}, {b}]")

    def eval(self, s) -> np.ndarray:
        """phi(s) by Horner evaluation."""
        self._check_domain(s)
        if self.exact and _is_exact_scalar(s):
            s = Fraction(s)
            out = self.coeffs[-1].copy()
            for k in range(self.degree - 1, -1, -1):
                out = out * s + self.coeffs[k]
            return out
        cs = self._float_coeffs()
        s = float(s)
        out = cs[-1].copy()
        for k in range(self.degree - 1, -1, -1):
            out = out * s + cs[k]
        return out

    def derivative(self, s) -> np.ndarray:
        """phi'(s) by Horner evaluation of the derivative polynomial."""
        self._check_domain(s)
        if self.degree == 0:
            return (_linalg.zeros((self.n, self.n), exact=True) if self.exact and _is_exact_scalar(s)
                    else np.zeros((self.n, self.n)))
        if self.exact and _is_exact_scalar(s):
            s = Fraction(s)
            out = self.coeffs[-1] * Fraction(self.degree)
            for k in range(self.degree - 1, 0, -1):
                out = out * s + self.coeffs[k] * Fraction(k)
            return out
        cs = self._float_coeffs()
        s = float(s)
        out = cs[-1] * float(self.degree)
        for k in range(self.degree - 1, 0, -1):
            out = out * s + cs[k] * float(k)
        return out

    def __eq__(self, other):
        if not isinstance(other, MatrixPolyCurve):
            return NotImplemented
        return (self.n == other.n and self.degree == other.degree
                and self.interval == other.interval
                and all(np.array_equal(a, b) for a, b in zip(self.coeffs, other.coeffs)))

    __hash__ = None


@dataclass(frozen=True)
class CentralizerElement:
    """Block-diagonal pair (B, C) acting on matrices by phi -> B phi C^-1."""

    B: np.ndarray
    C: np.ndarray
    det_tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        if self.B.shape != self.C.shape or self.B.shape[0] != self.B.shape[1]:
            raise InvariantError("B and C must be square of equal size")
        prod = _linalg.det(self.B) * _linalg.det(self.C)
        if isinstance(prod, Fraction):
            if prod != 1:
                raise InvariantError(f"det(B) det(C) = {prod} != 1")
        elif abs(prod - 1.0) > self.det_tol:
            raise InvariantError(f"det(B) det(C) = {prod!r} deviates from 1 beyond {self.det_tol}")

    @property
    def n(self) -> int:
        return self.B.shape[0]

    def act(self, phi: np.ndarray) -> np.ndarray:
        """The centralizer action B phi C^-1."""
        return self.B @ phi @ _linalg.inv(self.C)


@dataclass(frozen=True)
class GenericityVerdict:
    generic: bool
    affine_rank: int
    witness_subspace: Optional[list]
    samples_used: int


def inverse_shift(curve: MatrixPolyCurve, s, s0, tol: float = INVERTIBILITY_TOL) -> np.ndarray:
    """(phi(s) - phi(s0))^-1, with a singularity error carrying |det|."""
    diff = curve.eval(s) - curve.eval(s0)
    d = _linalg.det(diff)
    if isinstance(d, Fraction):
        if d == 0:
            raise SingularMatrixError(f"phi(s) - phi(s0) singular at s = {s}", det=Fraction(0))
    elif abs(d) <= tol:
        raise SingularMatrixError(
            f"phi(s) - phi(s0) numerically singular at s = {s}, |det| = {abs(d):.3e}", det=abs(d))
    return _linalg.inv(diff, tol=tol)


def affine_rank(points, tol: float = INVERTIBILITY_TOL):
    """Rank of the affine hull of the points, plus an orthonormal basis of
    the linear part (pivoted Gram-Schmidt with relative threshold tol)."""
    pts = [np.asarray(p, dtype=float).ravel() for p in points]
    if not pts:
        raise DomainError("affine_rank needs at least one point")
    diffs = [p - pts[0] for p in pts[1:]]
    return _linalg.orthonormal_span(diffs, tol=tol)


def _chebyshev_nodes(s0: float, r: float, m: int, left_room: float, right_room: float):
    # Chebyshev angles cluster samples away from the puncture at s0 without
    # the bias of a uniform grid; an even node count keeps cos != 0 exactly.
    if left_room > 0 and right_room > 0:
        count = m if m % 2 == 0 else m + 1
        angles = [(2 * j + 1) * math.pi / (2 * count) for j in range(count)]
        return [s0 + r * math.cos(t) for t in angles][:m]
    angles = [(2 * j + 1) * math.pi / (2 * m) for j in range(m)]
    offsets = [r * (1 + math.cos(t)) / 2 for t in angles]
    if right_room > 0:
        return [s0 + max(o, r * 1e-12) for o in offsets]
    return [s0 - max(o, r * 1e-12) for o in offsets]


def genericity_test(curve: MatrixPolyCurve, s0, m: Optional[int] = None,
                    tol: float = INVERTIBILITY_TOL) -> GenericityVerdict:
    """Classify the curve at s0 by the affine rank of the inverse-shift family.

    Samples s -> (phi(s) - phi(s0))^-1 at Chebyshev-distributed nodes in a
    punctured neighborhood of s0 inside the curve interval. The neighborhood
    radius is found by bisection: halve until every node has
    |det(phi(s) - phi(s0))| > tol. Generic means affine rank exactly n^2.
    """
    n2 = curve.n * curve.n
    if m is None:
        m = 2 * n2 + 1
    if m < n2 + 1:
        raise DomainError(f"need at least n^2 + 1 = {n2 + 1} samples, got {m}")
    a, b = float(curve.interval[0]), float(curve.interval[1])
    s0f = float(s0)
    if not a <= s0f <= b:
        raise DomainError(f"s0 = {s0} outside curve interval [{a}, {b}]")
    left_room, right_room = s0f - a, b - s0f
    r = min(x for x in (left_room, right_room) if x > 0) if (left_room > 0 and right_room > 0) \
        else max(left_room, right_room)
    if r <= 0:
        raise DomainError("curve interval has no room around s0")

    base = curve.eval(s0f)
    nodes = None
    for _ in range(80):
        cand = _chebyshev_nodes(s0f, r, m, left_room, right_room)
        dets = [abs(_linalg.det(curve.eval(s) - base)) for s in cand]
        if all(d > tol for d in dets):
            nodes = cand
            break
        r *= 0.5
    if nodes is None:
        raise DegenerateInputError(
            "no invertible punctured neighborhood found: |det(phi(s) - phi(s0))| "
            f"stayed <= {tol} down to radius {r:.3e}")

    points = [_linalg.inv(curve.eval(s) - base, tol=tol).ravel() for s in nodes]
    rank, basis = affine_rank(points, tol=tol)
    generic = rank == n2
    return GenericityVerdict(generic=generic, affine_rank=rank,
                             witness_subspace=None if generic else basis,
                             samples_used=m)


def normalizer(curve: MatrixPolyCurve, s, tol: float = INVERTIBILITY_TOL) -> CentralizerElement:
    """Centralizer element z = (B, C) with B phi'(s) C^-1 = I.

    Construction: B = lambda I, C = B phi'(s), lambda = det(phi'(s))^(-1/(2n)).
    det(B) det(C) = lambda^(2n) det(phi'(s)) forces det(phi'(s)) > 0; a
    negative determinant is an orientation obstruction with no real solution
    (for any n), reported as an error rather than silently patched.
    """
    d_mat = _linalg.to_float(curve.derivative(s))
    d = float(np.linalg.det(d_mat))
    if abs(d) <= tol:
        raise SingularMatrixError(f"phi'(s) singular at s = {s}, |det| = {abs(d):.3e}", det=abs(d))
    if d < 0:
        raise OrientationError(
            f"det(phi'(s)) = {d:.6g} < 0 at s = {s}: no real centralizer element "
            "satisfies both B phi' C^-1 = I and det(B) det(C) = 1")
    n = curve.n
    lam = d ** (-1.0 / (2 * n))
    B = lam * np.eye(n)
    C = B @ d_mat
    return CentralizerElement(B=B, C=C)


def inverse_derivative_check(curve: MatrixPolyCurve, s0, s, h: float,
                             tol: float = INVERTIBILITY_TOL) -> float:
    """Sup-norm residual between the central difference of s -> inverse_shift
    and the closed form -inv(s) phi'(s) inv(s). Decreases at order h^2."""
    if h <= 0:
        raise DomainError("stencil width h must be positive")
    a, b = float(curve.interval[0]), float(curve.interval[1])
    if not (a <= s - h and s + h <= b):
        raise DomainError(f"stencil [{s - h}, {s + h}] leaves the curve interval")
    inv_mid = _linalg.to_float(inverse_shift(curve, s, s0, tol=tol))
    inv_hi = _linalg.to_float(inverse_shift(curve, s + h, s0, tol=tol))
    inv_lo = _linalg.to_float(inverse_shift(curve, s - h, s0, tol=tol))
    analytic = -inv_mid @ _linalg.to_float(curve.derivative(s)) @ inv_mid
    fd = (inv_hi - inv_lo) / (2 * h)
    return _linalg.sup_norm(fd - analytic)
