"""Finite-dimensional representations of SL(2n, R) and their weight geometry.

Two families: exterior powers of the standard 2n-dimensional representation
(basis labeled by k-subsets, images given by minors) and the adjoint on
trace-zero matrices (basis: elementary E_ij then diagonal differences).
The diagonal flow splits each into expanding / neutral / contracting weight
spaces; the splitting is symbolic (computed from labels, not numerically).

The verifiers check, on concrete vectors, the transport identity for the
neutral projection under a copy unipotent and the nonvanishing of the
expanding projection on contracting vectors; both are statements about any
SL(2, R) copy whose diagonal matches the ambient flow.
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import _linalg
from .curve import MatrixPolyCurve
from .errors import (DegenerateInputError, DomainError, HypothesisViolationError,
                     InvariantError)
from .flow import E_MAT, GroupElement, Sl2Copy, sl2_image, u_embed


@dataclass(frozen=True)
class Representation:
    """kind 'exterior' (power k of the standard rep) or 'adjoint'."""

    kind: str
    n: int
    k: int = 0

    def __post_init__(self):
        if self.kind not in ("exterior", "adjoint"):
            raise DomainError(f"unknown representation kind {self.kind!r}")
        if self.n < 1:
            raise DomainError("n must be >= 1")
        if self.kind == "exterior" and not 1 <= self.k <= 2 * self.n:
            raise DomainError(f"exterior power k must lie in [1, {2 * self.n}], got {self.k}")

    @cached_property
    def dim(self) -> int:
        if self.kind == "exterior":
            return math.comb(2 * self.n, self.k)
        return 4 * self.n * self.n - 1

    @cached_property
    def labels(self) -> tuple:
        """Basis labels: 1-based k-subsets, or ('E', i, j) / ('D', l)."""
        m = 2 * self.n
        if self.kind == "exterior":
            return tuple(tuple(i + 1 for i in s)
                         for s in itertools.combinations(range(m), self.k))
        off = [("E", i + 1, j + 1) for i in range(m) for j in range(m) if i != j]
        diag = [("D", l + 1) for l in range(m - 1)]
        return tuple(off + diag)

    @cached_property
    def _subsets(self) -> tuple:
        """0-based subset tuples (exterior only)."""
        return tuple(itertools.combinations(range(2 * self.n), self.k))


def exterior(n: int, k: int) -> Representation:
    return Representation(kind="exterior", n=n, k=k)


def adjoint(n: int) -> Representation:
    return Representation(kind="adjoint", n=n)


@dataclass(frozen=True)
class WeightDecomposition:
    weights: tuple
    plus_idx: tuple
    zero_idx: tuple
    minus_idx: tuple


def weight_split(rep: Representation) -> WeightDecomposition:
    """Flow weights per basis vector, from the labels alone.

    Exterior: weight(S) = #(S among the first n) - #(S among the last n).
    Adjoint: E_ij carries +2 / -2 / 0 according to which diagonal half i and
    j fall in; diagonal differences carry 0.
    """
    n = rep.n
    weights = []
    if rep.kind == "exterior":
        for s in rep._subsets:
            p = sum(1 for i in s if i < n)
            weights.append(p - (rep.k - p))
    else:
        m = 2 * n
        for i in range(m):
            for j in range(m):
                if i == j:
                    continue
                if i < n <= j:
                    weights.append(2)
                elif j < n <= i:
                    weights.append(-2)
                else:
                    weights.append(0)
        weights.extend([0] * (m - 1))
    w = tuple(weights)
    return WeightDecomposition(
        weights=w,
        plus_idx=tuple(i for i, x in enumerate(w) if x > 0),
        zero_idx=tuple(i for i, x in enumerate(w) if x == 0),
        minus_idx=tuple(i for i, x in enumerate(w) if x < 0),
    )


def project(decomp: WeightDecomposition, part: str, v: np.ndarray) -> np.ndarray:
    """Zero out the coordinates away from the requested weight part."""
    idx = {"plus": decomp.plus_idx, "zero": decomp.zero_idx,
           "minus": decomp.minus_idx}.get(part)
    if idx is None:
        raise DomainError(f"part must be plus/zero/minus, got {part!r}")
    out = np.zeros_like(v)
    for i in idx:
        out[i] = v[i]
    return out


def _entries_of(g) -> np.ndarray:
    return g.entries if isinstance(g, GroupElement) else np.asarray(g)


def rep_image(rep: Representation, g) -> np.ndarray:
    """Matrix of the representation at g, in the labeled basis. Exact when
    the entries of g are exact."""
    a = _entries_of(g)
    m = 2 * rep.n
    if a.shape != (m, m):
        raise DomainError(f"group element must be {m} x {m}")
    exact = _linalg.is_exact(a)
    if rep.kind == "exterior":
        if rep.k == 1:
            return a.copy()
        subs = rep._subsets
        dim = rep.dim
        out = _linalg.zeros((dim, dim), exact=exact)
        for bcol, t in enumerate(subs):
            sub_cols = a[:, t]
            for arow, s in enumerate(subs):
                minor = sub_cols[s, :]
                out[arow, bcol] = _linalg.det(minor) if exact else float(np.linalg.det(minor))
        return out
    ginv = _linalg.inv(a)
    return _adjoint_matrix(rep, lambda col, row_idx: np.outer(a[:, col], ginv[row_idx, :]),
                           exact)


def _adjoint_matrix(rep: Representation, conj_outer, exact: bool) -> np.ndarray:
    """Assemble the adjoint-type matrix from Y_b = action(basis matrix b)."""
    m = 2 * rep.n
    dim = rep.dim
    out = _linalg.zeros((dim, dim), exact=exact)
    col = 0
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            y = conj_outer(i, j)
            _decompose_into(out, col, y, m)
            col += 1
    for l in range(m - 1):
        y = conj_outer(l, l) - conj_outer(l + 1, l + 1)
        _decompose_into(out, col, y, m)
        col += 1
    return out


def _decompose_into(out: np.ndarray, col: int, y: np.ndarray, m: int):
    """Coordinates of the trace-zero matrix y in the adjoint basis."""
    row = 0
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            out[row, col] = y[i, j]
            row += 1
    partial = y[0, 0]
    for l in range(m - 1):
        out[row, col] = partial
        row += 1
        if l + 1 < m - 1:
            partial = partial + y[l + 1, l + 1]


def lie_image(rep: Representation, x) -> np.ndarray:
    """Matrix of the derived (Lie algebra) action of a trace-zero x."""
    a = _entries_of(x)
    m = 2 * rep.n
    if a.shape != (m, m):
        raise DomainError(f"Lie algebra element must be {m} x {m}")
    exact = _linalg.is_exact(a)
    tr = sum(a[i, i] for i in range(m))
    if isinstance(tr, Fraction):
        if tr != 0:
            raise DomainError(f"trace = {tr} != 0")
    elif abs(float(tr)) > 1e-10:
        raise DomainError(f"trace = {tr!r} deviates from 0 beyond 1e-10")
    if rep.kind == "adjoint":
        def bracket(i, j):
            e = _eij(m, i, j, exact)
            return a @ e - e @ a
        return _adjoint_matrix(rep, bracket, exact)
    subs = rep._subsets
    index = {s: r for r, s in enumerate(subs)}
    dim = rep.dim
    out = _linalg.zeros((dim, dim), exact=exact)
    for b, s in enumerate(subs):
        sset = set(s)
        for pos, j in enumerate(s):
            for i in range(m):
                x_ij = a[i, j]
                if x_ij == 0:
                    continue
                if i == j:
                    out[b, b] += x_ij
                elif i not in sset:
                    rest = tuple(t for t in s if t != j)
                    c = sum(1 for t in rest if t < i)
                    target = tuple(sorted(rest + (i,)))
                    sign = -1 if (pos - c) % 2 else 1
                    out[index[target], b] += sign * x_ij
    return out


def _eij(m: int, i: int, j: int, exact: bool) -> np.ndarray:
    out = _linalg.zeros((m, m), exact=exact)
    out[i, j] = Fraction(1) if exact else 1.0
    return out


def upper_block(n: int, phi: np.ndarray) -> np.ndarray:
    """The nilpotent [[0, phi], [0, 0]] whose exponential is u(phi)."""
    exact = _linalg.is_exact(phi)
    out = _linalg.zeros((2 * n, 2 * n), exact=exact)
    out[:n, n:] = phi
    return out


def constrained_subspace(rep: Representation, copy: Sl2Copy, r, tol: float = 1e-9):
    """Orthonormal basis of {v in V0 + V- : rho(u(r phi)) v in V0 + V-}.

    Linear in v: the expanding coordinates of rho(u(r phi)) v must vanish,
    with v supported on the neutral and contracting coordinates.
    """
    if r == 0:
        raise DomainError("r must be nonzero")
    decomp = weight_split(rep)
    img = _linalg.to_float(rep_image(rep, u_embed(_linalg.to_float(copy.phi) * float(r))))
    zm = list(decomp.zero_idx) + list(decomp.minus_idx)
    if not decomp.plus_idx:
        rows = np.zeros((0, len(zm)))
    else:
        rows = img[np.ix_(decomp.plus_idx, zm)]
    dim_null, basis = _linalg.nullspace(rows, tol=tol)
    out = []
    for vec in basis:
        full = np.zeros(rep.dim)
        for pos, i in enumerate(zm):
            full[i] = vec[pos]
        out.append(full)
    return out


def verify_q0_transport(rep: Representation, copy: Sl2Copy, r, v,
                        tol: float = 1e-8) -> float:
    """Residual of the neutral-projection transport identity
    q0(rho(u(r phi)) v) = rho(E_phi) q0(v), for v with v and rho(u(r phi)) v
    both in V0 + V-. Violated preconditions raise with the residual."""
    decomp = weight_split(rep)
    v = np.asarray(v, dtype=float)
    scale = max(1.0, _linalg.sup_norm(v))
    pre_in = _linalg.sup_norm(project(decomp, "plus", v))
    if pre_in > tol * scale:
        raise HypothesisViolationError(
            f"v has expanding component {pre_in:.3e} beyond tol", residual=pre_in)
    img = _linalg.to_float(rep_image(rep, u_embed(_linalg.to_float(copy.phi) * float(r))))
    w = img @ v
    pre_out = _linalg.sup_norm(project(decomp, "plus", w))
    if pre_out > tol * max(1.0, _linalg.sup_norm(w)):
        raise HypothesisViolationError(
            f"rho(u(r phi)) v has expanding component {pre_out:.3e} beyond tol",
            residual=pre_out)
    e_img = _linalg.to_float(rep_image(rep, sl2_image(copy, E_MAT)))
    resid = project(decomp, "zero", w) - e_img @ project(decomp, "zero", v)
    return _linalg.sup_norm(resid)


def verify_qplus_nonvanish(rep: Representation, copy: Sl2Copy, r, v,
                           tol: float = 1e-8) -> float:
    """Sup-norm of the expanding projection of rho(u(r phi)) v for a nonzero
    contracting v; the transported dynamical statement says this is > 0."""
    if r == 0:
        raise DomainError("r must be nonzero")
    decomp = weight_split(rep)
    v = np.asarray(v, dtype=float)
    nv = _linalg.sup_norm(v)
    if nv == 0:
        raise HypothesisViolationError("v must be nonzero", residual=0.0)
    outside = _linalg.sup_norm(v - project(decomp, "minus", v))
    if outside > tol * nv:
        raise HypothesisViolationError(
            f"v has component {outside:.3e} outside the contracting part", residual=outside)
    img = _linalg.to_float(rep_image(rep, u_embed(_linalg.to_float(copy.phi) * float(r))))
    return _linalg.sup_norm(project(decomp, "plus", img @ v))


def obstruction_subspace(rep: Representation, curve: MatrixPolyCurve, samples,
                         tol: float = 1e-9):
    """Intersection over the samples of rho(u(phi(s)))^-1 (V0 + V-), i.e.
    vectors whose images never pick up an expanding component.

    Exact (rational) when the curve and every sample are rational: the
    dimension is then certified over Q. Returns an orthonormal float basis;
    an empty list certifies that equidistribution obstructions vanish at
    these sample times."""
    decomp = weight_split(rep)
    if not decomp.plus_idx:
        return [np.eye(rep.dim)[i] for i in range(rep.dim)]
    samples = list(samples)
    if not samples:
        raise DomainError("need at least one sample")
    exact = curve.exact and all(isinstance(s, (int, Fraction)) and not isinstance(s, bool)
                                for s in samples)
    blocks = []
    for s in samples:
        img = rep_image(rep, u_embed(curve.eval(s) if exact
                                     else _linalg.to_float(curve.eval(s))))
        blocks.append(img[list(decomp.plus_idx), :])
    if exact:
        stacked = np.empty((len(blocks) * len(decomp.plus_idx), rep.dim), dtype=object)
        row = 0
        for blk in blocks:
            for i in range(blk.shape[0]):
                stacked[row, :] = blk[i, :]
                row += 1
    else:
        stacked = np.vstack([_linalg.to_float(b) for b in blocks])
    dim_null, basis = _linalg.nullspace(stacked, tol=tol)
    assert dim_null == len(basis)
    return basis


def invariance_subspace(rep: Representation, decomp: WeightDecomposition, w0,
                        tol: float = 1e-9):
    """Matrices phi with u(phi) fixing the neutral vector w0.

    Solves the linearized condition (derived action of [[0, phi], [0, 0]]
    kills w0), then verifies the group-level condition on the basis and on
    random combinations; returns (basis of n x n matrices, verified flag).
    """
    w0 = np.asarray(w0, dtype=float)
    if w0.shape != (rep.dim,):
        raise DomainError(f"w0 must have length {rep.dim}")
    off = _linalg.sup_norm(w0 - project(decomp, "zero", w0))
    if off > tol * max(1.0, _linalg.sup_norm(w0)):
        raise HypothesisViolationError(
            f"w0 has component {off:.3e} outside the neutral part", residual=off)
    n = rep.n
    cols = []
    for a in range(n):
        for b in range(n):
            phi = np.zeros((n, n))
            phi[a, b] = 1.0
            l_mat = _linalg.to_float(lie_image(rep, upper_block(n, phi)))
            cols.append(l_mat @ w0)
    system = np.column_stack(cols) if cols else np.zeros((rep.dim, 0))
    dim_null, basis = _linalg.nullspace(system, tol=tol)
    mats = [vec.reshape(n, n) for vec in basis]

    rng = np.random.default_rng(7)
    candidates = list(mats)
    if len(mats) >= 2:
        for _ in range(2):
            coef = rng.standard_normal(len(mats))
            candidates.append(sum(c * mat for c, mat in zip(coef, mats)))
    verified = True
    for phi in candidates:
        img = _linalg.to_float(rep_image(rep, u_embed(phi)))
        resid = _linalg.sup_norm(img @ w0 - w0)
        if resid > 1e-8 * max(1.0, _linalg.sup_norm(w0)):
            verified = False
    return mats, verified


def good_constants_estimate(xi_samples, alpha: float, min_segment: int = 32,
                            r_count: int = 64) -> float:
    """Empirical (C, alpha)-good constant over dyadic subintervals.

    xi_samples are function values on a uniform grid (>= 1024 points). For
    each dyadic subinterval J' and each radius r in a log grid the quantity
    (fraction of |xi| < r on J') * (sup_J' |xi| / r)^alpha is formed; the
    max over (J', r) estimates the smallest valid C. A segment where xi
    vanishes identically yields inf.
    """
    vals = np.abs(np.asarray(xi_samples, dtype=float))
    if vals.ndim != 1 or vals.size < 1024:
        raise DomainError("need at least 1024 samples on a uniform grid")
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    total_sup = float(vals.max())
    if total_sup == 0.0:
        raise DegenerateInputError("xi vanishes identically on the grid")
    positive = vals[vals > 0]
    r_lo = float(positive.min())
    r_hi = total_sup * 1.001
    r_grid = np.geomspace(min(r_lo, r_hi), r_hi, r_count)
    best = 0.0
    size = vals.size
    level = 0
    while size // (1 << level) >= min_segment:
        pieces = 1 << level
        width = vals.size // pieces
        for p in range(pieces):
            seg = vals[p * width:(p + 1) * width] if p < pieces - 1 else vals[p * width:]
            seg_sup = float(seg.max())
            if seg_sup == 0.0:
                return math.inf
            srt = np.sort(seg)
            counts = np.searchsorted(srt, r_grid, side="left")
            c_vals = (counts / seg.size) * (seg_sup / r_grid) ** alpha
            best = max(best, float(c_vals.max()))
        level += 1
    return best
