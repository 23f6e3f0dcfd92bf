"""Dual-mode linear algebra helpers.

Matrices travel as numpy arrays in one of two modes:

* float64 arrays take numpy's floating-point routines;
* object-dtype arrays whose entries are ``Fraction``/``int`` take exact
  rational routines implemented here.

The exact routines are plain Gaussian elimination; everything in this
package is desk scale (dimension <= ~30), so asymptotics do not matter
but exactness does.
"""

from fractions import Fraction

import numpy as np

from .errors import SingularMatrixError


def is_exact(a: np.ndarray) -> bool:
    """True if the array is in exact-rational (object dtype) mode."""
    return a.dtype == object


def frac_matrix(rows) -> np.ndarray:
    """Build an exact matrix: every entry coerced to Fraction."""
    data = [[Fraction(x) for x in row] for row in rows]
    out = np.empty((len(data), len(data[0]) if data else 0), dtype=object)
    for i, row in enumerate(data):
        for j, x in enumerate(row):
            out[i, j] = x
    return out


def frac_vector(entries) -> np.ndarray:
    out = np.empty(len(entries), dtype=object)
    for i, x in enumerate(entries):
        out[i] = Fraction(x)
    return out


def to_float(a: np.ndarray) -> np.ndarray:
    return np.asarray(a, dtype=float)


def eye(m: int, exact: bool = False) -> np.ndarray:
    if not exact:
        return np.eye(m)
    out = np.full((m, m), Fraction(0), dtype=object)
    for i in range(m):
        out[i, i] = Fraction(1)
    return out


def zeros(shape, exact: bool = False) -> np.ndarray:
    if not exact:
        return np.zeros(shape)
    return np.full(shape, Fraction(0), dtype=object)


def det(a: np.ndarray):
    """Determinant; Fraction in exact mode, float otherwise."""
    if is_exact(a):
        return _det_exact(a)
    return float(np.linalg.det(a))


def _det_exact(a: np.ndarray) -> Fraction:
    m = a.shape[0]
    rows = [[Fraction(a[i, j]) for j in range(m)] for i in range(m)]
    sign = 1
    result = Fraction(1)
    for col in range(m):
        piv = next((r for r in range(col, m) if rows[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            rows[col], rows[piv] = rows[piv], rows[col]
            sign = -sign
        pivot = rows[col][col]
        result *= pivot
        for r in range(col + 1, m):
            factor = rows[r][col] / pivot
            if factor:
                rows[r] = [x - factor * y for x, y in zip(rows[r], rows[col])]
    return sign * result


def inv(a: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Inverse with an explicit singularity guard (|det| > tol in float mode)."""
    if is_exact(a):
        return _inv_exact(a)
    d = float(np.linalg.det(a))
    if abs(d) <= tol:
        raise SingularMatrixError(f"matrix is numerically singular, |det| = {abs(d):.3e}", det=d)
    return np.linalg.inv(a)


def _inv_exact(a: np.ndarray) -> np.ndarray:
    m = a.shape[0]
    rows = [[Fraction(a[i, j]) for j in range(m)] + [Fraction(int(i == j)) for j in range(m)]
            for i in range(m)]
    for col in range(m):
        piv = next((r for r in range(col, m) if rows[r][col] != 0), None)
        if piv is None:
            raise SingularMatrixError("exact matrix is singular", det=Fraction(0))
        if piv != col:
            rows[col], rows[piv] = rows[piv], rows[col]
        pivot = rows[col][col]
        rows[col] = [x / pivot for x in rows[col]]
        for r in range(m):
            if r != col and rows[r][col]:
                factor = rows[r][col]
                rows[r] = [x - factor * y for x, y in zip(rows[r], rows[col])]
    out = np.empty((m, m), dtype=object)
    for i in range(m):
        for j in range(m):
            out[i, j] = rows[i][m + j]
    return out


def nullspace(a: np.ndarray, tol: float = 1e-9):
    """Nullspace of a (rows x cols) matrix.

    Returns (dim, basis) where basis is a list of float vectors, orthonormal.
    In exact mode the dimension is computed over the rationals (RREF), so it
    cannot flicker with conditioning; the returned basis is the exact one
    re-orthonormalized in floats.
    """
    nrows, ncols = a.shape
    if ncols == 0:
        return 0, []
    if nrows == 0:
        return ncols, [np.eye(ncols)[i] for i in range(ncols)]
    if is_exact(a):
        exact_basis = _nullspace_exact(a)
        float_basis = [to_float(v) for v in exact_basis]
        rank, ortho = orthonormal_span(float_basis, tol=1e-12)
        assert rank == len(exact_basis), "exact nullspace basis lost rank in float conversion"
        return len(exact_basis), ortho
    u, s, vh = np.linalg.svd(a)
    smax = s[0] if len(s) else 0.0
    if smax == 0.0:
        rank = 0
    else:
        rank = int(np.sum(s > tol * max(smax, 1.0)))
    return ncols - rank, [vh[i] for i in range(rank, ncols)]


def _nullspace_exact(a: np.ndarray):
    nrows, ncols = a.shape
    rows = [[Fraction(a[i, j]) for j in range(ncols)] for i in range(nrows)]
    pivots = []
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, nrows) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        pivot = rows[r][col]
        rows[r] = [x / pivot for x in rows[r]]
        for i in range(nrows):
            if i != r and rows[i][col]:
                factor = rows[i][col]
                rows[i] = [x - factor * y for x, y in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
        if r == nrows:
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -rows[i][fc]
        basis.append(frac_vector(v))
    return basis


def orthonormal_span(vectors, tol: float = 1e-9):
    """Rank and orthonormal basis of span(vectors) by pivoted Gram-Schmidt.

    The pivot threshold is relative to the largest input norm, so the rank is
    invariant under rescaling the whole family.
    """
    work = [np.asarray(v, dtype=float).ravel() for v in vectors]
    if not work:
        return 0, []
    norms = [float(np.linalg.norm(v)) for v in work]
    scale = max(norms)
    if scale == 0.0:
        return 0, []
    threshold = tol * scale
    basis = []
    remaining = list(work)
    while remaining:
        norms = [float(np.linalg.norm(v)) for v in remaining]
        imax = int(np.argmax(norms))
        if norms[imax] <= threshold:
            break
        q = remaining.pop(imax) / norms[imax]
        # re-orthogonalize once against the accepted basis for stability
        for b in basis:
            q = q - (b @ q) * b
        nq = float(np.linalg.norm(q))
        if nq <= tol:
            continue
        q = q / nq
        basis.append(q)
        remaining = [v - (q @ v) * q for v in remaining]
    return len(basis), basis


def sup_norm(a) -> float:
    arr = np.asarray(a, dtype=float)
    return float(np.max(np.abs(arr))) if arr.size else 0.0
