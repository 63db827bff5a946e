"""Fixed-size linear algebra for the tilt vehicle.

Everything here works on tiny dense blocks (2x2, 2x3, 3x2) stored as
``numpy`` arrays.  The ``_``-prefixed kernels are numba-compiled so the
simulation loop can call them without leaving nopython mode; the public
functions wrap them with validation and raise on singular input.
"""

import numpy as np
from numba import njit

#: 2x2 real matrix (rotation blocks, thrust map and their products).
Mat2 = np.ndarray
#: 2x3 real matrix (decoupling matrices of the extended system).
Mat2x3 = np.ndarray
#: 3x2 real matrix (right pseudo-inverses of ``Mat2x3``).
Mat3x2 = np.ndarray

SINGULAR_RTOL = 1e-12


class SingularMatrix(np.linalg.LinAlgError):
    """Raised when a 2x2 determinant is below the scale-aware threshold."""

    def __init__(self, det, message=None):
        self.det = float(det)
        super().__init__(message or f"matrix is singular (det={self.det:.3e})")


class RankDeficient(SingularMatrix):
    """Raised when a 2x3 matrix has lost full row rank."""

    def __init__(self, det, message=None):
        super().__init__(det, message or f"2x3 matrix is rank deficient (det(d d^T)={float(det):.3e})")


@njit(cache=True)
def _rotation(a):
    c = np.cos(a)
    s = np.sin(a)
    return np.array([[c, -s], [s, c]])


@njit(cache=True)
def _rotation_derivative(a):
    c = np.cos(a)
    s = np.sin(a)
    return np.array([[-s, -c], [c, -s]])


@njit(cache=True)
def _singular_tol(m):
    # scale-aware: det of an entry-scale-k matrix grows like k**2
    norm = 0.0
    for i in range(m.shape[0]):
        row = 0.0
        for j in range(m.shape[1]):
            row += abs(m[i, j])
        norm = max(norm, row)
    return SINGULAR_RTOL * (1.0 + norm * norm)


@njit(cache=True)
def _inv2(m):
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    # callers check det; an exactly singular input yields NaNs, not a trap
    r = 1.0 / det if det != 0.0 else np.nan
    out = np.empty((2, 2))
    out[0, 0] = m[1, 1] * r
    out[0, 1] = -m[0, 1] * r
    out[1, 0] = -m[1, 0] * r
    out[1, 1] = m[0, 0] * r
    return out, det


@njit(cache=True)
def _gram(d):
    g = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            g[i, j] = d[i, 0] * d[j, 0] + d[i, 1] * d[j, 1] + d[i, 2] * d[j, 2]
    return g


@njit(cache=True)
def _pinv_2x3(d):
    """Right inverse ``d^T (d d^T)^-1``; also returns ``det(d d^T)`` and the singular flag."""
    g = _gram(d)
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    singular = not (det > _singular_tol(g))
    if singular:
        return np.zeros((3, 2)), det, True
    gi, _ = _inv2(g)
    return d.T @ gi, det, False


def _as_matrix(m, shape):
    arr = np.asarray(m, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    return arr


def rotation(angle):
    """Planar rotation matrix ``[[cos a, -sin a], [sin a, cos a]]``."""
    return _rotation(float(angle))


def rotation_derivative(angle):
    """Derivative of :func:`rotation` with respect to the angle.

    Multiply by the angle rate to obtain the time derivative of a rotating
    frame.
    """
    return _rotation_derivative(float(angle))


def singular_threshold(m):
    """Determinant threshold below which ``m`` is treated as singular."""
    return float(_singular_tol(np.asarray(m, dtype=float)))


def mat2_inverse(m):
    m = _as_matrix(m, (2, 2))
    inv, det = _inv2(m)
    if not abs(det) > _singular_tol(m):
        raise SingularMatrix(det)
    return inv


def pinv_2x3(d):
    """Minimum-norm right inverse of a full-row-rank 2x3 matrix.

    Uses the normal-equation form ``d^T (d d^T)^-1``.  Raises
    :class:`RankDeficient` when ``det(d d^T)`` falls under the scale-aware
    threshold of :func:`singular_threshold`.
    """
    d = _as_matrix(d, (2, 3))
    p, det, singular = _pinv_2x3(d)
    if singular:
        raise RankDeficient(det)
    return p


def null_vector(d):
    """Unit vector spanning the null space of a full-row-rank 2x3 matrix."""
    d = _as_matrix(d, (2, 3))
    n = np.cross(d[0], d[1])
    norm = np.linalg.norm(n)
    if norm == 0.0:
        raise RankDeficient(0.0)
    return n / norm


def row_rank(d, tol=None):
    """Numerical rank of a 2x3 matrix via its Gram determinant."""
    d = _as_matrix(d, (2, 3))
    if not np.any(d):
        return 0
    g = _gram(d)
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    threshold = _singular_tol(g) if tol is None else tol
    return 2 if det > threshold else 1
