"""Grid signals, lexicographic vectorization and inner products.

An ``n1 x n2`` image is held as a 2D complex array ``U`` with ``U[j, k]``
indexed by row ``j`` and column ``k``. Its vector form stacks columns, so the
row index varies fastest: ``vec(U)[j + k * n1] == U[j, k]`` (Fortran order).
Measurement stacks of shape ``(J, n1, n2)`` vectorize block by block.
"""
import numpy as np

from .errors import DimensionError, InvariantError


def as_grid(u):
    """Return ``u`` as a complex128 2D array (no copy when possible)."""
    u = np.asarray(u, dtype=np.complex128)
    if u.ndim != 2:
        raise DimensionError(f"expected a 2D grid signal, got shape {u.shape}")
    return u


def vec(U):
    return np.asarray(U).ravel(order="F")


def unvec(v, n1, n2):
    v = np.asarray(v)
    if v.size != n1 * n2:
        raise DimensionError(f"vector of length {v.size} cannot hold a {n1}x{n2} grid")
    return v.reshape((n1, n2), order="F")


def vec_stack(Z):
    """Vectorize a ``(J, n1, n2)`` stack into length ``J*n1*n2``."""
    Z = np.asarray(Z)
    return np.concatenate([vec(block) for block in Z]) if Z.shape[0] else Z.ravel()


def unvec_stack(v, J, n1, n2):
    v = np.asarray(v)
    n = n1 * n2
    if v.size != J * n:
        raise DimensionError(f"vector of length {v.size} is not {J} blocks of {n}")
    return np.stack([unvec(v[b * n:(b + 1) * n], n1, n2) for b in range(J)])


def inner_product(a, b):
    """Return ``sum(a * conj(b))``.

    The real part of this is the pairing used in the augmented Lagrangian.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return complex(np.vdot(b.ravel(), a.ravel()))


def weighted_sq_norm(a, S):
    """Return ``sum(S * |a|**2)`` for a nonnegative diagonal weight ``S``."""
    a = np.asarray(a)
    S = np.broadcast_to(np.asarray(S, dtype=float), a.shape) if np.ndim(S) == 0 else np.asarray(S, dtype=float)
    if S.shape != a.shape:
        raise DimensionError(f"weight shape {S.shape} does not match {a.shape}")
    if np.any(S < 0):
        raise InvariantError("weight diagonal must be nonnegative")
    return float(np.sum(S * (a.real ** 2 + a.imag ** 2)))
