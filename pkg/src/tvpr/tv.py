"""Forward-difference gradient, divergence and anisotropic total variation.

Differences are zero on the last row (x) and last column (y); there is no
periodic wrap. A gradient field is a ``(2, n1, n2)`` array, ``[grad_x, grad_y]``.
"""
import numpy as np

from .errors import DimensionError


def grad(u):
    u = np.asarray(u)
    p = np.zeros((2,) + u.shape, dtype=np.result_type(u, np.float64))
    p[0, :-1, :] = u[1:, :] - u[:-1, :]
    p[1, :, :-1] = u[:, 1:] - u[:, :-1]
    return p


def divergence(p):
    """Negative adjoint of :func:`grad`."""
    p = np.asarray(p)
    if p.ndim != 3 or p.shape[0] != 2:
        raise DimensionError(f"gradient field must have shape (2, n1, n2), got {p.shape}")
    px, py = p
    d = np.zeros(p.shape[1:], dtype=p.dtype)
    d[:-1, :] += px[:-1, :]
    d[1:, :] -= px[:-1, :]
    d[:, :-1] += py[:, :-1]
    d[:, 1:] -= py[:, :-1]
    return d


def laplacian(u):
    """``div(grad(u))``, negative semidefinite."""
    u = np.asarray(u)
    # Direct stencil; equals divergence(grad(u)) without the temporaries.
    out = np.zeros_like(u)
    dx = u[1:, :] - u[:-1, :]
    dy = u[:, 1:] - u[:, :-1]
    out[:-1, :] += dx
    out[1:, :] -= dx
    out[:, :-1] += dy
    out[:, 1:] -= dy
    return out


def tv(u):
    """Anisotropic TV: sum of complex moduli of both difference components."""
    return float(np.sum(np.abs(grad(u))))


def soft_threshold(x, t):
    """Complex shrinkage ``sign(x) * max(|x| - t, 0)`` with ``sign(0) = 0``."""
    x = np.asarray(x)
    t = np.asarray(t, dtype=float)
    mag = np.abs(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(mag > t, 1.0 - t / np.where(mag > 0, mag, 1.0), 0.0)
    out = scale * x
    return out[()] if out.ndim == 0 else out
