"""Where the smoothed per-measurement data term is convex, and halfspaces inside it.

For one measurement the term is

    G(z) = (g - sqrt(|z|^2 + delta))^2 + eta * |z - z_hat|^2.

Its Hessian is positive definite everywhere when ``g <= 0`` and outside the
disk ``|z|^2 <= (4/3) g^2 / (1 + eta)^2`` when ``g > 0``. Each disk is
excluded by a halfspace ``{z : Re(z * conj(normal)) >= offset}`` built on
the tangent line facing the anchor ``z_hat``.

Every function here broadcasts over numpy arrays of components.
"""
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError


def convex_radius(g, eta):
    """Radius of the non-convex disk; NaN where ``g <= 0`` (no disk)."""
    g = np.asarray(g, dtype=float)
    R = np.where(g > 0, 2.0 / np.sqrt(3.0) * g / (1.0 + eta), np.nan)
    return R[()] if R.ndim == 0 else R


def G_value(z, g, eta, delta, z_hat):
    z = np.asarray(z)
    return (g - np.sqrt(np.abs(z) ** 2 + delta)) ** 2 + eta * np.abs(z - z_hat) ** 2


def hessian_G(z, g, eta, delta):
    """Real 2x2 Hessian of ``G`` in ``(Re z, Im z)``, shape ``(..., 2, 2)``."""
    z = np.asarray(z, dtype=np.complex128)
    x, y = z.real, z.imag
    g = np.asarray(g, dtype=float)
    s3 = (x * x + y * y + delta) ** 1.5
    c = 2.0 + 2.0 * np.asarray(eta, dtype=float)
    h11 = -2.0 * g * (y * y + delta) / s3 + c
    h22 = -2.0 * g * (x * x + delta) / s3 + c
    h12 = 2.0 * g * x * y / s3
    h11, h12, h22 = np.broadcast_arrays(h11, h12, h22)
    return np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], -2)


def adjust_anchor(z_hat, g, eta, margin=0.05):
    """Push anchors lying in the closed disk radially to ``(1 + margin) * R``.

    A zero anchor is pushed along the real axis.
    """
    if margin <= 0:
        raise PreconditionError("anchor margin must be positive")
    z_hat = np.asarray(z_hat, dtype=np.complex128)
    R = convex_radius(g, eta)
    mag = np.abs(z_hat)
    inside = np.isfinite(R) & (mag <= np.nan_to_num(R, nan=-1.0))
    direction = np.where(mag > 0, z_hat / np.where(mag > 0, mag, 1.0), 1.0 + 0j)
    out = np.where(inside, (1.0 + margin) * np.nan_to_num(R) * direction, z_hat)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class Halfspace:
    """``{z : Re(z * conj(normal)) >= offset}``; entries with ``active`` False are unconstrained.

    Fields are arrays broadcasting against the measurement stack (0-d for a
    single component).
    """

    normal: np.ndarray
    offset: np.ndarray
    active: np.ndarray

    @classmethod
    def unconstrained(cls, shape=()):
        return cls(np.ones(shape, complex), np.zeros(shape), np.zeros(shape, bool))

    def support(self, z):
        return np.real(np.asarray(z) * np.conj(self.normal))

    def contains(self, z, atol=0.0):
        return ~self.active | (self.support(z) >= self.offset - atol)

    def __getitem__(self, idx):
        return Halfspace(self.normal[idx], self.offset[idx], self.active[idx])


def build_halfspace(z_hat, g, eta, shift_fraction=0.01):
    """Tangent halfspace at the radial projection of ``z_hat`` onto the disk.

    The boundary is shifted by ``shift_fraction * (|z_hat| - R)`` toward the
    anchor. Anchors must already be strictly outside their disk.
    """
    if not 0 <= shift_fraction < 1:
        raise PreconditionError("shift_fraction must lie in [0, 1)")
    z_hat = np.asarray(z_hat, dtype=np.complex128)
    R = np.asarray(convex_radius(g, eta))
    active = np.isfinite(R)
    mag = np.abs(z_hat)
    R0 = np.where(active, R, 0.0)
    if np.any(active & (mag <= R0)):
        raise PreconditionError("anchor lies inside the non-convex disk; call adjust_anchor first")
    normal = np.where(active, z_hat / np.where(mag > 0, mag, 1.0), 1.0 + 0j)
    offset = np.where(active, R0 + shift_fraction * (mag - R0), 0.0)
    return Halfspace(normal, offset, active)


def project_halfspace(z, H):
    """Euclidean projection onto ``H``."""
    z = np.asarray(z, dtype=np.complex128)
    gap = H.offset - H.support(z)
    out = np.where(H.active & (gap > 0), z + gap * H.normal, z)
    # rounding can leave the result an ulp outside; nudge until it is a member
    for _ in range(4):
        short = H.active & (H.support(out) < H.offset)
        if not short.any():
            break
        out = np.where(short, out + np.spacing(np.abs(H.offset) + np.abs(out)) * H.normal, out)
    return out[()] if out.ndim == 0 else out
