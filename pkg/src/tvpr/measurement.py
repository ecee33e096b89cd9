"""Coded diffraction measurements: masked unitary 2D DFTs.

All random draws go through numpy's Philox counter-based bit generator so
masks, noise and sampling sets are reproducible across platforms.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionError, InvariantError, PreconditionError
from .grid import as_grid

_S2 = np.sqrt(2.0) / 2.0
_S3 = np.sqrt(3.0)

#: Mask alphabet used for the coded diffraction patterns.
MASK_ALPHABET = np.array(
    [_S2, -_S2, 1j * _S2, -1j * _S2, _S3, -_S3, 1j * _S3, -1j * _S3],
    dtype=np.complex128,
)


def make_rng(seed):
    """Seeded Philox generator; the one RNG used throughout."""
    return np.random.Generator(np.random.Philox(int(seed)))


def dft2(u):
    """Unitary 2D DFT over the last two axes."""
    return np.fft.fft2(u, norm="ortho")


def idft2(U):
    return np.fft.ifft2(U, norm="ortho")


@dataclass(frozen=True, eq=False)
class CdpOperator:
    """``A u = [F(D_1 u); ...; F(D_J u)]`` with diagonal masks ``D_j``.

    ``masks`` has shape ``(J, n1, n2)``. Measurements are held as arrays of
    the same shape; block ``j`` is ``dft2(masks[j] * u)``.
    """

    masks: np.ndarray

    def __post_init__(self):
        masks = np.array(self.masks, dtype=np.complex128)
        if masks.ndim != 3 or masks.shape[0] < 1:
            raise DimensionError(f"masks must have shape (J, n1, n2), got {masks.shape}")
        masks.setflags(write=False)
        object.__setattr__(self, "masks", masks)

    @property
    def J(self):
        return self.masks.shape[0]

    @property
    def shape(self):
        return self.masks.shape[1:]

    @property
    def n(self):
        return self.shape[0] * self.shape[1]

    @property
    def measurement_shape(self):
        return self.masks.shape

    def forward(self, u):
        u = as_grid(u)
        if u.shape != self.shape:
            raise DimensionError(f"image shape {u.shape} does not match operator {self.shape}")
        return dft2(self.masks * u)

    def adjoint(self, z):
        z = np.asarray(z, dtype=np.complex128)
        if z.shape != self.masks.shape:
            raise DimensionError(f"measurement shape {z.shape} does not match {self.masks.shape}")
        return np.sum(np.conj(self.masks) * idft2(z), axis=0)

    @cached_property
    def normal_diagonal(self):
        """Diagonal of ``A*A``: ``sum_j |D_j|^2``, real and (for the alphabet) positive."""
        d = np.sum(self.masks.real ** 2 + self.masks.imag ** 2, axis=0)
        d.setflags(write=False)
        return d

    def normal(self, u):
        return self.normal_diagonal * u

    def pseudo_inverse(self, z):
        """``(A*A)^{-1} A* z``."""
        d = self.normal_diagonal
        if np.any(d <= 0):
            raise InvariantError("A*A is singular: some mask column is identically zero")
        return self.adjoint(z) / d


def generate_masks(seed, J, shape):
    """Draw ``J`` masks of the given ``(n1, n2)`` shape uniformly from the alphabet."""
    if J < 1:
        raise PreconditionError("J must be at least 1")
    n1, n2 = shape
    if n1 < 1 or n2 < 1:
        raise PreconditionError("grid dimensions must be positive")
    idx = make_rng(seed).integers(0, len(MASK_ALPHABET), size=(J, n1, n2))
    return CdpOperator(MASK_ALPHABET[idx])


def simulate_measurements(op, f, sigma, seed):
    """Noisy magnitudes ``g = |A f| + xi`` with ``xi ~ N(0, sigma^2)`` i.i.d.

    Negative entries are kept; the model handles ``g <= 0`` explicitly.
    """
    if sigma < 0:
        raise PreconditionError("sigma must be nonnegative")
    g = np.abs(op.forward(f))
    if sigma > 0:
        g = g + sigma * make_rng(seed).standard_normal(g.shape)
    return g


def make_sampling_set(Jn, ratio, seed):
    """Sorted 0-based indices of a uniformly random subset of size ``round(ratio*Jn)``.

    Indices refer to the block-wise lexicographic measurement vector (see
    :func:`tvpr.grid.vec_stack`).
    """
    if not 0 < ratio <= 1:
        raise PreconditionError(f"sampling ratio must lie in (0, 1], got {ratio}")
    size = int(np.floor(ratio * Jn + 0.5))
    if size == 0:
        raise PreconditionError(f"sampling ratio {ratio} gives an empty set for Jn={Jn}")
    if size == Jn:
        return np.arange(Jn)
    return np.sort(make_rng(seed).choice(Jn, size=size, replace=False))


def sampling_mask(indices, J, shape):
    """Boolean ``(J, n1, n2)`` mask for a set of lexicographic measurement indices."""
    n1, n2 = shape
    n = n1 * n2
    flat = np.zeros(J * n, dtype=bool)
    indices = np.asarray(indices)
    if indices.size and (indices.min() < 0 or indices.max() >= J * n):
        raise DimensionError("sampling index out of range")
    flat[indices] = True
    # block-wise Fortran-order vectorization
    return flat.reshape(J, n2, n1).transpose(0, 2, 1).copy()
