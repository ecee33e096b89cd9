"""Error reduction and RAAR alternating projections, and the ER-based initializer."""
import logging
import os
import shlex
import subprocess
import tempfile

import numpy as np

from .errors import DimensionError

log = logging.getLogger(__name__)


def _sign(z):
    mag = np.abs(z)
    return np.where(mag > 0, z / np.where(mag > 0, mag, 1.0), 1.0 + 0j)


def proj_magnitude(z, g, sampling=None):
    """``g * sign(z)`` componentwise, ``sign(0) = 1``.

    With a boolean ``sampling`` mask, entries outside it pass through.
    """
    z = np.asarray(z, dtype=np.complex128)
    g = np.asarray(g, dtype=float)
    if z.shape != g.shape:
        raise DimensionError(f"shape mismatch {z.shape} vs {g.shape}")
    out = g * _sign(z)
    return out if sampling is None else np.where(sampling, out, z)


def image_from(op, z, real_valued=False, nonnegative=False):
    """``(A*A)^{-1} A* z``, optionally restricted to real (and nonnegative) images.

    Since ``A*A`` is diagonal these restrictions are pixelwise and the result
    is still the least-squares fit within the restricted set.
    """
    u = op.pseudo_inverse(z)
    if not real_valued:
        return u
    u = u.real
    if nonnegative:
        u = np.maximum(u, 0.0)
    return u.astype(np.complex128)


def proj_range(op, z):
    """Orthogonal projection onto range(A): ``A (A*A)^{-1} A* z``."""
    return op.forward(image_from(op, z))


def proj_range_real(op, z, nonnegative=False):
    """Projection onto ``A`` applied to real (optionally nonnegative) images."""
    return op.forward(image_from(op, z, real_valued=True, nonnegative=nonnegative))


def _range_projector(op, real_valued, nonnegative):
    if real_valued:
        return lambda z: proj_range_real(op, z, nonnegative)
    return lambda z: proj_range(op, z)


def er_run(op, g, z0, iters, real_valued=False, nonnegative=False, sampling=None):
    """``z <- P2(P1(z))`` for ``iters`` steps; returns ``(u, z)``.

    Real-valued runs on J=2 patterns stagnate from a zero-phase start
    unless the image is also kept nonnegative.
    """
    P2 = _range_projector(op, real_valued, nonnegative)
    z = np.asarray(z0, dtype=np.complex128)
    for _ in range(iters):
        z = P2(proj_magnitude(z, g, sampling))
    return image_from(op, z, real_valued, nonnegative), z


def raar_step(op, g, z, phi, real_valued=False, nonnegative=False, sampling=None):
    P2 = _range_projector(op, real_valued, nonnegative)
    p1 = proj_magnitude(z, g, sampling)
    return 2 * phi * P2(p1) + phi * z - phi * P2(z) + (1 - 2 * phi) * p1


def raar_run(op, g, z0, iters, phi=0.85, real_valued=False, nonnegative=False, sampling=None):
    """RAAR with relaxation ``phi``; returns ``(u, z)``."""
    if not 0 < phi <= 1:
        raise ValueError("phi must lie in (0, 1]")
    z = np.asarray(z0, dtype=np.complex128)
    for _ in range(iters):
        z = raar_step(op, g, z, phi, real_valued, nonnegative, sampling)
    return image_from(op, z, real_valued, nonnegative), z


def er_start(op, g, kind="flat"):
    """Starting measurements for ER/RAAR.

    ``"flat"`` takes the magnitudes ``g`` with the phases of ``A 1`` (a
    uniform object); ``"zero"`` takes ``g`` itself.
    """
    g = np.asarray(g, dtype=float)
    if kind == "zero":
        return g.astype(np.complex128)
    if kind == "flat":
        return g * _sign(op.forward(np.ones(op.shape, dtype=np.complex128)))
    raise ValueError(f"unknown ER start {kind!r}")


class ExternalDenoiser:
    """Run an external command on an 8-bit PGM image.

    ``command`` is a template with ``{input}`` and ``{output}`` placeholders,
    e.g. ``"bm3d-cli {input} {output} --sigma 10"``. The real part of the
    image is written clamped to [0, 1].
    """

    def __init__(self, command, timeout=600.0):
        self.command = command
        self.timeout = timeout

    def __call__(self, u):
        from .pgm import load_pgm, save_pgm

        with tempfile.TemporaryDirectory() as tmp:
            src = os.path.join(tmp, "in.pgm")
            dst = os.path.join(tmp, "out.pgm")
            save_pgm(u, src)
            args = [a.format(input=src, output=dst) for a in shlex.split(self.command)]
            subprocess.run(args, check=True, timeout=self.timeout, capture_output=True)
            out = load_pgm(dst)
        if out.shape != np.shape(u):
            raise DimensionError(f"denoiser returned shape {out.shape}, expected {np.shape(u)}")
        return out


def init_procedure(op, g, er_iters=40, denoiser=None, real_valued=True, nonnegative=True,
                   start="flat", sampling=None):
    """``er_iters`` ER steps from :func:`er_start`, then an optional denoiser.

    A failing denoiser is logged and skipped.
    """
    if er_iters < 1:
        raise ValueError("er_iters must be at least 1")
    u, _ = er_run(op, g, er_start(op, g, start), er_iters, real_valued, nonnegative,
                  sampling)
    if denoiser is None:
        return u
    try:
        out = np.asarray(denoiser(u), dtype=np.complex128)
    except Exception as exc:  # any hook failure falls back to the raw ER image
        log.warning("denoiser failed (%s); using the ER output unchanged", exc)
        return u
    return out
