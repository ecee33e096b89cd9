"""Reconstruction quality metric."""
import numpy as np

from .errors import DimensionError, PreconditionError

SNR_CAP_DB = 300.0


def global_phase(u, f):
    """Unit-modulus ``c`` minimizing ``||u - c f||``."""
    s = np.vdot(np.ravel(f), np.ravel(u))
    return s / abs(s) if s != 0 else 1.0 + 0j


def snr(u, f):
    """SNR in dB of ``u`` against ground truth ``f`` after removing the global phase.

    Capped at 300 dB when the error vanishes.
    """
    u = np.asarray(u)
    f = np.asarray(f)
    if u.shape != f.shape:
        raise DimensionError(f"shape mismatch {u.shape} vs {f.shape}")
    den = float(np.sum(np.abs(u) ** 2))
    if den == 0:
        raise PreconditionError("SNR is undefined for a zero reconstruction")
    num = float(np.sum(np.abs(u - global_phase(u, f) * f) ** 2))
    if num <= den * 10 ** (-SNR_CAP_DB / 10):
        return SNR_CAP_DB
    return -10.0 * np.log10(num / den)
