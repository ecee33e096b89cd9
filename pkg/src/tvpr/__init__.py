"""Total-variation phase retrieval from noisy coded diffraction patterns."""
from .admm import SolverConfig, energy, init_state, run, step
from .baselines import er_run, init_procedure, raar_run
from .measurement import CdpOperator, generate_masks, make_sampling_set, simulate_measurements
from .metrics import snr

__all__ = [
    "CdpOperator", "SolverConfig", "energy", "er_run", "generate_masks", "init_procedure",
    "init_state", "make_sampling_set", "raar_run", "run", "simulate_measurements", "snr", "step",
]
