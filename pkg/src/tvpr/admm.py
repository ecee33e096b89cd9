"""Semi-proximal ADMM for the convex-augmentation TV phase retrieval model.

Splitting ``z = A u`` and ``p = grad u``, one outer iteration updates
u (CG), z (per-component), p (shrinkage) and then both multipliers.
"""
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .convexity import adjust_anchor, build_halfspace
from .errors import ConfigError, DimensionError, NumericalError
from .measurement import make_rng, sampling_mask
from .subproblems import solve_p, solve_u, solve_z, z_center
from .tv import grad, tv

log = logging.getLogger(__name__)

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class SolverConfig:
    """Scalars of the model and the solver, in the units of the unitary operator.

    ``s1``, ``s2``, ``s3`` are the diagonals of the proximal terms (scalars
    broadcast). ``delta`` may be a scalar or a per-measurement array.
    Use :meth:`from_unnormalized` to convert parameters quoted for an
    unnormalized DFT.
    """

    lam: float = 0.0
    alpha: float = 3.0
    gamma: float = 5e5
    eta: float = 1.0
    tau: float = 1.0
    delta: object = 1e-2
    s1: object = 1.0
    s2: object = 1.0
    s3: object = 1.0
    max_outer: int = 60
    rel_tol: float = 1e-5
    dual_sign: int = 1
    shift_fraction: float = 0.01
    anchor_margin: float = 0.05
    cg_tol: float = 1e-8
    cg_maxit: int = 300
    pg_tol: float = 1e-10
    pg_maxit: int = 500

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError("lambda must be nonnegative")
        for name in ("alpha", "gamma", "eta"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not 0 < self.tau < GOLDEN:
            raise ConfigError(f"tau must lie in (0, (1+sqrt(5))/2), got {self.tau}")
        if np.any(np.asarray(self.delta) <= 0):
            raise ConfigError("delta must be positive")
        for name in ("s1", "s2", "s3"):
            if np.any(np.asarray(getattr(self, name)) < 0):
                raise ConfigError(f"{name} must be nonnegative")
        if self.dual_sign not in (1, -1):
            raise ConfigError("dual_sign must be +1 or -1")
        if self.max_outer < 0:
            raise ConfigError("max_outer must be nonnegative")
        if not 0 <= self.shift_fraction < 1:
            raise ConfigError("shift_fraction must lie in [0, 1)")
        if not self.anchor_margin > 0:
            raise ConfigError("anchor_margin must be positive")

    @classmethod
    def from_unnormalized(cls, n, lam=0.0, alpha=3.0, gamma=5e5, eta=1.0, delta=1e-2,
                         s1=1.0, s2=1.0, s3=1.0, **kwargs):
        """Map parameters stated for an unnormalized DFT (``A_raw = sqrt(n) A``).

        Dividing the raw energy by ``n`` gives the unitary problem with
        ``lam/n``, ``delta/n``, ``gamma/n``, ``s1/n``, ``s3/n`` and unchanged
        ``alpha``, ``eta``, ``s2``; the iterates in ``u`` coincide.
        """
        return cls(lam=lam / n, alpha=alpha, gamma=gamma / n, eta=eta,
                   delta=np.asarray(delta) / n if np.ndim(delta) else delta / n,
                   s1=np.asarray(s1) / n, s2=s2, s3=np.asarray(s3) / n, **kwargs)

    def with_(self, **kwargs):
        return replace(self, **kwargs)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    energy_finite_part: float
    violation_count: int
    primal_res_z: float
    primal_res_p: float
    rel_change: float
    snr: float = float("nan")
    cg_iterations: int = 0
    cg_converged: bool = True
    pg_calls: int = 0
    pg_unconverged: int = 0

    CSV_FIELDS = ("iteration", "energy_finite_part", "violation_count", "primal_res_z",
                  "primal_res_p", "rel_change", "snr_if_truth_given")

    def csv_row(self):
        def fmt(x):
            return "nan" if not np.isfinite(x) else f"{x:.6g}"
        return [str(self.iteration), fmt(self.energy_finite_part), str(self.violation_count),
                fmt(self.primal_res_z), fmt(self.primal_res_p), fmt(self.rel_change), fmt(self.snr)]


@dataclass
class SolverState:
    u: np.ndarray
    z: np.ndarray
    p: np.ndarray
    w: np.ndarray
    q: np.ndarray
    k: int = 0
    diagnostics: list = field(default_factory=list)


@dataclass(frozen=True)
class Problem:
    """Data fixed for one solve: operator, measurements, sampling set, anchors, halfspaces."""

    op: object
    g: np.ndarray
    in_gamma: np.ndarray
    z_hat: np.ndarray
    halfspace: object
    delta: np.ndarray


@dataclass(frozen=True)
class EnergyValue:
    finite: float
    violations: int

    @property
    def value(self):
        return self.finite if self.violations == 0 else math.inf


@dataclass
class RunResult:
    u: np.ndarray
    diagnostics: list
    state: SolverState
    problem: Problem


def _gamma_mask(op, sampling):
    if sampling is None:
        return np.ones(op.measurement_shape, dtype=bool)
    sampling = np.asarray(sampling)
    if sampling.dtype == bool:
        if sampling.shape != op.measurement_shape:
            raise DimensionError("sampling mask shape does not match measurements")
        return sampling
    return sampling_mask(sampling, op.J, op.shape)


def build_problem(op, g, sampling, u_hat, cfg):
    """Anchor ``z_hat = A u_hat``, adjusted out of the non-convex disks on the sampling set,
    and one halfspace per sampled measurement."""
    g = np.asarray(g, dtype=float)
    if g.shape != op.measurement_shape:
        raise DimensionError(f"measurements have shape {g.shape}, expected {op.measurement_shape}")
    in_gamma = _gamma_mask(op, sampling)
    z_raw = op.forward(u_hat)
    g_sampled = np.where(in_gamma, g, 0.0)  # g <= 0 means no disk
    z_hat = np.where(in_gamma, adjust_anchor(z_raw, g_sampled, cfg.eta, cfg.anchor_margin), z_raw)
    H = build_halfspace(z_hat, g_sampled, cfg.eta, cfg.shift_fraction)
    delta = np.broadcast_to(np.asarray(cfg.delta, dtype=float), op.measurement_shape)
    return Problem(op, g, in_gamma, z_hat, H, delta)


def init_state(op, u_hat):
    u_hat = np.asarray(u_hat, dtype=np.complex128)
    if u_hat.shape != op.shape:
        raise DimensionError(f"initial image shape {u_hat.shape} does not match {op.shape}")
    z = op.forward(u_hat)
    p = grad(u_hat)
    return SolverState(u=u_hat.copy(), z=z, p=p, w=np.zeros_like(z), q=np.zeros_like(p))


def _energy_terms(Au, tv_value, problem, cfg):
    data = np.where(problem.in_gamma,
                    (problem.g - np.sqrt(np.abs(Au) ** 2 + problem.delta)) ** 2, 0.0)
    anchor = cfg.eta * np.abs(Au - problem.z_hat) ** 2
    violations = int(np.count_nonzero(problem.in_gamma & ~problem.halfspace.contains(Au)))
    return EnergyValue(float(cfg.lam * tv_value + data.sum() + anchor.sum()), violations)


def energy(u, problem, cfg):
    """Model energy at ``u``; halfspace violations are counted, not added as infinity."""
    return _energy_terms(problem.op.forward(u), tv(u), problem, cfg)


def step(state, problem, cfg, truth=None):
    """One outer iteration; returns a new state with one more diagnostic record."""
    op = problem.op
    u_new, (cg_re, cg_im) = solve_u(state.u, state.z, state.p, state.w, state.q, op,
                                    cfg.alpha, cfg.gamma, cfg.s1, cfg.cg_tol, cfg.cg_maxit)
    Au = op.forward(u_new)
    T, coef = z_center(Au, problem.z_hat, state.w, state.z, cfg.alpha, cfg.eta, cfg.s2)
    z_new, zinfo = solve_z(T, coef, problem.g, problem.delta, problem.in_gamma,
                           problem.halfspace, cfg.pg_tol, cfg.pg_maxit)
    gu = grad(u_new)
    p_new = solve_p(gu, state.p, state.q, cfg.lam, cfg.gamma, cfg.s3)
    rz = z_new - Au
    rp = p_new - gu
    w_new = state.w + cfg.dual_sign * cfg.tau * cfg.alpha * rz
    q_new = state.q + cfg.dual_sign * cfg.tau * cfg.gamma * rp
    for name, arr in (("u", u_new), ("z", z_new), ("p", p_new), ("w", w_new), ("q", q_new)):
        if not np.all(np.isfinite(arr)):
            raise NumericalError(f"non-finite {name} at iteration {state.k + 1}", state=state)
    if not (cg_re.converged and cg_im.converged):
        log.debug("CG hit maxit at iteration %d (rel res %.2e)", state.k + 1,
                  max(cg_re.rel_residual, cg_im.rel_residual))
    e = _energy_terms(Au, float(np.abs(gu).sum()), problem, cfg)
    unorm = np.linalg.norm(state.u)
    rec = IterationRecord(
        iteration=state.k + 1,
        energy_finite_part=e.finite,
        violation_count=e.violations,
        primal_res_z=float(np.linalg.norm(rz)),
        primal_res_p=float(np.linalg.norm(rp)),
        rel_change=float(np.linalg.norm(u_new - state.u) / max(unorm, 1e-300)),
        snr=_snr_or_nan(u_new, truth),
        cg_iterations=cg_re.iterations + cg_im.iterations,
        cg_converged=cg_re.converged and cg_im.converged,
        pg_calls=zinfo.projected,
        pg_unconverged=zinfo.unconverged,
    )
    return SolverState(u_new, z_new, p_new, w_new, q_new, state.k + 1, state.diagnostics + [rec])


def _snr_or_nan(u, truth):
    if truth is None:
        return float("nan")
    from .metrics import snr
    return snr(u, truth)


def coercivity_constant(op, in_gamma, iters=300, seed=0):
    """Estimate ``beta`` with ``beta ||u|| <= ||(A u)_Gamma||`` by power iteration.

    Returns ``(beta, sigma_max)``; only sensible on small grids.
    """
    def M(v):
        return op.adjoint(np.where(in_gamma, op.forward(v), 0.0))

    rng = make_rng(seed)
    v = rng.standard_normal(op.shape) + 1j * rng.standard_normal(op.shape)
    v /= np.linalg.norm(v)
    lam_max = 0.0
    for _ in range(iters):
        mv = M(v)
        lam_max = np.linalg.norm(mv)
        v = mv / lam_max
    v = rng.standard_normal(op.shape) + 1j * rng.standard_normal(op.shape)
    v /= np.linalg.norm(v)
    top = 0.0
    for _ in range(iters):
        mv = lam_max * v - M(v)
        top = np.linalg.norm(mv)
        if top == 0:
            break
        v = mv / top
    lam_min = max(lam_max - top, 0.0)
    return math.sqrt(lam_min), math.sqrt(lam_max)


def run(op, g, sampling, u_hat, cfg, truth=None, check_coercivity=True):
    """Iterate :func:`step` until ``max_outer`` or relative u-change below ``rel_tol``.

    ``sampling`` is None (all measurements), a boolean mask shaped like ``g``
    or an array of lexicographic indices.
    """
    problem = build_problem(op, g, sampling, u_hat, cfg)
    if check_coercivity and not problem.in_gamma.all() and op.n <= 64 * 64:
        beta, smax = coercivity_constant(op, problem.in_gamma)
        if beta < 1e-6 * smax:
            log.warning("restricted operator is nearly singular (beta=%.3e); "
                        "a minimizer may not exist", beta)
    state = init_state(op, u_hat)
    for _ in range(cfg.max_outer):
        state = step(state, problem, cfg, truth)
        # u is a fixed point of the first u-update from init_state, so skip that check
        if state.k > 1 and state.diagnostics[-1].rel_change < cfg.rel_tol:
            break
    return RunResult(state.u, state.diagnostics, state, problem)
