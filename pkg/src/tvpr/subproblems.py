"""Block updates of the semi-proximal ADMM: u (CG), z (quartic + projected gradient), p (shrinkage)."""
from dataclasses import dataclass

import numpy as np

from .convexity import Halfspace, project_halfspace
from .errors import ConfigError, NumericalError, PreconditionError
from .tv import divergence, laplacian, soft_threshold


# ---------------------------------------------------------------------------
# u-subproblem


@dataclass(frozen=True)
class CGResult:
    x: np.ndarray
    iterations: int
    rel_residual: float
    converged: bool


def cg_solve(apply, rhs, x0=None, tol=1e-8, maxit=300):
    """Conjugate gradients for a symmetric positive definite ``apply``.

    Stops when ``||rhs - apply(x)|| <= tol * ||rhs||`` (recursive residual) or
    after ``maxit`` iterations, in which case ``converged`` is False.
    """
    if tol <= 0:
        raise PreconditionError("CG tolerance must be positive")
    b = np.asarray(rhs, dtype=float)
    bnorm = np.linalg.norm(b)
    if not np.isfinite(bnorm):
        raise NumericalError("non-finite right-hand side in CG")
    if bnorm == 0:
        return CGResult(np.zeros_like(b), 0, 0.0, True)
    if x0 is None:
        x = np.zeros_like(b)
        r = b.copy()
    else:
        x = np.array(x0, dtype=float)
        r = b - apply(x)
    rr = float(np.vdot(r, r))
    if np.sqrt(rr) <= tol * bnorm:
        return CGResult(x, 0, np.sqrt(rr) / bnorm, True)
    p = r.copy()
    for it in range(1, maxit + 1):
        Ap = apply(p)
        pAp = float(np.vdot(p, Ap))
        if not np.isfinite(pAp):
            raise NumericalError("non-finite value in CG")
        if pAp <= 0:
            raise NumericalError("CG operator is not positive definite")
        a = rr / pAp
        x += a * p
        r -= a * Ap
        rr_new = float(np.vdot(r, r))
        if np.sqrt(rr_new) <= tol * bnorm:
            return CGResult(x, it, np.sqrt(rr_new) / bnorm, True)
        p *= rr_new / rr
        p += r
        rr = rr_new
    return CGResult(x, maxit, np.sqrt(rr) / bnorm, False)


@dataclass(frozen=True)
class UOperator:
    """``B = alpha * Re(A*A) - gamma * Laplacian + 2 * Re(S1)`` acting on real images."""

    alpha: float
    gamma: float
    normal_diag: np.ndarray
    s1_diag: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "_diag", self.alpha * self.normal_diag + 2.0 * self.s1_diag)

    def __call__(self, v):
        return self._diag * v - self.gamma * laplacian(v)


def u_rhs(u, z, p, w, q, op, alpha, gamma, s1):
    wt = z + w / alpha
    pt = p + q / gamma
    return alpha * op.adjoint(wt) - gamma * divergence(pt) + 2.0 * s1 * u


def solve_u(u, z, p, w, q, op, alpha, gamma, s1, tol=1e-8, maxit=300):
    """Minimize the u-block of the augmented Lagrangian.

    Because ``A*A`` and ``S1`` are real diagonal, the real and imaginary
    parts decouple into two systems with the same SPD matrix. Returns the new
    ``u`` and the two :class:`CGResult` records; the previous ``u`` is the
    warm start.
    """
    s1 = np.broadcast_to(np.asarray(s1, dtype=float), op.shape)
    B = UOperator(alpha, gamma, op.normal_diagonal, s1)
    rhs = u_rhs(u, z, p, w, q, op, alpha, gamma, s1)
    re = cg_solve(B, rhs.real, x0=u.real, tol=tol, maxit=maxit)
    im = cg_solve(B, rhs.imag, x0=u.imag, tol=tol, maxit=maxit)
    return re.x + 1j * im.x, (re, im)


# ---------------------------------------------------------------------------
# z-subproblem


@dataclass(frozen=True)
class ComponentData:
    """One measurement's data for the z-update."""

    g: float
    delta: float
    eta: float
    z_hat: complex
    in_gamma: bool

    def __post_init__(self):
        if self.delta <= 0 or self.eta <= 0:
            raise PreconditionError("delta and eta must be positive")


def z_center(Au, z_hat, w, z_prev, alpha, eta, s2):
    """Center ``T`` and weight ``coef`` with z-block objective ``coef * |z - T|^2 + data``."""
    denom = alpha + 2.0 * eta + 2.0 * np.asarray(s2, dtype=float)
    if np.any(denom <= 0):
        raise ConfigError("alpha + 2*eta + 2*S2 must be positive")
    T = (alpha * Au + 2.0 * eta * z_hat - w + 2.0 * s2 * z_prev) / denom
    return T, denom / 2.0


def z_objective(z, g, delta, coef, T):
    z = np.asarray(z)
    return (g - np.sqrt(z.real ** 2 + z.imag ** 2 + delta)) ** 2 + coef * np.abs(z - T) ** 2


def rho_objective(rho, g, delta, coef, t):
    return (g - np.sqrt(rho * rho + delta)) ** 2 + coef * (rho - t) ** 2


def quartic_coefficients(g, delta, coef, t):
    """Coefficients of the squared stationarity condition in the modulus ``rho``.

    ``((1+coef) rho - coef t)^2 (rho^2 + delta) = g^2 rho^2`` expanded.
    """
    a1 = coef + 1.0
    return (
        a1 * a1,
        -2.0 * coef * a1 * t,
        delta * a1 * a1 + coef * coef * t * t - g * g,
        -2.0 * delta * coef * a1 * t,
        delta * coef * coef * t * t,
    )


def _companion_roots(coeffs):
    """Roots of a batch of quartics; ``coeffs`` has shape ``(N, 5)``, leading first."""
    coeffs = np.asarray(coeffs, dtype=float)
    N = coeffs.shape[0]
    C = np.zeros((N, 4, 4))
    C[:, 0, :] = -coeffs[:, 1:] / coeffs[:, :1]
    C[:, 1, 0] = C[:, 2, 1] = C[:, 3, 2] = 1.0
    return np.linalg.eigvals(C)


def quartic_real_roots(a, b, c, d, e):
    """Sorted distinct real roots of ``a x^4 + b x^3 + c x^2 + d x + e``."""
    if a == 0:
        raise PreconditionError("leading coefficient must be nonzero")
    roots = _companion_roots([[a, b, c, d, e]])[0]
    keep = np.abs(roots.imag) < 1e-8 * np.maximum(1.0, np.abs(roots))
    return sorted(set(float(r) for r in roots.real[keep]))


def minimize_modulus(g, delta, coef, t):
    """Global minimizer over ``rho >= 0`` of :func:`rho_objective`, vectorized.

    Candidates are 0 and the (clipped) real parts of all four quartic roots.
    Squaring the stationarity condition adds spurious roots and near-double
    roots come back with small imaginary parts, so every candidate is scored
    by the true objective; the smallest minimizing ``rho`` wins.
    """
    g, delta, coef, t = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (g, delta, coef, t)))
    shape = g.shape
    g, delta, coef, t = (x.ravel() for x in (g, delta, coef, t))
    if g.size == 0:
        return np.zeros(shape)
    # rescale rho = s * x so the companion matrix is well balanced
    s = np.maximum.reduce([t, np.abs(g), np.sqrt(delta)])
    a, b, c, d, e = quartic_coefficients(g / s, delta / s ** 2, coef, t / s)
    roots = _companion_roots(np.stack([a, b, c, d, e], axis=1)) * s[:, None]
    cand = np.concatenate([np.zeros((g.size, 1)), np.clip(roots.real, 0.0, None)], axis=1)
    cand.sort(axis=1)
    obj = rho_objective(cand, g[:, None], delta[:, None], coef[:, None], t[:, None])
    if not np.all(np.isfinite(obj)):
        raise NumericalError("non-finite objective in z-subproblem")
    best = cand[np.arange(g.size), np.argmin(obj, axis=1)]
    return best.reshape(shape)


def _sign(T):
    T = np.asarray(T, dtype=np.complex128)
    mag = np.abs(T)
    return np.where(mag > 0, T / np.where(mag > 0, mag, 1.0), 1.0 + 0j)


def projected_gradient_z(g, delta, coef, T, H, z0, tol=1e-10, maxit=500):
    """Minimize ``z_objective`` over the halfspace ``H`` by fixed-step projected gradient.

    The step is ``1/L`` with ``L = 2 (coef + 1) + 2 max(-g, 0) / sqrt(delta)``,
    an upper bound on the Hessian, so the objective never increases. Starts
    from the projection of ``z0``. Returns ``(z, converged)`` arrays.
    """
    g, delta, coef, T, z0 = np.broadcast_arrays(
        np.asarray(g, float), np.asarray(delta, float), np.asarray(coef, float),
        np.asarray(T, complex), np.asarray(z0, complex))
    if not np.all(np.isfinite(z0)):
        raise PreconditionError("projected gradient start must be finite")
    L = 2.0 * (coef + 1.0) + 2.0 * np.maximum(-g, 0.0) / np.sqrt(delta)
    z = project_halfspace(z0, H)
    running = np.ones(z.shape, dtype=bool)
    for _ in range(maxit):
        s = np.sqrt(z.real ** 2 + z.imag ** 2 + delta)
        grad = 2.0 * (1.0 - g / s) * z + 2.0 * coef * (z - T)
        z_new = project_halfspace(z - grad / L, H)
        moved = np.abs(z_new - z)
        z = np.where(running, z_new, z)
        running &= moved >= tol
        if not running.any():
            break
    return z, ~running


@dataclass(frozen=True)
class ZInfo:
    projected: int
    unconverged: int


def solve_z(T, coef, g, delta, in_gamma, H, tol=1e-10, maxit=500):
    """Componentwise z-update over the whole measurement stack.

    Outside the sampling set the minimizer is ``T``. Inside, the modulus comes
    from :func:`minimize_modulus` with phase ``sign(T)`` (``sign(0) = 1``), and
    if that point is not in its halfspace it seeds :func:`projected_gradient_z`.
    """
    T = np.asarray(T, dtype=np.complex128)
    shape = T.shape
    coef = np.broadcast_to(np.asarray(coef, float), shape)
    delta = np.broadcast_to(np.asarray(delta, float), shape)
    g = np.broadcast_to(np.asarray(g, float), shape)
    in_gamma = np.broadcast_to(np.asarray(in_gamma, bool), shape)
    z = T.copy()
    if not in_gamma.any():
        return z, ZInfo(0, 0)
    Tg, cg, gg, dg = T[in_gamma], coef[in_gamma], g[in_gamma], delta[in_gamma]
    Hg = Halfspace(*(np.broadcast_to(x, shape)[in_gamma] for x in (H.normal, H.offset, H.active)))
    rho = minimize_modulus(gg, dg, cg, np.abs(Tg))
    zg = _sign(Tg) * rho
    out = ~Hg.contains(zg)
    unconverged = 0
    if out.any():
        zp, ok = projected_gradient_z(gg[out], dg[out], cg[out], Tg[out], Hg[out], zg[out], tol, maxit)
        zg[out] = zp
        unconverged = int(np.count_nonzero(~ok))
    z[in_gamma] = zg
    return z, ZInfo(int(np.count_nonzero(out)), unconverged)


def solve_z_component(comp, H, T, coef, tol=1e-10, maxit=500):
    """Single-component form of :func:`solve_z`."""
    if coef <= 0:
        raise PreconditionError("coef must be positive")
    H1 = Halfspace(*(np.atleast_1d(np.asarray(x)) for x in (H.normal, H.offset, H.active)))
    z, _ = solve_z(np.atleast_1d(complex(T)), coef, comp.g, comp.delta, comp.in_gamma, H1, tol, maxit)
    return complex(z[0])


# ---------------------------------------------------------------------------
# p-subproblem


def shrink_center(grad_u, p_prev, q_prev, gamma, s3):
    return (gamma * grad_u - q_prev + 2.0 * s3 * p_prev) / (gamma + 2.0 * s3)


def solve_p(grad_u, p_prev, q_prev, lam, gamma, s3):
    """Componentwise shrinkage for the p-block."""
    s3 = np.asarray(s3, dtype=float)
    if gamma <= 0 or np.any(s3 < 0):
        raise PreconditionError("gamma must be positive and S3 nonnegative")
    center = shrink_center(grad_u, p_prev, q_prev, gamma, s3)
    return soft_threshold(center, lam / (gamma + 2.0 * s3))
