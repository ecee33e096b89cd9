import numpy as np
import pytest

from tvpr.admm import (GOLDEN, IterationRecord, SolverConfig, build_problem, coercivity_constant,
                       energy, init_state, run, step)
from tvpr.errors import ConfigError
from tvpr.measurement import CdpOperator, generate_masks, make_sampling_set, simulate_measurements
from tvpr.tv import grad

from conftest import crandn
from oracles import energy_reference


def small_instance(seed=0, shape=(4, 4), J=2, sigma=0.0, noise=0.1):
    rng = np.random.default_rng(seed)
    f = rng.uniform(0, 1, shape)
    op = generate_masks(seed + 1, J, shape)
    g = simulate_measurements(op, f, sigma, seed + 2)
    u_hat = f + noise * rng.standard_normal(shape)
    return f, op, g, u_hat


TIGHT = SolverConfig(lam=0.01, alpha=3.0, gamma=3.0, delta=1e-3, cg_tol=1e-14, cg_maxit=1000,
                     rel_tol=0.0)


def test_tau_guard():
    with pytest.raises(ConfigError):
        SolverConfig(tau=GOLDEN)
    with pytest.raises(ConfigError):
        SolverConfig(tau=0.0)
    SolverConfig(tau=1.6)


@pytest.mark.parametrize("bad", [dict(lam=-1), dict(alpha=0), dict(delta=0), dict(s1=-1),
                                 dict(dual_sign=0), dict(shift_fraction=1.0)])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        SolverConfig(**bad)


def test_init_state_zero_and_residuals(rng):
    op = generate_masks(0, 2, (4, 4))
    s = init_state(op, np.zeros((4, 4)))
    assert not np.any(s.z) and not np.any(s.p)
    u_hat = crandn(rng, 4, 4)
    s = init_state(op, u_hat)
    assert np.linalg.norm(s.z - op.forward(s.u)) == 0
    assert np.linalg.norm(s.p - grad(s.u)) == 0
    assert not np.any(s.w) and not np.any(s.q) and s.k == 0


def test_halfspaces_contain_adjusted_anchors():
    f, op, g, u_hat = small_instance(1, (8, 8), sigma=0.05, noise=0.5)
    prob = build_problem(op, g, None, u_hat, SolverConfig())
    assert np.all(prob.halfspace.contains(prob.z_hat))
    strict = prob.halfspace.support(prob.z_hat) > prob.halfspace.offset
    assert np.all(strict[prob.halfspace.active])


def test_energy_anchor_self_consistency():
    f, op, g, u_hat = small_instance(2)
    cfg = SolverConfig(lam=0.0)
    prob = build_problem(op, g, np.zeros(op.measurement_shape, bool), u_hat, cfg)
    e = energy(u_hat, prob, cfg)
    assert e.finite == pytest.approx(0.0, abs=1e-20) and e.violations == 0


def test_energy_matches_reference(rng):
    f, op, g, u_hat = small_instance(3, (5, 6), sigma=0.2, noise=0.3)
    cfg = SolverConfig(lam=0.7, eta=1.3, delta=0.05)
    sampling = make_sampling_set(g.size, 0.6, 4)
    prob = build_problem(op, g, sampling, u_hat, cfg)
    for _ in range(5):
        u = crandn(rng, 5, 6) * 0.5
        e = energy(u, prob, cfg)
        ref, viol = energy_reference(u, op, g, prob.in_gamma, prob.z_hat, prob.halfspace,
                                     cfg.lam, cfg.eta, cfg.delta)
        assert e.finite == pytest.approx(ref, rel=1e-10)
        assert e.violations == viol
        assert (e.value == np.inf) == (viol > 0)


def test_energy_monotone_in_lambda(rng):
    f, op, g, u_hat = small_instance(4)
    u = crandn(rng, 4, 4)
    prev = -np.inf
    for lam in (0.0, 0.1, 1.0, 10.0):
        cfg = SolverConfig(lam=lam)
        e = energy(u, build_problem(op, g, None, u_hat, cfg), cfg).finite
        assert e >= prev
        prev = e


@pytest.mark.parametrize("sign", [1, -1])
def test_dual_update_increment(sign):
    f, op, g, u_hat = small_instance(5)
    cfg = SolverConfig(alpha=2.0, tau=0.5, gamma=4.0, dual_sign=sign)
    prob = build_problem(op, g, None, u_hat, cfg)
    s0 = init_state(op, u_hat)
    s1 = step(s0, prob, cfg)
    np.testing.assert_allclose(s1.w - s0.w, sign * (s1.z - op.forward(s1.u)), atol=1e-12)
    np.testing.assert_allclose(s1.q - s0.q, sign * 2.0 * (s1.p - grad(s1.u)), atol=1e-12)


def test_run_zero_iterations():
    f, op, g, u_hat = small_instance(6)
    res = run(op, g, None, u_hat, SolverConfig(max_outer=0))
    np.testing.assert_array_equal(res.u, u_hat)
    assert res.diagnostics == []


def test_diagnostics_length_and_csv():
    f, op, g, u_hat = small_instance(7)
    res = run(op, g, None, u_hat, TIGHT.with_(max_outer=7), truth=f)
    assert len(res.diagnostics) == 7 == res.state.k
    row = res.diagnostics[-1].csv_row()
    assert len(row) == len(IterationRecord.CSV_FIELDS)
    assert all(x == "nan" or float(x) == float(f"{float(x):.6g}") for x in row[1:])


def test_stops_on_relative_change():
    f, op, g, u_hat = small_instance(8)
    res = run(op, g, None, u_hat, TIGHT.with_(max_outer=500, rel_tol=1e-6))
    assert 1 < len(res.diagnostics) < 500
    assert res.diagnostics[-1].rel_change < 1e-6


def test_z_iterates_feasible():
    f, op, g, u_hat = small_instance(9, (8, 8), sigma=0.1, noise=0.3)
    cfg = SolverConfig(lam=0.05, alpha=3, gamma=3, max_outer=20, rel_tol=0)
    prob = build_problem(op, g, None, u_hat, cfg)
    state = init_state(op, u_hat)
    for _ in range(20):
        state = step(state, prob, cfg)
        assert np.all(prob.halfspace.contains(state.z)[prob.in_gamma])


def test_kkt_point_is_fixed():
    f, op, g, u_hat = small_instance(10)
    cfg = TIGHT.with_(delta=1e-2, max_outer=1500)
    res = run(op, g, None, u_hat, cfg)
    s = res.state
    s2 = step(s, res.problem, cfg)
    for a, b in ((s.u, s2.u), (s.z, s2.z), (s.p, s2.p), (s.w, s2.w), (s.q, s2.q)):
        assert np.linalg.norm(b - a) <= 1e-8 * max(np.linalg.norm(a), 1.0)


def test_residual_after_200_steps():
    f, op, g, u_hat = small_instance(11)
    res = run(op, g, None, u_hat, TIGHT.with_(max_outer=200))
    assert np.linalg.norm(res.state.z - op.forward(res.u)) < 1e-4


def test_deterministic():
    f, op, g, u_hat = small_instance(12, (8, 8), sigma=0.1, noise=0.3)
    cfg = SolverConfig(lam=0.05, alpha=3, gamma=3, max_outer=15, rel_tol=0)
    a = run(op, g, None, u_hat, cfg, truth=f)
    b = run(op, g, None, u_hat, cfg, truth=f)
    assert [r.csv_row() for r in a.diagnostics] == [r.csv_row() for r in b.diagnostics]
    np.testing.assert_array_equal(a.u, b.u)


def test_unnormalized_units_equivalence():
    """Raw parameters on the unnormalized operator reproduce the converted run."""
    f, op, g, u_hat = small_instance(13, (4, 6), sigma=0.05, noise=0.2)
    n = f.size
    raw_op = CdpOperator(op.masks * np.sqrt(n))
    common = dict(max_outer=10, rel_tol=0.0, cg_tol=1e-14, cg_maxit=1000)
    raw = SolverConfig(lam=0.5, alpha=3, gamma=20.0, delta=0.01, **common)
    conv = SolverConfig.from_unnormalized(n, lam=0.5, alpha=3, gamma=20.0, delta=0.01, **common)
    a = run(raw_op, np.sqrt(n) * g, None, u_hat, raw)
    b = run(op, g, None, u_hat, conv)
    np.testing.assert_allclose(a.u, b.u, atol=1e-8)


def test_undersampled_run_and_coercivity():
    f, op, g, u_hat = small_instance(14, (6, 6), sigma=0.05, noise=0.2)
    beta, smax = coercivity_constant(op, np.ones(op.measurement_shape, bool))
    # with full data the singular values are square roots of the A*A diagonal
    assert beta == pytest.approx(np.sqrt(op.normal_diagonal.min()), rel=1e-3)
    assert smax == pytest.approx(np.sqrt(op.normal_diagonal.max()), rel=1e-3)
    sampling = make_sampling_set(g.size, 0.7, 3)
    res = run(op, g, sampling, u_hat, SolverConfig(lam=0.05, alpha=3, gamma=3, max_outer=10))
    assert np.all(np.isfinite(res.u))
    assert res.problem.in_gamma.sum() == sampling.size


def test_feasibility_trend_reference_instance():
    from tvpr.experiment import ExperimentConfig, load_truth, run_experiment

    cfg = ExperimentConfig.from_dict({"preset": "paper-sigma10"})
    rep = run_experiment(cfg, write=False)
    d = rep.diagnostics
    assert len(d) == 60
    assert d[59].primal_res_z <= d[4].primal_res_z / 10
    assert d[59].primal_res_p <= d[4].primal_res_p / 10
    f = load_truth(cfg)
    g = simulate_measurements(generate_masks(cfg.seed_masks, cfg.J, f.shape), f, rep.summary["sigma"], cfg.seed_noise)
    assert d[59].primal_res_z / np.linalg.norm(g) < 1e-3
    assert d[59].primal_res_p / max(1.0, np.linalg.norm(grad(rep.u))) < 1e-3
