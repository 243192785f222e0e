import math

import numpy as np
import pytest
from scipy.linalg import LinAlgWarning, block_diag, solve

import rsmasec as rs
from rsmasec.solver import _matvec


def random_unit(rng, dim):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def quads(blocks, vec):
    return float(np.vdot(vec, _matvec(blocks, vec)).real)


@pytest.mark.parametrize("build", [rs.build_quadforms_perfect, rs.build_quadforms_limited])
def test_operator_tangency_identity(fig_config, scenario, build):
    # with unit prefactors, f^H A f == f^H B f at every point; this is what
    # makes the step scale-free and the eigenvalue drop out of the iteration
    qf = build(scenario, fig_config)
    for seed in range(10):
        f = random_unit(np.random.default_rng(seed), qf.stack_dim)
        op = rs.assemble_kkt(qf, f, fig_config)
        qa, qb = quads(op.a_blocks, f), quads(op.b_blocks, f)
        assert abs(qa - qb) < 1e-10 * max(1.0, abs(qa))


@pytest.mark.parametrize("build", [rs.build_quadforms_perfect, rs.build_quadforms_limited])
def test_operator_matches_numeric_gradient(fig_config, scenario, build):
    qf = build(scenario, fig_config)
    f = random_unit(np.random.default_rng(3), qf.stack_dim)
    op = rs.assemble_kkt(qf, f, fig_config)
    d = _matvec(op.a_blocks, f) - _matvec(op.b_blocks, f)
    analytic = np.concatenate([d.real, d.imag])

    x = np.concatenate([f.real, f.imag])
    h = 1e-6
    numeric = np.zeros_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        hi = (x + e)[: f.size] + 1j * (x + e)[f.size:]
        lo = (x - e)[: f.size] + 1j * (x - e)[f.size:]
        numeric[j] = (
            rs.smoothed_objective(qf, hi, fig_config)
            - rs.smoothed_objective(qf, lo, fig_config)
        ) / (2 * h)
    cos = numeric @ analytic / (np.linalg.norm(numeric) * np.linalg.norm(analytic))
    assert cos > 0.999


def test_weights_positive_and_shaped(fig_config, scenario):
    qf = rs.build_quadforms_limited(scenario, fig_config)
    w = rs.compute_weights(qf, random_unit(np.random.default_rng(0), 20), fig_config)
    assert w.common.shape == (4,)
    assert w.eve.shape == (2, 2)
    assert w.user.shape == (2, 3)
    assert (w.common > 0).all() and (w.eve > 0).all() and (w.user > 0).all()


def test_block_solve_matches_dense():
    rng = np.random.default_rng(5)
    blocks = np.empty((3, 4, 4), dtype=complex)
    for i in range(3):
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        blocks[i] = g @ g.conj().T + np.eye(4)
    rhs = random_unit(rng, 12)
    x = rs.block_solve(blocks, rhs)
    assert np.abs(x - solve(block_diag(*blocks), rhs)).max() < 1e-10


def test_block_solve_identity_blocks():
    rhs = np.arange(8, dtype=complex)
    blocks = np.tile(np.eye(4, dtype=complex), (2, 1, 1))
    assert np.array_equal(rs.block_solve(blocks, rhs), rhs)


def test_block_solve_indefinite_block_falls_back():
    # Hermitian but not positive definite: Cholesky fails, LU must take over
    blocks = np.array([np.diag([1.0, -1.0]).astype(complex)])
    rhs = np.array([2.0, 3.0], dtype=complex)
    x = rs.block_solve(blocks, rhs)
    assert np.allclose(x, [2.0, -3.0])


def test_block_solve_rejects_singular():
    blocks = np.zeros((1, 2, 2), dtype=complex)
    with pytest.raises(rs.NumericError), pytest.warns(LinAlgWarning):
        rs.block_solve(blocks, np.ones(2, dtype=complex))


def solve_setup(fig_config, seed=7, **cfg_overrides):
    cfg = fig_config if not cfg_overrides else rs.SystemConfig(
        n_antennas=4, n_secret=2, n_normal=2, n_eves=2, **cfg_overrides)
    rng = np.random.default_rng(seed)
    real = rs.draw_scenario(cfg, rs.ScenarioLayout(), rng)
    qf = rs.build_quadforms_limited(real, cfg)
    start = rs.mrt_init(real.user_estimates, rng)
    return cfg, qf, start


def test_gpi_trace_starts_at_initializer(fig_config):
    cfg, qf, start = solve_setup(fig_config)
    stack, trace = rs.gpi_solve(qf, start, cfg)
    it0, step0, obj0, _ = trace.iterates[0]
    assert it0 == 0 and math.isnan(step0)
    assert abs(obj0 - rs.smoothed_objective(qf, start.normalized(), cfg)) < 1e-12
    assert abs(stack.norm - 1.0) < 1e-12


def test_gpi_converged_means_small_last_step(fig_config):
    cfg, qf, start = solve_setup(fig_config)
    stack, trace = rs.gpi_solve(qf, start, cfg)
    assert trace.converged
    assert trace.iterations_used <= cfg.t_max
    assert trace.iterates[-1][1] <= cfg.epsilon
    assert rs.kkt_residual(qf, stack, cfg) <= 3 * cfg.epsilon


def test_gpi_restart_from_solution_stops_immediately(fig_config):
    cfg, qf, start = solve_setup(fig_config, epsilon=1e-7, t_max=500)
    stack, trace = rs.gpi_solve(qf, start, cfg)
    assert trace.converged
    again, trace2 = rs.gpi_solve(qf, stack, cfg)
    assert trace2.converged
    assert trace2.iterations_used == 1


def test_gpi_phase_invariance(fig_config):
    cfg, qf, start = solve_setup(fig_config)
    _, trace_a = rs.gpi_solve(qf, start, cfg)
    rotated = rs.PrecoderStack(np.exp(1j * 1.23) * start.entries, 4)
    _, trace_b = rs.gpi_solve(qf, rotated, cfg)
    objs_a = [row[2] for row in trace_a.iterates]
    objs_b = [row[2] for row in trace_b.iterates]
    assert np.allclose(objs_a, objs_b, atol=1e-9)


def test_gpi_exhaustion_returns_best_iterate(fig_config):
    cfg, qf, start = solve_setup(fig_config, epsilon=1e-15, t_max=3)
    stack, trace = rs.gpi_solve(qf, start, cfg)
    assert not trace.converged
    assert trace.iterations_used == 3
    best = max(row[2] for row in trace.iterates)
    assert abs(rs.smoothed_objective(qf, stack, cfg) - best) < 1e-12


def test_gpi_breaks_periodic_orbits(fig_config):
    # this draw two-cycles under the plain iteration map at tight tolerance;
    # the damped steps must still reach a genuine fixed point
    cfg = rs.SystemConfig(n_antennas=4, n_secret=2, n_normal=2, n_eves=2,
                          epsilon=1e-4, t_max=500).with_snr_db(20.0)
    rng = np.random.default_rng(1001)
    layout = rs.ScenarioLayout(user_center=float(rng.uniform(0, 2 * np.pi)))
    real = rs.draw_scenario(cfg, layout, rng)
    qf = rs.build_quadforms_perfect(real, cfg)
    stack, trace = rs.gpi_solve(qf, rs.mrt_init(real.user_channels, rng), cfg)
    assert trace.converged
    assert rs.kkt_residual(qf, stack, cfg) <= 1e-3


def test_gpi_improves_on_initializer(fig_config):
    cfg, qf, start = solve_setup(fig_config)
    stack, trace = rs.gpi_solve(qf, start, cfg)
    assert trace.iterates[-1][2] >= trace.iterates[0][2]


def test_gpi_rejects_bad_starts(fig_config, scenario):
    qf = rs.build_quadforms_perfect(scenario, fig_config)
    with pytest.raises(ValueError):
        rs.gpi_solve_vector(qf, np.zeros(20, dtype=complex), fig_config)
    with pytest.raises(ValueError):
        rs.gpi_solve_vector(qf, np.ones(8, dtype=complex), fig_config)


def test_gpi_requires_common_block(fig_config, scenario):
    qf = rs.build_quadforms_perfect(scenario, fig_config, common_stream=False)
    with pytest.raises(ValueError):
        rs.gpi_solve(qf, rs.PrecoderStack(np.ones(20, dtype=complex), 4), fig_config)


def test_lambda_recorded_every_iteration(fig_config):
    cfg, qf, start = solve_setup(fig_config)
    _, trace = rs.gpi_solve(qf, start, cfg)
    assert all(len(row) == 4 for row in trace.iterates)
    # lambda can be any sign but must be recorded as a float
    assert all(isinstance(row[3], float) for row in trace.iterates)
