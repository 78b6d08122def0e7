import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from platoon_mrac.config import load_preset
from platoon_mrac.graph import GraphTopology
from platoon_mrac.matching import solve_lyapunov, ultimate_bound
from platoon_mrac.plants import AgentPlant, UncertaintySpec, platoon_plants, platoon_reference
from platoon_mrac.simulation import (CompiledSystem, ControllerSettings, DivergenceError,
                                     IntegrationSettings, ScenarioConfig, StateLayout,
                                     assemble_augmented_state, ideal_gains, initial_state,
                                     lyapunov_diagnostic, reference_derivative_python, run, step,
                                     sync_metrics, with_overrides)


def _expm(M, terms=40):
    out, term = np.eye(M.shape[0]), np.eye(M.shape[0])
    for k in range(1, terms):
        term = term @ M / k
        out = out + term
    return out


def _short(cfg, t_end=2.0, **ctrl):
    return with_overrides(cfg, integration={"t_end": t_end}, controller=ctrl)


def test_layout_single_follower():
    layout = StateLayout.build(GraphTopology.chain(1), 2, 1)
    assert layout.size == 2 + 2 + (2 + 1) + (2 + 3 * 1 + (1 + 1))
    names = layout.index_map()
    assert names["x0"] == (0, 2) and names["x1"] == (2, 4)
    spans = sorted(names.values())
    assert spans[0][0] == 0 and spans[-1][1] == layout.size
    assert all(a[1] == b[0] for a, b in zip(spans, spans[1:]))


def test_layout_chain_preset_size():
    cfg = load_preset("fig2")
    n, m, N = cfg.n, cfg.controller.m, cfg.n_agents
    per_agent = (n + 1) + n + (n + 1) * m + (m + 1)
    assert assemble_augmented_state(cfg).size == n * (N + 1) + N * per_agent


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31))
def test_layout_round_trip(seed):
    layout = assemble_augmented_state(load_preset("fig2"))
    z = np.random.default_rng(seed).normal(size=layout.size)
    np.testing.assert_array_equal(layout.pack(layout.unpack(z)), z)


@pytest.mark.parametrize("mode,kmij", [("communicated", "neighbor"), ("estimated", "neighbor"),
                                       ("communicated", "own"), (("estimated", "communicated") * 3,
                                                                 "neighbor")])
def test_compiled_matches_python_reference(mode, kmij):
    cfg = with_overrides(load_preset("fig2"), controller={"mode": mode, "kmij_state": kmij,
                                                          "sign_kr": (1, -1, 1, 1, -1, 1)})
    system = CompiledSystem(cfg)
    rng = np.random.default_rng(7)
    for _ in range(3):
        z = rng.normal(size=system.layout.size)
        dz, u = system.derivative(0.3, z)
        dz_ref, u_ref = reference_derivative_python(cfg, 0.3, z)
        np.testing.assert_allclose(u, u_ref, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(dz, dz_ref, rtol=1e-11, atol=1e-11)


def _reference_only(r=0.0):
    return ScenarioConfig(GraphTopology(0, np.zeros((0, 1))), platoon_reference(r), [],
                          integration=IntegrationSettings(dt=0.01, t_end=1.0))


def test_rk4_step_on_linear_reference():
    cfg = _reference_only()
    system = CompiledSystem(cfg)
    A0, x0 = cfg.reference.A0, cfg.reference.x0
    errs = []
    for dt in (0.1, 0.05):
        z1 = step(system, x0, 0.0, dt, "rk4")
        errs.append(np.abs(z1 - _expm(A0 * dt) @ x0).max())
    assert errs[0] < 1e-5
    assert 20 < errs[0] / errs[1] < 45  # local error O(dt^5)


def test_euler_and_rk4_agree_to_first_order():
    cfg = _short(load_preset("single-agent-prop1"), 0.05)
    system = CompiledSystem(cfg)
    z0 = initial_state(cfg)
    gaps = []
    for dt in (1e-4, 5e-5):
        n = int(round(0.05 / dt))
        a = system.integrate(z0, 0.0, dt, n, n, "rk4")[1][-1]
        b = system.integrate(z0, 0.0, dt, n, n, "euler")[1][-1]
        gaps.append(np.abs(a - b).max())
    assert 1.6 < gaps[0] / gaps[1] < 2.5


def test_step_rejects_nonfinite():
    system = CompiledSystem(_reference_only())
    with pytest.raises(DivergenceError):
        step(system, np.array([np.nan, 0.0]), 0.0, 0.01)


def test_run_divergence_carries_partial_trace():
    cfg = with_overrides(load_preset("fig2"), integration={"dt": 0.05, "t_end": 5.0})
    with pytest.raises(DivergenceError) as exc:
        run(cfg)
    assert exc.value.trace is not None
    assert 0 < exc.value.t <= 5.0
    assert np.all(np.isfinite(exc.value.trace.z))


def test_run_is_deterministic():
    cfg = _short(load_preset("fig3"))
    a, b = run(cfg), run(cfg)
    np.testing.assert_array_equal(a.z, b.z)
    np.testing.assert_array_equal(a.u, b.u)


def test_trace_shapes_and_stride():
    cfg = _short(load_preset("fig2"), 1.0)
    tr = run(cfg)
    assert len(tr) == 1000 // 10 + 1
    assert tr.x.shape == (len(tr), 6, 2) and tr.u.shape == (len(tr), 6)
    assert tr.t[1] == pytest.approx(0.01)
    assert set(tr.pair_errors()) == {(1, 0), (2, 1), (3, 2), (4, 3), (5, 4), (6, 5)}


def test_seed_changes_only_nn_initialisation():
    cfg = load_preset("fig2")
    a = initial_state(cfg)
    b = initial_state(with_overrides(cfg, controller={"seed": 1}))
    layout = assemble_augmented_state(cfg)
    pa, pb = layout.unpack(a), layout.unpack(b)
    np.testing.assert_array_equal(pa["agents"][0]["x"], pb["agents"][0]["x"])
    assert not np.array_equal(pa["agents"][0]["theta"], pb["agents"][0]["theta"])
    assert np.abs(a[layout.agents[0].theta]).max() <= 0.3


def test_lyapunov_zero_at_ideal_point():
    cfg = load_preset("homogeneous-sanity")
    tr = run(_short(cfg, 1.0))
    V = lyapunov_diagnostic(tr, tr.config, ideal_gains(tr.config),
                            theta_star={1: np.zeros(7), 2: np.zeros(7)})
    assert np.abs(V).max() < 1e-20


def test_lyapunov_requires_oracle():
    tr = run(_short(load_preset("single-agent-prop1"), 0.1))
    with pytest.raises(ValueError, match="missing-oracle"):
        lyapunov_diagnostic(tr, tr.config, None)


def test_lyapunov_nonnegative_random_samples():
    cfg = _short(load_preset("fig3"), 0.2)
    tr = run(cfg)
    rng = np.random.default_rng(0)
    z = rng.normal(scale=3.0, size=(1000, tr.z.shape[1]))
    u = rng.normal(size=(1000, 6))
    fake = type(tr)(tr.config, tr.layout, np.arange(1000.0), z, u)
    assert lyapunov_diagnostic(fake, cfg, ideal_gains(cfg)).min() >= 0


def test_sync_metrics_identical_trajectories():
    tr = run(_short(load_preset("homogeneous-sanity"), 0.5))
    m = sync_metrics(tr)
    np.testing.assert_array_equal(m.final_error, 0.0)
    np.testing.assert_array_equal(m.peak_error, 0.0)
    np.testing.assert_array_equal(m.time_to_tolerance, 0.0)


def test_sync_metrics_estimator_error_recorded():
    tr = run(_short(load_preset("fig3"), 0.5))
    m = sync_metrics(tr)
    assert set(m.estimator_error) == {(2, 1), (3, 2), (4, 3), (5, 4), (6, 5)}
    assert m.estimator_error[(2, 1)].shape == (len(tr),)


def test_fig2_time_to_tolerance_finite_and_bound_envelope():
    tr = run(load_preset("fig2"))
    m = sync_metrics(tr)
    assert np.all(np.isfinite(m.time_to_tolerance))
    cfg = tr.config
    cert = solve_lyapunov(cfg.reference.A0, cfg.Q)
    bound = max(ultimate_bound(cert, p.b, cfg.diagnostics.eps0) for p in cfg.plants)
    tail = tr.t >= 0.9 * tr.t[-1]
    total = sum(e for e in tr.pair_errors().values())
    assert total[tail].mean() <= 10 * bound


def test_mode_equivalence_first_step():
    ref = platoon_reference()
    plant = AgentPlant(platoon_plants()[0].A, platoon_plants()[0].b, UncertaintySpec(),
                       [0.5, 0.5])
    base = ScenarioConfig(GraphTopology.chain(3), ref, [plant] * 3,
                          ControllerSettings(nn_init="zero"))
    est = with_overrides(base, controller={"mode": "estimated"})
    layout = assemble_augmented_state(base)
    xs = np.r_[tuple(np.arange(a.x.start, a.x.stop) for a in layout.agents)]
    gaps = []
    for dt in (1e-3, 5e-4):
        za = step(CompiledSystem(base), initial_state(base), 0.0, dt)
        zb = step(CompiledSystem(est), initial_state(est), 0.0, dt)
        gaps.append(np.abs(za[xs] - zb[xs]).max())
    # u_hat(0) = k_r(0) u_j(0) = 0, so the states separate at higher than first order
    assert gaps[0] < 1e-3
    assert gaps[1] < gaps[0] / 4


def test_invalid_config_lists_every_problem():
    cfg = load_preset("fig2")
    bad = with_overrides(cfg, controller={"Q": ((-1.0, 0.0), (0.0, 1.0)), "gamma": -1.0},
                         integration={"dt": -0.1})
    problems = bad.problems()
    assert "Q not positive definite" in problems
    assert "gamma must be positive" in problems
    assert "dt must be positive" in problems
    with pytest.raises(ValueError):
        CompiledSystem(bad)
