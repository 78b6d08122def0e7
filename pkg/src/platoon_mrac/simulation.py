"""Scenario description, augmented-state layout, integration and diagnostics."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from . import _kernel
from .controller import (KMIJ_STATES, MODES, FollowerControllerState, NeuralApprox,
                         aggregate_error, follower_adaptive_rates,
                         follower_control_communicated, follower_control_estimated,
                         nn_adaptive_rates)
from .graph import GraphTopology, alpha, evaluation_order, in_neighbors, validate
from .matching import coupling_matching, feedback_matching, solve_lyapunov
from .plants import AgentPlant, ReferenceModel, agent_derivative, reference_derivative

log = logging.getLogger(__name__)

MAX_STATE_NORM = 1e6
METHODS = ("rk4", "euler")


class DivergenceError(RuntimeError):
    """Raised when the integration produces a non-finite or runaway state."""

    def __init__(self, t: float, reason: str, trace: "SimulationTrace | None" = None):
        super().__init__(f"divergence at t={t:.6g}: {reason}")
        self.t = t
        self.reason = reason
        self.trace = trace


@dataclass(frozen=True)
class ControllerSettings:
    gamma: float = 10.0
    # adaptation gain of the follower-edge coupling gains k_rij; None means gamma
    gamma_r: float | None = None
    Q: tuple = ((100.0, 0.0), (0.0, 1.0))
    m: int = 6
    slope: float = 1.0
    seed: int = 0
    init_scale: float = 0.3
    # one entry for all agents, or one per agent
    mode: str | tuple = "communicated"
    sign_kr: int | tuple = 1
    kmij_state: str = "neighbor"
    V: tuple | None = None
    adapt_nn: bool = True
    adapt_gains: bool = True
    nn_init: str = "random"  # random | zero
    gain_init: str = "zero"  # zero | ideal

    @property
    def coupling_gain(self) -> float:
        return self.gamma if self.gamma_r is None else self.gamma_r

    def modes(self, n_agents: int) -> tuple:
        return _per_agent(self.mode, n_agents, "mode")

    def signs(self, n_agents: int) -> tuple:
        return _per_agent(self.sign_kr, n_agents, "sign_kr")


def _per_agent(value, n_agents, name):
    if isinstance(value, (str, int, float)):
        return (value,) * n_agents
    value = tuple(value)
    if len(value) != n_agents:
        raise ValueError(f"{name} needs {n_agents} entries, got {len(value)}")
    return value


@dataclass(frozen=True)
class IntegrationSettings:
    dt: float = 0.001
    t_end: float = 40.0
    method: str = "rk4"


@dataclass(frozen=True)
class DiagnosticSettings:
    eps0: float = 0.05
    record_stride: int = 10
    tolerance: float = 0.1
    # divergence guard on any node's state norm
    max_state_norm: float = MAX_STATE_NORM


@dataclass(frozen=True)
class ScenarioConfig:
    topology: GraphTopology
    reference: ReferenceModel
    plants: tuple
    controller: ControllerSettings = field(default_factory=ControllerSettings)
    integration: IntegrationSettings = field(default_factory=IntegrationSettings)
    diagnostics: DiagnosticSettings = field(default_factory=DiagnosticSettings)
    name: str = "scenario"

    def __post_init__(self):
        object.__setattr__(self, "plants", tuple(self.plants))

    @property
    def n_agents(self) -> int:
        return len(self.plants)

    @property
    def n(self) -> int:
        return self.reference.n

    @property
    def Q(self) -> np.ndarray:
        return np.array(self.controller.Q, dtype=float)

    def problems(self) -> list[str]:
        """Every violated invariant, as human-readable strings."""
        out = []
        if self.topology.n_agents != self.n_agents:
            out.append(f"graph has {self.topology.n_agents} followers but {self.n_agents} agents are declared")
        else:
            try:
                validate(self.topology)
            except ValueError as exc:
                out.append(f"graph invalid ({getattr(exc, 'kind', 'error')}): {exc}")
        if not self.reference.is_hurwitz():
            out.append("reference model A0 is not Hurwitz")
        Q = self.Q
        if Q.shape != (self.n, self.n):
            out.append(f"Q must be {self.n}x{self.n}")
        elif not np.allclose(Q, Q.T) or np.linalg.eigvalsh(0.5 * (Q + Q.T)).min() <= 0:
            out.append("Q not positive definite")
        for k, plant in enumerate(self.plants, start=1):
            if plant.n != self.n:
                out.append(f"agent {k} has state dimension {plant.n}, reference has {self.n}")
        c = self.controller
        if c.gamma <= 0:
            out.append("gamma must be positive")
        if c.gamma_r is not None and c.gamma_r <= 0:
            out.append("gamma_r must be positive")
        if c.m < 1:
            out.append("hidden width m must be >= 1")
        if c.slope <= 0:
            out.append("sigmoid slope must be positive")
        try:
            bad = [md for md in c.modes(self.n_agents) if md not in MODES]
            if bad:
                out.append(f"unknown mode(s) {bad}")
            bad = [sg for sg in c.signs(self.n_agents) if sg not in (1, -1)]
            if bad:
                out.append("sign_kr entries must be +1 or -1")
        except ValueError as exc:
            out.append(str(exc))
        if c.kmij_state not in KMIJ_STATES:
            out.append(f"kmij_state must be one of {KMIJ_STATES}")
        if c.V is not None and len(c.V) != c.m:
            out.append(f"V must have {c.m} entries")
        if c.nn_init not in ("random", "zero"):
            out.append("nn_init must be 'random' or 'zero'")
        if c.gain_init not in ("zero", "ideal"):
            out.append("gain_init must be 'zero' or 'ideal'")
        ig = self.integration
        if ig.dt <= 0:
            out.append("dt must be positive")
        if ig.t_end <= ig.dt:
            out.append("t_end must exceed dt")
        if ig.method not in METHODS:
            out.append(f"method must be one of {METHODS}")
        if self.diagnostics.record_stride < 1:
            out.append("record_stride must be >= 1")
        if not self.diagnostics.max_state_norm > 0:
            out.append("max_state_norm must be positive")
        if self.diagnostics.eps0 < 0:
            out.append("eps0 must be nonnegative")
        return out

    def check(self) -> "ScenarioConfig":
        problems = self.problems()
        if problems:
            raise ValueError("; ".join(problems))
        return self


# -------------------------------------------------------------------- layout

@dataclass(frozen=True)
class AgentSlots:
    x: slice
    edges: dict  # neighbour id -> (k_m slice, coupling index)
    k_mi: slice
    W: slice
    theta: slice


@dataclass(frozen=True)
class StateLayout:
    """Index map of the flat augmented state.

    Order: reference state, follower states 1..N, then per follower (in id
    order) the gain block of each in-neighbour edge (``k_m`` then the
    coupling scalar), ``k_mi``, ``W`` (row-major) and ``theta``.
    """

    n: int
    m: int
    x0: slice
    agents: tuple
    size: int

    @classmethod
    def build(cls, topology: GraphTopology, n: int, m: int) -> "StateLayout":
        N = topology.n_agents
        off = n * (N + 1)
        agents = []
        for i in range(1, N + 1):
            edges = {}
            for j in in_neighbors(topology, i):
                edges[j] = (slice(off, off + n), off + n)
                off += n + 1
            k_mi = slice(off, off + n)
            off += n
            W = slice(off, off + (n + 1) * m)
            off += (n + 1) * m
            theta = slice(off, off + m + 1)
            off += m + 1
            agents.append(AgentSlots(slice(n * i, n * (i + 1)), edges, k_mi, W, theta))
        return cls(n, m, slice(0, n), tuple(agents), off)

    def index_map(self) -> dict:
        """Flat index ranges keyed by human-readable names."""
        out = {"x0": (self.x0.start, self.x0.stop)}
        for i, a in enumerate(self.agents, start=1):
            out[f"x{i}"] = (a.x.start, a.x.stop)
            for j, (km, c) in a.edges.items():
                out[f"k_m[{i},{j}]"] = (km.start, km.stop)
                out[f"k_c[{i},{j}]"] = (c, c + 1)
            out[f"k_mi[{i}]"] = (a.k_mi.start, a.k_mi.stop)
            out[f"W[{i}]"] = (a.W.start, a.W.stop)
            out[f"theta[{i}]"] = (a.theta.start, a.theta.stop)
        return out

    def unpack(self, z) -> dict:
        z = np.asarray(z, float)
        out = {"x0": z[self.x0].copy(), "agents": []}
        for a in self.agents:
            out["agents"].append({
                "x": z[a.x].copy(),
                "k_m": {j: z[km].copy() for j, (km, _) in a.edges.items()},
                "coupling": {j: float(z[c]) for j, (_, c) in a.edges.items()},
                "k_mi": z[a.k_mi].copy(),
                "W": z[a.W].reshape(self.n + 1, self.m).copy(),
                "theta": z[a.theta].copy(),
            })
        return out

    def pack(self, parts: dict) -> np.ndarray:
        z = np.zeros(self.size)
        z[self.x0] = parts["x0"]
        for a, p in zip(self.agents, parts["agents"]):
            z[a.x] = p["x"]
            for j, (km, c) in a.edges.items():
                z[km] = p["k_m"][j]
                z[c] = p["coupling"][j]
            z[a.k_mi] = p["k_mi"]
            z[a.W] = np.asarray(p["W"]).reshape(-1)
            z[a.theta] = p["theta"]
        return z


def assemble_augmented_state(config: ScenarioConfig) -> StateLayout:
    return StateLayout.build(config.topology, config.n, config.controller.m)


def ideal_gains(config: ScenarioConfig) -> dict:
    """Matching-oracle gains per follower, as used by the Lyapunov diagnostic.

    Returns ``{i: {"k_m": {j: ...}, "coupling": {j: ...}, "k_mi": ..., "k_r": ...}}``
    where ``k_r`` is the feedback input gain of agent ``i``.  For follower
    edges the coupling gain is ``k_rij``; input estimates compare against
    ``k_rij * u_j`` instead.
    """
    out = {}
    for i, plant in enumerate(config.plants, start=1):
        fb = feedback_matching(config.reference, plant)
        entry = {"k_m": {}, "coupling": {}, "k_r": fb.k_r_star}
        own = config.controller.kmij_state == "own"
        for j in in_neighbors(config.topology, i):
            if j == 0:
                entry["k_m"][0] = fb.k_m_star
                entry["coupling"][0] = fb.k_r_star
            else:
                cp = coupling_matching(config.plants[j - 1], plant)
                entry["k_m"][j] = cp.k_m_star
                entry["coupling"][j] = cp.k_r_star
        k_mi = fb.k_m_star
        if own:
            # consensus gain absorbs A_j; exact only when follower neighbours share A_j
            fol = [j for j in in_neighbors(config.topology, i) if j != 0]
            if fol:
                k_mi = fb.k_m_star - np.mean([entry["k_m"][j] for j in fol], axis=0)
        entry["k_mi"] = k_mi
        out[i] = entry
    return out


def initial_state(config: ScenarioConfig, layout: StateLayout | None = None) -> np.ndarray:
    layout = layout or assemble_augmented_state(config)
    c = config.controller
    rng = np.random.default_rng(c.seed)
    n, m = config.n, c.m
    ideal = ideal_gains(config) if c.gain_init == "ideal" else None
    parts = {"x0": config.reference.x0, "agents": []}
    for i, (plant, slots) in enumerate(zip(config.plants, layout.agents), start=1):
        if c.nn_init == "random":
            theta = rng.uniform(-c.init_scale, c.init_scale, m + 1)
            W = rng.uniform(-c.init_scale, c.init_scale, (n + 1, m))
        else:
            theta, W = np.zeros(m + 1), np.zeros((n + 1, m))
        if ideal is None:
            k_m = {j: np.zeros(n) for j in slots.edges}
            coupling = dict.fromkeys(slots.edges, 0.0)
            k_mi = np.zeros(n)
        else:
            k_m = dict(ideal[i]["k_m"])
            coupling = dict(ideal[i]["coupling"])
            k_mi = ideal[i]["k_mi"]
        parts["agents"].append({"x": plant.x0, "k_m": k_m, "coupling": coupling,
                                "k_mi": k_mi, "W": W, "theta": theta})
    return layout.pack(parts)


# ------------------------------------------------------------ compiled system

class CompiledSystem:
    """Flat arrays describing one scenario, ready for the kernel."""

    def __init__(self, config: ScenarioConfig):
        config.check()
        self.config = config
        self.layout = assemble_augmented_state(config)
        topo, c = config.topology, config.controller
        N, n, m = config.n_agents, config.n, c.m
        self.cert = solve_lyapunov(config.reference.A0, config.Q)
        self.order = np.array(evaluation_order(topo), dtype=np.int64)
        ptr, idx, eoff = [0], [], []
        for i, slots in enumerate(self.layout.agents, start=1):
            for j in in_neighbors(topo, i):
                idx.append(j)
                eoff.append(slots.edges[j][0].start)
            ptr.append(len(idx))
        kinds = {"none": 0, "sinusoidal": 1}
        V = np.ones(m) if c.V is None else np.asarray(c.V, float)
        self.args = (
            np.array([n, N, m], dtype=np.int64),
            np.array([p.A for p in config.plants], dtype=float).reshape(N, n, n),
            np.array([p.b for p in config.plants], dtype=float).reshape(N, n),
            np.array([kinds[p.uncertainty.kind] for p in config.plants], dtype=np.int64),
            np.array([[p.uncertainty.c1, p.uncertainty.c2] for p in config.plants],
                     dtype=float).reshape(N, 2),
            np.array(config.reference.A0, dtype=float),
            np.array(config.reference.b0, dtype=float),
            np.array(config.reference.r_breaks, dtype=float),
            np.array(config.reference.r_levels, dtype=float),
            np.array(self.cert.P, dtype=float),
            self.order,
            np.array(ptr, dtype=np.int64),
            np.array(idx, dtype=np.int64),
            np.array(eoff, dtype=np.int64),
            np.array([s.k_mi.start for s in self.layout.agents], dtype=np.int64),
            np.array([s.W.start for s in self.layout.agents], dtype=np.int64),
            np.array([s.theta.start for s in self.layout.agents], dtype=np.int64),
            np.array([alpha(topo, i) for i in range(1, N + 1)], dtype=float),
            np.array([md == "estimated" for md in c.modes(N)], dtype=np.bool_),
            np.array(c.signs(N), dtype=float),
            np.tile(V, (N, 1)),
            float(c.gamma),
            float(c.coupling_gain / c.gamma),
            float(c.slope),
            c.kmij_state == "own",
            bool(c.adapt_nn),
            bool(c.adapt_gains),
        )

    def derivative(self, t: float, z) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(dz/dt, u)`` at ``(t, z)``."""
        z = np.ascontiguousarray(z, dtype=float)
        dz = np.empty_like(z)
        u = np.zeros(self.config.n_agents)
        _kernel.derivative(float(t), z, dz, u, self.args)
        return dz, u

    def integrate(self, z0, t0: float, dt: float, n_steps: int, stride: int, method: str = "rk4"):
        return _kernel.integrate(np.ascontiguousarray(z0, dtype=float), float(t0), float(dt),
                                 int(n_steps), int(stride), METHODS.index(method),
                                 float(self.config.diagnostics.max_state_norm), self.args)


def reference_derivative_python(config: ScenarioConfig, t: float, z) -> tuple[np.ndarray, np.ndarray]:
    """Slow, readable right-hand side built from the controller functions."""
    layout = assemble_augmented_state(config)
    cert = solve_lyapunov(config.reference.A0, config.Q)
    P, b0 = cert.P, config.reference.b0
    c = config.controller
    N = config.n_agents
    modes, signs = c.modes(N), c.signs(N)
    V = np.ones(c.m) if c.V is None else np.asarray(c.V, float)
    parts = layout.unpack(z)
    r = config.reference.r(t)
    states = {0: parts["x0"]}
    for i, p in enumerate(parts["agents"], start=1):
        states[i] = p["x"]
    dz = np.zeros(layout.size)
    dz[layout.x0] = reference_derivative(config.reference, parts["x0"], t)
    controls = {}
    for i in evaluation_order(config.topology):
        p, slots, plant = parts["agents"][i - 1], layout.agents[i - 1], config.plants[i - 1]
        nn = NeuralApprox(p["theta"], p["W"], V, c.slope)
        st = FollowerControllerState(p["k_m"], p["k_mi"], p["coupling"], nn, c.gamma,
                                     int(signs[i - 1]), modes[i - 1], c.kmij_state, c.gamma_r)
        if st.mode == "estimated":
            u = follower_control_estimated(st, config.topology, i, states, r=r)
        else:
            u = follower_control_communicated(st, config.topology, i, states, controls, r=r)
        controls[i] = u
        dz[slots.x] = agent_derivative(plant, states[i], u)
        if c.adapt_gains:
            k_dot, kmi_dot, c_dot = follower_adaptive_rates(st, config.topology, i, states,
                                                            controls, P, b0, r)
            for j, (km, ci) in slots.edges.items():
                dz[km] = k_dot[j]
                dz[ci] = c_dot[j]
            dz[slots.k_mi] = kmi_dot
        if c.adapt_nn:
            E = aggregate_error(config.topology, i, states)
            th_dot, W_dot = nn_adaptive_rates(nn, states[i], E, P, plant.b, c.gamma)
            dz[slots.theta] = th_dot
            dz[slots.W] = W_dot.reshape(-1)
    return dz, np.array([controls[i] for i in range(1, N + 1)])


def step(system: CompiledSystem, z, t: float, dt: float, method: str = "rk4") -> np.ndarray:
    """Advance the augmented state by one fixed step."""
    if not np.all(np.isfinite(z)):
        raise DivergenceError(t, "non-finite state before step")
    _, states, _, status, _ = system.integrate(z, t, dt, 1, 1, method)
    if status != _kernel.STATUS_OK:
        raise DivergenceError(t + dt, _STATUS_TEXT[status])
    return states[-1]


_STATUS_TEXT = {_kernel.STATUS_NONFINITE: "non-finite value",
                _kernel.STATUS_NORM: "state norm above the divergence guard"}


# --------------------------------------------------------------------- trace

@dataclass(frozen=True)
class SimulationTrace:
    config: ScenarioConfig = field(repr=False)
    layout: StateLayout = field(repr=False)
    t: np.ndarray
    z: np.ndarray = field(repr=False)  # (samples, layout.size)
    u: np.ndarray = field(repr=False)  # (samples, N)

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def x0(self) -> np.ndarray:
        return self.z[:, self.layout.x0]

    @cached_property
    def x(self) -> np.ndarray:
        """Follower states, shape ``(samples, N, n)``."""
        if not self.layout.agents:
            return np.zeros((len(self), 0, self.layout.n))
        return np.stack([self.z[:, a.x] for a in self.layout.agents], axis=1)

    @cached_property
    def err_ref(self) -> np.ndarray:
        """``|x_i - x_0|`` per sample and follower, shape ``(samples, N)``."""
        return np.linalg.norm(self.x - self.x0[:, None, :], axis=2)

    def pair_errors(self) -> dict:
        """``|x_i - x_j|`` over time for every graph edge ``j -> i``."""
        out = {}
        for j, i in self.config.topology.edges():
            xj = self.x0 if j == 0 else self.x[:, j - 1]
            out[(i, j)] = np.linalg.norm(self.x[:, i - 1] - xj, axis=1)
        return out

    def gains(self, i: int) -> dict:
        slots = self.layout.agents[i - 1]
        return {
            "k_m": {j: self.z[:, km] for j, (km, _) in slots.edges.items()},
            "coupling": {j: self.z[:, c] for j, (_, c) in slots.edges.items()},
            "k_mi": self.z[:, slots.k_mi],
            "W": self.z[:, slots.W],
            "theta": self.z[:, slots.theta],
        }

    @cached_property
    def lyapunov(self) -> np.ndarray:
        """Empirical Lyapunov function at every recorded sample."""
        return lyapunov_diagnostic(self, self.config, ideal_gains(self.config))


def run(config: ScenarioConfig) -> SimulationTrace:
    """Integrate the scenario from 0 to ``t_end``.

    Raises :class:`DivergenceError` (carrying the partial trace) if a state
    becomes non-finite or exceeds the divergence guard.
    """
    system = CompiledSystem(config)
    ig, diag = config.integration, config.diagnostics
    n_steps = int(round(ig.t_end / ig.dt))
    z0 = initial_state(config, system.layout)
    t, z, u, status, fail = system.integrate(z0, 0.0, ig.dt, n_steps, diag.record_stride, ig.method)
    trace = SimulationTrace(config, system.layout, t, z, u)
    if status != _kernel.STATUS_OK:
        raise DivergenceError(fail * ig.dt, _STATUS_TEXT[status], trace)
    log.debug("%s: %d samples, final max err %.3g", config.name, len(trace),
              trace.err_ref[-1].max() if config.n_agents else 0.0)
    return trace


# --------------------------------------------------------------- diagnostics

def lyapunov_diagnostic(trace: SimulationTrace, config: ScenarioConfig, oracle: dict | None,
                        theta_star: dict | None = None) -> np.ndarray:
    """Empirical Lyapunov function along a trace.

    Sums, per follower, the ``P``-weighted aggregate error, the squared gain
    mismatches weighted by ``1 / (gamma |k_r*|)`` and ``|theta - theta*|^2 /
    gamma``.  ``theta*`` is unknown, so the final adapted weights stand in
    unless ``theta_star`` is given.  In estimated mode the coupling mismatch
    is ``u_hat_ji - k_rij* u_j``.
    """
    if oracle is None:
        raise ValueError("missing-oracle: ideal gains are required")
    P = solve_lyapunov(config.reference.A0, config.Q).P
    gamma = config.controller.gamma
    gamma_r = config.controller.coupling_gain
    modes = config.controller.modes(config.n_agents)
    states = {0: trace.x0}
    for i in range(1, config.n_agents + 1):
        states[i] = trace.x[:, i - 1]
    V = np.zeros(len(trace))
    for i in range(1, config.n_agents + 1):
        ideal = oracle[i]
        w = 1.0 / (gamma * abs(ideal["k_r"]))
        w_r = 1.0 / (gamma_r * abs(ideal["k_r"]))
        g = trace.gains(i)
        E = sum(states[i] - states[j] for j in in_neighbors(config.topology, i))
        V += np.einsum("ti,ij,tj->t", E, P, E)
        for j in g["k_m"]:
            V += w * np.sum((g["k_m"][j] - ideal["k_m"][j]) ** 2, axis=1)
            if j == 0:
                V += w * (g["coupling"][j] - ideal["coupling"][j]) ** 2
            elif modes[i - 1] == "estimated":
                V += w * (g["coupling"][j] - ideal["coupling"][j] * trace.u[:, j - 1]) ** 2
            else:
                V += w_r * (g["coupling"][j] - ideal["coupling"][j]) ** 2
        if any(j != 0 for j in g["k_m"]):
            V += w * np.sum((g["k_mi"] - ideal["k_mi"]) ** 2, axis=1)
        th_star = g["theta"][-1] if theta_star is None else theta_star[i]
        V += np.sum((g["theta"] - th_star) ** 2, axis=1) / gamma
    return V


@dataclass(frozen=True)
class SyncMetrics:
    final_error: np.ndarray
    peak_error: np.ndarray
    time_to_tolerance: np.ndarray
    estimator_error: dict  # (i, j) -> array over samples of u_hat_ji - u_j
    tolerance: float

    def as_rows(self) -> list[dict]:
        return [{"agent": i + 1, "final_error": float(self.final_error[i]),
                 "peak_error": float(self.peak_error[i]),
                 "time_to_tolerance": float(self.time_to_tolerance[i])}
                for i in range(self.final_error.shape[0])]


def sync_metrics(trace: SimulationTrace, tolerance: float | None = None) -> SyncMetrics:
    """Per-follower final/peak error, settling time and estimator error.

    ``time_to_tolerance`` is the first recorded time after which the error
    stays below ``tolerance``; ``inf`` if it never settles.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    tol = trace.config.diagnostics.tolerance if tolerance is None else tolerance
    err = trace.err_ref
    N = err.shape[1]
    ttt = np.full(N, np.inf)
    for i in range(N):
        above = np.flatnonzero(err[:, i] >= tol)
        if above.size == 0:
            ttt[i] = trace.t[0]
        elif above[-1] + 1 < len(trace):
            ttt[i] = trace.t[above[-1] + 1]
    est = {}
    modes = trace.config.controller.modes(N)
    for i in range(1, N + 1):
        if modes[i - 1] != "estimated":
            continue
        for j, col in trace.gains(i)["coupling"].items():
            if j != 0:
                est[(i, j)] = col - trace.u[:, j - 1]
    return SyncMetrics(err[-1].copy(), err.max(axis=0), ttt, est, tol)


def with_overrides(config: ScenarioConfig, **sections) -> ScenarioConfig:
    """Copy ``config`` replacing fields of its sub-settings.

    ``with_overrides(cfg, controller={"seed": 3}, integration={"dt": 1e-4})``
    """
    kw = {}
    for name, values in sections.items():
        if name in ("controller", "integration", "diagnostics"):
            kw[name] = replace(getattr(config, name), **values)
        else:
            kw[name] = values
    return replace(config, **kw)
