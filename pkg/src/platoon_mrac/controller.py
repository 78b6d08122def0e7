"""Distributed MRAC control laws and their adaptive update laws.

Every function here is pure: controller states are plain value objects and
the simulation engine owns their integration.  Sign conventions follow the
tracking error ``e = x_i - x_j`` (agent minus neighbour, or agent minus
reference for the leader edge); ``s = b0^T P E`` is the scalar projection of
the aggregate error ``E = sum_j a_ij (x_i - x_j)`` that drives every law.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .graph import GraphTopology, alpha, in_neighbors

MODES = ("communicated", "estimated")
KMIJ_STATES = ("neighbor", "own")


class MissingNeighborControl(KeyError):
    pass


@dataclass(frozen=True)
class NeuralApprox:
    theta: np.ndarray  # (m+1,)
    W: np.ndarray  # (n+1, m)
    V: np.ndarray  # (m,), fixed
    a: float = 1.0

    def __post_init__(self):
        theta = np.asarray(self.theta, float).reshape(-1)
        W = np.atleast_2d(np.asarray(self.W, float))
        V = np.asarray(self.V, float).reshape(-1)
        m = W.shape[1]
        if theta.shape != (m + 1,) or V.shape != (m,):
            raise ValueError(f"inconsistent NN shapes theta={theta.shape} W={W.shape} V={V.shape}")
        if self.a <= 0:
            raise ValueError("sigmoid slope must be positive")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "V", V)

    @property
    def m(self) -> int:
        return self.W.shape[1]

    @property
    def n(self) -> int:
        return self.W.shape[0] - 1

    @classmethod
    def zeros(cls, n: int, m: int, a: float = 1.0) -> "NeuralApprox":
        return cls(np.zeros(m + 1), np.zeros((n + 1, m)), np.ones(m), a)

    @classmethod
    def random(cls, n: int, m: int, rng: np.random.Generator, scale: float = 0.3,
               a: float = 1.0, V=None) -> "NeuralApprox":
        theta = rng.uniform(-scale, scale, m + 1)
        W = rng.uniform(-scale, scale, (n + 1, m))
        return cls(theta, W, np.ones(m) if V is None else V, a)


def _sigmoid(z, a):
    return 0.5 * (1.0 + np.tanh(0.5 * a * z))


def hidden_activations(nn: NeuralApprox, x) -> np.ndarray:
    xbar = np.concatenate(([1.0], np.asarray(x, float)))
    return _sigmoid(nn.W.T @ xbar, nn.a)


def sigmoid_basis(nn: NeuralApprox, x) -> np.ndarray:
    """``phi = [1, sigma(W^T [1; x])]`` with ``sigma(z) = 1 / (1 + exp(-a z))``."""
    x = np.asarray(x, float)
    if x.shape != (nn.n,):
        raise ValueError(f"state must have length {nn.n}")
    return np.concatenate(([1.0], hidden_activations(nn, x)))


def nn_output(nn: NeuralApprox, x) -> float:
    return float(nn.theta @ sigmoid_basis(nn, x))


@dataclass(frozen=True)
class LeaderControllerState:
    k_m: np.ndarray
    k_r: float
    nn: NeuralApprox
    gamma: float = 10.0
    sign_kr: int = 1

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        object.__setattr__(self, "k_m", np.asarray(self.k_m, float).reshape(-1))


@dataclass(frozen=True)
class FollowerControllerState:
    """Gains of one follower.

    ``k_mij`` and ``coupling`` are keyed by in-neighbour id.  A key ``0``
    stands for the reference edge, whose coupling scalar is always the
    reference gain ``k_r``.  For follower edges ``coupling`` holds
    ``k_rij`` in communicated mode and the input estimate ``u_hat_ji`` in
    estimated mode.
    """

    k_mij: dict
    k_mi: np.ndarray
    coupling: dict
    nn: NeuralApprox
    gamma: float = 10.0
    sign_kr: int = 1
    mode: str = "communicated"
    kmij_state: str = "neighbor"
    gamma_r: float | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.kmij_state not in KMIJ_STATES:
            raise ValueError(f"unknown kmij_state {self.kmij_state!r}")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if set(self.k_mij) != set(self.coupling):
            raise ValueError("k_mij and coupling must share neighbour keys")
        object.__setattr__(self, "k_mij", {int(j): np.asarray(v, float) for j, v in self.k_mij.items()})
        object.__setattr__(self, "coupling", {int(j): float(v) for j, v in self.coupling.items()})
        object.__setattr__(self, "k_mi", np.asarray(self.k_mi, float).reshape(-1))

    @property
    def u_hat(self) -> dict:
        return {j: c for j, c in self.coupling.items() if j != 0}

    @classmethod
    def zeros(cls, topology: GraphTopology, i: int, nn: NeuralApprox, **kw) -> "FollowerControllerState":
        n = nn.n
        nbrs = in_neighbors(topology, i)
        return cls({j: np.zeros(n) for j in nbrs}, np.zeros(n), dict.fromkeys(nbrs, 0.0), nn, **kw)

    def with_mode(self, mode: str) -> "FollowerControllerState":
        return replace(self, mode=mode)


# ---------------------------------------------------------------- leader edge

def leader_control(st: LeaderControllerState, x, r: float) -> float:
    x = np.asarray(x, float)
    return float(st.k_m @ x + st.k_r * r - nn_output(st.nn, x))


def leader_adaptive_rates(st: LeaderControllerState, x, x0, r: float, P, b0):
    """Return ``(k_m_dot, k_r_dot)`` for the reference-tracking gains."""
    x = np.asarray(x, float)
    s = float(np.asarray(b0) @ np.asarray(P) @ (x - np.asarray(x0, float)))
    g = st.sign_kr * st.gamma * s
    return -g * x, -g * r


def nn_adaptive_rates(nn: NeuralApprox, x, e_agg, P, b, gamma: float):
    """Return ``(theta_dot, W_dot)`` driven by ``s = e_agg^T P b``.

    ``W_dot`` uses the elementwise product ``V * sigma`` so that it has the
    shape of ``W``.  The sign makes ``theta^T phi`` cancel the disturbance
    given that the control subtracts it and ``e_agg`` is agent minus target.
    """
    x = np.asarray(x, float)
    s = float(np.asarray(e_agg, float) @ np.asarray(P) @ np.asarray(b, float))
    xbar = np.concatenate(([1.0], x))
    sig = hidden_activations(nn, x)
    phi = np.concatenate(([1.0], sig))
    theta_dot = gamma * s * phi
    W_dot = gamma * s * np.outer(xbar, nn.V * sig)
    return theta_dot, W_dot


# ------------------------------------------------------------- follower laws

def aggregate_error(topology: GraphTopology, i: int, states) -> np.ndarray:
    """``E_i = sum_j a_ij (x_i - x_j)``; ``states[0]`` is the reference state."""
    xi = np.asarray(states[i], float)
    return sum((xi - np.asarray(states[j], float) for j in in_neighbors(topology, i)),
               np.zeros_like(xi))


def follower_error(topology: GraphTopology, i: int, states) -> np.ndarray:
    """Part of the aggregate error coming from follower neighbours only."""
    xi = np.asarray(states[i], float)
    return sum((xi - np.asarray(states[j], float) for j in in_neighbors(topology, i) if j != 0),
               np.zeros_like(xi))


def _regressor(st, states, i, j):
    if j == 0 or st.kmij_state == "own":
        return np.asarray(states[i], float)
    return np.asarray(states[j], float)


def _follower_control(st, topology, i, states, coupling_terms, nn_term, r):
    xi = np.asarray(states[i], float)
    total = 0.0
    for j in in_neighbors(topology, i):
        total += st.k_mij[j] @ _regressor(st, states, i, j)
        total += st.coupling[j] * r if j == 0 else coupling_terms[j]
    total += st.k_mi @ follower_error(topology, i, states)
    if nn_term is None:
        nn_term = nn_output(st.nn, xi)
    return float(alpha(topology, i) * (total - nn_term))


def follower_control_communicated(st: FollowerControllerState, topology: GraphTopology, i: int,
                                  states, controls, nn_term: float | None = None,
                                  r: float = 0.0) -> float:
    """Control of follower ``i`` when neighbours transmit their inputs.

    ``states`` maps agent id (0 = reference) to state; ``controls`` maps
    follower ids to their already-computed inputs.  ``nn_term`` defaults to
    ``theta^T phi(x_i)``.
    """
    terms = {}
    for j in in_neighbors(topology, i):
        if j == 0:
            continue
        if j not in controls:
            raise MissingNeighborControl(f"control of agent {j} needed by agent {i}")
        terms[j] = st.coupling[j] * controls[j]
    return _follower_control(st, topology, i, states, terms, nn_term, r)


def follower_control_estimated(st: FollowerControllerState, topology: GraphTopology, i: int,
                               states, nn_term: float | None = None, r: float = 0.0) -> float:
    """Control of follower ``i`` using its own estimates of neighbour inputs."""
    terms = {j: st.coupling[j] for j in in_neighbors(topology, i) if j != 0}
    return _follower_control(st, topology, i, states, terms, nn_term, r)


def follower_adaptive_rates(st: FollowerControllerState, topology: GraphTopology, i: int,
                            states, controls, P, b0, r: float = 0.0):
    """Return ``(k_mij_dot, k_mi_dot, coupling_dot)``.

    ``k_mij_dot`` and ``coupling_dot`` are dicts keyed like the state.  The
    coupling gain of a follower edge is driven by the neighbour input
    ``u_j`` it multiplies; in estimated mode it is the input estimate and
    follows :func:`input_estimator_rate`.  The reference edge keeps the
    single-agent laws (regressors ``x_i`` and ``r``).
    """
    E = aggregate_error(topology, i, states)
    s = float(np.asarray(b0) @ np.asarray(P) @ E)
    g = st.sign_kr * st.gamma * s
    k_mij_dot, coupling_dot = {}, {}
    for j in in_neighbors(topology, i):
        k_mij_dot[j] = -g * _regressor(st, states, i, j)
        if j == 0:
            coupling_dot[j] = -g * r
        elif st.mode == "estimated":
            coupling_dot[j] = -g
        else:
            if j not in controls:
                raise MissingNeighborControl(f"control of agent {j} needed by agent {i}")
            gamma_r = st.gamma if st.gamma_r is None else st.gamma_r
            coupling_dot[j] = -g * (gamma_r / st.gamma) * controls[j]
    k_mi_dot = -g * follower_error(topology, i, states)
    return k_mij_dot, k_mi_dot, coupling_dot


def input_estimator_rate(st: FollowerControllerState, topology: GraphTopology, i: int,
                         states, P, b0) -> dict:
    """Rate of every input estimate ``u_hat_ji`` held by follower ``i``.

    All neighbours share the same scalar rate ``-sign * gamma * b0^T P E_i``.
    """
    E = aggregate_error(topology, i, states)
    rate = -st.sign_kr * st.gamma * float(np.asarray(b0) @ np.asarray(P) @ E)
    return {j: rate for j in in_neighbors(topology, i) if j != 0}
