"""Ideal matching gains, the Lyapunov design equation and the error bound.

These are simulator-side ground truth.  The adaptive controllers never call
into this module; the Lyapunov diagnostic and the tests do.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .plants import AgentPlant, ReferenceModel

INFEASIBLE_TOL = 1e-8


class InfeasibleMatching(ValueError):
    def __init__(self, residual: float):
        super().__init__(f"infeasible-matching: residual {residual:.3e}")
        self.residual = residual


class NotHurwitz(ValueError):
    pass


@dataclass(frozen=True)
class MatchingGains:
    k_m_star: np.ndarray
    k_r_star: float
    residual: float = 0.0


@dataclass(frozen=True)
class LyapunovCertificate:
    P: np.ndarray
    Q: np.ndarray
    A0: np.ndarray

    @property
    def residual(self) -> float:
        return float(np.abs(self.P @ self.A0 + self.A0.T @ self.P + self.Q).max())


def _match(A_target, b_target, A_src, b_src) -> MatchingGains:
    # Solve b_src k^T = A_target - A_src and b_src k_r = b_target on the rows where b_src != 0.
    A_target = np.asarray(A_target, float)
    A_src = np.asarray(A_src, float)
    b_target = np.asarray(b_target, float)
    b_src = np.asarray(b_src, float)
    rows = np.flatnonzero(b_src)
    if rows.size == 0:
        raise ValueError("precondition: input vector must be nonzero")
    bs = b_src[rows]
    denom = bs @ bs
    k_m = bs @ (A_target - A_src)[rows] / denom
    k_r = float(bs @ b_target[rows] / denom)
    residual = max(
        float(np.abs(A_src + np.outer(b_src, k_m) - A_target).max()),
        float(np.abs(b_src * k_r - b_target).max()),
    )
    if residual > INFEASIBLE_TOL:
        raise InfeasibleMatching(residual)
    return MatchingGains(k_m, k_r, residual)


def feedback_matching(ref: ReferenceModel, plant: AgentPlant) -> MatchingGains:
    """Gains with ``A0 = A + b k_m^T`` and ``b0 = b k_r``."""
    return _match(ref.A0, ref.b0, plant.A, plant.b)


def coupling_matching(plant_i: AgentPlant, plant_j: AgentPlant) -> MatchingGains:
    """Gains with ``A_i = A_j + b_j k_m^T`` and ``b_i = b_j k_r``.

    For follower ``j`` tracking neighbour ``i`` these are the ideal
    coupling gains on the edge ``i -> j``.
    """
    return _match(plant_i.A, plant_i.b, plant_j.A, plant_j.b)


def solve_lyapunov(A0, Q) -> LyapunovCertificate:
    """Unique symmetric ``P`` with ``P A0 + A0^T P = -Q`` via a Kronecker solve."""
    A0 = np.asarray(A0, float)
    Q = np.asarray(Q, float)
    n = A0.shape[0]
    if Q.shape != (n, n):
        raise ValueError(f"Q must be {n}x{n}")
    if not np.all(np.linalg.eigvals(A0).real < 0):
        raise NotHurwitz("not-hurwitz: A0 has an eigenvalue with nonnegative real part")
    Q = 0.5 * (Q + Q.T)
    if np.linalg.eigvalsh(Q).min() <= 0:
        raise ValueError("Q not positive definite")
    eye = np.eye(n)
    # vec(P A0 + A0^T P) = (A0^T kron I + I kron A0^T) vec(P), column-major vec
    K = np.kron(A0.T, eye) + np.kron(eye, A0.T)
    try:
        vecP = np.linalg.solve(K, -Q.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise ValueError("solver-singular") from exc
    P = vecP.reshape(n, n, order="F")
    P = 0.5 * (P + P.T)
    return LyapunovCertificate(P, Q, A0)


def ultimate_bound(cert: LyapunovCertificate, b, eps0: float) -> float:
    """Radius ``2 |P b| eps0 / lambda_min(Q)`` of the ball the error settles into."""
    if eps0 < 0:
        raise ValueError("eps0 must be nonnegative")
    Pb = cert.P @ np.asarray(b, float)
    return float(2.0 * np.linalg.norm(Pb) * eps0 / np.linalg.eigvalsh(cert.Q).min())
