"""Agent and reference-model dynamics.

Agents follow ``x' = A x + b (u + f(x))`` with a scalar input and a bounded,
Lipschitz input-channel disturbance ``f``.  The reference model is
``x0' = A0 x0 + b0 r(t)`` with a piecewise-constant reference ``r``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

UNCERTAINTY_KINDS = ("none", "sinusoidal")


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class UncertaintySpec:
    """``f(x) = c1 sin(x[0]) + c2 cos(x[1])`` when ``kind == "sinusoidal"``."""

    kind: str = "none"
    c1: float = 0.0
    c2: float = 0.0

    def __post_init__(self):
        if self.kind not in UNCERTAINTY_KINDS:
            raise ValueError(f"unknown uncertainty kind {self.kind!r}")

    def __call__(self, x) -> float:
        if self.kind == "none":
            return 0.0
        x = np.asarray(x, dtype=float)
        second = x[1] if x.shape[0] > 1 else 0.0
        return float(self.c1 * np.sin(x[0]) + self.c2 * np.cos(second))

    @property
    def bound(self) -> float:
        return 0.0 if self.kind == "none" else abs(self.c1) + abs(self.c2)

    @property
    def lipschitz(self) -> float:
        return 0.0 if self.kind == "none" else float(np.hypot(self.c1, self.c2))


def _vec(v, name: str) -> np.ndarray:
    arr = np.array(v, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


def _mat(m, name: str) -> np.ndarray:
    arr = np.array(m, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class AgentPlant:
    A: np.ndarray
    b: np.ndarray
    uncertainty: UncertaintySpec = field(default_factory=UncertaintySpec)
    x0: np.ndarray | None = None

    def __post_init__(self):
        A = _mat(self.A, "A")
        b = _vec(self.b, "b")
        n = A.shape[0]
        if b.shape != (n,):
            raise DimensionError(f"b must have length {n}, got {b.shape[0]}")
        if not np.any(b):
            raise ValueError("input vector b must be nonzero")
        x0 = np.zeros(n) if self.x0 is None else self.x0
        x0 = _vec(x0, "x0")
        if x0.shape != (n,):
            raise DimensionError(f"x0 must have length {n}, got {x0.shape[0]}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "x0", x0)

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class ReferenceModel:
    A0: np.ndarray
    b0: np.ndarray
    x0: np.ndarray | None = None
    # r(t) = levels[k] for breaks[k] <= t < breaks[k+1]; breaks[0] must be 0.
    r_breaks: tuple = (0.0,)
    r_levels: tuple = (1.0,)

    def __post_init__(self):
        A0 = _mat(self.A0, "A0")
        b0 = _vec(self.b0, "b0")
        n = A0.shape[0]
        if b0.shape != (n,):
            raise DimensionError(f"b0 must have length {n}, got {b0.shape[0]}")
        x0 = _vec(np.zeros(n) if self.x0 is None else self.x0, "x0")
        if x0.shape != (n,):
            raise DimensionError(f"x0 must have length {n}, got {x0.shape[0]}")
        breaks = tuple(float(t) for t in self.r_breaks)
        levels = tuple(float(v) for v in self.r_levels)
        if len(breaks) != len(levels) or not breaks or breaks[0] != 0.0:
            raise ValueError("reference signal needs matching breaks/levels with breaks[0] == 0")
        if any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])):
            raise ValueError("reference breakpoints must be strictly increasing")
        object.__setattr__(self, "A0", A0)
        object.__setattr__(self, "b0", b0)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "r_breaks", breaks)
        object.__setattr__(self, "r_levels", levels)

    @property
    def n(self) -> int:
        return self.A0.shape[0]

    def r(self, t: float) -> float:
        k = int(np.searchsorted(self.r_breaks, t, side="right")) - 1
        return self.r_levels[max(k, 0)]

    def is_hurwitz(self) -> bool:
        return bool(np.all(np.linalg.eigvals(self.A0).real < 0))


def _check_state(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (n,):
        raise DimensionError(f"state must have length {n}, got {x.shape[0]}")
    return x


def agent_derivative(plant: AgentPlant, x, u: float) -> np.ndarray:
    x = _check_state(x, plant.n)
    return plant.A @ x + plant.b * (float(u) + plant.uncertainty(x))


def reference_derivative(ref: ReferenceModel, x0, t: float) -> np.ndarray:
    x0 = _check_state(x0, ref.n)
    return ref.A0 @ x0 + ref.b0 * ref.r(t)


def vehicle_plant(a1: float, a2: float, b1: float, unc: UncertaintySpec | None = None,
                  x0=None) -> AgentPlant:
    """Second-order longitudinal model ``[[0, 1], [a1, a2]]`` with input ``[0, b1]``."""
    if b1 == 0:
        raise ValueError("zero-gain: b1 must be nonzero")
    A = np.array([[0.0, 1.0], [a1, a2]])
    b = np.array([0.0, b1])
    return AgentPlant(A, b, unc or UncertaintySpec(), x0)


def vehicle_reference(a1: float, a2: float, b1: float, x0=None,
                      r_breaks=(0.0,), r_levels=(1.0,)) -> ReferenceModel:
    return ReferenceModel(np.array([[0.0, 1.0], [a1, a2]]), np.array([0.0, b1]), x0,
                          tuple(r_breaks), tuple(r_levels))


# Platoon coefficients: (a1, a2, b1, x0). Row 0 is the reference model.
PLATOON = (
    (-0.25, -0.5, 1.0, (1.0, -1.0)),
    (-1.25, 1.0, 0.5, (1.0, 0.0)),
    (-0.5, 2.5, 0.75, (-1.0, 0.5)),
    (-0.75, 2.0, 1.5, (1.0, 0.0)),
    (-1.5, 2.5, 1.0, (-1.0, 1.0)),
    (-1.0, 2.0, 1.0, (-0.5, 1.0)),
    (-0.75, 1.0, 0.5, (0.0, -1.0)),
)

DEFAULT_UNCERTAINTY = UncertaintySpec("sinusoidal", 0.2, 0.1)


def platoon_reference(r: float = 1.0) -> ReferenceModel:
    a1, a2, b1, x0 = PLATOON[0]
    return vehicle_reference(a1, a2, b1, x0, (0.0,), (r,))


def platoon_plants(unc: UncertaintySpec | None = DEFAULT_UNCERTAINTY) -> list[AgentPlant]:
    unc = unc or UncertaintySpec()
    return [vehicle_plant(a1, a2, b1, unc, x0) for a1, a2, b1, x0 in PLATOON[1:]]
