"""Autonomous linear flows x' = A x on preparation space and a fixed-step RK4 oracle."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, FlowOverflowError
from .model import CenterState, PhysicalParams, PrepPoint


@dataclass(frozen=True)
class LinearFlow:
    a11: float
    a12: float
    a21: float
    a22: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.a11, self.a12, self.a21, self.a22)):
            raise DomainError(f"generator entries must be finite: {self}")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    @property
    def trace(self) -> float:
        return self.a11 + self.a22


def iho_generator(params: PhysicalParams) -> LinearFlow:
    return LinearFlow(0.0, 1.0 / params.m, params.m * params.omega**2, 0.0)


def harmonic_generator(params: PhysicalParams) -> LinearFlow:
    """Ordinary (stable) oscillator, a degenerate test flow with elliptic orbits."""
    return LinearFlow(0.0, 1.0 / params.m, -params.m * params.omega**2, 0.0)


def free_generator(params: PhysicalParams) -> LinearFlow:
    return LinearFlow(0.0, 1.0 / params.m, 0.0, 0.0)


def flow_velocity(flow: LinearFlow, x: CenterState) -> tuple[float, float]:
    return (flow.a11 * x.qc + flow.a12 * x.pc, flow.a21 * x.qc + flow.a22 * x.pc)


@dataclass(frozen=True)
class IntegratorSpec:
    step: float = 1e-3
    scheme: str = "rk4"

    def __post_init__(self):
        if not (math.isfinite(self.step) and self.step > 0):
            raise ConfigError(f"integrator step must be finite and > 0, got {self.step!r}")
        if self.scheme != "rk4":
            raise ConfigError(f"unknown scheme {self.scheme!r}; only 'rk4' is available")

    def steps_for(self, span: float) -> tuple[int, float]:
        """Number of steps covering ``span`` and the length of the final step.

        Every step but the last has length ``step``; the last one is shortened
        so the integration lands exactly on the endpoint.
        """
        span = abs(span)
        if span == 0.0:
            return 0, 0.0
        n = max(1, math.ceil(span / self.step - 1e-9))
        return n, span - (n - 1) * self.step


def _rk4_step(a: np.ndarray, x: np.ndarray, h: float) -> np.ndarray:
    k1 = a @ x
    k2 = a @ (x + 0.5 * h * k1)
    k3 = a @ (x + 0.5 * h * k2)
    k4 = a @ (x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_array(flow: LinearFlow, x0: np.ndarray, t_final: float, spec: IntegratorSpec) -> np.ndarray:
    """RK4 for a batch of initial states; ``x0`` has shape (2,) or (2, N)."""
    if not math.isfinite(t_final):
        raise DomainError(f"t_final must be finite, got {t_final!r}")
    x = np.array(x0, dtype=float)
    if x.shape[0] != 2:
        raise DomainError(f"expected leading dimension 2, got shape {x.shape}")
    a = flow.matrix
    sign = 1.0 if t_final >= 0 else -1.0
    n, last = spec.steps_for(t_final)
    t = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            h = spec.step if i < n - 1 else last
            x = _rk4_step(a, x, sign * h)
            t += sign * h
            if not np.all(np.isfinite(x)):
                raise FlowOverflowError(f"RK4 state overflowed at t = {t:g}", t=t)
    return x


def integrate(flow: LinearFlow, x0: PrepPoint, t_final: float, spec: IntegratorSpec) -> CenterState:
    x = integrate_array(flow, np.array([x0.q0, x0.p0]), t_final, spec)
    return CenterState(float(x[0]), float(x[1]))
