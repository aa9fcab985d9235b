"""Closed-form Gaussian dynamics in the inverted harmonic oscillator.

All quantities follow from the Gaussian family centred at ``q0`` with a
momentum kick ``p0``; because the potential is quadratic the centre moves
along the classical saddle flow and the packet keeps a Gaussian profile.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, FlowOverflowError

# cosh/sinh overflow a double just above this argument
MAX_HYPERBOLIC_ARG = 710.0


def _check_finite(**values):
    for name, v in values.items():
        if not math.isfinite(v):
            raise DomainError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class PhysicalParams:
    m: float = 1.0
    omega: float = 1.0
    hbar: float = 1.0
    sigma0: float = 1.0

    def __post_init__(self):
        for name in ("m", "omega", "hbar", "sigma0"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be finite and > 0, got {v!r}")
        k = self.spread_constant
        if not (math.isfinite(k) and k > 0):
            raise DomainError(f"spreading constant hbar^2/(4 m^2 omega^2 sigma0^2) is {k!r}")

    @property
    def spread_constant(self) -> float:
        """hbar^2 / (4 m^2 omega^2 sigma0^2), the momentum-spread term of the variance."""
        return self.hbar**2 / (4.0 * self.m**2 * self.omega**2 * self.sigma0**2)

    @property
    def min_width(self) -> float:
        return min(self.sigma0, self.hbar / (2.0 * self.m * self.omega * self.sigma0))


@dataclass(frozen=True)
class PrepPoint:
    q0: float
    p0: float

    def __post_init__(self):
        _check_finite(q0=self.q0, p0=self.p0)


@dataclass(frozen=True)
class CenterState:
    qc: float
    pc: float

    def energy(self, params: PhysicalParams) -> float:
        return center_energy(self.qc, self.pc, params)


@dataclass(frozen=True)
class WidthState:
    sigma_t: float
    sigma_dot_t: float


def hyperbolic(t: float, params: PhysicalParams) -> tuple[float, float]:
    """Return (cosh(omega t), sinh(omega t)), failing loudly on overflow."""
    _check_finite(t=t)
    x = params.omega * t
    if abs(x) >= MAX_HYPERBOLIC_ARG:
        raise FlowOverflowError(f"|omega t| = {abs(x):g} overflows at t = {t!r}", t=t)
    return math.cosh(x), math.sinh(x)


def center_energy(qc: float, pc: float, params: PhysicalParams) -> float:
    return pc * pc / (2.0 * params.m) - 0.5 * params.m * params.omega**2 * qc * qc


def center_flow(x0: PrepPoint, t: float, params: PhysicalParams) -> CenterState:
    c, s = hyperbolic(t, params)
    mw = params.m * params.omega
    qc = x0.q0 * c + x0.p0 * (s / mw)
    pc = x0.q0 * (mw * s) + x0.p0 * c
    if not (math.isfinite(qc) and math.isfinite(pc)):
        raise FlowOverflowError(f"centre state overflowed at t = {t!r}", t=t)
    return CenterState(qc, pc)


def width(t: float, params: PhysicalParams) -> WidthState:
    c, s = hyperbolic(t, params)
    s0sq = params.sigma0**2
    k = params.spread_constant
    var = s0sq * c * c + k * s * s
    sigma = math.sqrt(var)
    if not math.isfinite(sigma):
        raise FlowOverflowError(f"width overflowed at t = {t!r}", t=t)
    # closed-form derivative of the variance; exact zero at t = 0
    sigma_dot = params.omega * s * c * (s0sq + k) / sigma
    return WidthState(sigma, sigma_dot)


def bohmian_velocity(q: float, t: float, x0: PrepPoint, params: PhysicalParams) -> float:
    """Bohmian velocity at position ``q``: centre velocity plus the width-rate shear."""
    _check_finite(q=q)
    center = center_flow(x0, t, params)
    w = width(t, params)
    return center.pc / params.m + (w.sigma_dot_t / w.sigma_t) * (q - center.qc)


def internal_bohmian_trajectory(qB0: float, t: float, x0: PrepPoint, params: PhysicalParams) -> float:
    """Position at time ``t`` of the Bohmian particle that started at ``qB0``.

    Offsets from the packet centre scale with sigma_t / sigma0, which solves
    dq/dt = bohmian_velocity(q, t) exactly.
    """
    _check_finite(qB0=qB0)
    center = center_flow(x0, t, params)
    w = width(t, params)
    return center.qc + (w.sigma_t / params.sigma0) * (qB0 - x0.q0)
