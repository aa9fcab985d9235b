"""Preparation-space stability matrices, the semiclassical OTOC proxy and the
finite-difference check of the O(e^{omega T}) LD gradient bound."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, PreconditionError
from .flow import iho_generator
from .ld import QuadratureSpec, ScaleSpec, _resolve, arc_length
from .model import PhysicalParams, PrepPoint, hyperbolic

NORM_NAME = "spectral"


def spectral_norm_2x2(a: float, b: float, c: float, d: float) -> float:
    """Largest singular value of [[a, b], [c, d]] in closed form."""
    return 0.5 * (math.hypot(a + d, b - c) + math.hypot(a - d, b + c))


@dataclass(frozen=True)
class StabilityMatrix:
    j11: float
    j12: float
    j21: float
    j22: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.j11, self.j12], [self.j21, self.j22]])

    def det(self) -> float:
        return self.j11 * self.j22 - self.j12 * self.j21

    def spectral_norm(self) -> float:
        return spectral_norm_2x2(self.j11, self.j12, self.j21, self.j22)

    def scaled(self, scale: ScaleSpec) -> "StabilityMatrix":
        """Same map expressed in the scaled coordinates (q / q_scale, p / p_scale)."""
        r = scale.p_scale / scale.q_scale
        return StabilityMatrix(self.j11, self.j12 * r, self.j21 / r, self.j22)

    def __matmul__(self, other: "StabilityMatrix") -> "StabilityMatrix":
        return StabilityMatrix(
            self.j11 * other.j11 + self.j12 * other.j21,
            self.j11 * other.j12 + self.j12 * other.j22,
            self.j21 * other.j11 + self.j22 * other.j21,
            self.j21 * other.j12 + self.j22 * other.j22,
        )


def stability_matrix(t: float, params: PhysicalParams) -> StabilityMatrix:
    c, s = hyperbolic(t, params)
    mw = params.m * params.omega
    return StabilityMatrix(c, s / mw, mw * s, c)


def otoc_proxy(t: float, params: PhysicalParams) -> float:
    """Semiclassical OTOC hbar^2 (d q_c(t) / d q0)^2."""
    j11 = stability_matrix(t, params).j11
    return params.hbar**2 * j11**2


@dataclass(frozen=True)
class LDGradient:
    """Gradient of L_fwd with respect to the scaled preparation coordinates."""

    d_q: float
    d_p: float
    h: float
    stencil: int
    warning: str | None = None

    @property
    def norm(self) -> float:
        return math.hypot(self.d_q, self.d_p)


@dataclass(frozen=True)
class BoundReport:
    grad_norm: float
    bound_value: float
    ratio: float
    horizon: float
    x0: PrepPoint | None = None
    norm: str = NORM_NAME

    @property
    def holds(self) -> bool:
        return self.ratio <= 1.0 + 1e-6


_STENCILS = {
    2: ((1.0, -1.0), (-1.0, 1.0), 2.0),
    4: ((2.0, 1.0, -1.0, -2.0), (1.0, -8.0, 8.0, -1.0), 12.0),
}


def ld_gradient_fd(x0: PrepPoint, T: float, params: PhysicalParams = PhysicalParams(),
                   scale: ScaleSpec | None = None, quad: QuadratureSpec | None = None,
                   h: float = 1e-5, stencil: int = 2) -> LDGradient:
    """Centred finite-difference gradient of the forward LD.

    ``h`` is a step in scaled units, so q0 moves by ``h * q_scale`` and p0 by
    ``h * p_scale``. ``stencil`` selects the 3-point (2nd order) or 5-point
    (4th order) centred formula.
    """
    scale, quad = _resolve(params, scale, quad)
    if x0.q0 == 0.0 and x0.p0 == 0.0:
        # A is invertible, so only the origin preparation ever reaches f_c = 0
        raise PreconditionError("LD gradient is undefined at the origin preparation")
    if not (math.isfinite(h) and h > 0):
        raise ConfigError(f"finite-difference step must be > 0, got {h!r}")
    if stencil not in _STENCILS:
        raise ConfigError(f"stencil must be 2 or 4, got {stencil!r}")
    offsets, coeffs, denom = _STENCILS[stencil]
    off = np.array([o for o in offsets if o != 0.0])
    coeffs = np.array(coeffs)
    # one vectorised call: perturbations in q first, then in p
    dq = h * scale.q_scale * off
    dp = h * scale.p_scale * off
    qs = np.concatenate([x0.q0 + dq, np.full(off.size, x0.q0), [x0.q0]])
    ps = np.concatenate([np.full(off.size, x0.p0), x0.p0 + dp, [x0.p0]])
    vals = arc_length(qs, ps, T, params, scale, quad)
    n = off.size
    # offsets are listed high to low; coefficients match the low-to-high order
    g_q = float(np.dot(coeffs, vals[:n][::-1]) / (denom * h))
    g_p = float(np.dot(coeffs, vals[n:2 * n][::-1]) / (denom * h))
    centre = float(vals[-1])

    warning = None
    g_norm = math.hypot(g_q, g_p)
    roundoff = 4.0 * np.finfo(float).eps * abs(centre) / h
    if roundoff > 1e-6 * max(g_norm, np.finfo(float).tiny):
        warning = (f"cancellation: estimated roundoff {roundoff:.3g} is large next to "
                   f"|grad| = {g_norm:.3g}; increase h")
    return LDGradient(g_q, g_p, h, stencil, warning)


def bound_integral(T: float, params: PhysicalParams, scale: ScaleSpec, quad: QuadratureSpec) -> float:
    """||A||_2 * int_0^T ||J_c(t)||_2 dt in scaled coordinates, by Simpson's rule."""
    flow = iho_generator(params)
    r = scale.p_scale / scale.q_scale
    a_norm = spectral_norm_2x2(flow.a11, flow.a12 * r, flow.a21 / r, flow.a22)
    n = quad.n_subintervals
    dt = T / n
    jn = np.array([stability_matrix(k * dt, params).scaled(scale).spectral_norm()
                   for k in range(n + 1)])
    return a_norm * float(np.dot(quad.weights(), jn)) * dt / 3.0


def verify_gradient_bound(x0: PrepPoint, T: float, params: PhysicalParams = PhysicalParams(),
                          scale: ScaleSpec | None = None, quad: QuadratureSpec | None = None,
                          h: float = 1e-5) -> BoundReport:
    scale, quad = _resolve(params, scale, quad)
    grad = ld_gradient_fd(x0, T, params, scale, quad, h)
    bound = bound_integral(T, params, scale, quad)
    return BoundReport(grad.norm, bound, grad.norm / bound, float(T), x0)


def fit_growth_rate(x0: PrepPoint, horizons, params: PhysicalParams = PhysicalParams(),
                    scale: ScaleSpec | None = None, quad: QuadratureSpec | None = None,
                    h: float = 1e-5) -> float:
    """Least-squares slope of ln ||grad L_fwd|| against the horizon T."""
    horizons = np.asarray(horizons, dtype=float)
    if horizons.size < 2:
        raise ConfigError("need at least two horizons for a rate fit")
    logs = [math.log(ld_gradient_fd(x0, T, params, scale, quad, h).norm) for T in horizons]
    slope, _ = np.polyfit(horizons, logs, 1)
    return float(slope)
