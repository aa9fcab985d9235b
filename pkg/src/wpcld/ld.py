"""Forward/backward wavepacket-centre Lagrangian descriptors and the M field.

The descriptor is the arc length of the centre trajectory over a finite
horizon, measured in scaled units (q / q_scale, p / p_scale). The combined
diagnostic ``M = -log10(L_fwd * L_bwd)`` turns LD valleys on the stable and
unstable manifolds into ridges.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, FlowOverflowError
from .model import PhysicalParams, PrepPoint, hyperbolic

DEFAULT_EPSILON = 1e-30
DEFAULT_CHUNK = 1 << 14


@dataclass(frozen=True)
class ScaleSpec:
    q_scale: float = 1.0
    p_scale: float = 1.0

    def __post_init__(self):
        for name in ("q_scale", "p_scale"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be finite and > 0, got {v!r}")

    @classmethod
    def natural(cls, params: PhysicalParams, q_scale: float = 1.0) -> "ScaleSpec":
        """p_scale = m omega q_scale, which makes the eigenlines the diagonals."""
        return cls(q_scale, params.m * params.omega * q_scale)


@dataclass(frozen=True)
class QuadratureSpec:
    n_subintervals: int = 256
    rule: str = "simpson"

    def __post_init__(self):
        n = self.n_subintervals
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 2 or n % 2:
            raise ConfigError(f"n_subintervals must be an even integer >= 2, got {n!r}")
        if self.rule != "simpson":
            raise ConfigError(f"unknown quadrature rule {self.rule!r}")

    def weights(self) -> np.ndarray:
        """Composite Simpson weights 1, 4, 2, ..., 4, 1 (without the h/3 factor)."""
        w = np.full(self.n_subintervals + 1, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        return w


@dataclass(frozen=True)
class GridSpec:
    q_min: float = -2.0
    q_max: float = 2.0
    p_min: float = -2.0
    p_max: float = 2.0
    n_q: int = 1000
    n_p: int = 1000

    def __post_init__(self):
        for name in ("q_min", "q_max", "p_min", "p_max"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if not self.q_min < self.q_max:
            raise ConfigError(f"q range needs q_min < q_max, got [{self.q_min}, {self.q_max}]")
        if not self.p_min < self.p_max:
            raise ConfigError(f"p range needs p_min < p_max, got [{self.p_min}, {self.p_max}]")
        if self.n_q < 2 or self.n_p < 2:
            raise ConfigError(f"grid needs at least 2 nodes per axis, got {self.n_q}x{self.n_p}")

    def q_values(self) -> np.ndarray:
        i = np.arange(self.n_q, dtype=float)
        return self.q_min + i * (self.q_max - self.q_min) / (self.n_q - 1)

    def p_values(self) -> np.ndarray:
        j = np.arange(self.n_p, dtype=float)
        return self.p_min + j * (self.p_max - self.p_min) / (self.n_p - 1)

    @property
    def dq(self) -> float:
        return (self.q_max - self.q_min) / (self.n_q - 1)

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / (self.n_p - 1)


@dataclass(frozen=True)
class LDSample:
    ld_fwd: float
    ld_bwd: float
    m_diag: float


@dataclass
class FieldGrid:
    """LD samples on a grid; ``samples[row, col]`` is (ld_fwd, ld_bwd, m_diag).

    Rows follow p0, columns follow q0, so ``samples.reshape(-1, 3)`` is the
    row-major node order used by the writers.
    """

    spec: GridSpec
    horizon: float
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        expected = (self.spec.n_p, self.spec.n_q, 3)
        if self.samples.shape != expected:
            raise DomainError(f"samples shape {self.samples.shape} != {expected}")
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise DomainError(f"horizon must be finite and > 0, got {self.horizon!r}")
        if not np.all(np.isfinite(self.samples)):
            raise DomainError("field contains non-finite samples")

    @property
    def ld_fwd(self) -> np.ndarray:
        return self.samples[:, :, 0]

    @property
    def ld_bwd(self) -> np.ndarray:
        return self.samples[:, :, 1]

    @property
    def m_diag(self) -> np.ndarray:
        return self.samples[:, :, 2]

    def sample(self, row: int, col: int) -> LDSample:
        f, b, m = self.samples[row, col]
        return LDSample(float(f), float(b), float(m))

    def node(self, row: int, col: int) -> PrepPoint:
        return PrepPoint(float(self.spec.q_values()[col]), float(self.spec.p_values()[row]))


def _check_horizon(T):
    if not (math.isfinite(T) and T >= 0):
        raise DomainError(f"horizon must be finite and >= 0, got {T!r}")


def _quadrature_nodes(T, params, quad, sign):
    n = quad.n_subintervals
    h = T / n
    coeffs = []
    for k in range(n + 1):
        c, s = hyperbolic(sign * (k * h), params)
        coeffs.append((c, s))
    return h, coeffs


def arc_length(q0, p0, T: float, params: PhysicalParams, scale: ScaleSpec, quad: QuadratureSpec,
               sign: float = 1.0) -> np.ndarray:
    """Simpson arc length of the centre trajectory for arrays of preparations.

    ``sign = -1`` integrates over [-T, 0]. The speed at each node is the
    scaled norm of A x_c(t) with x_c from the closed-form flow.
    """
    _check_horizon(T)
    q0 = np.asarray(q0, dtype=np.float64)
    p0 = np.asarray(p0, dtype=np.float64)
    h, coeffs = _quadrature_nodes(T, params, quad, sign)
    weights = quad.weights()
    mw = params.m * params.omega
    to_vq = 1.0 / (params.m * scale.q_scale)
    to_vp = params.m * params.omega**2 / scale.p_scale

    shape = np.broadcast_shapes(q0.shape, p0.shape)
    acc = np.zeros(shape)
    qc = np.empty(shape)
    pc = np.empty(shape)
    tmp = np.empty(shape)
    with np.errstate(over="ignore", invalid="ignore"):
        for w, (c, s) in zip(weights, coeffs):
            np.multiply(q0, c, out=qc)
            np.multiply(p0, s / mw, out=tmp)
            np.add(qc, tmp, out=qc)
            np.multiply(q0, mw * s, out=pc)
            np.multiply(p0, c, out=tmp)
            np.add(pc, tmp, out=pc)
            # qc, pc now hold the scaled velocity components
            np.multiply(pc, to_vq, out=tmp)
            np.multiply(qc, to_vp, out=qc)
            np.multiply(tmp, tmp, out=tmp)
            np.multiply(qc, qc, out=qc)
            np.add(tmp, qc, out=tmp)
            np.sqrt(tmp, out=tmp)
            np.multiply(tmp, w, out=tmp)
            np.add(acc, tmp, out=acc)
        acc *= h / 3.0
    if not np.all(np.isfinite(acc)):
        bad = np.argwhere(~np.isfinite(acc))
        raise FlowOverflowError(f"arc length overflowed at horizon T = {T!r}", t=sign * T,
                                nodes=[tuple(int(v) for v in idx) for idx in bad])
    return acc


def _resolve(params, scale, quad):
    if scale is None:
        scale = ScaleSpec.natural(params)
    if quad is None:
        quad = QuadratureSpec()
    return scale, quad


def ld_forward(x0: PrepPoint, T: float, params: PhysicalParams = PhysicalParams(),
               scale: ScaleSpec | None = None, quad: QuadratureSpec | None = None) -> float:
    scale, quad = _resolve(params, scale, quad)
    return float(arc_length(x0.q0, x0.p0, T, params, scale, quad))


def ld_backward(x0: PrepPoint, T: float, params: PhysicalParams = PhysicalParams(),
                scale: ScaleSpec | None = None, quad: QuadratureSpec | None = None,
                direct: bool = False) -> float:
    """Backward LD. By default uses L_bwd(q0, p0) = L_fwd(q0, -p0);
    ``direct=True`` integrates the reversed flow on [-T, 0] instead."""
    scale, quad = _resolve(params, scale, quad)
    if direct:
        return float(arc_length(x0.q0, x0.p0, T, params, scale, quad, sign=-1.0))
    return float(arc_length(x0.q0, -x0.p0, T, params, scale, quad))


def m_from_lds(ld_fwd, ld_bwd, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    if not (math.isfinite(epsilon) and epsilon > 0):
        raise ConfigError(f"epsilon must be finite and > 0, got {epsilon!r}")
    f = np.maximum(np.asarray(ld_fwd, dtype=np.float64), epsilon)
    b = np.maximum(np.asarray(ld_bwd, dtype=np.float64), epsilon)
    return -np.log10(f * b)


def ld_sample(x0: PrepPoint, T: float, params: PhysicalParams = PhysicalParams(),
              scale: ScaleSpec | None = None, quad: QuadratureSpec | None = None,
              epsilon: float = DEFAULT_EPSILON) -> LDSample:
    f = ld_forward(x0, T, params, scale, quad)
    b = ld_backward(x0, T, params, scale, quad)
    return LDSample(f, b, float(m_from_lds(f, b, epsilon)))


def m_diagnostic(x0: PrepPoint, T: float, params: PhysicalParams = PhysicalParams(),
                 scale: ScaleSpec | None = None, quad: QuadratureSpec | None = None,
                 epsilon: float = DEFAULT_EPSILON) -> float:
    return ld_sample(x0, T, params, scale, quad, epsilon).m_diag


def _field_chunk(q, p, T, params, scale, quad, epsilon):
    f = arc_length(q, p, T, params, scale, quad)
    b = arc_length(q, -p, T, params, scale, quad)
    return f, b, m_from_lds(f, b, epsilon)


def compute_field(spec: GridSpec, T: float, params: PhysicalParams = PhysicalParams(),
                  scale: ScaleSpec | None = None, quad: QuadratureSpec | None = None,
                  epsilon: float = DEFAULT_EPSILON, workers: int = 1,
                  chunk_size: int = DEFAULT_CHUNK) -> FieldGrid:
    """Evaluate (ld_fwd, ld_bwd, M) at every grid node.

    Nodes are split into fixed-size chunks of the row-major order and the
    chunks are farmed out to ``workers`` threads (0 means one per CPU). Each
    node's value depends only on its own coordinates, so the result does not
    depend on ``workers`` or on the chunk layout.
    """
    scale, quad = _resolve(params, scale, quad)
    _check_horizon(T)
    if T == 0:
        raise DomainError("field horizon must be > 0")
    m_from_lds(1.0, 1.0, epsilon)  # validates epsilon before the sweep
    if workers < 0:
        raise ConfigError(f"workers must be >= 0, got {workers}")
    if chunk_size < 1:
        raise ConfigError(f"chunk_size must be >= 1, got {chunk_size}")
    if workers == 0:
        workers = os.cpu_count() or 1

    qq, pp = np.meshgrid(spec.q_values(), spec.p_values())
    q_flat = qq.ravel()
    p_flat = pp.ravel()
    n_nodes = q_flat.size
    out = np.empty((n_nodes, 3))
    bounds = [(i, min(i + chunk_size, n_nodes)) for i in range(0, n_nodes, chunk_size)]

    def work(lo_hi):
        lo, hi = lo_hi
        try:
            f, b, m = _field_chunk(q_flat[lo:hi], p_flat[lo:hi], T, params, scale, quad, epsilon)
        except FlowOverflowError as exc:
            return [lo + n[0] for n in exc.nodes] or list(range(lo, hi))
        out[lo:hi, 0] = f
        out[lo:hi, 1] = b
        out[lo:hi, 2] = m
        return []

    if workers == 1 or len(bounds) == 1:
        failures = [work(b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            failures = list(pool.map(work, bounds))
    bad = sorted(i for chunk in failures for i in chunk)
    if bad:
        nodes = [divmod(i, spec.n_q) for i in bad]
        raise FlowOverflowError(
            f"{len(nodes)} grid nodes overflowed at T = {T!r}; first (row, col): {nodes[:5]}",
            t=T, nodes=nodes)
    return FieldGrid(spec, float(T), out.reshape(spec.n_p, spec.n_q, 3))


def ridge_nodes(values: np.ndarray, threshold: float) -> list[tuple[int, int]]:
    """(row, col) of entries above ``threshold`` that are strict local maxima
    along their row or their column; sorted by (row, col)."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2:
        raise DomainError(f"expected a 2-D array, got shape {v.shape}")
    peak = np.zeros(v.shape, dtype=bool)
    if v.shape[1] >= 3:
        c = v[:, 1:-1]
        peak[:, 1:-1] |= (c > v[:, :-2]) & (c > v[:, 2:])
    if v.shape[0] >= 3:
        c = v[1:-1, :]
        peak[1:-1, :] |= (c > v[:-2, :]) & (c > v[2:, :])
    peak &= v > threshold
    return [(int(r), int(c)) for r, c in np.argwhere(peak)]


def extract_ridges(field: FieldGrid, threshold: float) -> list[tuple[int, int]]:
    return ridge_nodes(field.m_diag, threshold)
