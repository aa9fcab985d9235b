"""Command-line driver: ``wpcld --out-csv field.csv --out-ppm m m.ppm``.

Settings come from defaults (the 1000x1000, T=5, m=omega=1 setup over
[-2, 2]^2), then an optional ``--config`` file of ``key = value`` lines,
then command-line flags, each layer overriding the previous one.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import fieldio
from .errors import ConfigError, DomainError, FlowOverflowError, PreconditionError
from .ld import DEFAULT_EPSILON, GridSpec, QuadratureSpec, ScaleSpec, compute_field, extract_ridges
from .model import PhysicalParams, PrepPoint
from .sensitivity import verify_gradient_bound

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_OVERFLOW = 3
EXIT_IO = 4


@dataclass
class RunConfig:
    grid: GridSpec = dc_field(default_factory=GridSpec)
    horizon: float = 5.0
    params: PhysicalParams = dc_field(default_factory=PhysicalParams)
    scale: ScaleSpec | None = None
    quad: QuadratureSpec = dc_field(default_factory=QuadratureSpec)
    epsilon: float = DEFAULT_EPSILON
    outputs: list[tuple[str, str]] = dc_field(default_factory=list)
    workers: int = 0
    verify_points: list[PrepPoint] = dc_field(default_factory=list)

    def __post_init__(self):
        if self.scale is None:
            self.scale = ScaleSpec.natural(self.params)
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ConfigError(f"horizon must be > 0, got {self.horizon!r}")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon!r}")
        if self.workers < 0:
            raise ConfigError(f"workers must be >= 0, got {self.workers}")
        if not self.outputs and not self.verify_points:
            raise ConfigError("no output requested; use --out-csv, --out-bin, --out-ppm or --verify-bound")
        for fmt, _ in self.outputs:
            if fmt not in ("csv", "bin") and not (
                    fmt.startswith("ppm:") and fmt[4:] in fieldio.HEATMAP_CHANNELS):
                raise ConfigError(f"unknown output format {fmt!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _grid_size(text: str) -> tuple[int, int]:
    try:
        a, b = text.lower().split("x")
        n_q, n_p = int(a), int(b)
    except ValueError:
        raise ConfigError(f"malformed grid size {text!r}; expected NxM") from None
    return n_q, n_p


def _float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"malformed number {text!r}") from None


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"malformed integer {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wpcld", description="Wavepacket-centre Lagrangian descriptor fields "
                                         "for the inverted harmonic oscillator.")
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--grid", metavar="NxM", help="n_q x n_p nodes (default 1000x1000)")
    p.add_argument("--q-range", nargs=2, metavar=("MIN", "MAX"))
    p.add_argument("--p-range", nargs=2, metavar=("MIN", "MAX"))
    p.add_argument("--horizon", metavar="T")
    p.add_argument("--mass", metavar="M")
    p.add_argument("--omega", metavar="W")
    p.add_argument("--hbar", metavar="H")
    p.add_argument("--sigma0", metavar="S")
    p.add_argument("--quad-n", metavar="N", help="Simpson subintervals (even, default 256)")
    p.add_argument("--epsilon", metavar="E", help="clamp inside the M logarithm (default 1e-30)")
    p.add_argument("--workers", metavar="K", help="sweep threads, 0 = one per CPU")
    p.add_argument("--out-csv", metavar="PATH")
    p.add_argument("--out-bin", metavar="PATH")
    p.add_argument("--out-ppm", nargs=2, action="append", metavar=("CHANNEL", "PATH"),
                   help=f"heatmap, CHANNEL in {', '.join(fieldio.HEATMAP_CHANNELS)}; repeatable")
    p.add_argument("--verify-bound", nargs=2, action="append", metavar=("Q0", "P0"),
                   help="report the LD gradient bound at this preparation; repeatable")
    return p


_LIST_KEYS = {"out_ppm", "verify_bound"}
_PAIR_KEYS = {"q_range", "p_range", "out_ppm", "verify_bound"}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment. List-valued keys may repeat."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    valid = {a.dest for a in build_parser()._actions} - {"help", "config"}
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in valid:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in _PAIR_KEYS:
            value = value.split()
            if len(value) != 2:
                raise ConfigError(f"{path}:{lineno}: {key} needs two values")
        if key in _LIST_KEYS:
            values.setdefault(key, []).append(value)
        else:
            values[key] = value
    return values


def parse_config(argv=None) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    merged = read_config_file(args["config"]) if args.get("config") else {}
    merged.update({k: v for k, v in args.items() if v is not None and k != "config"})

    def get(key, conv, default):
        return conv(merged[key]) if key in merged else default

    try:
        g = GridSpec()
        n_q, n_p = _grid_size(merged["grid"]) if "grid" in merged else (g.n_q, g.n_p)
        q_min, q_max = map(_float, merged.get("q_range", (g.q_min, g.q_max)))
        p_min, p_max = map(_float, merged.get("p_range", (g.p_min, g.p_max)))
        grid = GridSpec(q_min, q_max, p_min, p_max, n_q, n_p)
        params = PhysicalParams(get("mass", _float, 1.0), get("omega", _float, 1.0),
                                get("hbar", _float, 1.0), get("sigma0", _float, 1.0))
        quad = QuadratureSpec(get("quad_n", _int, 256))
        outputs = []
        if "out_csv" in merged:
            outputs.append(("csv", merged["out_csv"]))
        if "out_bin" in merged:
            outputs.append(("bin", merged["out_bin"]))
        for channel, path in merged.get("out_ppm", []):
            if channel not in fieldio.HEATMAP_CHANNELS:
                raise ConfigError(f"unknown heatmap channel {channel!r}")
            outputs.append((f"ppm:{channel}", path))
        points = [PrepPoint(_float(q), _float(p)) for q, p in merged.get("verify_bound", [])]
        return RunConfig(grid=grid, horizon=get("horizon", _float, 5.0), params=params,
                         quad=quad, epsilon=get("epsilon", _float, DEFAULT_EPSILON),
                         outputs=outputs, workers=get("workers", _int, 0), verify_points=points)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def _emit(out, key, value):
    if isinstance(value, float):
        value = format(value, ".17g")
    print(f"{key}={value}", file=out)


def run(config: RunConfig, out=None) -> int:
    out = out or sys.stdout
    try:
        if config.verify_points:
            for x0 in config.verify_points:
                rep = verify_gradient_bound(x0, config.horizon, config.params, config.scale,
                                            config.quad)
                print(f"bound q0={x0.q0!r} p0={x0.p0!r} T={rep.horizon!r} "
                      f"grad_norm={rep.grad_norm!r} bound={rep.bound_value!r} "
                      f"ratio={rep.ratio!r} norm={rep.norm} holds={rep.holds}", file=out)
        if not config.outputs:
            return EXIT_OK
        t0 = time.perf_counter()
        field = compute_field(config.grid, config.horizon, config.params, config.scale,
                              config.quad, config.epsilon, workers=config.workers)
        wall = time.perf_counter() - t0
    except FlowOverflowError as exc:
        print(f"error=overflow {exc}", file=sys.stderr)
        return EXIT_OVERFLOW
    except (ConfigError, DomainError, PreconditionError) as exc:
        print(f"error=config {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        for fmt, path in config.outputs:
            if fmt == "csv":
                fieldio.write_csv(field, path)
            elif fmt == "bin":
                fieldio.write_binary(field, path)
            else:
                fieldio.write_heatmap(field, fmt[4:], path, config.epsilon)
    except OSError as exc:
        print(f"error=io {exc}", file=sys.stderr)
        return EXIT_IO

    summary = fieldio.field_summary(field)
    for key, value in summary.items():
        _emit(out, key, value)
    _emit(out, "wall_time_s", wall)
    _emit(out, "ridge_nodes", len(extract_ridges(field, summary["m_diag_median"])))
    return EXIT_OK


def main(argv=None) -> int:
    try:
        config = parse_config(argv)
    except ConfigError as exc:
        print(f"error=config {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
