"""CSV, little-endian binary and PPM serialization of LD fields.

Binary layout: a 60-byte header ``<4sIIIdddddI`` (magic ``LDF1``, version,
n_q, n_p, q_min, q_max, p_min, p_max, horizon, channel count) followed by
``n_q * n_p * 3`` little-endian float64 values, interleaved per node
(ld_fwd, ld_bwd, m_diag) in row-major order (p outer, q inner).
"""
from __future__ import annotations

import math
import struct
import warnings
from pathlib import Path

import numpy as np

from .errors import FormatError
from .ld import DEFAULT_EPSILON, FieldGrid, GridSpec

MAGIC = b"LDF1"
VERSION = 1
CHANNELS = 3
HEADER = struct.Struct("<4sIIIdddddI")
CSV_COLUMNS = ("q0", "p0", "ld_fwd", "ld_bwd", "m_diag")
HEATMAP_CHANNELS = ("fwd_log10", "bwd_log10", "m")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(field: FieldGrid, path) -> None:
    q = field.spec.q_values()
    p = field.spec.p_values()
    lines = [",".join(CSV_COLUMNS)]
    for row in range(field.spec.n_p):
        prow = _fmt(p[row])
        for col in range(field.spec.n_q):
            f, b, m = field.samples[row, col]
            lines.append(f"{_fmt(q[col])},{prow},{_fmt(f)},{_fmt(b)},{_fmt(m)}")
    path = Path(path)
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(path) -> np.ndarray:
    """Rows of (q0, p0, ld_fwd, ld_bwd, m_diag) in file order."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip()
        if header != ",".join(CSV_COLUMNS):
            raise FormatError(f"{path}: unexpected CSV header {header!r}")
        rows = [[float(v) for v in line.split(",")] for line in fh if line.strip()]
    return np.array(rows, dtype=np.float64).reshape(-1, len(CSV_COLUMNS))


def write_binary(field: FieldGrid, path) -> None:
    s = field.spec
    header = HEADER.pack(MAGIC, VERSION, s.n_q, s.n_p, s.q_min, s.q_max, s.p_min, s.p_max,
                         field.horizon, CHANNELS)
    payload = np.ascontiguousarray(field.samples, dtype="<f8").tobytes()
    path = Path(path)
    try:
        with path.open("wb") as fh:
            fh.write(header)
            fh.write(payload)
    except OSError as exc:
        raise OSError(f"cannot write field file {path}: {exc}") from exc


def read_binary(path) -> FieldGrid:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, version, n_q, n_p, q_min, q_max, p_min, p_max, horizon, channels = \
        HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if channels != CHANNELS:
        raise FormatError(f"{path}: expected {CHANNELS} channels, got {channels}")
    expected = n_q * n_p * channels * 8
    if len(data) - HEADER.size != expected:
        raise FormatError(f"{path}: payload is {len(data) - HEADER.size} bytes, expected {expected}")
    samples = np.frombuffer(data, dtype="<f8", offset=HEADER.size).astype(np.float64)
    spec = GridSpec(q_min, q_max, p_min, p_max, n_q, n_p)
    return FieldGrid(spec, horizon, samples.reshape(n_p, n_q, channels))


def channel_values(field: FieldGrid, channel: str, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    if channel == "fwd_log10":
        return np.log10(np.maximum(field.ld_fwd, epsilon))
    if channel == "bwd_log10":
        return np.log10(np.maximum(field.ld_bwd, epsilon))
    if channel == "m":
        return field.m_diag.copy()
    raise ValueError(f"unknown heatmap channel {channel!r}; choose from {HEATMAP_CHANNELS}")


def to_gray(values: np.ndarray) -> np.ndarray:
    """Map linearly onto 0..255 (min black, max white), flipped so p grows upward."""
    lo = float(values.min())
    hi = float(values.max())
    if not hi > lo:
        warnings.warn("degenerate heatmap range (max == min); writing mid-gray", RuntimeWarning)
        gray = np.full(values.shape, 128, dtype=np.uint8)
    else:
        scaled = (values - lo) / (hi - lo) * 255.0
        gray = np.clip(np.floor(scaled + 0.5), 0, 255).astype(np.uint8)
    return gray[::-1, :]


def write_ppm(gray: np.ndarray, path) -> None:
    """Binary P6 pixmap with the gray level replicated across RGB."""
    height, width = gray.shape
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    path = Path(path)
    try:
        with path.open("wb") as fh:
            fh.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
            fh.write(rgb.tobytes())
    except OSError as exc:
        raise OSError(f"cannot write image {path}: {exc}") from exc


def read_ppm(path) -> np.ndarray:
    """Read a P6 file written by ``write_ppm``; returns (height, width, 3) uint8."""
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P6":
        raise FormatError(f"{path}: not a binary PPM")
    width, height, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise FormatError(f"{path}: unsupported max value {maxval}")
    pixels = np.frombuffer(parts[4], dtype=np.uint8)
    if pixels.size != width * height * 3:
        raise FormatError(f"{path}: pixel payload has {pixels.size} bytes")
    return pixels.reshape(height, width, 3)


def write_heatmap(field: FieldGrid, channel: str, path, epsilon: float = DEFAULT_EPSILON) -> None:
    write_ppm(to_gray(channel_values(field, channel, epsilon)), path)


def field_summary(field: FieldGrid) -> dict[str, float]:
    out = {}
    for name, arr in (("ld_fwd", field.ld_fwd), ("ld_bwd", field.ld_bwd), ("m_diag", field.m_diag)):
        out[f"{name}_min"] = float(arr.min())
        out[f"{name}_max"] = float(arr.max())
    out["m_diag_median"] = float(np.median(field.m_diag))
    pos = field.ld_fwd[field.ld_fwd > 0]
    out["ld_fwd_decades"] = (math.log10(float(pos.max())) - math.log10(float(pos.min()))
                             if pos.size else 0.0)
    return out
