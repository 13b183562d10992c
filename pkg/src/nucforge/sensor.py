"""Forward imaging model and its gain/offset compensation.

A raw readout is ``scene * gain + offset + noise`` per pixel.  Dividing by
the (calibrated, strictly positive) gain reduces the model to scene plus an
additive offset, which is what the rest of the pipeline estimates and
removes.  Gain estimation itself is out of scope: the gain map is an input.

Temporal noise is zero-mean i.i.d. Gaussian, drawn from a counter-based
generator so a capture is a pure function of ``(seed, draw_index)`` -- no
hidden RNG state, reproducible under any execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .formats import read_pfm, read_sidecar, write_pfm, write_sidecar
from .grid import Frame, _as_grid

__all__ = [
    "GainMap",
    "OffsetMap",
    "TemporalNoiseModel",
    "capture",
    "gain_compensate",
    "gain_compensate_offset",
    "compensate_offset",
    "save_offset_map",
    "load_offset_map",
    "save_gain_map",
    "load_gain_map",
]


@dataclass(frozen=True, eq=False)
class GainMap:
    """Strictly positive per-pixel gain (dimensionless)."""

    values: np.ndarray

    def __post_init__(self):
        a = _as_grid(self.values, 2, 2, "GainMap")
        if not np.all(a > 0):
            raise ValueError("GainMap values must be strictly positive")
        object.__setattr__(self, "values", a)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @classmethod
    def uniform(cls, height: int, width: int, value: float = 1.0) -> "GainMap":
        return cls(np.full((height, width), float(value)))


@dataclass(frozen=True, eq=False)
class OffsetMap:
    """Per-pixel offset, flagged raw (readout units) vs gain-compensated.

    The raw offset is what the detector adds before gain division; the
    compensated one is raw divided by gain and lives in scene units.
    """

    values: np.ndarray
    compensated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", _as_grid(self.values, 2, 2, "OffsetMap"))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class TemporalNoiseModel:
    """Zero-mean Gaussian per-pixel noise with counter-indexed draws.

    ``sample`` derives its stream from ``(seed, draw_index)`` through a
    Philox counter, so distinct draw indices give independent noise and
    repeated calls are bit-identical.
    """

    sigma: float
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("noise sigma must be >= 0")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("noise seed must be a 64-bit unsigned integer")

    def sample(self, shape: tuple[int, int], draw_index: int) -> np.ndarray:
        if draw_index < 0:
            raise ValueError("draw_index must be >= 0")
        if self.sigma == 0.0:
            return np.zeros(shape)
        # One 128-bit counter block per draw index: streams never overlap.
        bitgen = np.random.Philox(key=int(self.seed), counter=int(draw_index) << 128)
        return np.random.Generator(bitgen).standard_normal(shape) * self.sigma


def capture(
    scene: Frame,
    gain: GainMap,
    offset_raw: OffsetMap,
    noise: TemporalNoiseModel,
    draw_index: int,
) -> Frame:
    """Simulate one raw readout: ``scene * gain + offset + noise``."""
    if not (scene.shape == gain.shape == offset_raw.shape):
        raise ValueError(
            "capture requires matching shapes, got scene "
            f"{scene.shape}, gain {gain.shape}, offset {offset_raw.shape}"
        )
    if offset_raw.compensated:
        raise ValueError("capture expects a raw offset map, got gain-compensated")
    raw = scene.values * gain.values + offset_raw.values
    raw = raw + noise.sample(scene.shape, draw_index)
    return Frame(raw)


def gain_compensate(raw: Frame, gain: GainMap) -> Frame:
    """Divide a raw readout by the calibrated gain.

    Non-positive gain values are rejected at ``GainMap`` construction, which
    is where corrupt calibration input surfaces.
    """
    if raw.shape != gain.shape:
        raise ValueError(
            f"gain_compensate requires matching shapes, got {raw.shape} vs {gain.shape}"
        )
    return Frame(raw.values / gain.values)


def gain_compensate_offset(offset_raw: OffsetMap, gain: GainMap) -> OffsetMap:
    """Convert a raw offset map to scene units (divide by gain)."""
    if offset_raw.compensated:
        raise ValueError("offset map is already gain-compensated")
    if offset_raw.shape != gain.shape:
        raise ValueError(
            f"shape mismatch: offset {offset_raw.shape} vs gain {gain.shape}"
        )
    return OffsetMap(offset_raw.values / gain.values, compensated=True)


def compensate_offset(frame: Frame, offset_estimate: OffsetMap) -> Frame:
    """Subtract an offset estimate from a gain-compensated frame."""
    if not offset_estimate.compensated:
        raise ValueError("compensate_offset expects a gain-compensated offset map")
    if frame.shape != offset_estimate.shape:
        raise ValueError(
            f"shape mismatch: frame {frame.shape} vs offset {offset_estimate.shape}"
        )
    return Frame(frame.values - offset_estimate.values)


def save_offset_map(path, offset: OffsetMap, seed: int | None = None) -> None:
    """Store an offset map as PFM plus a JSON sidecar with its flags."""
    write_pfm(path, offset.values)
    meta = {"kind": "offset", "compensated": offset.compensated}
    if seed is not None:
        meta["seed"] = int(seed)
    write_sidecar(path, meta)


def load_offset_map(path) -> OffsetMap:
    values = read_pfm(path)
    meta = read_sidecar(path)
    if meta.get("kind") != "offset":
        raise ValueError(f"{path}: sidecar does not describe an offset map")
    return OffsetMap(values, compensated=bool(meta["compensated"]))


def save_gain_map(path, gain: GainMap, seed: int | None = None) -> None:
    write_pfm(path, gain.values)
    meta: dict = {"kind": "gain"}
    if seed is not None:
        meta["seed"] = int(seed)
    write_sidecar(path, meta)


def load_gain_map(path) -> GainMap:
    values = read_pfm(path)
    meta = read_sidecar(path)
    if meta.get("kind") != "gain":
        raise ValueError(f"{path}: sidecar does not describe a gain map")
    return GainMap(values)
