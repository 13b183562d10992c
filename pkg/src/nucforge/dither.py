"""Offset-derivative estimation from dither frame pairs.

One dither cycle captures a base frame, then a frame taken after a one-pixel
detector shift along an axis, then returns to base.  For the horizontal
axis the per-cycle sample

    sample(i,j) = base(i,j+1) - shifted(i,j)

equals the offset's horizontal difference plus a scene temporal-difference
term; the scene term is small and sign-varying for moving scenes, so a
per-cell median over many cycles isolates the offset derivative.  The
vertical axis is treated identically with rows and columns swapped.

The last column (horizontal) / last row (vertical) of the shifted frame is
never read: those are the only cells where the pairing is undefined.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .formats import read_pfm, write_pfm
from .grid import DxMap, DyMap, Frame, forward_diff_x, forward_diff_y

__all__ = [
    "Axis",
    "DifferenceSample",
    "GradientField",
    "cycle_difference",
    "aggregate_median",
    "estimate_gradient",
    "gradient_of_frame",
    "save_samples",
    "load_samples",
]


class Axis(enum.Enum):
    HORIZONTAL = "x"
    VERTICAL = "y"


@dataclass(frozen=True, eq=False)
class DifferenceSample:
    """One cycle's difference grid for a given axis.

    Horizontal samples are ``H x (W-1)``, vertical ones ``(H-1) x W``.
    """

    axis: Axis
    values: np.ndarray

    def __post_init__(self):
        a = np.array(self.values, dtype=np.float64, copy=True)
        if a.ndim != 2:
            raise ValueError(f"sample values must be 2-D, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("sample values must all be finite")
        a.setflags(write=False)
        object.__setattr__(self, "values", a)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True, eq=False)
class GradientField:
    """Estimated offset derivatives along both axes, plus cycle counts."""

    dx: DxMap
    dy: DyMap
    cycles_x: int = 1
    cycles_y: int = 1

    def __post_init__(self):
        h, w = self.dx.height, self.dy.width
        if self.dx.shape != (h, w - 1) or self.dy.shape != (h - 1, w):
            raise ValueError(
                f"inconsistent gradient field: dx {self.dx.shape}, dy {self.dy.shape}"
            )
        if self.cycles_x < 1 or self.cycles_y < 1:
            raise ValueError("cycle counts must be >= 1")

    @property
    def height(self) -> int:
        return self.dx.height

    @property
    def width(self) -> int:
        return self.dy.width

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width


def gradient_of_frame(f: Frame) -> GradientField:
    """The exact (integrable) forward-difference gradient of a frame."""
    return GradientField(forward_diff_x(f), forward_diff_y(f))


def cycle_difference(base: Frame, shifted: Frame, axis: Axis) -> DifferenceSample:
    """Per-cycle difference sample from a (base, +1-px-shifted) frame pair.

    Both frames must be gain-compensated and share dimensions; ``shifted``
    is the capture taken after the one-pixel detector shift along ``axis``.
    Under a static scene and an exact shift the sample equals the offset's
    forward difference exactly.
    """
    if base.shape != shifted.shape:
        raise ValueError(
            f"cycle_difference requires equal shapes, got {base.shape} vs {shifted.shape}"
        )
    if axis is Axis.HORIZONTAL:
        values = base.values[:, 1:] - shifted.values[:, :-1]
    else:
        values = base.values[1:, :] - shifted.values[:-1, :]
    return DifferenceSample(axis, values)


def aggregate_median(
    samples: Sequence[DifferenceSample], axis: Axis
) -> DxMap | DyMap:
    """Per-cell median across cycles; even counts average the middle pair."""
    if len(samples) == 0:
        raise ValueError("aggregate_median requires at least one sample")
    shape = samples[0].shape
    for s in samples:
        if s.axis is not axis:
            raise ValueError(
                f"mixed axes in aggregation: expected {axis}, got {s.axis}"
            )
        if s.shape != shape:
            raise ValueError(
                f"mixed sample shapes in aggregation: {shape} vs {s.shape}"
            )
    med = np.median(np.stack([s.values for s in samples]), axis=0)
    return DxMap(med) if axis is Axis.HORIZONTAL else DyMap(med)


def estimate_gradient(
    x_samples: Sequence[DifferenceSample], y_samples: Sequence[DifferenceSample]
) -> GradientField:
    """Aggregate per-axis cycle samples into one gradient-field estimate."""
    dx = aggregate_median(x_samples, Axis.HORIZONTAL)
    dy = aggregate_median(y_samples, Axis.VERTICAL)
    return GradientField(dx, dy, cycles_x=len(x_samples), cycles_y=len(y_samples))


def save_samples(
    directory, samples: Sequence[DifferenceSample], seed: int | None = None
) -> Path:
    """Persist a sample collection as PFM files plus a JSON manifest.

    Lets long dither campaigns resume: each sample keeps its axis and cycle
    index, and ``load_samples`` restores the original order.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for cycle, s in enumerate(samples):
        name = f"sample_{s.axis.value}_{cycle:04d}.pfm"
        write_pfm(directory / name, s.values)
        entries.append({"axis": s.axis.value, "cycle": cycle, "file": name})
    manifest: dict = {"samples": entries}
    if seed is not None:
        manifest["seed"] = int(seed)
    manifest_path = directory / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest_path


def load_samples(directory) -> list[DifferenceSample]:
    directory = Path(directory)
    with open(directory / "manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    out = []
    for entry in sorted(manifest["samples"], key=lambda e: e["cycle"]):
        axis = Axis(entry["axis"])
        out.append(DifferenceSample(axis, read_pfm(directory / entry["file"])))
    return out
