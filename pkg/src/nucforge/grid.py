"""Dense 2-D grids and the difference operators the whole pipeline is built on.

Conventions used throughout the package:

* grids are row-major float64 arrays indexed ``(row i, column j)``;
* the horizontal forward difference of an ``H x W`` grid lives on an
  ``H x (W-1)`` grid, the vertical one on ``(H-1) x W`` -- difference maps
  are stored at their natural reduced size so the valid region is explicit;
* grid values are immutable after construction and safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Frame",
    "DxMap",
    "DyMap",
    "forward_diff_x",
    "forward_diff_y",
    "temporal_diff",
    "frame_stats",
]


def _as_grid(values, min_height: int, min_width: int, name: str) -> np.ndarray:
    """Coerce to a finite, read-only float64 2-D array with minimum dims."""
    a = np.array(values, dtype=np.float64, copy=True)
    if a.ndim != 2:
        raise ValueError(f"{name} values must be 2-D, got shape {a.shape}")
    h, w = a.shape
    if h < min_height or w < min_width:
        raise ValueError(
            f"{name} must be at least {min_height}x{min_width}, got {h}x{w}"
        )
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} values must all be finite")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Frame:
    """An ``H x W`` real-valued grid (radiance, readout or offset units).

    Requires at least two samples per axis so the difference operators are
    defined everywhere.
    """

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_grid(self.values, 2, 2, "Frame"))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True, eq=False)
class DxMap:
    """Horizontal difference grid, ``H x (W-1)`` relative to its source frame."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_grid(self.values, 2, 1, "DxMap"))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True, eq=False)
class DyMap:
    """Vertical difference grid, ``(H-1) x W`` relative to its source frame."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_grid(self.values, 1, 2, "DyMap"))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def forward_diff_x(f: Frame) -> DxMap:
    """Forward horizontal difference: ``out(i,j) = f(i,j+1) - f(i,j)``."""
    return DxMap(np.diff(f.values, axis=1))


def forward_diff_y(f: Frame) -> DyMap:
    """Forward vertical difference: ``out(i,j) = f(i+1,j) - f(i,j)``."""
    return DyMap(np.diff(f.values, axis=0))


def temporal_diff(a: Frame, b: Frame) -> Frame:
    """Frame-to-frame difference at fixed pixels: ``out = b - a``."""
    if a.shape != b.shape:
        raise ValueError(
            f"temporal_diff requires equal shapes, got {a.shape} vs {b.shape}"
        )
    return Frame(b.values - a.values)


def frame_stats(f: Frame) -> tuple[float, float]:
    """Arithmetic mean and population standard deviation of a frame."""
    return float(f.values.mean()), float(f.values.std())
