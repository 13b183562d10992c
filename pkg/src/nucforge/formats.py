"""Binary PGM (P5) and PFM readers/writers.

PFM is the lossless interchange format for float grids: grayscale ``Pf``
header, little-endian float32 payload (scale line ``-1.0``), rows stored
bottom-up per the portable-float-map convention.  PGM covers quantized
export: binary ``P5``, 8-bit or big-endian 16-bit samples.

Both readers reject dimension lines exceeding ``MAX_DIM`` per axis.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

__all__ = [
    "MAX_DIM",
    "read_pfm",
    "write_pfm",
    "read_pgm",
    "write_pgm",
    "read_sidecar",
    "write_sidecar",
    "sidecar_path",
]

MAX_DIM = 16384


def _check_dims(w: int, h: int, path) -> None:
    if w <= 0 or h <= 0:
        raise ValueError(f"{path}: non-positive image dimensions {w}x{h}")
    if w > MAX_DIM or h > MAX_DIM:
        raise ValueError(
            f"{path}: dimensions {w}x{h} exceed the {MAX_DIM} per-axis limit"
        )


def write_pfm(path, values: np.ndarray) -> None:
    """Write a 2-D array as grayscale PFM (float32, little-endian)."""
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"PFM payload must be 2-D, got shape {a.shape}")
    h, w = a.shape
    _check_dims(w, h, path)
    with open(path, "wb") as fh:
        fh.write(f"Pf\n{w} {h}\n-1.0\n".encode("ascii"))
        fh.write(np.ascontiguousarray(a[::-1, :], dtype="<f4").tobytes())


def read_pfm(path) -> np.ndarray:
    """Read a grayscale PFM into a float64 array (top-down row order)."""
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"Pf":
            raise ValueError(f"{path}: expected grayscale PFM magic 'Pf', got {magic!r}")
        dims = fh.readline().split()
        if len(dims) != 2:
            raise ValueError(f"{path}: malformed PFM dimension line")
        w, h = int(dims[0]), int(dims[1])
        _check_dims(w, h, path)
        scale = float(fh.readline().strip())
        if scale == 0.0:
            raise ValueError(f"{path}: PFM scale must be non-zero")
        endian = "<" if scale < 0 else ">"
        payload = fh.read(4 * w * h)
    if len(payload) != 4 * w * h:
        raise ValueError(f"{path}: truncated PFM payload")
    a = np.frombuffer(payload, dtype=f"{endian}f4").reshape(h, w)
    return a[::-1, :].astype(np.float64)


def write_pgm(
    path,
    values: np.ndarray,
    maxval: int = 65535,
    lo: float | None = None,
    hi: float | None = None,
) -> tuple[float, float]:
    """Write a 2-D array as binary PGM, min-max quantized to ``[0, maxval]``.

    The mapping endpoints default to the array's min/max; a constant image
    maps to all zeros.  Returns ``(lo, hi)`` so callers can record the
    quantization in a sidecar.
    """
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"PGM payload must be 2-D, got shape {a.shape}")
    if maxval not in (255, 65535):
        raise ValueError("maxval must be 255 (8-bit) or 65535 (16-bit)")
    h, w = a.shape
    _check_dims(w, h, path)
    lo = float(a.min()) if lo is None else float(lo)
    hi = float(a.max()) if hi is None else float(hi)
    if hi > lo:
        q = np.rint((a - lo) / (hi - lo) * maxval)
    else:
        q = np.zeros_like(a)
    q = np.clip(q, 0, maxval)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(q, dtype=dtype).tobytes())
    return lo, hi


def _pgm_tokens(fh, count: int) -> list[bytes]:
    """Pull whitespace-separated header tokens, skipping '#' comments."""
    tokens: list[bytes] = []
    while len(tokens) < count:
        line = fh.readline()
        if not line:
            raise ValueError("unexpected end of PGM header")
        hash_pos = line.find(b"#")
        if hash_pos >= 0:
            line = line[:hash_pos]
        tokens.extend(line.split())
    return tokens


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Read a binary PGM; returns ``(float64 sample array, maxval)``."""
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"P5":
            raise ValueError(f"{path}: expected binary PGM magic 'P5', got {magic!r}")
        w, h, maxval = (int(t) for t in _pgm_tokens(fh, 3))
        _check_dims(w, h, path)
        if not 0 < maxval < 65536:
            raise ValueError(f"{path}: invalid PGM maxval {maxval}")
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        payload = fh.read(dtype.itemsize * w * h)
    if len(payload) != dtype.itemsize * w * h:
        raise ValueError(f"{path}: truncated PGM payload")
    return np.frombuffer(payload, dtype=dtype).reshape(h, w).astype(np.float64), maxval


def sidecar_path(path) -> Path:
    """Path of the JSON sidecar accompanying an image file."""
    p = Path(path)
    return p.with_suffix(p.suffix + ".json") if p.suffix != ".json" else p


def write_sidecar(path, metadata: dict) -> Path:
    side = sidecar_path(path)
    with open(side, "w", encoding="utf-8") as fh:
        json.dump(metadata, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return side


def read_sidecar(path) -> dict:
    with open(sidecar_path(path), encoding="utf-8") as fh:
        return json.load(fh)
