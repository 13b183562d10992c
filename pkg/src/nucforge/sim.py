"""Synthetic dither experiments: scene/offset generators, shift errors, runs.

The scene generator evaluates an analytic field that is periodic over the
frame domain (low-frequency cosine bed plus drifting smooth bumps), so
integer translations are exact cyclic resamples and every frame normalizes
to unit standard deviation without breaking translation identities.  The
offset generator mixes low-frequency structure, a high-frequency
stripe/checker pattern and per-pixel Gaussian constants, scaled to a target
standard deviation relative to the unit-std scene.

All randomness is derived from a single master seed through tagged seed
sequences, and sensor noise uses counter-indexed draws, so a run is a pure
function of its configuration: re-running any experiment reproduces it
bit for bit, independent of execution order.
"""

from __future__ import annotations

import dataclasses
import hashlib
import time
from dataclasses import dataclass, field

import numpy as np

from .dither import Axis, DifferenceSample, cycle_difference, estimate_gradient
from .grid import Frame, frame_stats
from .poisson import reconstruct_offset
from .sensor import (
    GainMap,
    OffsetMap,
    TemporalNoiseModel,
    capture,
    gain_compensate,
    gain_compensate_offset,
    load_gain_map,
)

__all__ = [
    "SceneModel",
    "FpnModel",
    "ShiftErrorModel",
    "ExperimentConfig",
    "ExperimentResult",
    "derive_seed",
    "reseed",
    "gen_scene_frame",
    "gen_fpn",
    "sample_shifted",
    "draw_shift",
    "run_experiment",
]

MAX_SHIFT = 4.0


def derive_seed(master_seed: int, *tags: int | str) -> int:
    """Stable 64-bit seed from a master seed and a tag path."""
    words = [int(master_seed)]
    for t in tags:
        if isinstance(t, str):
            words.append(int.from_bytes(hashlib.sha256(t.encode()).digest()[:8], "big"))
        else:
            words.append(int(t))
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SceneModel:
    """Parametric drifting scene, normalized to unit std per frame.

    ``background_amplitude`` scales a smooth low-frequency bed;
    ``blob_count`` bumps with amplitudes, widths (pixels) and drift speeds
    (pixels/frame) drawn from the given ranges move through the scene;
    ``global_drift`` pans the whole field in pixels/frame.
    """

    height: int = 240
    width: int = 320
    background_amplitude: float = 0.4
    blob_count: int = 8
    blob_amplitude: tuple[float, float] = (0.6, 1.6)
    blob_width: tuple[float, float] = (4.0, 10.0)
    blob_drift: tuple[float, float] = (0.3, 0.9)
    global_drift: tuple[float, float] = (0.15, -0.1)
    seed: int = 0

    def __post_init__(self):
        if self.height < 16 or self.width < 16:
            raise ValueError("scene dimensions must be at least 16x16")
        if self.blob_count < 0:
            raise ValueError("blob_count must be >= 0")
        if self.blob_width[0] < 1.0:
            raise ValueError("blob widths must be >= 1 pixel")
        for lo, hi in (self.blob_amplitude, self.blob_width, self.blob_drift):
            if hi < lo:
                raise ValueError("model ranges must satisfy lo <= hi")


@dataclass(frozen=True)
class FpnModel:
    """Fixed-pattern offset generator: structure plus per-pixel constants.

    ``strength`` is the std of the resulting map in units of the unit-std
    scene; the structured/pixel amplitudes only set the mix.
    """

    structured_amplitude: float = 1.0
    pixel_noise_amplitude: float = 0.3
    strength: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.strength < 0:
            raise ValueError("fpn strength must be >= 0")
        if self.structured_amplitude < 0 or self.pixel_noise_amplitude < 0:
            raise ValueError("fpn amplitudes must be >= 0")


@dataclass(frozen=True)
class ShiftErrorModel:
    """Gaussian errors on the commanded one-pixel dither translation.

    Longitudinal component is drawn around ``mean_longitudinal`` (1.0 for a
    perfect actuator), transverse around zero.
    """

    mean_longitudinal: float = 1.0
    sigma_longitudinal: float = 0.0
    sigma_transverse: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma_longitudinal < 0 or self.sigma_transverse < 0:
            raise ValueError("shift sigmas must be >= 0")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one simulated dither experiment.

    ``gain`` is either a uniform gain value or a path to a gain-map PFM.
    Component seeds are derived from ``master_seed`` (see ``reseed``).
    """

    scene: SceneModel = field(default_factory=SceneModel)
    fpn: FpnModel = field(default_factory=FpnModel)
    shift_error: ShiftErrorModel = field(default_factory=ShiftErrorModel)
    gain: float | str = 1.0
    temporal_sigma: float = 0.0003
    cycles_per_axis: int = 32
    master_seed: int = 0

    def __post_init__(self):
        if self.cycles_per_axis < 1:
            raise ValueError("cycles_per_axis must be >= 1")
        if self.temporal_sigma < 0:
            raise ValueError("temporal_sigma must be >= 0")
        if self.master_seed < 0:
            raise ValueError("master_seed must be >= 0")


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    """Outcome of one experiment, with the truth kept for evaluation.

    ``normalized_error`` is the std of (estimate - truth), mean removed,
    divided by the scene std; ``corrupted_error`` applies the same metric
    to a zero estimate (baseline severity of the uncorrected offset).
    Cells whose dithered source ever left the frame are excluded via
    ``valid_mask``.
    """

    estimated_offset: OffsetMap
    true_offset: OffsetMap
    normalized_error: float
    corrupted_error: float
    timings: dict[str, float]
    residual_norm: float
    valid_mask: np.ndarray
    scene_reference: Frame
    corrupted_reference: Frame


def reseed(cfg: ExperimentConfig, master_seed: int) -> ExperimentConfig:
    """Rebuild a config with all component seeds derived from a master seed."""
    return dataclasses.replace(
        cfg,
        master_seed=master_seed,
        scene=dataclasses.replace(cfg.scene, seed=derive_seed(master_seed, "scene")),
        fpn=dataclasses.replace(cfg.fpn, seed=derive_seed(master_seed, "fpn")),
        shift_error=dataclasses.replace(
            cfg.shift_error, seed=derive_seed(master_seed, "shift")
        ),
    )


# Low-frequency lattice shared by the scene bed and the structured offset:
# integer cycle counts across the frame keep every term periodic.
_LOW_FREQS = ((0, 1), (1, 0), (1, 1), (1, -1), (2, 1), (1, 2))


def _cosine_bed(
    rng: np.random.Generator, xs: np.ndarray, ys: np.ndarray, w: int, h: int
) -> np.ndarray:
    out = np.zeros((ys.size, xs.size))
    amps = rng.uniform(0.4, 1.0, size=len(_LOW_FREQS))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=len(_LOW_FREQS))
    for (p, q), a, phi in zip(_LOW_FREQS, amps, phases):
        out += a * np.cos(
            2.0 * np.pi * (p * xs[None, :] / w + q * ys[:, None] / h) + phi
        )
    return out


def _periodic_bump(
    xs: np.ndarray, ys: np.ndarray, cx: float, cy: float, width: float, w: int, h: int
) -> np.ndarray:
    """Smooth periodic bump; behaves like a Gaussian of the given width."""
    kx = (w / (2.0 * np.pi * width)) ** 2
    ky = (h / (2.0 * np.pi * width)) ** 2
    fx = np.exp(kx * (np.cos(2.0 * np.pi * (xs - cx) / w) - 1.0))
    fy = np.exp(ky * (np.cos(2.0 * np.pi * (ys - cy) / h) - 1.0))
    return fy[:, None] * fx[None, :]


def gen_scene_frame(model: SceneModel, t: int) -> Frame:
    """Frame ``t`` of the scene sequence; pure function of ``(model, t)``."""
    h, w = model.height, model.width
    rng = np.random.default_rng(np.random.SeedSequence([int(model.seed), 1]))

    xs = np.arange(w, dtype=np.float64) + model.global_drift[0] * t
    ys = np.arange(h, dtype=np.float64) + model.global_drift[1] * t

    fld = model.background_amplitude * _cosine_bed(rng, xs, ys, w, h)

    n = model.blob_count
    bx = rng.uniform(0.0, w, size=n)
    by = rng.uniform(0.0, h, size=n)
    amps = rng.uniform(*model.blob_amplitude, size=n) * rng.choice([-1.0, 1.0], size=n)
    widths = rng.uniform(*model.blob_width, size=n)
    speeds = rng.uniform(*model.blob_drift, size=n)
    angles = rng.uniform(0.0, 2.0 * np.pi, size=n)
    for b in range(n):
        cx = bx[b] + speeds[b] * np.cos(angles[b]) * t
        cy = by[b] + speeds[b] * np.sin(angles[b]) * t
        fld += amps[b] * _periodic_bump(xs, ys, cx, cy, widths[b], w, h)

    std = fld.std()
    if std < 1e-12:
        raise ValueError("scene model produced a constant field; cannot normalize")
    return Frame(fld / std)


def gen_fpn(model: FpnModel, height: int, width: int) -> OffsetMap:
    """Generate a raw offset map with std ``strength`` and zero mean."""
    if model.strength == 0.0:
        return OffsetMap(np.zeros((height, width)), compensated=False)
    rng = np.random.default_rng(np.random.SeedSequence([int(model.seed), 2]))

    xs = np.arange(width, dtype=np.float64)
    ys = np.arange(height, dtype=np.float64)
    low = _cosine_bed(rng, xs, ys, width, height)
    # Alternating columns plus a checkerboard: the high-frequency content.
    col_sign = np.where(np.arange(width) % 2 == 0, 1.0, -1.0)
    row_sign = np.where(np.arange(height) % 2 == 0, 1.0, -1.0)
    stripes = rng.uniform(0.4, 0.8) * np.broadcast_to(col_sign, (height, width))
    checker = rng.uniform(0.4, 0.8) * row_sign[:, None] * col_sign[None, :]

    raw = model.structured_amplitude * (low + stripes + checker)
    raw = raw + model.pixel_noise_amplitude * rng.standard_normal((height, width))
    raw = raw - raw.mean()
    std = raw.std()
    if std < 1e-12:
        raise ValueError("fpn model has zero variance; cannot scale to strength")
    return OffsetMap(raw * (model.strength / std), compensated=False)


def sample_shifted(source, t: int, shift: tuple[float, float]) -> tuple[Frame, np.ndarray]:
    """Sample the scene at positions displaced by ``(dx, dy)`` pixels.

    ``source`` is a ``SceneModel`` or a callable ``t -> Frame``.  Output
    cell ``(i,j)`` holds the bilinear sample at ``(i+dy, j+dx)``; cells
    whose source falls outside the domain are clamped to the nearest valid
    sample and flagged False in the returned validity mask.
    """
    dx, dy = float(shift[0]), float(shift[1])
    if abs(dx) > MAX_SHIFT or abs(dy) > MAX_SHIFT:
        raise ValueError(f"shift {shift} exceeds the +/-{MAX_SHIFT} pixel bound")
    frame = source(t) if callable(source) else gen_scene_frame(source, t)
    v = frame.values
    h, w = v.shape

    cols = np.arange(w, dtype=np.float64) + dx
    rows = np.arange(h, dtype=np.float64) + dy
    col_ok = (cols >= 0.0) & (cols <= w - 1.0)
    row_ok = (rows >= 0.0) & (rows <= h - 1.0)
    cols = np.clip(cols, 0.0, w - 1.0)
    rows = np.clip(rows, 0.0, h - 1.0)

    c0 = np.minimum(np.floor(cols), w - 2).astype(np.intp)
    r0 = np.minimum(np.floor(rows), h - 2).astype(np.intp)
    wc = cols - c0
    wr = rows - r0

    f00 = v[np.ix_(r0, c0)]
    f01 = v[np.ix_(r0, c0 + 1)]
    f10 = v[np.ix_(r0 + 1, c0)]
    f11 = v[np.ix_(r0 + 1, c0 + 1)]
    top = f00 * (1.0 - wc)[None, :] + f01 * wc[None, :]
    bot = f10 * (1.0 - wc)[None, :] + f11 * wc[None, :]
    out = top * (1.0 - wr)[:, None] + bot * wr[:, None]

    return Frame(out), row_ok[:, None] & col_ok[None, :]


def draw_shift(model: ShiftErrorModel, axis: Axis, cycle: int) -> tuple[float, float]:
    """Actual translation applied in one cycle; redrawn per (axis, cycle)."""
    axis_code = 0 if axis is Axis.HORIZONTAL else 1
    rng = np.random.default_rng(
        np.random.SeedSequence([int(model.seed), 3, axis_code, int(cycle)])
    )
    lon = model.mean_longitudinal + rng.standard_normal() * model.sigma_longitudinal
    trans = rng.standard_normal() * model.sigma_transverse
    if axis is Axis.HORIZONTAL:
        return lon, trans
    return trans, lon


def _resolve_gain(cfg: ExperimentConfig) -> GainMap:
    if isinstance(cfg.gain, str):
        return load_gain_map(cfg.gain)
    return GainMap.uniform(cfg.scene.height, cfg.scene.width, float(cfg.gain))


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run one full dither experiment and score it against the truth.

    Per axis, each cycle captures a fresh base frame and a shifted frame
    (commanded +1 px along the axis, actual translation drawn from the
    shift-error model -- the estimator always assumes the exact shift),
    gain-compensates both and forms the cycle difference.  Samples are
    aggregated by per-cell median, the offset is reconstructed from the
    gradient estimate, and the residual metric is computed over the cells
    that stayed valid in every shifted capture.
    """
    t_start = time.perf_counter()
    h, w = cfg.scene.height, cfg.scene.width
    gain = _resolve_gain(cfg)
    if gain.shape != (h, w):
        raise ValueError(f"gain shape {gain.shape} does not match scene {h}x{w}")
    offset_raw = gen_fpn(cfg.fpn, h, w)
    truth = gain_compensate_offset(offset_raw, gain)
    noise = TemporalNoiseModel(cfg.temporal_sigma, derive_seed(cfg.master_seed, "noise"))

    samples: dict[Axis, list[DifferenceSample]] = {
        Axis.HORIZONTAL: [],
        Axis.VERTICAL: [],
    }
    valid = np.ones((h, w), dtype=bool)
    scene_ref: Frame | None = None
    corrupted_ref: Frame | None = None
    t_frame = 0
    draw = 0

    t_sim = time.perf_counter()
    for axis in (Axis.HORIZONTAL, Axis.VERTICAL):
        for cycle in range(cfg.cycles_per_axis):
            base_scene = gen_scene_frame(cfg.scene, t_frame)
            base_raw = capture(base_scene, gain, offset_raw, noise, draw)
            shift = draw_shift(cfg.shift_error, axis, cycle)
            shifted_scene, ok = sample_shifted(cfg.scene, t_frame + 1, shift)
            shifted_raw = capture(shifted_scene, gain, offset_raw, noise, draw + 1)
            valid &= ok
            base = gain_compensate(base_raw, gain)
            shifted = gain_compensate(shifted_raw, gain)
            samples[axis].append(cycle_difference(base, shifted, axis))
            if scene_ref is None:
                scene_ref = base_scene
                corrupted_ref = base
            t_frame += 2
            draw += 2
    sim_s = time.perf_counter() - t_sim

    t_agg = time.perf_counter()
    grad = estimate_gradient(samples[Axis.HORIZONTAL], samples[Axis.VERTICAL])
    agg_s = time.perf_counter() - t_agg

    t_rec = time.perf_counter()
    report = reconstruct_offset(grad)
    rec_s = time.perf_counter() - t_rec

    scene_std = frame_stats(scene_ref)[1]
    diff = (report.offset.values - truth.values)[valid]
    normalized_error = float(diff.std() / scene_std)
    corrupted_error = float(truth.values[valid].std() / scene_std)

    return ExperimentResult(
        estimated_offset=report.offset,
        true_offset=truth,
        normalized_error=normalized_error,
        corrupted_error=corrupted_error,
        timings={
            "simulate_s": sim_s,
            "aggregate_s": agg_s,
            "reconstruct_s": rec_s,
            "total_s": time.perf_counter() - t_start,
        },
        residual_norm=report.residual_norm,
        valid_mask=valid,
        scene_reference=scene_ref,
        corrupted_reference=corrupted_ref,
    )
