"""Reflectance cube generation pipeline for 5x5 mosaic raw frames.

Stage order is fixed:

  1. crop            cut the active window, origin and size on the tile grid
  2. subtract_bias   remove the dark level, clamped at zero
  3. reflectance     divide by the bias-removed white reference
  4. demosaic        gather each band's samples, 1/5 resolution loss
  5. spatial filter  optional box / Gaussian smoothing per band
  6. align           translate every band plane to the tile centre (bilinear)
  7. scaling         optional in-frame illuminant estimate (see scaling.py)
  8. clip            clamp to [0, 1]; artificial sources become 1.0
  9. pixel norm      optional per-pixel signature normalization

All real-valued math is float32.  Stages are pure: frames can be processed in
parallel with a shared read-only white reference.  `process_frame` times each
stage and returns the trace alongside the cube.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import ndimage

from .errors import (AlignmentError, BoundsError, CalibrationError, ConfigError,
                     EstimationError, ShapeError, StageFailure)
from .normalize import normalize_pixelwise
from .scaling import (RejectionParams, ScalingReport, apply_scaling,
                      fallback_report, find_max_albedo)
from .sensor import (BANDS, CENTER, MAX_COUNT, TILE, BiasLike, CameraConfig,
                     HsiCube, MosaicLayout, RawFrame, WhiteReference,
                     band_offset, bilinear_shift)

FrameLike = Union[RawFrame, np.ndarray]

# The paper-style processing variants: (illuminant scaling, pixel norm).
VARIANTS = {
    "unscaled-pixelnorm": (False, True),
    "scaled-pixelnorm": (True, True),
    "scaled": (True, False),
}


@dataclass(frozen=True)
class FilterSpec:
    """Optional spatial denoiser: 'box' or 'gaussian', radius in cube pixels."""

    kind: str
    radius: int
    sigma: float = 0.8

    def __post_init__(self):
        if self.kind not in ("box", "gaussian"):
            raise ConfigError(f"unsupported filter kind {self.kind!r}")
        if self.radius < 1:
            raise ConfigError(f"filter radius must be >= 1, got {self.radius}")
        if self.kind == "gaussian" and self.sigma <= 0:
            raise ConfigError("gaussian sigma must be positive")

    @classmethod
    def from_string(cls, text: str) -> "FilterSpec":
        """Parse 'kind:radius' or 'gaussian:radius:sigma'."""
        parts = text.split(":")
        if len(parts) < 2:
            raise ConfigError(f"filter spec {text!r} must look like kind:radius")
        kind = parts[0].strip()
        try:
            radius = int(parts[1])
            sigma = float(parts[2]) if len(parts) > 2 else 0.8
        except ValueError as exc:
            raise ConfigError(f"bad filter spec {text!r}: {exc}") from None
        return cls(kind=kind, radius=radius, sigma=sigma)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything `process_frame` needs besides the raw frame itself."""

    camera: CameraConfig
    layout: MosaicLayout
    white: WhiteReference
    spatial_filter: Optional[FilterSpec] = None
    enable_illuminant_scaling: bool = False
    enable_pixel_norm: bool = False
    rejection: RejectionParams = field(default_factory=RejectionParams)

    @classmethod
    def variant_flags(cls, name: str) -> tuple[bool, bool]:
        """(scaling, pixel norm) flags for a named processing variant."""
        try:
            return VARIANTS[name]
        except KeyError:
            raise ConfigError(
                f"unknown variant {name!r}; choose from {sorted(VARIANTS)}") from None


@dataclass
class StageTrace:
    """Wall time per executed stage, microseconds, in execution order."""

    entries: list[tuple[str, int]] = field(default_factory=list)

    def add(self, stage: str, micros: int) -> None:
        self.entries.append((stage, micros))

    def stages(self) -> list[str]:
        return [name for name, _ in self.entries]

    def total_us(self) -> int:
        return sum(us for _, us in self.entries)

    def to_text(self) -> str:
        lines = [f"{name:<20s} {us:>10d} us" for name, us in self.entries]
        lines.append(f"{'total':<20s} {self.total_us():>10d} us")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = ["stage,us"]
        lines += [f"{name},{us}" for name, us in self.entries]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ProcessResult:
    cube: HsiCube
    trace: StageTrace
    scaling: Optional[ScalingReport] = None


def _frame_values(frame: FrameLike) -> np.ndarray:
    return frame.values if isinstance(frame, RawFrame) else np.asarray(frame)


def crop_frame(raw: RawFrame, rect: tuple[int, int, int, int]) -> RawFrame:
    """Cut (x, y, w, h); everything must sit on the 5-pixel mosaic grid."""
    x, y, w, h = (int(n) for n in rect)
    if w <= 0 or h <= 0:
        raise BoundsError(f"crop size must be positive, got {w}x{h}")
    if x % TILE or y % TILE:
        raise AlignmentError(
            f"crop origin ({x}, {y}) not aligned to the {TILE}x{TILE} mosaic grid")
    if w % TILE or h % TILE:
        raise AlignmentError(f"crop size {w}x{h} must be multiples of {TILE}")
    if x < 0 or y < 0 or x + w > raw.width or y + h > raw.height:
        raise BoundsError(
            f"crop (x={x}, y={y}, w={w}, h={h}) exceeds frame "
            f"{raw.width}x{raw.height}")
    return RawFrame(values=raw.values[y:y + h, x:x + w].copy())


def subtract_bias(raw: RawFrame, bias: BiasLike) -> RawFrame:
    """Dark-level removal on integer counts: max(raw - bias, 0)."""
    b = np.asarray(bias)
    if b.ndim not in (0, 2):
        raise ShapeError("bias must be a scalar or a per-pixel frame")
    if b.ndim == 2 and b.shape != raw.values.shape:
        raise ShapeError(f"bias shape {b.shape} != frame shape {raw.values.shape}")
    if not np.issubdtype(b.dtype, np.integer):
        if not np.all(np.equal(np.mod(b, 1), 0)):
            raise ConfigError("integer-frame bias subtraction needs whole counts")
        b = b.astype(np.int64)
    out = np.maximum(raw.values.astype(np.int64) - b, 0)
    return RawFrame(values=out.astype(np.uint16))


def _debias_float(values: np.ndarray, bias: BiasLike) -> np.ndarray:
    b = np.asarray(bias, dtype=np.float32)
    if b.ndim == 2 and b.shape != values.shape:
        raise ShapeError(f"bias shape {b.shape} != frame shape {values.shape}")
    return np.maximum(values.astype(np.float32) - b, np.float32(0.0))


def _white_denominator(values_shape: tuple[int, int], white: WhiteReference,
                       bias: BiasLike) -> np.ndarray:
    b = np.asarray(bias, dtype=np.float32)
    denom = white.frame - b
    if denom.shape != values_shape:
        raise ShapeError(
            f"white frame shape {white.frame.shape} != frame shape {values_shape}")
    if float(denom.min()) <= 0.0:
        idx = np.unravel_index(int(np.argmin(denom)), denom.shape)
        raise CalibrationError(
            f"white reference not division-safe at pixel (row={idx[0]}, "
            f"col={idx[1]})")
    return denom


def reflectance_correct(raw: FrameLike, white: WhiteReference,
                        bias: BiasLike = 0) -> np.ndarray:
    """(raw - bias)+ / (white - bias), float32; may exceed 1 before clipping."""
    values = _frame_values(raw)
    numer = _debias_float(values, bias)
    denom = _white_denominator(numer.shape, white, bias)
    return numer / denom


def demosaic(frame: FrameLike, layout: MosaicLayout) -> HsiCube:
    """Gather each band's mosaic samples into (H/5, W/5, 25), no interpolation."""
    values = _frame_values(frame)
    if values.ndim != 2:
        raise ShapeError(f"expected a 2-D frame, got shape {values.shape}")
    h, w = values.shape
    if h % TILE or w % TILE:
        raise ShapeError(f"frame dimensions {h}x{w} are not multiples of {TILE}")
    tiles = values.reshape(h // TILE, TILE, w // TILE, TILE)
    cells = tiles.transpose(0, 2, 1, 3).reshape(h // TILE, w // TILE, BANDS)
    offs = layout.offsets()
    cell_of_band = offs[:, 0] * TILE + offs[:, 1]
    cube = np.ascontiguousarray(cells[:, :, cell_of_band], dtype=np.float32)
    return HsiCube(values=cube, band_centers_nm=layout.band_centers_nm)


def spatial_filter(cube: HsiCube, spec: Optional[FilterSpec]) -> HsiCube:
    """Per-band smoothing with replicated borders; identity when spec is None."""
    if spec is None:
        return cube
    size = 2 * spec.radius + 1
    if spec.kind == "box":
        out = ndimage.uniform_filter(cube.values, size=(size, size, 1),
                                     mode="nearest")
    else:
        out = ndimage.gaussian_filter(cube.values,
                                      sigma=(spec.sigma, spec.sigma, 0.0),
                                      truncate=spec.radius / spec.sigma,
                                      mode="nearest")
    return HsiCube(values=out.astype(np.float32, copy=False),
                   band_centers_nm=cube.band_centers_nm)


def align_to_center(cube: HsiCube, layout: MosaicLayout) -> HsiCube:
    """Translate every band plane so all bands share the tile-centre grid.

    Band b living at tile cell (r, c) is resampled bilinearly with a
    translation of ((r - 2) / 5, (c - 2) / 5) cube pixels; border samples
    replicate the edge.  The band at the centre cell passes through unchanged.
    """
    v = cube.values
    out = np.empty_like(v)
    for b in range(BANDS):
        r, c = band_offset(layout, b)
        if r == CENTER and c == CENTER:
            out[:, :, b] = v[:, :, b]
            continue
        dy = (r - CENTER) / TILE
        dx = (c - CENTER) / TILE
        out[:, :, b] = bilinear_shift(v[:, :, b], dy, dx)
    return HsiCube(values=out, band_centers_nm=cube.band_centers_nm)


def clip_unit(cube: HsiCube) -> HsiCube:
    """Clamp to [0, 1]; the documented last step of cube preprocessing."""
    return HsiCube(values=np.clip(cube.values, 0.0, 1.0),
                   band_centers_nm=cube.band_centers_nm)


def saturation_counts(raw: FrameLike) -> np.ndarray:
    """Per-tile count of samples at the ADC ceiling, shape (H/5, W/5)."""
    values = _frame_values(raw)
    h, w = values.shape
    if h % TILE or w % TILE:
        raise ShapeError(f"frame dimensions {h}x{w} are not multiples of {TILE}")
    sat = (values == MAX_COUNT).reshape(h // TILE, TILE, w // TILE, TILE)
    return sat.sum(axis=(1, 3), dtype=np.int32)


def _cropped_white(white: WhiteReference, rect: tuple[int, int, int, int],
                   sensor_shape: tuple[int, int]) -> WhiteReference:
    """Accept a white recorded at full sensor extent or already at crop size."""
    x, y, w, h = rect
    if white.frame.shape == (h, w):
        return white
    if white.frame.shape == sensor_shape:
        return WhiteReference(frame=white.frame[y:y + h, x:x + w],
                              max_spectrum=white.max_spectrum,
                              config_id=white.config_id)
    raise ShapeError(
        f"white frame shape {white.frame.shape} matches neither the sensor "
        f"extent {sensor_shape} nor the crop {(h, w)}")


class _StageTimer:
    def __init__(self, trace: StageTrace, stage: str):
        self.trace = trace
        self.stage = stage

    def __enter__(self):
        self.t0 = time.perf_counter_ns()
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is None:
            self.trace.add(self.stage, (time.perf_counter_ns() - self.t0) // 1000)
            return False
        if isinstance(exc, StageFailure):
            return False
        raise StageFailure(self.stage, exc) from exc


def process_frame(raw: RawFrame, cfg: PipelineConfig) -> ProcessResult:
    """Run the full stage sequence; errors carry the failing stage's name."""
    trace = StageTrace()
    bias = cfg.camera.bias

    with _StageTimer(trace, "crop"):
        cropped = crop_frame(raw, cfg.camera.crop_rect)
        white = _cropped_white(cfg.white, cfg.camera.crop_rect,
                               (raw.height, raw.width))
        sat_mask = cropped.values == MAX_COUNT

    with _StageTimer(trace, "subtract_bias"):
        debiased = _debias_float(cropped.values, bias)

    with _StageTimer(trace, "reflectance_correct"):
        denom = _white_denominator(debiased.shape, white, bias)
        reflectance = debiased / denom

    with _StageTimer(trace, "demosaic"):
        cube = demosaic(reflectance, cfg.layout)

    if cfg.spatial_filter is not None:
        with _StageTimer(trace, "spatial_filter"):
            cube = spatial_filter(cube, cfg.spatial_filter)

    with _StageTimer(trace, "align_to_center"):
        cube = align_to_center(cube, cfg.layout)

    report: Optional[ScalingReport] = None
    if cfg.enable_illuminant_scaling:
        with _StageTimer(trace, "illuminant_scaling"):
            h, w = cube.height, cube.width
            sat_map = sat_mask.reshape(h, TILE, w, TILE).sum(axis=(1, 3),
                                                             dtype=np.int32)
            try:
                report = find_max_albedo(cube, white, cfg.rejection,
                                         saturation_count=sat_map)
                cube = apply_scaling(cube, report)
            except EstimationError as exc:
                report = fallback_report(exc.candidates_examined,
                                         exc.rejected_count)

    with _StageTimer(trace, "clip_unit"):
        cube = clip_unit(cube)

    if cfg.enable_pixel_norm:
        with _StageTimer(trace, "pixel_norm"):
            cube = normalize_pixelwise(cube)

    return ProcessResult(cube=cube, trace=trace, scaling=report)
