"""Mosaic sensor model: 5x5 band layout, raw frames, camera setup, white reference.

The sensor deposits 25 narrow-band filters on-chip in a repeating 5x5 tile, so a
raw frame interleaves all 25 bands spatially.  Each tile cell (r, c) carries one
band; which band sits where is vendor configuration, so the layout is a runtime
bijection (identity by default).  Raw samples are 12-bit counts (0..4095).

This module also provides the inverse synthesis path (`synth_raw_from_cube`)
which renders a reflectance cube back into a mosaic raw frame.  Synthesis
samples each band plane at the mirrored sub-tile offset so that the forward
pipeline (demosaic + translation to the tile centre) recovers the input cube on
smooth scenes; that pairing is what the roundtrip tests rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import CalibrationError, DomainError, ShapeError

TILE = 5
BANDS = TILE * TILE
MAX_COUNT = 4095  # 12-bit ADC ceiling
CENTER = TILE // 2  # alignment target cell (2, 2)

BiasLike = Union[float, int, np.ndarray]


def default_band_centers() -> np.ndarray:
    """25 evenly spaced band centres across the Red-NIR window, in nm."""
    return np.linspace(600.0, 975.0, BANDS)


@dataclass(frozen=True)
class MosaicLayout:
    """Bijective mapping from tile cell (row, col) to band index, plus centres.

    ``band_at[r, c]`` gives the band index sampled at cell (r, c) of every
    5x5 tile.  Band centres are metadata only; they never enter the numerics.
    """

    band_at: np.ndarray
    band_centers_nm: np.ndarray = field(default_factory=default_band_centers)

    def __post_init__(self):
        table = np.asarray(self.band_at, dtype=np.int64)
        if table.shape != (TILE, TILE):
            raise ShapeError(f"mosaic table must be {TILE}x{TILE}, got {table.shape}")
        if sorted(table.ravel().tolist()) != list(range(BANDS)):
            raise DomainError("mosaic table must be a bijection onto bands 0..24")
        centers = np.asarray(self.band_centers_nm, dtype=np.float64)
        if centers.shape != (BANDS,):
            raise ShapeError(f"expected {BANDS} band centres, got {centers.shape}")
        if np.any(np.diff(centers) <= 0):
            raise DomainError("band centres must be strictly increasing")
        table.setflags(write=False)
        centers.setflags(write=False)
        object.__setattr__(self, "band_at", table)
        object.__setattr__(self, "band_centers_nm", centers)
        # Precomputed inverse: band index -> (tile_row, tile_col).
        offsets = np.empty((BANDS, 2), dtype=np.int64)
        rows, cols = np.divmod(np.argsort(table.ravel(), kind="stable"), TILE)
        offsets[:, 0] = rows
        offsets[:, 1] = cols
        offsets.setflags(write=False)
        object.__setattr__(self, "_offsets", offsets)

    @classmethod
    def identity(cls, band_centers_nm: Optional[np.ndarray] = None) -> "MosaicLayout":
        """Row-major layout: band b at cell (b // 5, b % 5)."""
        table = np.arange(BANDS).reshape(TILE, TILE)
        if band_centers_nm is None:
            return cls(band_at=table)
        return cls(band_at=table, band_centers_nm=band_centers_nm)

    def offsets(self) -> np.ndarray:
        """(25, 2) array of (tile_row, tile_col) per band index."""
        return self._offsets


def band_offset(layout: MosaicLayout, band: int) -> tuple[int, int]:
    """Tile cell (row, col) holding `band`; inverse of ``layout.band_at``."""
    if not 0 <= band < BANDS:
        raise DomainError(f"band index {band} outside [0, {BANDS})")
    r, c = layout.offsets()[band]
    return int(r), int(c)


@dataclass(frozen=True)
class RawFrame:
    """Row-major grid of 12-bit sensor counts in mosaic order."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2:
            raise ShapeError(f"raw frame must be 2-D, got shape {v.shape}")
        if not np.issubdtype(v.dtype, np.integer):
            raise DomainError("raw counts must have an integer dtype")
        if v.size and (int(v.min()) < 0 or int(v.max()) > MAX_COUNT):
            raise DomainError(f"raw counts must lie in [0, {MAX_COUNT}]")
        v = v.astype(np.uint16)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class CameraConfig:
    """One of the four capture configurations (f-number / analog gain pairs)."""

    config_id: int
    f_number: float
    analog_gain: float
    crop_rect: tuple[int, int, int, int]  # (x, y, w, h) in sensor pixels
    bias: BiasLike = 0  # scalar dark level, or a per-pixel dark frame

    def __post_init__(self):
        if self.config_id not in (0, 1, 2, 3):
            raise DomainError(f"config_id must be one of 0..3, got {self.config_id}")
        if len(self.crop_rect) != 4:
            raise DomainError("crop_rect must be (x, y, w, h)")


@dataclass(frozen=True)
class HsiCube:
    """H x W x 25 reflectance cube, 32-bit floats, nominally in [0, 1]."""

    values: np.ndarray
    band_centers_nm: Optional[np.ndarray] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        if v.ndim != 3 or v.shape[2] != BANDS:
            raise ShapeError(f"cube must be H x W x {BANDS}, got shape {v.shape}")
        object.__setattr__(self, "values", v)
        if self.band_centers_nm is not None:
            c = np.asarray(self.band_centers_nm, dtype=np.float64)
            if c.shape != (BANDS,):
                raise ShapeError(f"expected {BANDS} band centres, got {c.shape}")
            object.__setattr__(self, "band_centers_nm", c)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def bands(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class WhiteReference:
    """Averaged white-tile frame for one camera configuration.

    `frame` holds the averaged counts in mosaic order (float, since averaging
    fractional counts is fine); `max_spectrum` holds the per-band maxima of
    that frame, used as the illuminant shape reference by the scaling search.
    """

    frame: np.ndarray
    max_spectrum: np.ndarray
    config_id: int = 0

    def __post_init__(self):
        f = np.asarray(self.frame, dtype=np.float32)
        if f.ndim != 2:
            raise ShapeError(f"white frame must be 2-D, got shape {f.shape}")
        s = np.asarray(self.max_spectrum, dtype=np.float64)
        if s.shape != (BANDS,):
            raise ShapeError(f"max_spectrum must have {BANDS} entries, got {s.shape}")
        f.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "frame", f)
        object.__setattr__(self, "max_spectrum", s)

    @classmethod
    def from_frame(cls, frame: np.ndarray, layout: MosaicLayout,
                   config_id: int = 0) -> "WhiteReference":
        """Build a reference, computing per-band maxima from the frame itself."""
        f = np.asarray(frame, dtype=np.float32)
        if f.ndim != 2 or f.shape[0] % TILE or f.shape[1] % TILE:
            raise ShapeError("white frame dimensions must be multiples of 5")
        spectrum = np.empty(BANDS, dtype=np.float64)
        for b in range(BANDS):
            r, c = band_offset(layout, b)
            spectrum[b] = float(f[r::TILE, c::TILE].max())
        return cls(frame=f, max_spectrum=spectrum, config_id=config_id)

    def check_division_safe(self, bias: BiasLike) -> None:
        """Raise CalibrationError naming the first pixel where frame <= bias."""
        b = np.asarray(bias, dtype=np.float32)
        deficit = self.frame - b
        if deficit.size and float(deficit.min()) <= 0.0:
            idx = np.unravel_index(int(np.argmin(deficit)), self.frame.shape)
            raise CalibrationError(
                f"white reference not division-safe at pixel (row={idx[0]}, "
                f"col={idx[1]}): value {float(self.frame[idx]):g} <= bias")


def _clamped_neighbor(plane: np.ndarray, axis: int, direction: int) -> np.ndarray:
    """plane shifted one sample along `axis`, edge row/column replicated."""
    out = np.empty_like(plane)
    if axis == 0:
        if direction > 0:
            out[:-1] = plane[1:]
            out[-1] = plane[-1]
        else:
            out[1:] = plane[:-1]
            out[0] = plane[0]
    else:
        if direction > 0:
            out[:, :-1] = plane[:, 1:]
            out[:, -1] = plane[:, -1]
        else:
            out[:, 1:] = plane[:, :-1]
            out[:, 0] = plane[:, 0]
    return out


def bilinear_shift(plane: np.ndarray, dy: float, dx: float) -> np.ndarray:
    """Sample `plane` at fractional positions (i + dy, j + dx), clamped edges.

    Uses the incremental form a + r*(b - a) so constant planes pass through
    bitwise unchanged and affine planes are reproduced exactly in the
    interior.  Sub-pixel shifts (the mosaic alignment case) run on cheap
    slice copies; larger offsets take a general gather path.
    """
    if dy == 0.0 and dx == 0.0:
        return plane.copy()
    if -1.0 < dy < 1.0 and -1.0 < dx < 1.0:
        cur = plane
        for axis, d in ((0, dy), (1, dx)):
            if d == 0.0:
                continue
            frac = plane.dtype.type(d - math.floor(d))
            if d > 0:
                a, b = cur, _clamped_neighbor(cur, axis, +1)
                res = np.subtract(b, a, out=b)
            else:
                a, b = _clamped_neighbor(cur, axis, -1), cur
                res = np.subtract(b, a, out=a if a is not plane else a)
                a = b - res if False else a  # placeholder, never taken
                res = res
            res *= frac
            res += a
            cur = res
        return cur if cur is not plane else plane.copy()
    h, w = plane.shape
    fy = math.floor(dy)
    fx = math.floor(dx)
    ry = plane.dtype.type(dy - fy)
    rx = plane.dtype.type(dx - fx)
    rows0 = np.clip(np.arange(h) + fy, 0, h - 1)
    rows1 = np.clip(np.arange(h) + fy + 1, 0, h - 1)
    cols0 = np.clip(np.arange(w) + fx, 0, w - 1)
    cols1 = np.clip(np.arange(w) + fx + 1, 0, w - 1)
    p00 = plane[np.ix_(rows0, cols0)]
    p01 = plane[np.ix_(rows0, cols1)]
    p10 = plane[np.ix_(rows1, cols0)]
    p11 = plane[np.ix_(rows1, cols1)]
    left = p00 + ry * (p10 - p00)
    right = p01 + ry * (p11 - p01)
    return left + rx * (right - left)


def _bias_at_cells(bias: BiasLike, shape: tuple[int, int],
                   r: int, c: int) -> np.ndarray:
    b = np.asarray(bias, dtype=np.float32)
    if b.ndim == 0:
        return b
    if b.shape != shape:
        raise ShapeError(f"per-pixel bias shape {b.shape} != frame shape {shape}")
    return b[r::TILE, c::TILE]


def synth_raw_from_cube(cube: HsiCube, layout: MosaicLayout,
                        white: WhiteReference, bias: BiasLike = 0) -> RawFrame:
    """Render a reflectance cube into a mosaic raw frame (test oracle).

    Each tile cell receives round(v * (white - bias) + bias) clamped to the
    12-bit range, where v is the band plane sampled at the cell's mirrored
    sub-tile offset.  Cube values are nominally in [0, 1]; larger values model
    emitters and simply clamp at the ADC ceiling.
    """
    v = cube.values
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise DomainError("cube values must be finite and non-negative")
    hr, wr = cube.height * TILE, cube.width * TILE
    if white.frame.shape != (hr, wr):
        raise ShapeError(
            f"white frame shape {white.frame.shape} != cube extent {(hr, wr)}")
    out = np.empty((hr, wr), dtype=np.float32)
    for r in range(TILE):
        for c in range(TILE):
            b = int(layout.band_at[r, c])
            dy = (r - CENTER) / TILE
            dx = (c - CENTER) / TILE
            plane = bilinear_shift(v[:, :, b], -dy, -dx)
            wcell = white.frame[r::TILE, c::TILE]
            bcell = _bias_at_cells(bias, (hr, wr), r, c)
            out[r::TILE, c::TILE] = plane * (wcell - bcell) + bcell
    counts = np.clip(np.rint(out), 0, MAX_COUNT).astype(np.uint16)
    return RawFrame(values=counts)
