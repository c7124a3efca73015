"""Post-pipeline data normalization.

Normalization is intentionally left out of the cube files themselves; which
variant makes sense depends on the consumer, so it is applied on demand.
Pixel normalization equalizes signatures against incident-light intensity
(shadows flatten out, overall reflectance level is lost); band normalization
standardizes each spectral channel with externally supplied or on-the-fly
statistics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, StatisticsError
from .sensor import BANDS, HsiCube


def normalize_pixelwise(cube: HsiCube, mode: str = "l2") -> HsiCube:
    """Scale each pixel's 25-vector to unit length; zero spectra stay zero.

    'l2' divides by the Euclidean norm (preserves spectral angle); 'sum'
    divides by the component sum instead.  Both are invariant to per-pixel
    positive rescaling of the input.
    """
    v = cube.values
    if mode == "l2":
        denom = np.sqrt((v * v).sum(axis=2))
    elif mode == "sum":
        denom = v.sum(axis=2)
    else:
        raise ConfigError(f"unknown pixel norm mode {mode!r}")
    out = np.zeros_like(v)
    np.divide(v, denom[:, :, None], out=out, where=denom[:, :, None] > 0)
    return HsiCube(values=out, band_centers_nm=cube.band_centers_nm)


@dataclass(frozen=True)
class BandStats:
    """Per-band statistics; `kind` selects z-score or min-max application."""

    kind: str  # "zscore" | "minmax"
    mean: np.ndarray
    std: np.ndarray
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        if self.kind not in ("zscore", "minmax"):
            raise ConfigError(f"unknown band stats kind {self.kind!r}")
        for name in ("mean", "std", "min", "max"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (BANDS,):
                raise StatisticsError(
                    f"band stats field {name!r} must have {BANDS} entries")
            object.__setattr__(self, name, arr)


def compute_band_stats(cube: HsiCube, kind: str = "zscore") -> BandStats:
    """Moments and extrema of each band over all pixels of the cube."""
    v = cube.values.reshape(-1, BANDS).astype(np.float64)
    return BandStats(kind=kind, mean=v.mean(axis=0), std=v.std(axis=0),
                     min=v.min(axis=0), max=v.max(axis=0))


def normalize_bandwise(cube: HsiCube, stats: BandStats) -> HsiCube:
    """Standardize each band with the supplied statistics."""
    v = cube.values
    if stats.kind == "zscore":
        bad = np.flatnonzero(stats.std <= 0)
        if bad.size:
            raise StatisticsError(f"band {int(bad[0])} has zero std")
        out = (v - stats.mean.astype(np.float32)) / stats.std.astype(np.float32)
    else:
        span = stats.max - stats.min
        bad = np.flatnonzero(span <= 0)
        if bad.size:
            raise StatisticsError(f"band {int(bad[0])} has an empty min-max range")
        out = (v - stats.min.astype(np.float32)) / span.astype(np.float32)
    return HsiCube(values=out.astype(np.float32, copy=False),
                   band_centers_nm=cube.band_centers_nm)


def save_band_stats(path, stats: BandStats) -> None:
    """CSV with one row per band: band,mean,std,min,max."""
    lines = ["band,mean,std,min,max"]
    for b in range(BANDS):
        lines.append(f"{b},{stats.mean[b]!r},{stats.std[b]!r},"
                     f"{stats.min[b]!r},{stats.max[b]!r}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_band_stats(path, kind: str = "zscore") -> BandStats:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0].split(",")[0] != "band":
        raise StatisticsError(f"{path}: missing band,mean,std,min,max header")
    rows = [ln.split(",") for ln in lines[1:]]
    if len(rows) != BANDS:
        raise StatisticsError(f"{path}: expected {BANDS} band rows, got {len(rows)}")
    cols = np.array([[float(x) for x in row[1:5]] for row in rows])
    return BandStats(kind=kind, mean=cols[:, 0], std=cols[:, 1],
                     min=cols[:, 2], max=cols[:, 3])
