"""In-frame illuminant intensity estimation and pseudo-reflectance scaling.

Outdoor frames are divided by a white reference recorded under maximum
sunlight, so a dim scene comes out uniformly dark.  To compensate, we look for
the brightest genuinely reflective pixel in the processed cube (road marks,
white bodywork, sometimes sky), treat its albedo as the scene's illumination
level, and rescale the whole cube so that this reference pixel lands at 1.0.

The catch is artificial light: vehicle lights and illuminated signs are often
the brightest pixels but say nothing about sun level.  Candidates are walked
in descending broadband (spectral mean) order and screened by a three-test
cascade on their spectral signature:

  saturation      >= sat_k bands sat at the 12-bit ceiling before correction
  emitter-shape   peak-to-mean ratio of the spectrum (shape-normalized by the
                  white max spectrum) above peak_ratio, i.e. a narrow source
  low-similarity  cosine similarity to the white max spectrum below cos_min

The first survivor wins.  Its broadband value is replaced by the median over
its 3x3 neighbourhood (single-pixel maxima are noise) and the scale is the
reciprocal of that median.  Scaling divides by the median itself rather than
multiplying by a stored reciprocal so the reference pixel normalizes to 1.0
exactly in float32.  If every pixel is rejected the frame is processed
unscaled and flagged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, EstimationError
from .sensor import HsiCube, WhiteReference

REASON_SATURATION = "saturation"
REASON_EMITTER = "emitter-shape"
REASON_SIMILARITY = "low-similarity"
REASON_NEIGHBOURHOOD = "degenerate-neighbourhood"


@dataclass(frozen=True)
class RejectionParams:
    """Thresholds of the artificial-source screening cascade."""

    sat_k: int = 3          # saturated bands needed to call a pixel clipped
    peak_ratio: float = 2.5  # peak/mean of the shape-normalized spectrum
    cos_min: float = 0.90    # minimum cosine similarity to the white spectrum


@dataclass(frozen=True)
class AlbedoCandidate:
    """One examined pixel: its spectrum, broadband mean, and screening verdict."""

    position: tuple[int, int]
    spectrum: np.ndarray
    broadband: float
    rejected: bool
    reason: Optional[str] = None


@dataclass(frozen=True)
class ScalingReport:
    """Outcome of the illuminant search for one frame.

    `reference_broadband` is the median-smoothed broadband of the chosen pixel;
    `scale` is its reciprocal.  On fallback (every pixel rejected) the frame is
    left unscaled: scale == 1.0 and `chosen` is None.
    """

    chosen: Optional[AlbedoCandidate]
    scale: float
    reference_broadband: float
    candidates_examined: int
    rejected_count: int
    fallback: bool = False


def is_artificial(spectrum: np.ndarray, white_max_spectrum: np.ndarray,
                  params: RejectionParams = RejectionParams(),
                  saturated_bands: int = 0) -> tuple[bool, Optional[str]]:
    """Screen one spectral signature; returns (is_artificial, reason).

    `saturated_bands` is the number of this pixel's mosaic samples that sat at
    the raw ceiling before correction; reflectance values alone cannot reveal
    clipping, so the pipeline carries that count alongside the cube.
    """
    s = np.asarray(spectrum, dtype=np.float64)
    w = np.asarray(white_max_spectrum, dtype=np.float64)
    if saturated_bands >= params.sat_k:
        return True, REASON_SATURATION
    norm_s = float(np.linalg.norm(s))
    norm_w = float(np.linalg.norm(w))
    if norm_s == 0.0 or norm_w == 0.0:
        return True, REASON_SIMILARITY
    shape = np.divide(s, w, out=np.zeros_like(s), where=w > 0)
    mean_shape = float(shape.mean())
    if mean_shape > 0 and float(shape.max()) / mean_shape > params.peak_ratio:
        return True, REASON_EMITTER
    cosine = float(np.dot(s, w)) / (norm_s * norm_w)
    if cosine < params.cos_min:
        return True, REASON_SIMILARITY
    return False, None


def _median_broadband(broadband: np.ndarray, row: int, col: int) -> float:
    h, w = broadband.shape
    window = broadband[max(row - 1, 0):min(row + 2, h),
                       max(col - 1, 0):min(col + 2, w)]
    return float(np.median(window))


def broadband_map(cube: HsiCube) -> np.ndarray:
    """Per-pixel spectral mean, accumulated in float64."""
    return cube.values.mean(axis=2, dtype=np.float64)


def find_max_albedo(cube: HsiCube, white: WhiteReference,
                    params: RejectionParams = RejectionParams(),
                    saturation_count: Optional[np.ndarray] = None) -> ScalingReport:
    """Locate the highest-albedo non-artificial pixel and derive the scale.

    Pixels are examined in descending broadband order (ties broken by lowest
    row, then lowest column).  Expects the cube after band alignment and
    before unit clipping.  Raises EstimationError when every pixel fails the
    screen; callers fall back to an unscaled frame.
    """
    v = cube.values
    h, w = v.shape[:2]
    if saturation_count is not None:
        saturation_count = np.asarray(saturation_count)
        if saturation_count.shape != (h, w):
            raise DomainError(
                f"saturation map shape {saturation_count.shape} != cube {(h, w)}")
    bb = broadband_map(cube)
    order = np.argsort(-bb.ravel(), kind="stable")
    rejected = 0
    for rank, flat in enumerate(order):
        row, col = divmod(int(flat), w)
        spectrum = v[row, col]
        sat = int(saturation_count[row, col]) if saturation_count is not None else 0
        artificial, reason = is_artificial(spectrum, white.max_spectrum,
                                           params, saturated_bands=sat)
        if not artificial:
            smoothed = _median_broadband(bb, row, col)
            if smoothed <= 0.0:
                rejected += 1
                continue  # cannot normalize against a dark neighbourhood
            chosen = AlbedoCandidate(position=(row, col),
                                     spectrum=spectrum.copy(),
                                     broadband=float(bb[row, col]),
                                     rejected=False)
            return ScalingReport(chosen=chosen,
                                 scale=1.0 / smoothed,
                                 reference_broadband=smoothed,
                                 candidates_examined=rank + 1,
                                 rejected_count=rejected)
        rejected += 1
    raise EstimationError("all pixels rejected by the artificial-source screen",
                          candidates_examined=len(order), rejected_count=rejected)


def fallback_report(candidates_examined: int = 0,
                    rejected_count: int = 0) -> ScalingReport:
    """Unit-scale report for frames where estimation failed."""
    return ScalingReport(chosen=None, scale=1.0, reference_broadband=1.0,
                         candidates_examined=candidates_examined,
                         rejected_count=rejected_count, fallback=True)


def apply_scaling(cube: HsiCube, report: ScalingReport) -> HsiCube:
    """Rescale the cube by the estimated illumination level.

    Division by the reference broadband (rather than multiplication by the
    stored reciprocal) keeps the chosen pixel's normalized value at exactly
    1.0 in float32.  Values above 1 (artificial sources) survive here and are
    clipped at the end of the preprocessing sequence.
    """
    if report.scale <= 0:
        raise DomainError(f"scale must be positive, got {report.scale}")
    if report.fallback or report.reference_broadband == 1.0:
        return HsiCube(values=cube.values.copy(),
                       band_centers_nm=cube.band_centers_nm)
    denom = np.float32(report.reference_broadband)
    return HsiCube(values=cube.values / denom,
                   band_centers_nm=cube.band_centers_nm)


SCALING_CSV_HEADER = ("frame_id,row,col,scale,candidates_examined,"
                      "rejected_count,fallback_flag")


def scaling_csv_row(frame_id: str, report: ScalingReport) -> str:
    """One CSV row per processed frame."""
    if report.chosen is None:
        row, col = -1, -1
    else:
        row, col = report.chosen.position
    return (f"{frame_id},{row},{col},{report.scale!r},"
            f"{report.candidates_examined},{report.rejected_count},"
            f"{int(report.fallback)}")
