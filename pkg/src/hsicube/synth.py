"""Synthetic scene generation for pipeline roundtrip and scaling tests.

A scene spec is a JSON object describing a ground-truth reflectance cube plus
the white reference needed to render it into a raw mosaic frame:

    {
      "height": 40, "width": 40,        // cube size (raw frame is 5x larger);
                                        // defaults to the camera crop size
      "seed": 7,
      "base": 0.2,                      // uniform background albedo
      "gradient": {"dy": 0.1, "dx": 0.2},
      "blobs":    [{"row": 20, "col": 12, "sigma": 5.0, "amplitude": 0.2}],
      "patches":  [{"row": 10, "col": 10, "size": 9, "albedo": 0.6,
                    "dome": 0.02}],     // bright reflector, centre-peaked
      "emitters": [{"row": 5, "col": 30, "bands": [10, 11, 12],
                    "value": 6.0, "floor": 0.05}],
      "band_gain": 0.15,                // mild deterministic spectral tilt
      "noise_sigma": 0.0,
      "white": {"level": 3600, "band_ripple": 0.05, "vignette": 0.1}
    }

Patches model high-reflectance surfaces (road marks, white bodywork): a flat
spectrum scaled by a very slightly centre-peaked dome so the brightest pixel
sits in the patch interior.  Emitters model artificial lights: narrow-band
spikes that exceed the raw ceiling and must be rejected by the illuminant
search.  Everything is deterministic for a fixed seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError
from .sensor import (BANDS, MAX_COUNT, TILE, HsiCube, MosaicLayout,
                     WhiteReference)


@dataclass(frozen=True)
class WhiteSpec:
    level: float = 3600.0      # mean counts of the white tile
    band_ripple: float = 0.05  # relative cosine ripple across bands
    vignette: float = 0.10     # relative corner falloff

    def __post_init__(self):
        if not 0 < self.level <= MAX_COUNT:
            raise ConfigError(f"white level must be in (0, {MAX_COUNT}]")
        if not 0 <= self.vignette < 1:
            raise ConfigError("vignette must be in [0, 1)")


@dataclass(frozen=True)
class SceneSpec:
    height: Optional[int] = None
    width: Optional[int] = None
    seed: int = 0
    base: float = 0.2
    gradient: dict = field(default_factory=dict)
    blobs: tuple = ()
    patches: tuple = ()
    emitters: tuple = ()
    band_gain: float = 0.15
    noise_sigma: float = 0.0
    white: WhiteSpec = field(default_factory=WhiteSpec)

    @classmethod
    def from_dict(cls, raw: dict) -> "SceneSpec":
        known = {"height", "width", "seed", "base", "gradient", "blobs",
                 "patches", "emitters", "band_gain", "noise_sigma", "white"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown scene spec keys: {sorted(unknown)}")
        kwargs = dict(raw)
        if "white" in kwargs:
            kwargs["white"] = WhiteSpec(**kwargs["white"])
        for key in ("blobs", "patches", "emitters"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    @classmethod
    def from_json(cls, text: str) -> "SceneSpec":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"scene spec is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("scene spec must be a JSON object")
        return cls.from_dict(raw)

    @classmethod
    def from_file(cls, path) -> "SceneSpec":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())


@dataclass(frozen=True)
class SceneTruth:
    """Ground-truth cube plus the annotations the tests check against."""

    cube: HsiCube
    patch_masks: tuple[np.ndarray, ...]
    patch_albedos: tuple[float, ...]
    emitter_positions: tuple[tuple[int, int], ...]

    def any_patch_mask(self) -> np.ndarray:
        if not self.patch_masks:
            return np.zeros(self.cube.values.shape[:2], dtype=bool)
        return np.any(np.stack(self.patch_masks), axis=0)


def band_gains(spec: SceneSpec) -> np.ndarray:
    """Deterministic mild spectral tilt applied to background and patches."""
    b = np.arange(BANDS)
    return (1.0 - spec.band_gain * 0.5
            + spec.band_gain * 0.5 * np.cos(2 * np.pi * b / BANDS)).astype(
                np.float32)


def build_scene(spec: SceneSpec, height: int, width: int) -> SceneTruth:
    """Render the spec into a (height, width, 25) ground-truth cube."""
    rng = np.random.default_rng(spec.seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)

    plane = np.full((height, width), float(spec.base))
    grad = spec.gradient or {}
    if grad:
        plane += (float(grad.get("dy", 0.0)) * yy / max(height - 1, 1)
                  + float(grad.get("dx", 0.0)) * xx / max(width - 1, 1))
    for blob in spec.blobs:
        s = float(blob["sigma"])
        d2 = (yy - float(blob["row"])) ** 2 + (xx - float(blob["col"])) ** 2
        plane += float(blob["amplitude"]) * np.exp(-0.5 * d2 / (s * s))
    plane = np.clip(plane, 0.0, 1.0)

    gains = band_gains(spec)
    cube = plane[:, :, None].astype(np.float32) * gains[None, None, :]

    patch_masks = []
    patch_albedos = []
    for patch in spec.patches:
        size = int(patch.get("size", 9))
        r0, c0 = int(patch["row"]), int(patch["col"])
        albedo = float(patch["albedo"])
        dome = float(patch.get("dome", 0.02))
        if r0 < 0 or c0 < 0 or r0 + size > height or c0 + size > width:
            raise ConfigError("patch does not fit inside the scene")
        py, px = np.mgrid[0:size, 0:size].astype(np.float64)
        centre = (size - 1) / 2.0
        d2 = ((py - centre) ** 2 + (px - centre) ** 2) / max(centre * centre, 1.0)
        values = albedo * (1.0 - dome * d2)
        cube[r0:r0 + size, c0:c0 + size, :] = values[:, :, None].astype(
            np.float32)
        mask = np.zeros((height, width), dtype=bool)
        mask[r0:r0 + size, c0:c0 + size] = True
        patch_masks.append(mask)
        patch_albedos.append(albedo)

    emitter_positions = []
    for emitter in spec.emitters:
        r, c = int(emitter["row"]), int(emitter["col"])
        if not (0 <= r < height and 0 <= c < width):
            raise ConfigError("emitter lies outside the scene")
        spectrum = np.full(BANDS, float(emitter.get("floor", 0.05)),
                           dtype=np.float32)
        for band in emitter["bands"]:
            if not 0 <= int(band) < BANDS:
                raise ConfigError(f"emitter band {band} outside [0, {BANDS})")
            spectrum[int(band)] = float(emitter["value"])
        cube[r, c, :] = spectrum
        emitter_positions.append((r, c))

    if spec.noise_sigma > 0:
        cube = cube + rng.normal(0.0, spec.noise_sigma,
                                 size=cube.shape).astype(np.float32)
        cube = np.maximum(cube, 0.0)

    return SceneTruth(cube=HsiCube(values=cube),
                      patch_masks=tuple(patch_masks),
                      patch_albedos=tuple(patch_albedos),
                      emitter_positions=tuple(emitter_positions))


def build_white(spec: WhiteSpec, height_raw: int, width_raw: int,
                layout: MosaicLayout, config_id: int = 0) -> WhiteReference:
    """Integer-valued white frame with band ripple and radial vignette."""
    if height_raw % TILE or width_raw % TILE:
        raise ConfigError("white frame dimensions must be multiples of 5")
    b = np.arange(BANDS)
    profile = 1.0 + spec.band_ripple * np.cos(2 * np.pi * b / BANDS)
    per_band = spec.level * profile
    yy, xx = np.mgrid[0:height_raw, 0:width_raw].astype(np.float64)
    cy, cx = (height_raw - 1) / 2.0, (width_raw - 1) / 2.0
    r2 = ((yy - cy) / max(cy, 1.0)) ** 2 + ((xx - cx) / max(cx, 1.0)) ** 2
    falloff = 1.0 - spec.vignette * r2 / 2.0
    frame = np.empty((height_raw, width_raw), dtype=np.float64)
    for r in range(TILE):
        for c in range(TILE):
            band = int(layout.band_at[r, c])
            frame[r::TILE, c::TILE] = per_band[band] * falloff[r::TILE, c::TILE]
    frame = np.clip(np.rint(frame), 1, MAX_COUNT)
    return WhiteReference.from_frame(frame.astype(np.float32), layout,
                                     config_id=config_id)
