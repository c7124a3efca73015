"""File formats: raw frames, white references, ENVI cubes, camera configs, PNGs.

Raw frame (.hsrw)
    16-byte header: magic "HSRW", u32 width, u32 height, u32 reserved (all
    little-endian), followed by row-major unsigned 16-bit samples.

White reference
    Same raw format plus a text sidecar `<path>.spectrum.txt` holding the 25
    per-band maxima, one value per line.  When the sidecar is missing the
    maxima are recomputed from the frame with the given layout.

Cube (ENVI)
    Band-sequential 32-bit little-endian floats with a `<path>.hdr` text
    header (samples, lines, bands, data type 4, interleave bsq, byte order 0,
    wavelength list).

Camera configuration
    Line-oriented `key = value` text, '#' comments.  Keys:
      config_id        required, one of 0..3
      f_number         float (default 2.0)
      analog_gain      float (default 1.0)
      crop_rect        four ints: x y w h (required)
      bias             scalar counts (default 0); or
      bias_frame       path to a .hsrw dark frame (relative to the config)
      mosaic           25 ints, row-major cell -> band (default identity)
      band_centers_nm  25 floats (default 600..975 evenly spaced)
      white_frame      path to the white reference .hsrw
      sat_k, peak_ratio, cos_min   scaling rejection thresholds

Label map
    8-bit single-channel PNG, pixel value = class id, 0 = unlabeled.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from PIL import Image

from .errors import ConfigError, DomainError, ShapeError
from .scaling import RejectionParams
from .sensor import (BANDS, CameraConfig, HsiCube, MosaicLayout, RawFrame,
                     WhiteReference, default_band_centers)

RAW_MAGIC = b"HSRW"
_RAW_HEADER = struct.Struct("<4sIII")


def write_raw(path, frame: RawFrame) -> None:
    header = _RAW_HEADER.pack(RAW_MAGIC, frame.width, frame.height, 0)
    data = frame.values.astype("<u2").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data)


def read_raw(path) -> RawFrame:
    with open(path, "rb") as fh:
        header = fh.read(_RAW_HEADER.size)
        if len(header) != _RAW_HEADER.size:
            raise ConfigError(f"{path}: truncated raw header")
        magic, width, height, _ = _RAW_HEADER.unpack(header)
        if magic != RAW_MAGIC:
            raise ConfigError(f"{path}: bad magic {magic!r}")
        payload = fh.read()
    expected = width * height * 2
    if len(payload) != expected:
        raise ConfigError(f"{path}: expected {expected} sample bytes, "
                          f"got {len(payload)}")
    values = np.frombuffer(payload, dtype="<u2").reshape(height, width)
    return RawFrame(values=values.astype(np.uint16))


def _spectrum_sidecar(path) -> str:
    return str(path) + ".spectrum.txt"


def write_white(path, white: WhiteReference) -> None:
    """Quantized frame plus the max-spectrum sidecar."""
    counts = np.clip(np.rint(white.frame), 0, 4095).astype(np.uint16)
    write_raw(path, RawFrame(values=counts))
    with open(_spectrum_sidecar(path), "w", encoding="ascii") as fh:
        for v in white.max_spectrum:
            fh.write(f"{float(v)!r}\n")


def read_white(path, layout: Optional[MosaicLayout] = None,
               config_id: int = 0) -> WhiteReference:
    frame = read_raw(path).values.astype(np.float32)
    sidecar = _spectrum_sidecar(path)
    if os.path.exists(sidecar):
        with open(sidecar, "r", encoding="ascii") as fh:
            spectrum = [float(ln) for ln in fh if ln.strip()]
        if len(spectrum) != BANDS:
            raise ConfigError(f"{sidecar}: expected {BANDS} values, "
                              f"got {len(spectrum)}")
        return WhiteReference(frame=frame, max_spectrum=np.asarray(spectrum),
                              config_id=config_id)
    if layout is None:
        layout = MosaicLayout.identity()
    return WhiteReference.from_frame(frame, layout, config_id=config_id)


def write_cube(path, cube: HsiCube, description: str = "hsicube output") -> None:
    """Band-sequential float32 data file plus `<path>.hdr`."""
    bsq = np.ascontiguousarray(cube.values.transpose(2, 0, 1), dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(bsq.tobytes())
    centers = (cube.band_centers_nm if cube.band_centers_nm is not None
               else default_band_centers())
    wavelengths = ", ".join(f"{float(c)!r}" for c in centers)
    header = (
        "ENVI\n"
        f"description = {{{description}}}\n"
        f"samples = {cube.width}\n"
        f"lines = {cube.height}\n"
        f"bands = {cube.bands}\n"
        "header offset = 0\n"
        "file type = ENVI Standard\n"
        "data type = 4\n"
        "interleave = bsq\n"
        "byte order = 0\n"
        "wavelength units = Nanometers\n"
        f"wavelength = {{{wavelengths}}}\n")
    with open(str(path) + ".hdr", "w", encoding="ascii") as fh:
        fh.write(header)


def _parse_envi_header(path) -> dict:
    fields = {}
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    if not text.startswith("ENVI"):
        raise ConfigError(f"{path}: not an ENVI header")
    # Collapse brace blocks onto single lines before splitting on '='.
    text = text.replace("\n", " \n")
    for chunk in text.split("\n"):
        if "=" not in chunk:
            continue
        key, _, value = chunk.partition("=")
        fields[key.strip().lower()] = value.strip()
    return fields


def read_cube(path) -> HsiCube:
    header_path = str(path) + ".hdr"
    fields = _parse_envi_header(header_path)
    try:
        samples = int(fields["samples"])
        lines = int(fields["lines"])
        bands = int(fields["bands"])
        data_type = int(fields["data type"])
        interleave = fields["interleave"].lower()
        byte_order = int(fields.get("byte order", "0"))
    except KeyError as exc:
        raise ConfigError(f"{header_path}: missing header field {exc}") from None
    if data_type != 4 or interleave != "bsq" or byte_order != 0:
        raise ConfigError(f"{header_path}: only little-endian float32 bsq "
                          "cubes are supported")
    data = np.fromfile(path, dtype="<f4")
    if data.size != samples * lines * bands:
        raise ConfigError(f"{path}: sample count does not match header")
    values = data.reshape(bands, lines, samples).transpose(1, 2, 0)
    centers = None
    if "wavelength" in fields:
        inner = fields["wavelength"].strip().strip("{}")
        centers = np.array([float(x) for x in inner.split(",") if x.strip()])
    return HsiCube(values=np.ascontiguousarray(values), band_centers_nm=centers)


@dataclass(frozen=True)
class CameraSetup:
    """Parsed camera configuration with its layout and optional white."""

    camera: CameraConfig
    layout: MosaicLayout
    white: Optional[WhiteReference] = None
    rejection: RejectionParams = field(default_factory=RejectionParams)


def _parse_kv(path) -> dict:
    pairs = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, ln in enumerate(fh, start=1):
            stripped = ln.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, value = stripped.partition("=")
            pairs[key.strip()] = value.strip()
    return pairs


def read_camera_config(path) -> CameraSetup:
    pairs = _parse_kv(path)
    base = os.path.dirname(os.path.abspath(path))

    def need(key):
        if key not in pairs:
            raise ConfigError(f"{path}: missing required key {key!r}")
        return pairs[key]

    try:
        config_id = int(need("config_id"))
        f_number = float(pairs.get("f_number", "2.0"))
        analog_gain = float(pairs.get("analog_gain", "1.0"))
        crop = tuple(int(x) for x in need("crop_rect").split())
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if len(crop) != 4:
        raise ConfigError(f"{path}: crop_rect needs exactly 4 integers")

    bias: object
    if "bias_frame" in pairs:
        bias = read_raw(os.path.join(base, pairs["bias_frame"])).values
    else:
        try:
            bias = float(pairs.get("bias", "0"))
        except ValueError as exc:
            raise ConfigError(f"{path}: bad bias: {exc}") from None

    if "mosaic" in pairs:
        cells = [int(x) for x in pairs["mosaic"].split()]
        if len(cells) != BANDS:
            raise ConfigError(f"{path}: mosaic needs {BANDS} integers")
        table = np.asarray(cells).reshape(5, 5)
    else:
        table = np.arange(BANDS).reshape(5, 5)

    if "band_centers_nm" in pairs:
        centers = np.array([float(x) for x in pairs["band_centers_nm"].split()])
        if centers.size != BANDS:
            raise ConfigError(f"{path}: band_centers_nm needs {BANDS} values")
    else:
        centers = default_band_centers()

    try:
        layout = MosaicLayout(band_at=table, band_centers_nm=centers)
        camera = CameraConfig(config_id=config_id, f_number=f_number,
                              analog_gain=analog_gain, crop_rect=crop, bias=bias)
    except (DomainError, ShapeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    white = None
    if "white_frame" in pairs:
        white = read_white(os.path.join(base, pairs["white_frame"]),
                           layout=layout, config_id=config_id)

    rejection = RejectionParams(
        sat_k=int(pairs.get("sat_k", RejectionParams.sat_k)),
        peak_ratio=float(pairs.get("peak_ratio", RejectionParams.peak_ratio)),
        cos_min=float(pairs.get("cos_min", RejectionParams.cos_min)))

    return CameraSetup(camera=camera, layout=layout, white=white,
                       rejection=rejection)


def write_camera_config(path, setup: CameraSetup,
                        white_frame: Optional[str] = None) -> None:
    """Emit a config file; `white_frame` is recorded as a relative path."""
    cam = setup.camera
    lines = [
        f"config_id = {cam.config_id}",
        f"f_number = {cam.f_number!r}",
        f"analog_gain = {cam.analog_gain!r}",
        "crop_rect = " + " ".join(str(v) for v in cam.crop_rect),
    ]
    if isinstance(cam.bias, np.ndarray):
        raise ConfigError("per-pixel bias frames must be written separately "
                          "and referenced via bias_frame")
    lines.append(f"bias = {float(cam.bias)!r}")
    lines.append("mosaic = " + " ".join(str(int(b)) for b in
                                        setup.layout.band_at.ravel()))
    lines.append("band_centers_nm = "
                 + " ".join(f"{float(c)!r}" for c in
                            setup.layout.band_centers_nm))
    if white_frame is not None:
        lines.append(f"white_frame = {white_frame}")
    r = setup.rejection
    lines.append(f"sat_k = {r.sat_k}")
    lines.append(f"peak_ratio = {r.peak_ratio!r}")
    lines.append(f"cos_min = {r.cos_min!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def save_label_map(path, labels: np.ndarray) -> None:
    a = np.asarray(labels)
    if a.ndim != 2:
        raise ShapeError(f"label map must be 2-D, got shape {a.shape}")
    if a.size and (int(a.min()) < 0 or int(a.max()) > 255):
        raise DomainError("label ids must fit in one byte")
    Image.fromarray(a.astype(np.uint8), mode="L").save(path, format="PNG")


def load_label_map(path) -> np.ndarray:
    img = Image.open(path)
    if img.mode != "L":
        img = img.convert("L")
    return np.asarray(img, dtype=np.int64)
