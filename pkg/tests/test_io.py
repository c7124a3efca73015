import numpy as np
import pytest

import hsicube as hc
from hsicube import io as hio


class TestRawFormat:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        frame = hc.RawFrame(rng.integers(0, 4096, size=(15, 20)))
        path = tmp_path / "frame.hsrw"
        hio.write_raw(path, frame)
        loaded = hio.read_raw(path)
        assert np.array_equal(loaded.values, frame.values)
        assert (loaded.height, loaded.width) == (15, 20)

    def test_header_layout(self, tmp_path):
        frame = hc.RawFrame(np.zeros((5, 10), dtype=np.int64))
        path = tmp_path / "frame.hsrw"
        hio.write_raw(path, frame)
        blob = path.read_bytes()
        assert blob[:4] == b"HSRW"
        assert int.from_bytes(blob[4:8], "little") == 10   # width
        assert int.from_bytes(blob[8:12], "little") == 5   # height
        assert len(blob) == 16 + 5 * 10 * 2

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bogus.hsrw"
        path.write_bytes(b"NOPE" + b"\0" * 12)
        with pytest.raises(hc.ConfigError):
            hio.read_raw(path)

    def test_truncated_payload(self, tmp_path):
        frame = hc.RawFrame(np.zeros((5, 5), dtype=np.int64))
        path = tmp_path / "frame.hsrw"
        hio.write_raw(path, frame)
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(hc.ConfigError):
            hio.read_raw(path)

    def test_write_is_deterministic(self, tmp_path):
        rng = np.random.default_rng(1)
        frame = hc.RawFrame(rng.integers(0, 4096, size=(10, 10)))
        a, b = tmp_path / "a.hsrw", tmp_path / "b.hsrw"
        hio.write_raw(a, frame)
        hio.write_raw(b, frame)
        assert a.read_bytes() == b.read_bytes()


class TestWhiteFormat:
    def test_roundtrip_with_sidecar(self, tmp_path):
        layout = hc.MosaicLayout.identity()
        white = hc.build_white(hc.WhiteSpec(level=3000), 20, 20, layout)
        path = tmp_path / "white.hsrw"
        hio.write_white(path, white)
        assert (tmp_path / "white.hsrw.spectrum.txt").exists()
        loaded = hio.read_white(path, layout=layout)
        assert np.array_equal(loaded.frame, white.frame)
        assert np.array_equal(loaded.max_spectrum, white.max_spectrum)

    def test_missing_sidecar_recomputes(self, tmp_path):
        layout = hc.MosaicLayout.identity()
        white = hc.build_white(hc.WhiteSpec(level=3000), 20, 20, layout)
        path = tmp_path / "white.hsrw"
        hio.write_white(path, white)
        (tmp_path / "white.hsrw.spectrum.txt").unlink()
        loaded = hio.read_white(path, layout=layout)
        assert np.array_equal(loaded.max_spectrum, white.max_spectrum)


class TestEnviFormat:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(2)
        cube = hc.HsiCube(rng.random((7, 9, 25)).astype(np.float32))
        path = tmp_path / "scene.cube"
        hio.write_cube(path, cube)
        loaded = hio.read_cube(path)
        assert np.array_equal(loaded.values, cube.values)
        assert loaded.band_centers_nm == pytest.approx(
            hc.default_band_centers())

    def test_header_fields(self, tmp_path):
        cube = hc.HsiCube(np.zeros((4, 6, 25), dtype=np.float32))
        path = tmp_path / "scene.cube"
        hio.write_cube(path, cube)
        header = (tmp_path / "scene.cube.hdr").read_text()
        assert header.startswith("ENVI")
        assert "samples = 6" in header
        assert "lines = 4" in header
        assert "bands = 25" in header
        assert "data type = 4" in header
        assert "interleave = bsq" in header

    def test_data_is_band_sequential_le_float32(self, tmp_path):
        cube = hc.HsiCube(np.arange(2 * 2 * 25, dtype=np.float32)
                          .reshape(2, 2, 25))
        path = tmp_path / "scene.cube"
        hio.write_cube(path, cube)
        flat = np.frombuffer(path.read_bytes(), dtype="<f4")
        assert flat.size == 100
        # first plane is band 0 across all pixels
        assert flat[:4].tolist() == [0.0, 25.0, 50.0, 75.0]

    def test_write_is_deterministic(self, tmp_path):
        rng = np.random.default_rng(3)
        cube = hc.HsiCube(rng.random((4, 4, 25)).astype(np.float32))
        hio.write_cube(tmp_path / "a.cube", cube)
        hio.write_cube(tmp_path / "b.cube", cube)
        assert ((tmp_path / "a.cube").read_bytes()
                == (tmp_path / "b.cube").read_bytes())
        assert ((tmp_path / "a.cube.hdr").read_bytes()
                == (tmp_path / "b.cube.hdr").read_bytes())


class TestCameraConfig:
    def write_config(self, tmp_path, text):
        path = tmp_path / "cam.cfg"
        path.write_text(text)
        return path

    def test_full_parse(self, tmp_path):
        layout = hc.MosaicLayout.identity()
        white = hc.build_white(hc.WhiteSpec(level=3000), 20, 20, layout)
        hio.write_white(tmp_path / "white.hsrw", white)
        mosaic = " ".join(str(b) for b in np.random.default_rng(4)
                          .permutation(25))
        path = self.write_config(tmp_path, f"""
# example configuration
config_id = 2
f_number = 2.8
analog_gain = 1.5
crop_rect = 0 0 20 20
bias = 168
mosaic = {mosaic}
white_frame = white.hsrw
sat_k = 4
peak_ratio = 3.0
cos_min = 0.85
""")
        setup = hio.read_camera_config(path)
        assert setup.camera.config_id == 2
        assert setup.camera.f_number == 2.8
        assert setup.camera.analog_gain == 1.5
        assert setup.camera.crop_rect == (0, 0, 20, 20)
        assert setup.camera.bias == 168.0
        assert " ".join(str(b) for b in setup.layout.band_at.ravel()) == mosaic
        assert setup.white is not None
        assert setup.rejection == hc.RejectionParams(sat_k=4, peak_ratio=3.0,
                                                     cos_min=0.85)

    def test_defaults(self, tmp_path):
        path = self.write_config(tmp_path,
                                 "config_id = 0\ncrop_rect = 0 0 10 10\n")
        setup = hio.read_camera_config(path)
        assert np.array_equal(setup.layout.band_at,
                              np.arange(25).reshape(5, 5))
        assert setup.camera.bias == 0.0
        assert setup.white is None
        assert setup.rejection == hc.RejectionParams()

    def test_missing_required_key(self, tmp_path):
        path = self.write_config(tmp_path, "crop_rect = 0 0 10 10\n")
        with pytest.raises(hc.ConfigError, match="config_id"):
            hio.read_camera_config(path)

    def test_bad_line_reports_location(self, tmp_path):
        path = self.write_config(tmp_path, "config_id = 0\nnot a pair\n")
        with pytest.raises(hc.ConfigError, match=":2"):
            hio.read_camera_config(path)

    def test_bad_mosaic_rejected(self, tmp_path):
        path = self.write_config(
            tmp_path, "config_id = 0\ncrop_rect = 0 0 10 10\n"
            "mosaic = " + " ".join(["0"] * 25) + "\n")
        with pytest.raises(hc.ConfigError):
            hio.read_camera_config(path)

    def test_per_pixel_bias_frame(self, tmp_path):
        dark = hc.RawFrame(np.full((20, 20), 120, dtype=np.int64))
        hio.write_raw(tmp_path / "dark.hsrw", dark)
        path = self.write_config(tmp_path,
                                 "config_id = 1\ncrop_rect = 0 0 20 20\n"
                                 "bias_frame = dark.hsrw\n")
        setup = hio.read_camera_config(path)
        assert isinstance(setup.camera.bias, np.ndarray)
        assert setup.camera.bias.shape == (20, 20)

    def test_write_read_roundtrip(self, tmp_path):
        layout = hc.MosaicLayout.identity()
        setup = hio.CameraSetup(
            camera=hc.CameraConfig(1, 2.8, 2.0, (0, 5, 10, 10), bias=99.0),
            layout=layout, rejection=hc.RejectionParams(sat_k=5))
        path = tmp_path / "cam.cfg"
        hio.write_camera_config(path, setup)
        loaded = hio.read_camera_config(path)
        assert loaded.camera == setup.camera
        assert np.array_equal(loaded.layout.band_at, layout.band_at)
        assert loaded.rejection == setup.rejection
