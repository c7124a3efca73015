import numpy as np
import pytest

import hsicube as hc
from hsicube.attention import load_kernel, save_kernel
from conftest import eca_oracle


class TestKernelSize:
    def test_25_channels(self):
        # (log2(25) + 1) / 2 = 2.822 -> nearest odd is 3
        assert hc.eca_kernel_size(25) == 3

    def test_2_channels(self):
        # (1 + 1) / 2 = 1.0 -> 1
        assert hc.eca_kernel_size(2) == 1

    def test_1_channel_floor(self):
        assert hc.eca_kernel_size(1) == 1

    def test_tie_rounds_down(self):
        # C=8: (3 + 1) / 2 = 2.0, equidistant from 1 and 3 -> 1
        assert hc.eca_kernel_size(8) == 1
        assert hc.eca_kernel_size(9) == 3

    def test_non_decreasing_and_odd(self):
        sizes = [hc.eca_kernel_size(c) for c in range(1, 513)]
        assert all(k % 2 == 1 and k >= 1 for k in sizes)
        assert all(a <= b for a, b in zip(sizes, sizes[1:]))

    def test_custom_constants(self):
        assert hc.eca_kernel_size(25, gamma=1.0, b=0.0) == 5

    def test_rejects_bad_channels(self):
        with pytest.raises(hc.DomainError):
            hc.eca_kernel_size(0)


class TestGlobalAvgPool:
    def test_constant_channels(self):
        x = np.stack([np.full((4, 4), v) for v in (0.1, 2.0, -3.0)])
        assert hc.global_avg_pool(x) == pytest.approx([0.1, 2.0, -3.0])

    def test_checkerboard(self):
        x = np.array([[[0.0, 1.0], [1.0, 0.0]]])
        assert hc.global_avg_pool(x) == pytest.approx([0.5])

    def test_degenerate_spatial(self):
        x = np.arange(3.0).reshape(3, 1, 1)
        assert hc.global_avg_pool(x) == pytest.approx([0.0, 1.0, 2.0])

    def test_rejects_wrong_rank(self):
        with pytest.raises(hc.ShapeError):
            hc.global_avg_pool(np.zeros((4, 4)))


class TestEcaBlock:
    def test_rejects_even_kernel(self):
        with pytest.raises(hc.DomainError):
            hc.EcaBlock(channels=8, kernel=np.ones(2))

    def test_rejects_kernel_longer_than_channels(self):
        with pytest.raises(hc.DomainError):
            hc.EcaBlock(channels=3, kernel=np.ones(5))

    def test_random_uses_adaptive_size(self):
        block = hc.EcaBlock.random(25, seed=3)
        assert block.kernel_size == 3

    def test_random_is_seeded(self):
        a = hc.EcaBlock.random(25, seed=11)
        b = hc.EcaBlock.random(25, seed=11)
        assert np.array_equal(a.kernel, b.kernel)


class TestEcaForward:
    def test_zero_kernel_halves_input_exactly(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(6, 5, 5)).astype(np.float32)
        block = hc.EcaBlock(channels=6, kernel=np.zeros(3))
        out = hc.eca_forward(block, x)
        assert np.array_equal(out, np.float32(0.5) * x)

    def test_attention_depends_only_on_channel_means(self):
        # spatially reversed input has identical channel means, hence an
        # identical gate vector.
        rng = np.random.default_rng(1)
        x = rng.normal(size=(4, 2, 2))
        block = hc.EcaBlock.random(4, seed=5)
        a1 = hc.eca_gate(block, x)
        a2 = hc.eca_gate(block, x[:, ::-1, ::-1])
        assert np.array_equal(a1, a2)

    def test_scalar_kernel_hand_values(self):
        x = np.stack([np.full((2, 2), v) for v in (0.0, 1.0, -1.0)])
        block = hc.EcaBlock(channels=3, kernel=np.array([1.0]))
        gates = hc.eca_gate(block, x)
        assert gates == pytest.approx([0.5, 0.7311, 0.2689], abs=1e-4)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            c = int(rng.integers(1, 65))
            h = int(rng.integers(1, 17))
            w = int(rng.integers(1, 17))
            block = hc.EcaBlock(channels=c,
                                kernel=rng.normal(size=hc.eca_kernel_size(c)))
            x = rng.normal(size=(c, h, w))
            out = hc.eca_forward(block, x)
            assert out == pytest.approx(eca_oracle(block.kernel, x), abs=1e-6)

    def test_shape_preserved_and_gates_bounded(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(25, 8, 8)).astype(np.float32)
        block = hc.EcaBlock.random(25, seed=1)
        out = hc.eca_forward(block, x)
        assert out.shape == x.shape
        gates = hc.eca_gate(block, x)
        assert np.all(gates > 0) and np.all(gates < 1)

    def test_per_channel_proportionality_exact(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(8, 4, 4)).astype(np.float32)
        block = hc.EcaBlock.random(8, seed=2)
        out = hc.eca_forward(block, x)
        gate = hc.eca_gate(block, x).astype(np.float32)
        assert np.array_equal(out, x * gate[:, None, None])

    def test_channel_mismatch(self):
        block = hc.EcaBlock(channels=4, kernel=np.ones(3))
        with pytest.raises(hc.ShapeError):
            hc.eca_forward(block, np.zeros((5, 2, 2)))


class TestManifest:
    def test_single_stage_25_channels(self):
        manifest = hc.build_attention_manifest([25])
        assert len(manifest.stages) == 1
        assert manifest.block_count() == 2
        assert manifest.stages[0].kernel_size == 3
        assert manifest.stages[0].positions == ("pre_conv1", "pre_conv2")

    def test_two_stages_four_blocks(self):
        manifest = hc.build_attention_manifest([32, 64])
        assert manifest.block_count() == 4

    def test_empty_rejected(self):
        with pytest.raises(hc.DomainError):
            hc.build_attention_manifest([])

    def test_csv_layout(self):
        manifest = hc.build_attention_manifest([32, 64])
        lines = manifest.to_csv().strip().split("\n")
        assert lines[0] == "stage,position,channels,kernel_size"
        assert len(lines) == 5
        assert lines[1] == "0,pre_conv1,32,3"
        assert lines[4] == "1,pre_conv2,64,3"

    def test_text_tree_mentions_every_stage(self):
        text = hc.build_attention_manifest([16, 32, 64]).to_text()
        for token in ("stage 0", "stage 1", "stage 2", "eca(k="):
            assert token in text


class TestKernelFile:
    def test_roundtrip(self, tmp_path):
        kernel = np.array([0.25, -1.5, 3.0])
        path = tmp_path / "kernel.txt"
        save_kernel(path, kernel)
        assert np.array_equal(load_kernel(path), kernel)
