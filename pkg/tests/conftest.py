"""Shared builders and independent brute-force oracles for the test suite.

The oracles here deliberately re-implement operations with plain python loops
(no vectorization, no shared helpers) so the fast paths are checked against
genuinely independent code.
"""

from __future__ import annotations

import math

import numpy as np

import hsicube as hc

# ---------------------------------------------------------------------------
# Published dataset frequency tables (v2.0 and v2.1), class order:
# Road, Road Marks, Vegetation, Painted Metal, Sky, Concrete, Pedestrian,
# Water, Unpainted Metal, Glass.
# ---------------------------------------------------------------------------

V20_COUNTS = (26_690_619, 1_325_343, 9_339_224, 948_852, 2_511_496,
              2_315_153, 209_531, 12_330, 348_341, 246_614)
V20_TOTAL = 43_947_503
V20_PCT = (60.73, 3.02, 21.25, 2.16, 5.71, 5.27, 0.48, 0.03, 0.79, 0.56)

V21_COUNTS = (26_753_811, 1_364_908, 9_799_475, 1_113_573, 2_549_527,
              2_485_658, 231_019, 10_592, 467_688, 279_261)
V21_TOTAL = 45_055_512
V21_PCT = (59.38, 3.03, 21.75, 2.47, 5.66, 5.52, 0.51, 0.02, 1.04, 0.62)


# ---------------------------------------------------------------------------
# Pipeline setup builders
# ---------------------------------------------------------------------------

def make_setup(height=40, width=40, white_level=3600.0, bias=100,
               band_ripple=0.05, vignette=0.08, layout=None, **flags):
    """Layout, white reference, and a PipelineConfig for an HxW cube scene."""
    if layout is None:
        layout = hc.MosaicLayout.identity()
    white_spec = hc.WhiteSpec(level=white_level, band_ripple=band_ripple,
                              vignette=vignette)
    white = hc.build_white(white_spec, height * 5, width * 5, layout)
    cam = hc.CameraConfig(config_id=0, f_number=2.0, analog_gain=1.0,
                          crop_rect=(0, 0, width * 5, height * 5), bias=bias)
    cfg = hc.PipelineConfig(camera=cam, layout=layout, white=white, **flags)
    return layout, white, cam, cfg


def roundtrip_scene(seed, height=40, width=40):
    """Bandlimited scene: gentle gradient plus wide blobs, no emitters."""
    rng = np.random.default_rng(seed)
    blobs = []
    for _ in range(int(rng.integers(2, 5))):
        blobs.append({
            "row": float(rng.uniform(12, height - 12)),
            "col": float(rng.uniform(12, width - 12)),
            "sigma": float(rng.uniform(4.0, 8.0)),
            "amplitude": float(rng.uniform(-0.15, 0.25)),
        })
    spec = hc.SceneSpec.from_dict({
        "seed": int(seed),
        "base": float(rng.uniform(0.2, 0.35)),
        "gradient": {"dy": float(rng.uniform(-0.15, 0.15)),
                     "dx": float(rng.uniform(-0.15, 0.15))},
        "blobs": blobs,
        "band_gain": 0.15,
        "noise_sigma": 0.0,
    })
    return hc.build_scene(spec, height, width)


def scaling_scene(seed, height=40, width=40, albedo=None, n_emitters=None,
                  dome=0.005, noise_sigma=0.002):
    """Scene with one bright reflector patch and brighter narrow-band emitters.

    The patch sits in the lower-right region, emitters in the upper rows, so
    emitter smear cannot touch the patch neighbourhood.  Returns the truth and
    the planted albedo.
    """
    rng = np.random.default_rng(seed)
    if albedo is None:
        albedo = float(rng.uniform(0.3, 0.9))
    if n_emitters is None:
        n_emitters = int(rng.integers(1, 6))
    emitters = []
    cols = rng.permutation(np.arange(3, width - 3))[:n_emitters]
    for col in cols:
        start = int(rng.integers(0, hc.BANDS - 5))
        emitters.append({
            "row": int(rng.integers(2, 12)),
            "col": int(col),
            "bands": list(range(start, start + 5)),
            "value": 6.0,
            "floor": 0.05,
        })
    spec = hc.SceneSpec.from_dict({
        "seed": int(seed),
        "base": 0.12,
        "gradient": {"dy": float(rng.uniform(0.0, 0.05)),
                     "dx": float(rng.uniform(0.0, 0.05))},
        "patches": [{"row": int(rng.integers(20, height - 11)),
                     "col": int(rng.integers(16, width - 11)),
                     "size": 9, "albedo": albedo, "dome": dome}],
        "emitters": emitters,
        "band_gain": 0.0,
        "noise_sigma": noise_sigma,
    })
    return hc.build_scene(spec, height, width), albedo


# ---------------------------------------------------------------------------
# Brute-force oracles
# ---------------------------------------------------------------------------

def bilinear_at(plane, y, x):
    """Scalar bilinear sample with clamped edges, independent of the library."""
    h, w = plane.shape
    y0 = math.floor(y)
    x0 = math.floor(x)
    fy = y - y0
    fx = x - x0

    def at(i, j):
        return float(plane[min(max(i, 0), h - 1), min(max(j, 0), w - 1)])

    top = at(y0, x0) * (1 - fx) + at(y0, x0 + 1) * fx
    bot = at(y0 + 1, x0) * (1 - fx) + at(y0 + 1, x0 + 1) * fx
    return top * (1 - fy) + bot * fy


def synth_oracle(cube_values, layout, white_frame, bias):
    """Loop re-implementation of cube -> raw synthesis (float64)."""
    hc_, wc_, _ = cube_values.shape
    out = np.zeros((hc_ * 5, wc_ * 5), dtype=np.int64)
    for y in range(hc_ * 5):
        for x in range(wc_ * 5):
            r, c = y % 5, x % 5
            b = int(layout.band_at[r, c])
            dy = (r - 2) / 5.0
            dx = (c - 2) / 5.0
            val = bilinear_at(cube_values[:, :, b].astype(np.float64),
                              y // 5 - dy, x // 5 - dx)
            counts = round(val * (float(white_frame[y, x]) - bias) + bias)
            out[y, x] = min(max(counts, 0), 4095)
    return out


def eca_oracle(kernel, x):
    """Loop re-implementation of the ECA forward pass (float64)."""
    c, h, w = x.shape
    k = len(kernel)
    half = (k - 1) // 2
    gap = [float(np.asarray(x[ch], dtype=np.float64).sum()) / (h * w)
           for ch in range(c)]
    out = np.empty_like(np.asarray(x, dtype=np.float64))
    for ch in range(c):
        z = 0.0
        for j in range(k):
            idx = ch + j - half
            if 0 <= idx < c:
                z += float(kernel[j]) * gap[idx]
        gate = 1.0 / (1.0 + math.exp(-z))
        for i in range(h):
            for j in range(w):
                out[ch, i, j] = float(x[ch, i, j]) * gate
    return out


def metrics_oracle(gt, pred, n_classes):
    """Loop re-implementation of confusion + IoU + aggregates."""
    counts = [[0] * n_classes for _ in range(n_classes)]
    h, w = gt.shape
    for i in range(h):
        for j in range(w):
            g = int(gt[i, j])
            if g == 0:
                continue
            counts[g - 1][int(pred[i, j]) - 1] += 1
    total = sum(sum(row) for row in counts)
    correct = sum(counts[c][c] for c in range(n_classes))
    iou = [float("nan")] * n_classes
    support = [sum(counts[c]) for c in range(n_classes)]
    for c in range(n_classes):
        col = sum(counts[g][c] for g in range(n_classes))
        union = support[c] + col - counts[c][c]
        if union > 0:
            iou[c] = counts[c][c] / union
    num = sum(support[c] * iou[c] for c in range(n_classes)
              if not math.isnan(iou[c]))
    den = sum(support[c] for c in range(n_classes) if not math.isnan(iou[c]))
    return {
        "counts": np.asarray(counts, dtype=np.int64),
        "iou": np.asarray(iou),
        "global": correct / total if total else float("nan"),
        "weighted": num / den if den else float("nan"),
        "support": np.asarray(support, dtype=np.float64),
    }
