"""Pipeline throughput measurement: per-stage latency and frames per second."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .pipeline import PipelineConfig, process_frame
from .sensor import RawFrame


@dataclass(frozen=True)
class BenchResult:
    repetitions: int
    stage_median_us: dict
    frame_ms_median: float
    fps_single: float
    fps_batch: float  # 0.0 when workers <= 1
    workers: int

    def to_text(self) -> str:
        lines = [f"repetitions: {self.repetitions}"]
        for stage, us in self.stage_median_us.items():
            lines.append(f"  {stage:<20s} {us:>10.0f} us")
        lines.append(f"frame time (median): {self.frame_ms_median:.2f} ms")
        lines.append(f"fps single-threaded: {self.fps_single:.1f}")
        if self.workers > 1:
            lines.append(f"fps batch ({self.workers} workers): "
                         f"{self.fps_batch:.1f}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = ["stage,us"]
        for stage, us in self.stage_median_us.items():
            lines.append(f"{stage},{us:.0f}")
        return "\n".join(lines) + "\n"


def run_bench(raw: RawFrame, cfg: PipelineConfig, repetitions: int = 20,
              warmup: int = 3, workers: int = 1) -> BenchResult:
    """Time `process_frame` over repeated runs of the same frame.

    Median per-stage and per-frame figures are reported so a loaded host does
    not skew the numbers.  Batch fps processes `repetitions` frames through a
    thread pool; the heavy numpy stages release the GIL, so threads scale.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    for _ in range(warmup):
        process_frame(raw, cfg)

    frame_times = []
    stage_times: dict[str, list[int]] = {}
    for _ in range(repetitions):
        t0 = time.perf_counter()
        result = process_frame(raw, cfg)
        frame_times.append(time.perf_counter() - t0)
        for stage, us in result.trace.entries:
            stage_times.setdefault(stage, []).append(us)

    stage_median = {stage: float(np.median(times))
                    for stage, times in stage_times.items()}
    frame_ms = float(np.median(frame_times) * 1000.0)
    fps_single = 1000.0 / frame_ms if frame_ms > 0 else float("inf")

    fps_batch = 0.0
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            t0 = time.perf_counter()
            futures = [pool.submit(process_frame, raw, cfg)
                       for _ in range(repetitions)]
            for future in futures:
                future.result()
            wall = time.perf_counter() - t0
        fps_batch = repetitions / wall if wall > 0 else float("inf")

    return BenchResult(repetitions=repetitions, stage_median_us=stage_median,
                       frame_ms_median=frame_ms, fps_single=fps_single,
                       fps_batch=fps_batch, workers=workers)
