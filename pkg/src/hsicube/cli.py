"""Command-line front end.

    hsicube process  --raw f.hsrw --config cam0.cfg --out f.cube [--scale]
                     [--pixel-norm] [--band-norm stats.csv] [--filter box:1]
                     [--strict-scaling] [--workers N]
    hsicube synth    --spec scene.json --config cam0.cfg --out-prefix f
    hsicube stats    <labels_dir> [--csv out.csv] [--diff old.csv]
                     [--from-counts table.csv]
    hsicube metrics  --gt g.png --pred p.png --classes 5 [--names a,b,...]
                     [--remap groups.txt] [--out report.csv]
    hsicube bench    --raw f.hsrw --config cam0.cfg -n 100 [--workers N]

Exit codes: 0 success, 1 I/O error, 2 validation error, 3 the illuminant
estimate fell back to unit scale under --strict-scaling.  The HSICUBE_LOG
environment variable (DEBUG, INFO, ...) selects log verbosity.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import io as hio
from .bench import run_bench
from .errors import HsiCubeError, StageFailure
from .metrics import (aggregate, confusion, default_class_names, remap_labels,
                      report_to_csv)
from .normalize import load_band_stats, normalize_bandwise
from .pipeline import FilterSpec, PipelineConfig, process_frame
from .scaling import SCALING_CSV_HEADER, scaling_csv_row
from .sensor import synth_raw_from_cube
from .stats import class_frequencies, diff_tables, load_table_csv
from .synth import SceneSpec, build_scene, build_white

log = logging.getLogger("hsicube")

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_FALLBACK = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hsicube")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("process", help="raw mosaic frame(s) -> reflectance cube")
    p.add_argument("--raw", required=True, help=".hsrw file or a directory")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="cube path, or a directory in "
                   "batch mode")
    p.add_argument("--scale", action="store_true",
                   help="enable in-frame illuminant scaling")
    p.add_argument("--pixel-norm", action="store_true")
    p.add_argument("--band-norm", metavar="STATSFILE")
    p.add_argument("--band-norm-mode", choices=("zscore", "minmax"),
                   default="zscore")
    p.add_argument("--filter", metavar="KIND:RADIUS",
                   help="optional spatial filter, e.g. box:1 or gaussian:1:0.8")
    p.add_argument("--strict-scaling", action="store_true",
                   help="exit 3 if the illuminant estimate falls back")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("synth", help="scene spec -> raw frame + ground truth")
    p.add_argument("--spec", required=True, help="scene spec JSON file")
    p.add_argument("--config", required=True)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="override the spec's seed")

    p = sub.add_parser("stats", help="class frequencies over label maps")
    p.add_argument("labels", nargs="?", help="directory of label PNGs")
    p.add_argument("--from-counts", metavar="CSV",
                   help="read a frequency table instead of counting maps")
    p.add_argument("--csv", help="also write the table as CSV")
    p.add_argument("--diff", metavar="OLDCSV",
                   help="report the delta against an older table")

    p = sub.add_parser("metrics", help="segmentation scores for one pair")
    p.add_argument("--gt", required=True, help="ground-truth PNG or directory")
    p.add_argument("--pred", required=True, help="prediction PNG or directory")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--names", help="comma-separated class names for the CSV")
    p.add_argument("--remap", metavar="FILE",
                   help="class grouping: lines of 'src dst' ids")
    p.add_argument("--out", help="write the CSV here instead of stdout")

    p = sub.add_parser("bench", help="pipeline latency and throughput")
    p.add_argument("--raw", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("-n", dest="reps", type=int, default=20)
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--scale", action="store_true", default=True,
                   help="include illuminant scaling (default on)")
    p.add_argument("--no-scale", dest="scale", action="store_false")
    p.add_argument("--csv", help="write the per-stage table as CSV")
    return parser


def _pipeline_config(args) -> PipelineConfig:
    setup = hio.read_camera_config(args.config)
    if setup.white is None:
        raise HsiCubeError(f"{args.config}: no white_frame configured; "
                           "reflectance correction needs one")
    filter_spec = FilterSpec.from_string(args.filter) if getattr(
        args, "filter", None) else None
    return PipelineConfig(camera=setup.camera, layout=setup.layout,
                          white=setup.white, spatial_filter=filter_spec,
                          enable_illuminant_scaling=args.scale,
                          enable_pixel_norm=getattr(args, "pixel_norm", False),
                          rejection=setup.rejection)


def _process_one(raw_path: str, out_path: str, cfg: PipelineConfig, band_stats):
    raw = hio.read_raw(raw_path)
    result = process_frame(raw, cfg)
    cube = result.cube
    if band_stats is not None:
        cube = normalize_bandwise(cube, band_stats)
    hio.write_cube(out_path, cube)
    with open(out_path + ".trace.csv", "w", encoding="ascii") as fh:
        fh.write(result.trace.to_csv())
    with open(out_path + ".trace.txt", "w", encoding="ascii") as fh:
        fh.write(result.trace.to_text())
    return result


def _cmd_process(args) -> int:
    cfg = _pipeline_config(args)
    band_stats = None
    if args.band_norm:
        band_stats = load_band_stats(args.band_norm, kind=args.band_norm_mode)

    fallback_seen = False
    scaling_rows = []
    if os.path.isdir(args.raw):
        names = sorted(n for n in os.listdir(args.raw) if n.endswith(".hsrw"))
        if not names:
            raise FileNotFoundError(f"{args.raw}: no .hsrw frames found")
        os.makedirs(args.out, exist_ok=True)

        def job(name):
            out = os.path.join(args.out, os.path.splitext(name)[0] + ".cube")
            return name, _process_one(os.path.join(args.raw, name), out,
                                       cfg, band_stats)

        with ThreadPoolExecutor(max_workers=max(args.workers, 1)) as pool:
            results = list(pool.map(job, names))
        for name, result in results:
            if result.scaling is not None:
                scaling_rows.append(scaling_csv_row(name, result.scaling))
                fallback_seen |= result.scaling.fallback
        scaling_path = os.path.join(args.out, "scaling.csv")
    else:
        result = _process_one(args.raw, args.out, cfg, band_stats)
        if result.scaling is not None:
            scaling_rows.append(scaling_csv_row(
                os.path.basename(args.raw), result.scaling))
            fallback_seen |= result.scaling.fallback
        scaling_path = args.out + ".scaling.csv"

    if args.scale:
        with open(scaling_path, "w", encoding="ascii") as fh:
            fh.write(SCALING_CSV_HEADER + "\n")
            fh.write("\n".join(scaling_rows) + ("\n" if scaling_rows else ""))
    if fallback_seen:
        log.warning("illuminant estimation fell back to unit scale")
        if args.strict_scaling:
            return EXIT_FALLBACK
    return EXIT_OK


def _cmd_synth(args) -> int:
    setup = hio.read_camera_config(args.config)
    spec = SceneSpec.from_file(args.spec)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    x, y, w, h = setup.camera.crop_rect
    height = spec.height if spec.height is not None else h // 5
    width = spec.width if spec.width is not None else w // 5
    truth = build_scene(spec, height, width)

    white = setup.white
    white_path = None
    if white is None:
        white = build_white(spec.white, height * 5, width * 5, setup.layout,
                            config_id=setup.camera.config_id)
        white_path = args.out_prefix + ".white.hsrw"
        hio.write_white(white_path, white)
    if white.frame.shape != (height * 5, width * 5):
        raise HsiCubeError(
            f"white frame shape {white.frame.shape} does not match the scene "
            f"extent {(height * 5, width * 5)}")

    raw = synth_raw_from_cube(truth.cube, setup.layout, white,
                              bias=setup.camera.bias)
    raw_path = args.out_prefix + ".hsrw"
    cube_path = args.out_prefix + ".gt.cube"
    hio.write_raw(raw_path, raw)
    hio.write_cube(cube_path, truth.cube, description="ground truth scene")
    log.info("wrote %s, %s%s", raw_path, cube_path,
             f", {white_path}" if white_path else "")
    return EXIT_OK


def _cmd_stats(args) -> int:
    if args.from_counts:
        table = load_table_csv(args.from_counts)
    else:
        if not args.labels:
            raise HsiCubeError("give a labels directory or --from-counts")
        names = sorted(n for n in os.listdir(args.labels)
                       if n.lower().endswith(".png"))
        maps = (hio.load_label_map(os.path.join(args.labels, n))
                for n in names)
        table = class_frequencies(maps)
    sys.stdout.write(table.to_text())
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(table.to_csv())
    if args.diff:
        old = load_table_csv(args.diff)
        delta = diff_tables(old, table)
        sys.stdout.write(delta.to_text())
    return EXIT_OK


def _load_remap(path) -> dict:
    mapping = {}
    with open(path, "r", encoding="utf-8") as fh:
        for ln in fh:
            ln = ln.split("#", 1)[0].strip()
            if not ln:
                continue
            src, dst = (int(x) for x in ln.split())
            mapping[src] = dst
    return mapping


def _gather_pairs(gt_path: str, pred_path: str) -> list[tuple[str, str]]:
    if os.path.isdir(gt_path) != os.path.isdir(pred_path):
        raise HsiCubeError("--gt and --pred must both be files or both be "
                           "directories")
    if not os.path.isdir(gt_path):
        return [(gt_path, pred_path)]
    names = sorted(n for n in os.listdir(gt_path)
                   if n.lower().endswith(".png"))
    pairs = []
    for n in names:
        other = os.path.join(pred_path, n)
        if not os.path.exists(other):
            raise FileNotFoundError(f"{other}: missing prediction for {n}")
        pairs.append((os.path.join(gt_path, n), other))
    return pairs


def _cmd_metrics(args) -> int:
    mapping = _load_remap(args.remap) if args.remap else None
    total = None
    for gt_file, pred_file in _gather_pairs(args.gt, args.pred):
        gt = hio.load_label_map(gt_file)
        pred = hio.load_label_map(pred_file)
        if mapping:
            gt = remap_labels(gt, mapping)
            pred = remap_labels(pred, mapping)
        m = confusion(gt, pred, args.classes)
        total = m if total is None else total + m
    report = aggregate(total)
    names = (args.names.split(",") if args.names
             else default_class_names(args.classes))
    text = report_to_csv(report, names)
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_bench(args) -> int:
    cfg = _pipeline_config(args)
    raw = hio.read_raw(args.raw)
    result = run_bench(raw, cfg, repetitions=args.reps, warmup=args.warmup,
                       workers=args.workers)
    sys.stdout.write(result.to_text())
    if args.csv:
        with open(args.csv, "w", encoding="ascii") as fh:
            fh.write(result.to_csv())
    return EXIT_OK


_COMMANDS = {
    "process": _cmd_process,
    "synth": _cmd_synth,
    "stats": _cmd_stats,
    "metrics": _cmd_metrics,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("HSICUBE_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except StageFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except HsiCubeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
