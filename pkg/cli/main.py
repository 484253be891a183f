"""
Command-line interface: decompose | background | mask | eval | bench | synth.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
from pydantic import ValidationError

import config
from dmd import save_modes
from frames_io import load_frames, load_mask, save_frame, save_frame_sequence, save_frames, save_mask
from numkernel import NumericalError
from pipeline import (
    BatchError,
    PipelineConfig,
    decompose_batches,
    default_tau_grid,
    evaluate,
    run_pipeline,
    sweep_pipeline,
)
from synth import random_scene
from .bench import parse_methods, parse_resolutions, run_bench

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

FORMATS = {"pgm_dir": "pgm_dir", "raw": "raw_matrix", "raw_matrix": "raw_matrix"}

# CLI flag -> PipelineConfig field
CONFIG_FLAGS = {
    "method": "method",
    "sensing": "sensing",
    "p": "p",
    "sparsity_s": "sparsity_s",
    "rank": "rank",
    "K": "K",
    "amplitude": "amplitude_mode",
    "selection": "selection",
    "omega_tol": "omega_tol",
    "tau": "tau",
    "postfilter": "postfilter",
    "batch": "batch_size",
    "seed": "seed",
    "threads": "threads",
    "frame_interval": "frame_interval",
}


class UsageError(Exception):
    """Invalid combination of command-line arguments."""


def _rank_arg(value: str):
    if value == "auto":
        return value
    try:
        return int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or an integer, got '{value}'")


def _k_arg(value: str):
    if value == "cv":
        return value
    try:
        return int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'cv' or an integer, got '{value}'")


def _tau_grid_arg(value: str) -> List[float]:
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{value}'")


def _shared_parser() -> argparse.ArgumentParser:
    """Flags common to the data-processing subcommands (None = take the config default)."""
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--input", help="Directory of PGM frames or a raw_matrix file")
    shared.add_argument("--format", choices=sorted(FORMATS), default="pgm_dir",
                        help="Input format (default: pgm_dir)")
    shared.add_argument("--config", help="JSON file with pipeline settings; explicit flags override it")
    shared.add_argument("--method", choices=["exact", "compressed"],
                        help=f"Decomposition method (default: {config.DEFAULT_METHOD})")
    shared.add_argument("--sensing", choices=["gaussian", "sparse", "spixel", "srft"],
                        help=f"Measurement matrix family (default: {config.DEFAULT_SENSING})")
    shared.add_argument("--p", type=int, help=f"Number of measurements (default: {config.DEFAULT_P})")
    shared.add_argument("--sparsity-s", dest="sparsity_s", type=float,
                        help="Sparse sensing parameter s (default: n/log n)")
    shared.add_argument("--rank", type=_rank_arg, help=f"Target rank or 'auto' (default: {config.DEFAULT_RANK})")
    shared.add_argument("--K", dest="K", type=_k_arg,
                        help=f"Modes kept by sparse selection, or 'cv' (default: {config.DEFAULT_K})")
    shared.add_argument("--amplitude", choices=["full", "compressed"],
                        help=f"Amplitude solve (default: {config.DEFAULT_AMPLITUDE_MODE})")
    shared.add_argument("--selection", choices=["omp", "low_rank"],
                        help="Background from sparse coding or from zero-frequency modes (default: omp)")
    shared.add_argument("--omega-tol", dest="omega_tol", type=float,
                        help=f"|omega| bound of background modes (default: {config.DEFAULT_OMEGA_TOL})")
    shared.add_argument("--tau", type=float, help=f"Foreground threshold (default: {config.DEFAULT_TAU})")
    shared.add_argument("--postfilter", choices=["none", "median3"],
                        help=f"Mask post-filter (default: {config.DEFAULT_POSTFILTER})")
    shared.add_argument("--batch", type=int, help=f"Frames per batch (default: {config.DEFAULT_BATCH_SIZE})")
    shared.add_argument("--seed", type=int, help=f"Sensing seed (default: {config.DEFAULT_SEED})")
    shared.add_argument("--threads", type=int, help="Batch worker threads (default: $CDMD_THREADS or CPU count)")
    shared.add_argument("--frame-interval", dest="frame_interval", type=float,
                        help=f"Seconds between frames (default: {config.DEFAULT_FRAME_INTERVAL})")
    shared.add_argument("--out", default=None, help=f"Output directory (default: {config.OUTPUT_DIR})")
    shared.add_argument("--log-level", dest="log_level", default=None,
                        help=f"Logging level (default: {config.LOG_LEVEL})")
    return shared


def build_parser() -> argparse.ArgumentParser:
    """Create the cdmd argument parser."""
    shared = _shared_parser()
    parser = argparse.ArgumentParser(
        prog="cdmd",
        description="Compressed dynamic mode decomposition for video background modeling",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Synthesize a test video with ground truth
  python -m cli synth --width 64 --height 64 --frames 200 --objects 2 --out data/synth

  # Foreground masks with the evaluation settings, scored against the truth
  python -m cli mask --input data/synth/frames.raw --format raw --truth data/synth/truth --out out

  # Benchmark exact vs compressed DMD
  python -m cli bench --resolutions 320x240 --repeats 3
        """
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    decompose = sub.add_parser("decompose", parents=[shared], help="Decompose batches and write the model report")
    decompose.add_argument("--save-modes", action="store_true", help="Write the modes of each batch (raw_matrix)")
    decompose.add_argument("--dynamics", action="store_true", help="Include |b V| mode dynamics in the report")

    sub.add_parser("background", parents=[shared], help="Write one background frame per batch")

    mask = sub.add_parser("mask", parents=[shared], help="Write foreground masks")
    mask.add_argument("--truth", help="Directory of ground-truth mask PGMs (adds metrics to the report)")

    evaluate_cmd = sub.add_parser("eval", parents=[shared], help="Score masks against ground truth")
    evaluate_cmd.add_argument("--truth", required=True, help="Directory of ground-truth mask PGMs")
    evaluate_cmd.add_argument("--mask", help="Directory of mask PGMs to score (otherwise run the pipeline)")
    evaluate_cmd.add_argument("--tau-grid", dest="tau_grid", type=_tau_grid_arg,
                              help="Comma-separated thresholds to sweep (pipeline mode only)")
    evaluate_cmd.add_argument("--sweep", action="store_true",
                              help="Sweep the default grid 2.5, 5, ..., 100 (pipeline mode only)")

    bench = sub.add_parser("bench", help="Time exact and compressed DMD on synthetic scenes")
    bench.add_argument("--resolutions", type=parse_resolutions, default="320x240,720x480,1280x720",
                       help="Comma-separated WIDTHxHEIGHT list (default: 320x240,720x480,1280x720)")
    bench.add_argument("--methods", type=parse_methods, default="exact,sparse,spixel,srft",
                       help="Comma-separated methods: exact, gaussian, sparse, spixel, srft "
                            "(default: exact,sparse,spixel,srft)")
    bench.add_argument("--frames", type=int, default=200, help="Frames per scene (default: 200)")
    bench.add_argument("--repeats", type=int, default=3, help="Repetitions per cell, median reported (default: 3)")
    bench.add_argument("--p", type=int, default=config.DEFAULT_P,
                       help=f"Number of measurements (default: {config.DEFAULT_P})")
    bench.add_argument("--K", dest="K", type=int, default=config.DEFAULT_K,
                       help=f"Modes kept by sparse selection (default: {config.DEFAULT_K})")
    bench.add_argument("--seed", type=int, default=config.DEFAULT_SEED,
                       help=f"Scene and sensing seed (default: {config.DEFAULT_SEED})")
    bench.add_argument("--out", default=None, help=f"Output directory (default: {config.OUTPUT_DIR})")
    bench.add_argument("--log-level", dest="log_level", default=None,
                       help=f"Logging level (default: {config.LOG_LEVEL})")

    synth = sub.add_parser("synth", help="Write a synthetic video and its truth masks")
    synth.add_argument("--width", type=int, default=64, help="Frame width (default: 64)")
    synth.add_argument("--height", type=int, default=64, help="Frame height (default: 64)")
    synth.add_argument("--frames", type=int, default=200, help="Number of frames (default: 200)")
    synth.add_argument("--objects", type=int, default=1, help="Moving objects (default: 1)")
    synth.add_argument("--object-size", dest="object_size", type=int, default=8, help="Object size (default: 8)")
    synth.add_argument("--oscillators", type=int, default=0, help="Oscillating background patches (default: 0)")
    synth.add_argument("--noise", type=float, default=0.0, help="Pixel noise sigma (default: 0)")
    synth.add_argument("--seed", type=int, default=config.DEFAULT_SEED,
                       help=f"Scene seed (default: {config.DEFAULT_SEED})")
    synth.add_argument("--pgm", action="store_true", help="Also write the frames as a PGM directory")
    synth.add_argument("--out", default=None, help=f"Output directory (default: {config.OUTPUT_DIR})")
    synth.add_argument("--log-level", dest="log_level", default=None,
                       help=f"Logging level (default: {config.LOG_LEVEL})")
    return parser


def _setup_logging(level: Optional[str]) -> None:
    logging.basicConfig(
        level=getattr(logging, (level or config.LOG_LEVEL).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )


def pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    """Merge the JSON config file (if any), explicit flags and the CDMD_THREADS fallback."""
    settings = {}
    if getattr(args, "config", None):
        settings = PipelineConfig.from_json_file(args.config).model_dump(exclude_unset=True)
    for flag, name in CONFIG_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            settings[name] = value
    if "threads" not in settings:
        settings["threads"] = int(config.get_config("CDMD_THREADS", str(config.THREADS)))
    return PipelineConfig.model_validate(settings)


def _output_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out or config.OUTPUT_DIR)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_input(args: argparse.Namespace, cfg: PipelineConfig):
    if not args.input:
        raise UsageError(f"{args.command} needs --input")
    return load_frames(args.input, FORMATS[args.format], cfg.frame_interval)


def write_json(path: Path, payload) -> Path:
    """Write a pydantic model or plain dict as indented JSON."""
    with open(path, 'w', encoding='utf-8') as f:
        if hasattr(payload, "model_dump_json"):
            f.write(payload.model_dump_json(indent=2))
        else:
            json.dump(payload, f, indent=2)
    return path


def cmd_decompose(args: argparse.Namespace) -> int:
    cfg = pipeline_config(args)
    frames = _load_input(args, cfg)
    out = _output_dir(args)
    result = decompose_batches(frames, cfg, include_dynamics=args.dynamics)
    if args.save_modes:
        for b in result.batches:
            save_modes(b.model, out / "modes" / f"batch_{b.index:03d}", frames.width, frames.height)
    path = write_json(out / "decompose_report.json", result.report)
    for b in result.report.batches:
        print(f"[INFO] Batch {b.index}: frames {b.start_frame}-{b.start_frame + b.n_frames - 1}, k={b.k}")
    print(f"[OK] Report written to {path}")
    return EXIT_OK


def cmd_background(args: argparse.Namespace) -> int:
    cfg = pipeline_config(args)
    frames = _load_input(args, cfg)
    out = _output_dir(args)
    result = run_pipeline(frames, cfg, with_masks=False, command="background")
    for b in result.batches:
        save_frame(b.background.background, frames.width, frames.height, out / f"background_{b.index:03d}.pgm")
    path = write_json(out / "background_report.json", result.report)
    print(f"[OK] {len(result.batches)} background frame(s) and report written to {out}")
    logger.debug(f"Report: {path}")
    return EXIT_OK


def cmd_mask(args: argparse.Namespace) -> int:
    cfg = pipeline_config(args)
    frames = _load_input(args, cfg)
    truth = load_mask(args.truth) if args.truth else None
    out = _output_dir(args)
    result = run_pipeline(frames, cfg, truth=truth, command="mask")
    for b in result.batches:
        save_mask(b.mask, out / "masks", start_index=b.start_frame)
    write_json(out / "run_report.json", result.report)
    if result.evaluation is not None:
        e = result.evaluation
        print(f"[INFO] Recall={e.recall:.4f} Precision={e.precision:.4f} F={e.f_measure:.4f}")
    print(f"[OK] {frames.n_frames} mask frame(s) written to {out / 'masks'}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    truth = load_mask(args.truth)
    out = _output_dir(args)

    if args.mask:
        if args.tau_grid or args.sweep:
            raise UsageError("--tau-grid/--sweep need a pipeline run (--input), not --mask")
        report = evaluate(load_mask(args.mask), truth)
        write_json(out / "eval_report.json", report)
        print(f"[INFO] Recall={report.recall:.4f} Precision={report.precision:.4f} F={report.f_measure:.4f}")
        return EXIT_OK

    cfg = pipeline_config(args)
    frames = _load_input(args, cfg)
    result = run_pipeline(frames, cfg, truth=truth, command="eval")
    report = result.evaluation
    grid = args.tau_grid or (default_tau_grid() if args.sweep else None)
    if grid:
        sweep = sweep_pipeline(result, truth, grid, cfg.postfilter)
        report = report.model_copy(update={"threshold_sweep": sweep.points})
        result.report.metrics = report
        print(f"[INFO] Best tau={sweep.best_tau:g} F={sweep.best_f_measure:.4f}")
        if not sweep.monotone:
            print("[WARN] Foreground count is not monotone in tau")
    write_json(out / "eval_report.json", report)
    write_json(out / "run_report.json", result.report)
    print(f"[INFO] Recall={report.recall:.4f} Precision={report.precision:.4f} F={report.f_measure:.4f}")
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    out = _output_dir(args)
    scene = random_scene(args.width, args.height, args.frames, args.objects, args.object_size,
                         args.noise, args.seed, args.oscillators)
    save_frames(scene.frames, out / "frames.raw")
    save_mask(scene.truth, out / "truth", prefix="truth")
    save_frame(scene.background, args.width, args.height, out / "background.pgm")
    if args.pgm:
        save_frame_sequence(scene.frames, out / "frames")
    print(f"[OK] {args.width}x{args.height} scene with {args.frames} frames written to {out}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    return run_bench(args)


COMMANDS = {
    "decompose": cmd_decompose,
    "background": cmd_background,
    "mask": cmd_mask,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "synth": cmd_synth,
}


def _is_numerical(error: BaseException) -> bool:
    if isinstance(error, BatchError):
        error = error.cause
    return isinstance(error, (NumericalError, np.linalg.LinAlgError))


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    _setup_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        if _is_numerical(e):
            print(f"[ERROR] Numerical failure: {e}", file=sys.stderr)
            return EXIT_NUMERICAL
        if isinstance(e, (ValueError, OSError, ValidationError, BatchError)):
            print(f"[ERROR] {e}", file=sys.stderr)
            return EXIT_DATA
        raise


if __name__ == "__main__":
    sys.exit(main())
