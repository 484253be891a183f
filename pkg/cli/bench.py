"""
Benchmark harness: exact vs compressed DMD on seeded synthetic scenes.

Every cell runs the full single-batch pipeline (decomposition, selection and
mask) on one thread and reports the median of each stage over the repeats.
"""
import argparse
import logging
import statistics
import time
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import config
from frames_io import FrameSequence
from pipeline import BenchReport, BenchResult, PipelineConfig, run_pipeline
from synth import MovingObject, make_scene

logger = logging.getLogger(__name__)

METHODS = ("exact", "gaussian", "sparse", "spixel", "srft")


def parse_resolutions(value: str) -> List[Tuple[int, int]]:
    """'320x240,720x480' -> [(320, 240), (720, 480)]."""
    resolutions = []
    for item in value.split(","):
        try:
            width, height = (int(v) for v in item.lower().strip().split("x"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got '{item}'")
        if width < 8 or height < 8:
            raise argparse.ArgumentTypeError(f"resolution {item} is too small")
        resolutions.append((width, height))
    return resolutions


def parse_methods(value: str) -> List[str]:
    methods = [v.strip() for v in value.split(",") if v.strip()]
    unknown = [m for m in methods if m not in METHODS]
    if unknown or not methods:
        raise argparse.ArgumentTypeError(f"unknown method(s) {unknown}, expected a subset of {METHODS}")
    return methods


def bench_scene(width: int, height: int, m: int, seed: int) -> FrameSequence:
    """Textured background with one block crossing the frame mid-sequence."""
    size = max(min(width, height) // 8, 1)
    start, end = m // 4, (3 * m) // 4
    block = MovingObject(
        size=size,
        position=(0.0, float((height - size) // 2)),
        velocity=((width - size) / max(end - start - 1, 1), 0.0),
        start_frame=start,
        end_frame=end,
    )
    return make_scene(width, height, m, [block], noise_sigma=2.0, seed=seed).frames


def method_config(method: str, m: int, p: int, K: int, seed: int) -> PipelineConfig:
    if method == "exact":
        return PipelineConfig(method="exact", K=K, batch_size=m, threads=1, seed=seed)
    return PipelineConfig(method="compressed", sensing=method, p=p, K=K, batch_size=m, threads=1, seed=seed)


def bench_cell(frames: FrameSequence, method: str, p: int, K: int, seed: int, repeats: int) -> BenchResult:
    """Median stage times and fps of one (resolution, method) cell."""
    cfg = method_config(method, frames.n_frames, min(p, frames.n_pixels), K, seed)
    stage_runs: Dict[str, List[float]] = {}
    totals = []
    for _ in range(repeats):
        start = time.perf_counter()
        result = run_pipeline(frames, cfg)
        totals.append((time.perf_counter() - start) * 1000.0)
        for stage, ms in result.batches[0].timings.items():
            stage_runs.setdefault(stage, []).append(ms)

    total_ms = statistics.median(totals)
    return BenchResult(
        resolution=(frames.width, frames.height),
        m=frames.n_frames,
        method=method if method == "exact" else f"compressed-{method}",
        stage_times_ms={stage: round(statistics.median(v), 3) for stage, v in stage_runs.items()},
        total_ms=round(total_ms, 3),
        fps=frames.n_frames / (total_ms / 1000.0),
        repeats=repeats,
    )


def run_benchmarks(resolutions: Sequence[Tuple[int, int]], methods: Sequence[str], m: int = 200,
                   repeats: int = 3, p: int = config.DEFAULT_P, K: int = config.DEFAULT_K,
                   seed: int = config.DEFAULT_SEED) -> BenchReport:
    """Run every (resolution, method) cell; scenes are generated once per resolution."""
    if repeats < 1:
        raise ValueError(f"repeats must be positive, got {repeats}")
    results = []
    for width, height in resolutions:
        frames = bench_scene(width, height, m, seed)
        for method in methods:
            logger.info(f"Benchmarking {method} at {width}x{height}, m={m}")
            results.append(bench_cell(frames, method, p, K, seed, repeats))
    return BenchReport(threads=1, results=results)


def format_table(report: BenchReport) -> str:
    """Aligned text table of the benchmark results."""
    stages = []
    for result in report.results:
        stages.extend(s for s in result.stage_times_ms if s not in stages)
    header = ["resolution", "method", *stages, "total_ms", "fps"]
    rows = []
    for r in report.results:
        row = [f"{r.resolution[0]}x{r.resolution[1]}", r.method]
        row += [f"{r.stage_times_ms[s]:.1f}" if s in r.stage_times_ms else "-" for s in stages]
        row += [f"{r.total_ms:.1f}", f"{r.fps:.1f}"]
        rows.append(row)
    widths = [max(len(str(cell)) for cell in column) for column in zip(header, *rows)]
    lines = ["  ".join(str(cell).rjust(w) for cell, w in zip(line, widths)) for line in [header, *rows]]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def run_bench(args: argparse.Namespace) -> int:
    """bench subcommand: print the table and write bench_report.json."""
    resolutions = args.resolutions if isinstance(args.resolutions, list) else parse_resolutions(args.resolutions)
    methods = args.methods if isinstance(args.methods, list) else parse_methods(args.methods)
    report = run_benchmarks(resolutions, methods, args.frames, args.repeats, args.p, args.K, args.seed)

    out = Path(args.out or config.OUTPUT_DIR)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "bench_report.json"
    with open(path, 'w', encoding='utf-8') as f:
        f.write(report.model_dump_json(indent=2))
    print(format_table(report))
    print(f"[OK] Benchmark report written to {path}")
    return 0
