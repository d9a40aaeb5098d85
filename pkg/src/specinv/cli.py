"""Command-line experiment harness.

Subcommands:

    reconstruct    phase-retrieve each input WAV from its magnitudes with
                   every requested algorithm and seed; writes reconstructed
                   WAVs, per-iteration trace CSVs and a summary table
    overlap-sweep  repeat reconstruction at several frame shifts and report
                   mean spectral convergence at checkpoint iterations
    hybrid-sweep   sweep the hybrid switch point m0 and report mean final
                   spectral convergence per m0

Outputs are deterministic for a fixed configuration: runs are keyed by
(file, seed, algorithm), aggregation never depends on completion order, and
floats are printed with repr so re-runs produce byte-identical files. Wall
times are only written when --timings is given, since they would break that
reproducibility.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .algorithms import AlgorithmKind, AlgorithmSpec, PhaseInit, run
from .io import Signal, read_wav, write_wav
from .metrics import IterationTrace, si_sdr
from .stft import MagnitudeSpectrogram, StftConfig, magnitude, stft

_TRACE_HEADER = ("iteration", "sc", "cumulative_projections")
_TIMED_TRACE_HEADER = _TRACE_HEADER + ("wall_time_s",)


@dataclass
class ExperimentConfig:
    """Settings shared by every subcommand."""

    inputs: list[str]
    algorithms: list[AlgorithmSpec]
    iterations: int
    out_dir: Path
    frame_ms: float = 32.0
    shift_ms: float = 8.0
    seed_base: int = 0
    runs_per_file: int = 3
    jobs: int = 1
    fmt: str = "csv"
    timings: bool = False

    def seeds(self) -> list[int]:
        return [self.seed_base + k for k in range(self.runs_per_file)]


@dataclass(frozen=True)
class RunKey:
    file_index: int
    file_label: str
    seed: int
    algorithm: str

    def sort_key(self):
        return (self.file_index, self.seed, self.algorithm)


@dataclass
class RunOutcome:
    key: RunKey
    final_sc: float
    si_sdr_db: float
    trace: IterationTrace
    output: Signal


@dataclass
class _Task:
    key: RunKey
    mags: MagnitudeSpectrogram
    reference: Signal
    spec: AlgorithmSpec
    iterations: int


@dataclass
class BatchResult:
    outcomes: list[RunOutcome] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)


def _expand_inputs(inputs: list[str]) -> list[Path]:
    """Resolve files, directories and glob patterns to a sorted WAV list."""
    files: list[Path] = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            files.extend(sorted(p.glob("*.wav")))
        elif any(ch in item for ch in "*?["):
            root = Path(".")
            files.extend(sorted(root.glob(item)))
        else:
            files.append(p)
    seen = set()
    unique = []
    for f in files:
        if f not in seen:
            seen.add(f)
            unique.append(f)
    return unique


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: tuple[str, ...], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format_value(v) for v in row) + "\n")


def _write_table(path_base: Path, fmt: str, header: tuple[str, ...], rows) -> Path:
    """Write rows as CSV or JSON depending on fmt; returns the path used."""
    if fmt == "json":
        path = path_base.with_suffix(".json")
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = [dict(zip(header, row)) for row in rows]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path
    path = path_base.with_suffix(".csv")
    _write_csv(path, header, rows)
    return path


def _mean(values: list[float]) -> float:
    return float(np.mean(values))


def _stderr(values: list[float]) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(len(values)))


def _execute_task(task: _Task) -> RunOutcome:
    init = PhaseInit(seed=task.key.seed)
    output, trace = run(task.mags, task.spec, init, task.iterations)
    return RunOutcome(
        key=task.key,
        final_sc=trace.final_spectral_convergence,
        si_sdr_db=si_sdr(task.reference, output),
        trace=trace,
        output=output,
    )


def _reconstruct_batch(cfg: ExperimentConfig) -> BatchResult:
    """Run every (file, seed, algorithm) combination of the config."""
    result = BatchResult()
    files = _expand_inputs(cfg.inputs)
    if not files:
        result.errors.append("no input WAV files found")
        return result

    tasks: list[_Task] = []
    for idx, path in enumerate(files):
        label = f"{idx:03d}_{path.stem}"
        try:
            signal = read_wav(path)
            stft_cfg = StftConfig.from_milliseconds(
                signal.sample_rate, frame_ms=cfg.frame_ms, shift_ms=cfg.shift_ms
            )
            mags = magnitude(stft(signal, stft_cfg))
            if float(np.linalg.norm(mags.mags)) == 0.0:
                raise ValueError(
                    "all-zero magnitude spectrogram (silent input); "
                    "spectral convergence is undefined"
                )
        except Exception as exc:
            result.errors.append(f"{path}: {exc}")
            continue
        for seed in cfg.seeds():
            for spec in cfg.algorithms:
                key = RunKey(idx, label, seed, spec.label())
                tasks.append(_Task(key, mags, signal, spec, cfg.iterations))

    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = {pool.submit(_execute_task, t): t for t in tasks}
            for future, task in futures.items():
                try:
                    result.outcomes.append(future.result())
                except Exception as exc:
                    result.errors.append(
                        f"{task.key.file_label} seed={task.key.seed} "
                        f"{task.key.algorithm}: {exc}"
                    )
    else:
        for task in tasks:
            try:
                result.outcomes.append(_execute_task(task))
            except Exception as exc:
                result.errors.append(
                    f"{task.key.file_label} seed={task.key.seed} {task.key.algorithm}: {exc}"
                )

    result.outcomes.sort(key=lambda o: o.key.sort_key())
    return result


def _trace_rows(trace: IterationTrace, timings: bool):
    for rec in trace:
        row = (rec.iteration, float(rec.spectral_convergence), rec.cumulative_projections)
        if timings:
            row = row + (float(rec.wall_time),)
        yield row


def _write_run_outputs(out_dir: Path, cfg: ExperimentConfig, batch: BatchResult) -> None:
    header = _TIMED_TRACE_HEADER if cfg.timings else _TRACE_HEADER
    for outcome in batch.outcomes:
        name = f"{outcome.key.file_label}.{outcome.key.algorithm}.seed{outcome.key.seed}"
        _write_csv(out_dir / "traces" / f"{name}.csv", header, _trace_rows(outcome.trace, cfg.timings))
        wav_path = out_dir / "wavs" / f"{name}.wav"
        wav_path.parent.mkdir(parents=True, exist_ok=True)
        write_wav(outcome.output, wav_path)


def _summary_rows(cfg: ExperimentConfig, batch: BatchResult):
    rows = []
    for spec in cfg.algorithms:
        label = spec.label()
        scs = [o.final_sc for o in batch.outcomes if o.key.algorithm == label]
        sdrs = [o.si_sdr_db for o in batch.outcomes if o.key.algorithm == label]
        if not scs:
            continue
        rows.append(
            (label, len(scs), _mean(scs), _stderr(scs), _mean(sdrs))
        )
    return rows


_SUMMARY_HEADER = ("algorithm", "runs", "mean_final_sc", "stderr_final_sc", "mean_si_sdr_db")


def cmd_reconstruct(cfg: ExperimentConfig) -> int:
    """Reconstruct all inputs; write traces, WAVs and a summary table."""
    batch = _reconstruct_batch(cfg)
    out_dir = Path(cfg.out_dir)
    _write_run_outputs(out_dir, cfg, batch)
    if batch.outcomes:
        path = _write_table(out_dir / "summary", cfg.fmt, _SUMMARY_HEADER, _summary_rows(cfg, batch))
        print(f"wrote {path} ({len(batch.outcomes)} runs)")
    for err in batch.errors:
        print(f"error: {err}", file=sys.stderr)
    return 1 if batch.errors else 0


_OVERLAP_HEADER = ("shift_ms", "overlap_percent", "algorithm", "iterations", "mean_sc")


def cmd_overlap_sweep(cfg: ExperimentConfig, shifts_ms: list[float], checkpoints: list[int]) -> int:
    """Re-run reconstruction at several frame shifts; tabulate mean SC at
    the checkpoint iterations for each algorithm and overlap ratio."""
    iterations = max(checkpoints)
    rows = []
    any_error = False
    out_dir = Path(cfg.out_dir)
    for shift in shifts_ms:
        sub = replace(
            cfg,
            shift_ms=shift,
            iterations=iterations,
            out_dir=out_dir / f"shift{shift:g}ms",
        )
        batch = _reconstruct_batch(sub)
        _write_run_outputs(Path(sub.out_dir), sub, batch)
        for err in batch.errors:
            any_error = True
            print(f"error: shift={shift:g}ms {err}", file=sys.stderr)
        overlap = 100.0 * (1.0 - shift / cfg.frame_ms)
        for spec in cfg.algorithms:
            label = spec.label()
            per_algo = [o for o in batch.outcomes if o.key.algorithm == label]
            if not per_algo:
                continue
            for checkpoint in checkpoints:
                scs = [o.trace.at_iteration(checkpoint).spectral_convergence for o in per_algo]
                rows.append((float(shift), float(overlap), label, checkpoint, _mean(scs)))
    if rows:
        path = _write_table(out_dir / "overlap_sweep", cfg.fmt, _OVERLAP_HEADER, rows)
        print(f"wrote {path}")
    return 1 if any_error else 0


_HYBRID_HEADER = ("m0", "algorithm", "mean_final_sc", "stderr_final_sc")


def cmd_hybrid_sweep(cfg: ExperimentConfig, m0_values: list[int], total: int) -> int:
    """Sweep the hybrid switch point m0 at a fixed iteration budget."""
    rows = []
    any_error = False
    out_dir = Path(cfg.out_dir)
    base = cfg.algorithms[0]
    for m0 in m0_values:
        spec = AlgorithmSpec(
            kind=AlgorithmKind.HYBRID, alpha=base.alpha, beta=base.beta, m0=m0, first=base.first
        )
        sub = replace(
            cfg,
            algorithms=[spec],
            iterations=total,
            out_dir=out_dir / f"m0_{m0:03d}",
        )
        batch = _reconstruct_batch(sub)
        _write_run_outputs(Path(sub.out_dir), sub, batch)
        for err in batch.errors:
            any_error = True
            print(f"error: m0={m0} {err}", file=sys.stderr)
        scs = [o.final_sc for o in batch.outcomes]
        if scs:
            rows.append((m0, spec.label(), _mean(scs), _stderr(scs)))
    if rows:
        path = _write_table(out_dir / "hybrid_sweep", cfg.fmt, _HYBRID_HEADER, rows)
        print(f"wrote {path}")
    return 1 if any_error else 0


def _parse_number_list(text: str, kind=float) -> list:
    items = [part.strip() for part in text.split(",") if part.strip()]
    return [kind(part) for part in items]


def _add_common_arguments(sub: argparse.ArgumentParser, defaults: dict) -> None:
    sub.add_argument(
        "--input", action="append", default=defaults.get("input"),
        help="WAV file, directory, or glob pattern (repeatable)",
    )
    sub.add_argument(
        "--frame-ms", type=float, default=defaults.get("frame_ms", 32.0),
        help="frame length in milliseconds (default 32)",
    )
    sub.add_argument(
        "--seed", type=int, default=defaults.get("seed", 0),
        help="base random seed; run k of a file uses seed+k (default 0)",
    )
    sub.add_argument(
        "--runs-per-file", type=int, default=defaults.get("runs_per_file", 3),
        help="number of differently seeded runs per file (default 3)",
    )
    sub.add_argument(
        "--jobs", type=int, default=defaults.get("jobs", 1),
        help="worker processes for independent runs (default 1)",
    )
    sub.add_argument(
        "--out", default=defaults.get("out", "specinv_out"),
        help="output directory (default specinv_out)",
    )
    sub.add_argument(
        "--format", choices=("csv", "json"), default=defaults.get("format", "csv"),
        help="summary/sweep table format (default csv)",
    )
    sub.add_argument(
        "--timings", action="store_true", default=bool(defaults.get("timings", False)),
        help="add wall_time_s to trace CSVs (breaks byte-for-byte reproducibility)",
    )
    sub.add_argument(
        "--config", default=None,
        help="JSON file with defaults for any option (flags override it)",
    )


def build_parser(defaults: dict | None = None) -> argparse.ArgumentParser:
    d = defaults or {}
    parser = argparse.ArgumentParser(
        prog="specinv",
        description="STFT phase retrieval experiments over WAV corpora",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    rec = subs.add_parser("reconstruct", help="reconstruct signals from their magnitudes")
    _add_common_arguments(rec, d)
    rec.add_argument(
        "--algorithm", action="append", default=d.get("algorithm"),
        help="algorithm spec, e.g. gla | fgla:alpha=0.99 | raar:beta=0.9 | "
             "dm:beta=0.8 | admm | hybrid:first=dm,beta=1,m0=60 (repeatable)",
    )
    rec.add_argument(
        "--iterations", type=int, default=d.get("iterations", 100),
        help="iteration budget per run (default 100)",
    )
    rec.add_argument(
        "--shift-ms", type=float, default=d.get("shift_ms", 8.0),
        help="frame shift in milliseconds (default 8)",
    )

    ovl = subs.add_parser("overlap-sweep", help="compare overlap ratios (frame shifts)")
    _add_common_arguments(ovl, d)
    ovl.add_argument(
        "--algorithm", action="append", default=d.get("algorithm"),
        help="algorithm spec (repeatable)",
    )
    ovl.add_argument(
        "--shifts-ms", default=d.get("shifts_ms", "16,8,4"),
        help="comma-separated frame shifts in ms (default 16,8,4)",
    )
    ovl.add_argument(
        "--checkpoints", default=d.get("checkpoints", "20,400"),
        help="comma-separated iteration checkpoints (default 20,400)",
    )

    hyb = subs.add_parser("hybrid-sweep", help="sweep the hybrid switch point m0")
    _add_common_arguments(hyb, d)
    hyb.add_argument(
        "--algorithm", action="append", default=d.get("algorithm"),
        help="hybrid algorithm template, e.g. hybrid:first=dm,beta=1 "
             "(m0 comes from the sweep; default hybrid:first=dm,beta=1)",
    )
    hyb.add_argument(
        "--shift-ms", type=float, default=d.get("shift_ms", 8.0),
        help="frame shift in milliseconds (default 8)",
    )
    hyb.add_argument(
        "--total", type=int, default=d.get("total", 100),
        help="total iterations per run (default 100)",
    )
    hyb.add_argument(
        "--m0-values", default=d.get("m0_values"),
        help="comma-separated m0 list (default 0,total/10,...,total)",
    )
    return parser


def _load_config_defaults(argv: list[str]) -> dict:
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config", default=None)
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return {}
    with open(known.config, "r", encoding="utf-8") as fh:
        loaded = json.load(fh)
    if not isinstance(loaded, dict):
        raise ValueError("config file must hold a JSON object")
    return loaded


def _experiment_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> ExperimentConfig:
    if not args.input:
        parser.error("at least one --input is required")
    if args.runs_per_file < 1:
        parser.error("--runs-per-file must be >= 1")
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    algorithms = args.algorithm
    if args.command == "hybrid-sweep" and not algorithms:
        algorithms = ["hybrid:first=dm,beta=1"]
    if not algorithms:
        parser.error("at least one --algorithm is required")
    try:
        specs = [
            a if isinstance(a, AlgorithmSpec) else AlgorithmSpec.parse(a) for a in algorithms
        ]
    except ValueError as exc:
        parser.error(str(exc))
    shift_ms = getattr(args, "shift_ms", 8.0)
    iterations = getattr(args, "iterations", 0)
    return ExperimentConfig(
        inputs=list(args.input),
        algorithms=specs,
        iterations=iterations,
        out_dir=Path(args.out),
        frame_ms=args.frame_ms,
        shift_ms=shift_ms,
        seed_base=args.seed,
        runs_per_file=args.runs_per_file,
        jobs=args.jobs,
        fmt=args.format,
        timings=args.timings,
    )


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        defaults = _load_config_defaults(argv)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: cannot load config file: {exc}", file=sys.stderr)
        return 2
    parser = build_parser(defaults)
    args = parser.parse_args(argv)
    cfg = _experiment_config(args, parser)

    if args.command == "reconstruct":
        if cfg.iterations < 1:
            parser.error("--iterations must be >= 1")
        return cmd_reconstruct(cfg)

    if args.command == "overlap-sweep":
        shifts = args.shifts_ms
        shifts = _parse_number_list(shifts) if isinstance(shifts, str) else list(shifts)
        if not shifts:
            parser.error("--shifts-ms must list at least one frame shift")
        if any(s <= 0 or s > cfg.frame_ms for s in shifts):
            parser.error("each shift must satisfy 0 < shift <= frame length")
        checkpoints = args.checkpoints
        checkpoints = (
            _parse_number_list(checkpoints, int) if isinstance(checkpoints, str) else list(checkpoints)
        )
        if not checkpoints or any(c < 1 for c in checkpoints):
            parser.error("--checkpoints must list positive iteration counts")
        return cmd_overlap_sweep(cfg, shifts, sorted(set(checkpoints)))

    # hybrid-sweep
    if args.total < 1:
        parser.error("--total must be >= 1")
    if len(cfg.algorithms) != 1 or cfg.algorithms[0].kind != AlgorithmKind.HYBRID:
        parser.error("hybrid-sweep needs exactly one hybrid --algorithm")
    if args.m0_values is None:
        step_size = max(1, args.total // 10)
        m0_values = list(range(0, args.total + 1, step_size))
        if m0_values[-1] != args.total:
            m0_values.append(args.total)
    else:
        raw = args.m0_values
        m0_values = _parse_number_list(raw, int) if isinstance(raw, str) else [int(v) for v in raw]
    if not m0_values:
        parser.error("--m0-values must list at least one switch point")
    if any(m < 0 or m > args.total for m in m0_values):
        parser.error("each m0 must satisfy 0 <= m0 <= total")
    return cmd_hybrid_sweep(cfg, m0_values, args.total)


if __name__ == "__main__":
    sys.exit(main())
