"""Command-line entry point: run, extract, fit, simulate, analyze, compare.

Every output artifact starts with a comment header carrying the tool
version and a hash of the effective configuration, so artifacts are
reproducible and self-describing.  All subcommands are deterministic
given identical inputs, config, and seed.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import sys
from pathlib import Path

from . import __version__, analysis, spritemerge
from .automaton import simulate
from .fit import FitConfig, export_model, import_model
from .framelog import parse_log, write_log
from .harness import (ProtocolConfig, make_synthetic, parse_synthetic_spec,
                      run_protocol)
from .jumpseg import segments_csv
from .pipeline import PipelineConfig, extract, learn_model
from .tracker import TrackerConfig

_CONFIG_KEYS = {
    "npmi_threshold": float,
    "start_window_b": int,
    "tracker.sigma": float,
    "tracker.initiation_distance": float,
    "tracker.coast_limit": int,
    "fit.epsilon": float,
    "fit.penalty": float,
    "fit.max_iterations": int,
    "fit.convergence_tolerance": float,
    "fit.multiplier_min_spread": float,
    "protocol.k_start": int,
    "protocol.wait_frames": int,
    "protocol.trial_count": int,
    "protocol.jump_button": str,
    "analysis.k_min": int,
    "analysis.k_max": int,
    "analysis.restarts": int,
    "analysis.elbow_threshold": float,
}


class CliError(RuntimeError):
    pass


def load_config(path: str | None) -> dict:
    kv = {}
    if path is None:
        return kv
    for line_no, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"{path}:{line_no}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise CliError(f"{path}:{line_no}: unknown config key {key!r}")
        try:
            kv[key] = _CONFIG_KEYS[key](value)
        except ValueError:
            raise CliError(f"{path}:{line_no}: bad value for {key}") from None
    return kv


def build_configs(kv: dict) -> tuple[PipelineConfig, ProtocolConfig]:
    def sub(prefix, cls, **extra):
        args = {k.split(".", 1)[1]: v for k, v in kv.items()
                if k.startswith(prefix + ".")}
        args.update(extra)
        return cls(**args)

    pipeline = PipelineConfig(
        npmi_threshold=kv.get("npmi_threshold", 0.1),
        start_window_b=kv.get("start_window_b", 8),
        tracker=sub("tracker", TrackerConfig),
        fit=sub("fit", FitConfig))
    protocol = sub("protocol", ProtocolConfig)
    return pipeline, protocol


def config_hash(kv: dict, seed: int) -> str:
    blob = repr(sorted(kv.items())) + f" seed={seed}"
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _header(kv: dict, seed: int) -> str:
    return f"# jumplab {__version__} config={config_hash(kv, seed)}\n"


def _write(path: Path, header: str, body: bytes | str) -> None:
    if isinstance(body, str):
        body = body.encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(header.encode("utf-8") + body)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_run(args, kv) -> int:
    _, protocol = build_configs(kv)
    spec = parse_synthetic_spec(Path(args.synthetic).read_text())
    game = make_synthetic(spec)
    log = run_protocol(game, protocol, game_id=args.game,
                       character_id=args.character)
    _write(Path(args.out), _header(kv, args.seed), write_log(log))
    return 0


def cmd_extract(args, kv) -> int:
    pipeline, _ = build_configs(kv)
    log = parse_log(Path(args.log).read_bytes())
    extraction = extract(log, pipeline)
    out_dir = Path(args.out_dir)
    header = _header(kv, args.seed)

    rows = [(hold, seg) for hold in sorted(extraction.segments)
            for seg in extraction.segments[hold]]
    _write(out_dir / "segments.csv", header, segments_csv(rows))
    if args.dump_groups:
        _write(out_dir / "groups.txt", header,
               spritemerge.dump_groups(extraction.merge_map))
    if args.dump_tracks:
        lines = ["trial_hold,track_id,frame,x,y"]
        for trial, tracks in zip(log.trials, extraction.trial_tracks):
            for trk in tracks:
                for frame in sorted(trk.points):
                    x, y = trk.points[frame]
                    lines.append(f"{trial.hold_frames},{trk.track_id},"
                                 f"{frame},{x},{y}")
        _write(out_dir / "tracks.csv", header, "\n".join(lines) + "\n")
    return 0


def cmd_fit(args, kv) -> int:
    pipeline, _ = build_configs(kv)
    header = _header(kv, args.seed)
    logs = [Path(p) for p in args.log]
    if len(logs) > 1 and args.out_dir is None:
        raise CliError("multiple --log inputs need --out-dir")
    if len(logs) == 1 and args.out is None and args.out_dir is None:
        raise CliError("need --out or --out-dir")

    def one(path: Path) -> tuple[Path, bytes]:
        model = learn_model(parse_log(path.read_bytes()), pipeline)
        if len(logs) == 1 and args.out is not None:
            dest = Path(args.out)
        else:
            dest = Path(args.out_dir) / (path.stem + ".model")
        return dest, export_model(model)

    if args.jobs > 1 and len(logs) > 1:
        with concurrent.futures.ThreadPoolExecutor(args.jobs) as pool:
            results = list(pool.map(one, logs))
    else:
        results = [one(p) for p in logs]
    for dest, body in results:
        _write(dest, header, body)
    return 0


def _resolve_holds(args, model) -> list[int]:
    holds = list(args.hold or [])
    if args.hold_min:
        holds.append(model.min_hold)
    if args.hold_median:
        holds.append((model.min_hold + model.max_hold) // 2)
    if args.hold_max:
        holds.append(model.max_hold)
    if not holds:
        raise CliError("no hold durations requested")
    return holds


def cmd_simulate(args, kv) -> int:
    model = import_model(Path(args.model).read_bytes())
    lines = ["hold,frame,height"]
    for hold in _resolve_holds(args, model):
        result = simulate(model.to_automaton(), hold, args.frames)
        for frame, height in enumerate(result.heights):
            lines.append(f"{hold},{frame},{int(height)}")
    _write(Path(args.out), _header(kv, args.seed), "\n".join(lines) + "\n")
    return 0


def cmd_compare(args, kv) -> int:
    lines = ["model,frame,height"]
    for path in args.models.split(","):
        model = import_model(Path(path).read_bytes())
        hold = {"min": model.min_hold,
                "median": (model.min_hold + model.max_hold) // 2,
                "max": model.max_hold}[args.hold]
        result = simulate(model.to_automaton(), hold, args.frames)
        name = Path(path).stem
        for frame, height in enumerate(result.heights):
            lines.append(f"{name},{frame},{int(height)}")
    _write(Path(args.out), _header(kv, args.seed), "\n".join(lines) + "\n")
    return 0


def _load_years(path: str | None) -> dict[str, int] | None:
    if path is None:
        return None
    years = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("game,"):
            continue
        game, year = (s.strip() for s in line.split(",", 1))
        years[game] = int(year)
    return years


def cmd_analyze(args, kv) -> int:
    model_paths = sorted(Path(args.models).glob("*.model"))
    if not model_paths:
        raise CliError(f"no .model files in {args.models}")
    models = [import_model(p.read_bytes()) for p in model_paths]
    matrix = analysis.featurize(models)
    pca_result = analysis.pca(matrix)
    km = analysis.kmeans_scan(
        matrix,
        k_min=kv.get("analysis.k_min", 2),
        k_max=kv.get("analysis.k_max", min(15, len(models))),
        restarts=kv.get("analysis.restarts", analysis.DEFAULT_RESTARTS),
        seed=args.seed,
        elbow_threshold=kv.get("analysis.elbow_threshold",
                               analysis.DEFAULT_ELBOW_THRESHOLD))
    bundle = analysis.report(pca_result, km, matrix, _load_years(args.years))
    header = _header(kv, args.seed)
    for name, csv in bundle.items():
        _write(Path(args.out) / name, header, csv)
    return 0


def cmd_corpus(args, kv) -> int:
    models, labels, years = analysis.generate_corpus(args.count, args.seed)
    out_dir = Path(args.out)
    header = _header(kv, args.seed)
    for model in models:
        _write(out_dir / f"{model.game_id}.model", header, export_model(model))
    lines = ["game,year"] + [f"{g},{years[g]}" for g in sorted(years)]
    _write(out_dir / "years.csv", header, "\n".join(lines) + "\n")
    lines = ["game,archetype"] + [f"{m.game_id},{lab}"
                                  for m, lab in zip(models, labels)]
    _write(out_dir / "archetypes.csv", header, "\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jumplab",
        description="Infer platformer jump models from frame logs.")
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--seed", type=int, default=analysis.DEFAULT_SEED)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the experiment protocol")
    p.add_argument("--synthetic", required=True, help="synthetic game spec file")
    p.add_argument("--out", required=True)
    p.add_argument("--game", default="synthetic")
    p.add_argument("--character", default="player")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("extract", help="merge, track, and segment a log")
    p.add_argument("--log", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--dump-groups", action="store_true")
    p.add_argument("--dump-tracks", action="store_true")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("fit", help="learn a jump model from a log")
    p.add_argument("--log", action="append", required=True)
    p.add_argument("--out")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="replay a model's jump arcs")
    p.add_argument("--model", required=True)
    p.add_argument("--hold", type=int, action="append")
    p.add_argument("--hold-min", action="store_true")
    p.add_argument("--hold-median", action="store_true")
    p.add_argument("--hold-max", action="store_true")
    p.add_argument("--frames", type=int, default=120)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="PCA and clustering over models")
    p.add_argument("--models", required=True, help="directory of .model files")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--years", help="optional game,year CSV")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", help="overlaid simulated arcs")
    p.add_argument("--models", required=True, help="comma-separated model files")
    p.add_argument("--hold", choices=("min", "median", "max"), default="max")
    p.add_argument("--frames", type=int, default=120)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("corpus", help="write the bundled synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=52)
    p.set_defaults(func=cmd_corpus)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        kv = load_config(args.config)
        return args.func(args, kv)
    except Exception as exc:  # surface as a structured one-line error
        print(f"jumplab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
