"""Command-line entry point: ``foldcap gen|sim|train|eval|reconstruct|sync``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
import warnings

import numpy as np

from . import __version__
from .cnn import load_model, predict, save_model
from .config import CONFIG_ENV, load_config, resolve_frontend, resolve_material, resolve_pattern, resolve_train
from .dataio import align, default_correspondence, markers_to_primitives, parse_capacitance_csv, parse_marker_csv
from .errors import (
    ChannelCountMismatch, ConfigError, CorruptFile, Diverged, FoldcapError, ParseError, VersionMismatch, WeakCorrelation,
)
from .evaluation import evaluate, reconstruct_sequence, write_scatter_csv, write_scatter_svgs
from .kinematics import PATTERN_NAMES, export_obj, pose_state
from .motion import generate_sessions
from .physics import channel_capacitances, channel_curve_volumes, curve_sweep, patch_volume, write_curve_csv
from .pipeline import (
    prepare_windows, read_pattern, read_session, read_sessions, run_c2f, write_pattern,
    write_session,
)
from .signals import build_windows

logger = logging.getLogger("foldcap")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_RUNTIME, EXIT_WEAK = 0, 2, 3, 4, 5


class _Run:
    """Collects the manifest of one command invocation."""

    def __init__(self, command: str, args: argparse.Namespace, config: dict):
        self.command = command
        self.args = {k: v for k, v in vars(args).items() if k != "func"}
        self.config = config
        self.inputs, self.outputs = [], []
        self.extra = {}
        self.start = time.perf_counter()

    def write(self, path) -> None:
        manifest = {
            "command": self.command,
            "arguments": self.args,
            "config": self.config,
            "seed": self.config.get("seed"),
            "inputs": self.inputs,
            "outputs": self.outputs,
            "tool_version": __version__,
            "wall_time_s": round(time.perf_counter() - self.start, 3),
            **self.extra,
        }
        _atomic_json(path, manifest)


def _atomic_json(path, obj) -> None:
    with open(f"{path}.tmp", "w") as fh:
        json.dump(obj, fh, indent=2, default=_json_default)
        fh.write("\n")
    os.replace(f"{path}.tmp", path)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _config(args) -> dict:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    return cfg


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    cfg = _config(args)
    if args.pattern:
        cfg["pattern"] = {**(cfg["pattern"] if isinstance(cfg["pattern"], dict) else {}), "kind": args.pattern}
    for key in ("sessions", "minutes", "material"):
        if getattr(args, key) is not None:
            cfg[key] = getattr(args, key)
    if args.sync_preamble:
        cfg["sync_preamble"] = True
    pattern = resolve_pattern(cfg["pattern"])
    material = resolve_material(cfg["material"])
    frontend = resolve_frontend(cfg["frontend"])
    run = _Run("gen", args, cfg)
    os.makedirs(args.out, exist_ok=True)
    sessions = generate_sessions(pattern, int(cfg["sessions"]), float(cfg["minutes"]), material, int(cfg["seed"]),
                                 frontend, sync=bool(cfg["sync_preamble"]))
    run.outputs.append(write_pattern(args.out, pattern))
    for s in sessions:
        run.outputs += write_session(os.path.join(args.out, s.recording.session_id), s.recording, s.targets,
                                     s.trajectory.pose)
    run.write(os.path.join(args.out, "manifest.json"))
    print(f"wrote {len(sessions)} sessions of {pattern.kind.value} to {args.out}")
    return EXIT_OK


def cmd_sim(args) -> int:
    """Forward physics sweeps: the ideal single-segment curve and a monotone unfolding of the pattern."""
    cfg = _config(args)
    if args.pattern:
        cfg["pattern"] = {**(cfg["pattern"] if isinstance(cfg["pattern"], dict) else {}), "kind": args.pattern}
    pattern = resolve_pattern(cfg["pattern"])
    frontend = resolve_frontend(cfg["frontend"])
    run = _Run("sim", args, cfg)
    os.makedirs(args.out, exist_ok=True)
    strip = pattern.channel_layouts[0].strip_width
    curve_path = os.path.join(args.out, "curve.csv")
    write_curve_csv(curve_path, curve_sweep(pattern.segment_len_a, strip, frontend, points=args.points))
    e = np.linspace(0.0, 1.0, args.points)
    states = [pose_state(pattern, x, x) for x in e]
    top = np.array([s.top_profile for s in states])
    bottom = np.array([s.bottom_profile for s in states])
    arm = np.array([s.arm_angles for s in states])
    caps = channel_capacitances(pattern, top, bottom, arm, frontend)
    curve_vol = channel_curve_volumes(pattern, top, bottom, arm, frontend)
    vol = np.array([patch_volume(pattern, s) for s in states])
    n = pattern.n_channels
    header = ["deploy", "volume_m3"] + [f"cap_ch{i}_f" for i in range(n)] + [f"curve_volume_ch{i}" for i in range(n)]
    lines = [",".join(header)]
    for i in range(len(e)):
        vals = [e[i], vol[i], *caps[i], *curve_vol[i]]
        lines.append(",".join(f"{v:.9e}" for v in vals))
    sweep_path = os.path.join(args.out, "unfolding.csv")
    with open(sweep_path + ".tmp", "w") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(sweep_path + ".tmp", sweep_path)
    run.outputs += [curve_path, sweep_path]
    run.write(os.path.join(args.out, "manifest.json"))
    print(f"wrote {curve_path} and {sweep_path}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    for flag, key in (("max_epochs", "max_epochs"), ("batch_size", "batch_size"), ("lr", "lr0")):
        if getattr(args, flag) is not None:
            cfg["train"][key] = getattr(args, flag)
    tcfg = resolve_train(cfg["train"], int(cfg["seed"]))
    if not os.path.isdir(args.data):
        raise FileNotFoundError(f"data directory {args.data!r} does not exist")
    pattern = read_pattern(args.data)
    sessions = read_sessions(args.data)
    print(f"training: batch {tcfg.batch_size}, lr {tcfg.lr0}, decay {tcfg.lr_decay} every {tcfg.decay_every} "
          f"epochs, patience {tcfg.early_stop_patience}, max epochs {tcfg.max_epochs}")
    run = _Run("train", args, cfg)
    run.inputs.append(args.data)
    try:
        result = run_c2f(pattern, sessions, tcfg, float(cfg["validation_fraction"]))
    except Diverged as exc:
        if exc.report is not None:
            exc.report.to_json(args.out + ".report.json")
        raise
    save_model(result.model, args.out)
    report_path = args.report or args.out + ".report.json"
    result.report.to_json(report_path)
    run.outputs += [args.out, report_path]
    run.extra["test_avg_r2"] = result.evaluation.avg_r2
    run.write(args.out + ".manifest.json")
    print(f"epochs {result.report.epochs_run}, best {result.report.best_epoch}, "
          f"test R2 {result.evaluation.avg_r2:.4f}, RMSE {result.evaluation.avg_rmse_cm:.3f} cm")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _config(args)
    run = _Run("eval", args, cfg)
    sessions = read_sessions(args.data)
    _, _, test = prepare_windows(sessions, float(cfg["validation_fraction"]))
    if args.oracle:
        pred = test.targets.copy()
    else:
        if not args.model:
            raise ConfigError("eval needs --model unless --oracle is given")
        model = load_model(args.model, expected_channels=test.windows.shape[2])
        pred = predict(model, test.windows)
        run.inputs.append(args.model)
    report = evaluate(test.targets, pred, test.labels)
    report.to_json(args.report)
    base = os.path.splitext(args.report)[0]
    write_scatter_csv(base + "_scatter.csv", test.targets, pred, test.labels)
    svgs = write_scatter_svgs(base, test.targets, pred, test.labels)
    run.inputs.append(args.data)
    run.outputs += [args.report, base + "_scatter.csv", *svgs]
    run.write(base + ".manifest.json")
    print(f"R2 {report.avg_r2:.4f} (pearson {report.avg_r2_pearson:.4f}), RMSE {report.avg_rmse_cm:.3f} cm "
          f"over {report.n_samples} frames")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    cfg = _config(args)
    run = _Run("reconstruct", args, cfg)
    pattern_dir = args.pattern_dir or os.path.dirname(os.path.normpath(args.session))
    pattern = read_pattern(pattern_dir)
    rec, tgt = read_session(args.session)
    if args.truth:
        prims = tgt.values[15:len(tgt) - 14] if len(tgt) >= 30 else tgt.values
    else:
        if not args.model:
            raise ConfigError("reconstruct needs --model unless --truth is given")
        windows = build_windows([(rec, tgt)])
        model = load_model(args.model, expected_channels=windows.windows.shape[2])
        prims = predict(model, windows.windows)
        run.inputs.append(args.model)
    if args.limit is not None:
        prims = prims[: args.limit]
    os.makedirs(args.out, exist_ok=True)
    width = max(5, len(str(len(prims))))
    worst = 0.0
    for i, r in enumerate(reconstruct_sequence(pattern, prims, args.rows)):
        path = os.path.join(args.out, f"frame_{i:0{width}d}.obj")
        export_obj(r.mesh, path)
        run.outputs.append(path)
        worst = max(worst, r.residual_cm)
    run.inputs.append(args.session)
    run.extra["max_residual_cm"] = worst
    run.write(os.path.join(args.out, "manifest.json"))
    print(f"wrote {len(prims)} meshes to {args.out} (largest residual {worst:.4f} cm)")
    return EXIT_OK


def cmd_sync(args) -> int:
    cfg = _config(args)
    if args.pattern:
        cfg["pattern"] = {**(cfg["pattern"] if isinstance(cfg["pattern"], dict) else {}), "kind": args.pattern}
    pattern = resolve_pattern(cfg["pattern"])
    run = _Run("sync", args, cfg)
    rec = parse_capacitance_csv(args.cap)
    tracks = parse_marker_csv(args.markers)
    correspondence = default_correspondence(pattern)
    if args.correspondence:
        with open(args.correspondence) as fh:
            correspondence = {k: tuple(v) for k, v in json.load(fh).items()}
    prims, dropped = markers_to_primitives(tracks, correspondence)
    window = args.search_window if args.search_window is not None else cfg["sync"]["search_window_s"]
    span = args.sync_span if args.sync_span is not None else cfg["sync"]["sync_span_s"]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", WeakCorrelation)
        aligned = align(rec, prims, window, args.offset_ms, weak_threshold=cfg["sync"]["weak_threshold"],
                        sync_span_s=span)
    weak = any(issubclass(w.category, WeakCorrelation) for w in caught)
    os.makedirs(args.out, exist_ok=True)
    run.outputs += write_session(args.out, aligned.recording, aligned.targets)
    run.outputs.append(write_pattern(args.out, pattern))
    run.inputs += [args.cap, args.markers]
    run.extra.update(offset_ms=aligned.offset_ms, correlation=aligned.correlation, dropped_frames=dropped,
                     aligned_frames=len(aligned.recording), weak_correlation=weak)
    run.write(os.path.join(args.out, "manifest.json"))
    print(f"offset {aligned.offset_ms:.1f} ms, correlation {aligned.correlation:.3f}, "
          f"{len(aligned.recording)} aligned frames, {dropped} dropped")
    if weak:
        print("warning: weak correlation; check the offset", file=sys.stderr)
        return EXIT_WEAK
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="foldcap", description=__doc__)
    parser.add_argument("--version", action="version", version=f"foldcap {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, helptext):
        p = sub.add_parser(name, help=helptext, description=helptext)
        p.add_argument("--config", default=None, help=f"JSON config file (default: ${CONFIG_ENV})")
        p.add_argument("--seed", type=int, default=None, help="seed for every random choice")
        p.set_defaults(func=func)
        return p

    p = add("gen", cmd_gen, "generate synthetic sessions (capacitance and ground-truth primitives)")
    p.add_argument("--pattern", help="one of: " + ", ".join(PATTERN_NAMES))
    p.add_argument("--sessions", type=int)
    p.add_argument("--minutes", type=float)
    p.add_argument("--material", help="cloth, paper or ideal")
    p.add_argument("--sync-preamble", action="store_true", dest="sync_preamble",
                   help="open every session with symmetric synchronization pulses")
    p.add_argument("--out", required=True)

    p = add("sim", cmd_sim, "sweep the folding-to-capacitance model over a monotone unfolding")
    p.add_argument("--pattern", help="one of: " + ", ".join(PATTERN_NAMES))
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--out", required=True)

    p = add("train", cmd_train, "train the regressor on a generated or synchronized data directory")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="model file")
    p.add_argument("--report", help="training report JSON (default: <out>.report.json)")
    p.add_argument("--max-epochs", type=int, dest="max_epochs")
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--lr", type=float)

    p = add("eval", cmd_eval, "evaluate a model on the last session of a data directory")
    p.add_argument("--model")
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--oracle", action="store_true", help="use the ground truth as prediction")

    p = add("reconstruct", cmd_reconstruct, "reconstruct one session as a numbered OBJ sequence")
    p.add_argument("--model")
    p.add_argument("--session", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pattern-dir", dest="pattern_dir", help="directory holding pattern.json")
    p.add_argument("--truth", action="store_true", help="reconstruct from the recorded primitives")
    p.add_argument("--limit", type=int)
    p.add_argument("--rows", type=int)

    p = add("sync", cmd_sync, "align a capacitance recording with marker tracks")
    p.add_argument("--cap", required=True)
    p.add_argument("--markers", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pattern", help="one of: " + ", ".join(PATTERN_NAMES))
    p.add_argument("--correspondence", help="JSON mapping primitive label to a marker id pair")
    p.add_argument("--search-window", type=float, dest="search_window")
    p.add_argument("--offset-ms", type=float, dest="offset_ms", help="manual offset; skips the search")
    p.add_argument("--sync-span", type=float, dest="sync_span",
                   help="seconds at the start of the recording used for the offset search")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ParseError, ChannelCountMismatch, CorruptFile, VersionMismatch) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FoldcapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
