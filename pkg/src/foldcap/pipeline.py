"""End-to-end orchestration: session directories on disk, training and evaluating the regressor."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .cnn import RegressorModel, TrainConfig, TrainReport, build_model, predict, train
from .dataio import parse_capacitance_csv, parse_primitives_csv, write_capacitance_csv, write_primitives_csv
from .errors import InsufficientSessions
from .evaluation import EvalReport, evaluate
from .kinematics import FoldPattern, PatternKind, pattern_from_dict, pattern_to_dict, pose_rises, primitives_array
from .signals import PrimitiveSeries, SessionRecording, WindowSet, build_windows, split_sessions, validation_split

CAP_FILE = "capacitance.csv"
PRIM_FILE = "primitives.csv"
TRAJ_FILE = "trajectory.csv"
PATTERN_FILE = "pattern.json"


def primitive_range(pattern: FoldPattern, steps: int = 11):
    """Smallest and largest primitive values (cm) over the pattern's pose space."""
    e = np.linspace(0.0, 1.0, steps)
    g = np.linspace(-0.5, 0.5, 5)
    et, eb, gg = (x.ravel() for x in np.meshgrid(e, e, g, indexing="ij"))
    top, bottom = pose_rises(pattern, et, eb, gg)
    if pattern.kind is PatternKind.VFOLD:
        prims = []
        for b in np.linspace(0.0, 1.5, 7):
            prims.append(primitives_array(pattern, top, bottom, np.stack([np.full(et.size, b)] * 2, axis=1)))
        prims = np.concatenate(prims)
    else:
        prims = primitives_array(pattern, top, bottom)
    return prims.min(axis=0), prims.max(axis=0)


# ---------------------------------------------------------------------------
# session directories


def write_session(directory, recording: SessionRecording, targets: PrimitiveSeries, pose=None) -> list:
    os.makedirs(directory, exist_ok=True)
    paths = [os.path.join(directory, CAP_FILE), os.path.join(directory, PRIM_FILE)]
    write_capacitance_csv(paths[0], recording)
    write_primitives_csv(paths[1], targets)
    if pose is not None:
        lines = ["unix_ts_ms,e_top,e_bottom,gradient"]
        lines += [f"{t}," + ",".join(f"{v:.6f}" for v in row) for t, row in zip(recording.ts_ms, pose)]
        path = os.path.join(directory, TRAJ_FILE)
        with open(path + ".tmp", "w") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(path + ".tmp", path)
        paths.append(path)
    return paths


def write_pattern(directory, pattern: FoldPattern) -> str:
    path = os.path.join(directory, PATTERN_FILE)
    with open(path + ".tmp", "w") as fh:
        json.dump(pattern_to_dict(pattern), fh, indent=2)
    os.replace(path + ".tmp", path)
    return path


def read_pattern(directory) -> FoldPattern:
    with open(os.path.join(directory, PATTERN_FILE)) as fh:
        return pattern_from_dict(json.load(fh))


def session_dirs(data_dir) -> list:
    if not os.path.isdir(data_dir):
        raise FileNotFoundError(f"data directory {data_dir!r} does not exist")
    out = sorted(
        os.path.join(data_dir, d) for d in os.listdir(data_dir)
        if os.path.isfile(os.path.join(data_dir, d, CAP_FILE))
    )
    return out


def read_session(directory):
    rec = parse_capacitance_csv(os.path.join(directory, CAP_FILE))
    rec = SessionRecording(rec.ts_ms, rec.values, rec.channel_names, os.path.basename(os.path.normpath(directory)))
    tgt = parse_primitives_csv(os.path.join(directory, PRIM_FILE))
    return rec, tgt


def read_sessions(data_dir) -> list:
    dirs = session_dirs(data_dir)
    if len(dirs) < 2:
        raise InsufficientSessions(f"{data_dir!r} holds {len(dirs)} session(s); at least two are needed")
    return [read_session(d) for d in dirs]


# ---------------------------------------------------------------------------
# learning


@dataclass(eq=False)
class C2FResult:
    model: RegressorModel
    report: TrainReport
    evaluation: EvalReport
    test: WindowSet
    predictions: np.ndarray


def prepare_windows(sessions, validation_fraction: float = 0.1):
    """Split sessions, normalize and window each, carve validation off the training windows."""
    train_s, test_s = split_sessions(sessions)
    train_w = build_windows(train_s)
    test_w = build_windows(test_s, start_index=len(train_s))
    fit_w, val_w = validation_split(train_w, validation_fraction)
    return fit_w, val_w, test_w


def run_c2f(pattern: FoldPattern, sessions, cfg: TrainConfig = TrainConfig(), validation_fraction: float = 0.1,
            progress=None) -> C2FResult:
    """Train on all sessions but the last and evaluate on the last one."""
    fit_w, val_w, test_w = prepare_windows(sessions, validation_fraction)
    lo, hi = primitive_range(pattern)
    model = build_model(fit_w.windows.shape[2], seed=cfg.seed, target_lo=lo, target_hi=hi)
    best, report = train(model, fit_w.windows, fit_w.targets, val_w.windows, val_w.targets, cfg, progress)
    pred = predict(best, test_w.windows)
    return C2FResult(best, report, evaluate(test_w.targets, pred, test_w.labels), test_w, pred)
