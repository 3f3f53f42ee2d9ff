"""Frequency streams to normalized sliding windows: recordings, normalization, windowing, splits."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptFile, EmptyRecording, InsufficientSessions, Misaligned, TooShort

WINDOW = 30
TARGET_INDEX = 15


@dataclass(frozen=True)
class SensorFrame:
    ts: int
    values: tuple


@dataclass(frozen=True, eq=False)
class SessionRecording:
    """Timestamped multi-channel samples; ``values`` is (T, N)."""

    ts_ms: np.ndarray
    values: np.ndarray
    channel_names: tuple = ()
    session_id: str = ""
    norm_stats: dict | None = None

    def __post_init__(self):
        ts = np.asarray(self.ts_ms, dtype=np.int64)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != ts.shape[0]:
            raise Misaligned(f"{ts.shape[0]} timestamps for {v.shape[0]} rows")
        if ts.size > 1 and np.any(np.diff(ts) <= 0):
            raise Misaligned("timestamps must be strictly increasing")
        object.__setattr__(self, "ts_ms", ts)
        object.__setattr__(self, "values", v)
        if not self.channel_names:
            object.__setattr__(self, "channel_names", tuple(f"ch{i}" for i in range(v.shape[1])))
        elif len(self.channel_names) != v.shape[1]:
            raise Misaligned("channel name count differs from data columns")

    def __len__(self) -> int:
        return self.ts_ms.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    @property
    def frames(self) -> list:
        return [SensorFrame(int(t), tuple(row)) for t, row in zip(self.ts_ms, self.values)]

    @classmethod
    def from_frames(cls, frames, **kw):
        frames = list(frames)
        return cls(np.array([f.ts for f in frames], dtype=np.int64), np.array([f.values for f in frames]), **kw)


@dataclass(frozen=True, eq=False)
class PrimitiveSeries:
    """Per-frame geometry primitives in cm; ``values`` is (T, 3)."""

    ts_ms: np.ndarray
    values: np.ndarray
    labels: tuple = ("p1", "p2", "p3")

    def __post_init__(self):
        ts = np.asarray(self.ts_ms, dtype=np.int64)
        v = np.asarray(self.values, dtype=float).reshape(ts.shape[0], -1)
        object.__setattr__(self, "ts_ms", ts)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.ts_ms.shape[0]


@dataclass(frozen=True)
class WindowSample:
    window: np.ndarray
    target: np.ndarray
    source_ts: int


@dataclass(eq=False)
class WindowSet:
    """Stacked windows (M, 30, N), targets (M, 3), source timestamps and session ids."""

    windows: np.ndarray
    targets: np.ndarray
    source_ts: np.ndarray
    session_ids: np.ndarray
    channel_names: tuple = ()
    labels: tuple = ("p1", "p2", "p3")
    norm_stats: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.windows.shape[0]

    def __getitem__(self, i) -> WindowSample:
        return WindowSample(self.windows[i], self.targets[i], int(self.source_ts[i]))

    def subset(self, idx) -> "WindowSet":
        return WindowSet(self.windows[idx], self.targets[idx], self.source_ts[idx], self.session_ids[idx],
                         self.channel_names, self.labels, self.norm_stats)

    @classmethod
    def concat(cls, sets) -> "WindowSet":
        sets = list(sets)
        if not sets:
            raise EmptyRecording("no window sets to concatenate")
        stats = {}
        for s in sets:
            stats.update(s.norm_stats)
        return cls(
            np.concatenate([s.windows for s in sets]),
            np.concatenate([s.targets for s in sets]),
            np.concatenate([s.source_ts for s in sets]),
            np.concatenate([s.session_ids for s in sets]),
            sets[0].channel_names,
            sets[0].labels,
            stats,
        )


def normalize(recording: SessionRecording) -> SessionRecording:
    """Per-channel mean removal followed by min-max scaling to [0, 1].

    Constant channels carry no information and map to 0.5.  The statistics are
    kept on the result so the transform can be inverted.
    """
    if len(recording) < 2:
        raise EmptyRecording("normalization needs at least two frames")
    x = recording.values
    mean = x.mean(axis=0)
    centred = x - mean
    lo, hi = centred.min(axis=0), centred.max(axis=0)
    span = hi - lo
    flat = span == 0
    out = np.where(flat, 0.5, (centred - lo) / np.where(flat, 1.0, span))
    stats = {"mean": mean.tolist(), "min": lo.tolist(), "max": hi.tolist()}
    return SessionRecording(recording.ts_ms, out, recording.channel_names, recording.session_id, stats)


def make_windows(recording: SessionRecording, targets: PrimitiveSeries, session_index: int = 0) -> WindowSet:
    """All 30-frame windows with step 1; each targets its frame 15."""
    if len(recording) != len(targets) or not np.array_equal(recording.ts_ms, targets.ts_ms):
        raise Misaligned("recording and targets must share timestamps one to one")
    if len(recording) < WINDOW:
        raise TooShort(f"need at least {WINDOW} frames, got {len(recording)}")
    view = np.lib.stride_tricks.sliding_window_view(recording.values, WINDOW, axis=0)  # (M, N, 30)
    windows = np.ascontiguousarray(view.transpose(0, 2, 1))
    m = windows.shape[0]
    sl = slice(TARGET_INDEX, TARGET_INDEX + m)
    stats = {recording.session_id or str(session_index): recording.norm_stats} if recording.norm_stats else {}
    return WindowSet(windows, targets.values[sl].copy(), recording.ts_ms[sl].copy(),
                     np.full(m, session_index, dtype=np.int32), recording.channel_names, targets.labels, stats)


def split_sessions(sessions: list):
    """All sessions but the last train; the last one tests."""
    sessions = list(sessions)
    if len(sessions) < 2:
        raise InsufficientSessions(f"need at least two sessions, got {len(sessions)}")
    return sessions[:-1], sessions[-1:]


def build_windows(sessions, start_index: int = 0) -> WindowSet:
    """Normalize and window each (recording, targets) pair separately, then stack."""
    return WindowSet.concat(
        make_windows(normalize(rec), tgt, start_index + i) for i, (rec, tgt) in enumerate(sessions)
    )


def validation_split(windows: WindowSet, fraction: float = 0.1):
    """Carve the final ``fraction`` of windows off for early stopping."""
    m = len(windows)
    n_val = max(1, int(round(m * fraction))) if m > 1 else 0
    return windows.subset(slice(0, m - n_val)), windows.subset(slice(m - n_val, m))


# ---------------------------------------------------------------------------
# persistence


def save_windows(path, windows: WindowSet) -> str:
    """Write ``<path>.bin`` (windows, targets, timestamps, session ids) and ``<path>.json``."""
    path = os.fspath(path)
    blocks = [
        ("windows", windows.windows.astype("<f4")),
        ("targets", windows.targets.astype("<f8")),
        ("source_ts", windows.source_ts.astype("<i8")),
        ("session_ids", windows.session_ids.astype("<i4")),
    ]
    layout, offset = {}, 0
    tmp = path + ".bin.tmp"
    with open(tmp, "wb") as fh:
        for name, arr in blocks:
            fh.write(arr.tobytes())
            layout[name] = {"dtype": arr.dtype.str, "shape": list(arr.shape), "offset": offset}
            offset += arr.nbytes
    os.replace(tmp, path + ".bin")
    manifest = {
        "format": "foldcap-windows",
        "version": 1,
        "blocks": layout,
        "channel_names": list(windows.channel_names),
        "labels": list(windows.labels),
        "norm_stats": windows.norm_stats,
    }
    with open(path + ".json.tmp", "w") as fh:
        json.dump(manifest, fh, indent=2)
    os.replace(path + ".json.tmp", path + ".json")
    return path + ".bin"


def load_windows(path) -> WindowSet:
    path = os.fspath(path)
    with open(path + ".json") as fh:
        manifest = json.load(fh)
    raw = np.fromfile(path + ".bin", dtype=np.uint8)
    arrays = {}
    for name, info in manifest["blocks"].items():
        dt = np.dtype(info["dtype"])
        count = int(np.prod(info["shape"]))
        if info["offset"] + count * dt.itemsize > raw.size:
            raise CorruptFile(f"{path}.bin is truncated in block {name!r}")
        arrays[name] = np.frombuffer(raw, dtype=dt, count=count, offset=info["offset"]).reshape(info["shape"])
    return WindowSet(arrays["windows"].astype(np.float32), arrays["targets"].astype(float),
                     arrays["source_ts"].astype(np.int64), arrays["session_ids"].astype(np.int32),
                     tuple(manifest["channel_names"]), tuple(manifest["labels"]), manifest["norm_stats"])
