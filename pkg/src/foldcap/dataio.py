"""Recorded capacitance and marker-track files: parsing, primitive extraction, clock alignment."""

from __future__ import annotations

import csv
import io
import logging
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ChannelCountMismatch, MissingMarker, NoOverlap, ParseError, TooShort, WeakCorrelation
from .kinematics import FoldPattern, PatternKind, frame_geometry
from .signals import PrimitiveSeries, SessionRecording

logger = logging.getLogger(__name__)

MARKER_HEADER = ["ts_ms", "marker_id", "x_px", "y_px", "scale_cm_per_px"]
HALF_FRAME_MS = 1000.0 / 30.0 / 2.0

# primitive label -> marker pair; markers sit on the pattern's ground-level corners
QUAD_MARKERS = {"top": (0, 1), "base": (2, 3), "diagonal": (0, 3)}
VFOLD_MARKERS = {"left": (0, 1), "right": (0, 2), "diagonal": (1, 2)}


def default_correspondence(pattern: FoldPattern) -> dict:
    return dict(VFOLD_MARKERS if pattern.kind is PatternKind.VFOLD else QUAD_MARKERS)


# ---------------------------------------------------------------------------
# writers


def _atomic_text(path, text: str) -> None:
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_capacitance_csv(path, recording: SessionRecording) -> None:
    buf = io.StringIO()
    buf.write(",".join(["ts_ms"] + [f"ch{i}" for i in range(recording.n_channels)]) + "\n")
    for ts, row in zip(recording.ts_ms, recording.values):
        buf.write(f"{ts}," + ",".join(f"{v:.4f}" for v in row) + "\n")
    _atomic_text(path, buf.getvalue())


def write_primitives_csv(path, series: PrimitiveSeries) -> None:
    buf = io.StringIO()
    buf.write(",".join(["ts_ms"] + list(series.labels)) + "\n")
    for ts, row in zip(series.ts_ms, series.values):
        buf.write(f"{ts}," + ",".join(f"{v:.6f}" for v in row) + "\n")
    _atomic_text(path, buf.getvalue())


def write_marker_csv(path, tracks) -> None:
    buf = io.StringIO()
    buf.write(",".join(MARKER_HEADER) + "\n")
    for r in tracks:
        buf.write(f"{r.ts},{r.marker_id},{r.x:.4f},{r.y:.4f},{r.scale:.6g}\n")
    _atomic_text(path, buf.getvalue())


# ---------------------------------------------------------------------------
# parsers


def _rows(path):
    with open(path, newline="") as fh:
        yield from enumerate(csv.reader(fh), start=1)


def parse_capacitance_csv(path) -> SessionRecording:
    """Frames of a ``ts_ms,ch0..chN-1`` file; the channel count comes from the header."""
    ts, values, n = [], [], None
    for lineno, row in _rows(path):
        if lineno == 1:
            expected = ["ts_ms"] + [f"ch{i}" for i in range(len(row) - 1)]
            if len(row) < 2 or [c.strip() for c in row] != expected:
                raise ParseError("header must be ts_ms,ch0,...,chN-1", lineno)
            n = len(row) - 1
            continue
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != n + 1:
            raise ChannelCountMismatch(f"expected {n} channels, found {len(row) - 1}", lineno)
        try:
            t = int(row[0])
            v = [float(c) for c in row[1:]]
        except ValueError as exc:
            raise ParseError(f"non-numeric field ({exc})", lineno) from None
        if not np.all(np.isfinite(v)):
            raise ParseError("non-finite value", lineno)
        if ts and t <= ts[-1]:
            raise ParseError(f"timestamp {t} does not increase", lineno)
        ts.append(t)
        values.append(v)
    if n is None:
        raise ParseError("empty file", 1)
    return SessionRecording(np.array(ts, dtype=np.int64), np.array(values).reshape(len(ts), n),
                            session_id=os.path.splitext(os.path.basename(os.fspath(path)))[0])


def parse_primitives_csv(path) -> PrimitiveSeries:
    ts, values, labels = [], [], None
    for lineno, row in _rows(path):
        if lineno == 1:
            if len(row) != 4 or row[0].strip() != "ts_ms":
                raise ParseError("header must be ts_ms followed by three primitive labels", lineno)
            labels = tuple(c.strip() for c in row[1:])
            continue
        if not row:
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, found {len(row)}", lineno)
        try:
            t = int(row[0])
            v = [float(c) for c in row[1:]]
        except ValueError as exc:
            raise ParseError(f"non-numeric field ({exc})", lineno) from None
        if ts and t <= ts[-1]:
            raise ParseError(f"timestamp {t} does not increase", lineno)
        ts.append(t)
        values.append(v)
    if labels is None:
        raise ParseError("empty file", 1)
    return PrimitiveSeries(np.array(ts, dtype=np.int64), np.array(values).reshape(len(ts), 3), labels)


@dataclass(frozen=True)
class MarkerTrack:
    ts: int
    marker_id: int
    x: float
    y: float
    scale: float


def parse_marker_csv(path) -> list:
    out, last = [], {}
    for lineno, row in _rows(path):
        if lineno == 1:
            if [c.strip() for c in row] != MARKER_HEADER:
                raise ParseError("header must be " + ",".join(MARKER_HEADER), lineno)
            continue
        if not row:
            continue
        if len(row) != 5:
            raise ParseError(f"expected 5 fields, found {len(row)}", lineno)
        try:
            rec = MarkerTrack(int(row[0]), int(row[1]), float(row[2]), float(row[3]), float(row[4]))
        except ValueError as exc:
            raise ParseError(f"non-numeric field ({exc})", lineno) from None
        if not rec.scale > 0:
            raise ParseError("scale must be positive", lineno)
        if rec.marker_id in last and rec.ts <= last[rec.marker_id]:
            raise ParseError(f"marker {rec.marker_id} timestamp {rec.ts} does not increase", lineno)
        last[rec.marker_id] = rec.ts
        out.append(rec)
    return out


def markers_to_primitives(tracks, correspondence: dict, strict: bool = False):
    """Per-frame primitives (cm) from marker pixel positions.

    ``correspondence`` maps each primitive label to the marker pair whose
    distance it is.  Frames missing a required marker are dropped and counted;
    with ``strict`` the first one raises ``MissingMarker`` instead.
    Returns ``(PrimitiveSeries, dropped_count)``.
    """
    needed = sorted({m for pair in correspondence.values() for m in pair})
    frames = {}
    for r in tracks:
        frames.setdefault(r.ts, {})[r.marker_id] = r
    ts_out, vals = [], []
    dropped = 0
    for ts in sorted(frames):
        f = frames[ts]
        missing = [m for m in needed if m not in f]
        if missing:
            if strict:
                raise MissingMarker(f"frame {ts}: markers {missing} missing")
            logger.warning("frame %d dropped: markers %s missing", ts, missing)
            dropped += 1
            continue
        row = []
        for a, b in correspondence.values():
            ra, rb = f[a], f[b]
            row.append(np.hypot(ra.x - rb.x, ra.y - rb.y) * 0.5 * (ra.scale + rb.scale))
        ts_out.append(ts)
        vals.append(row)
    series = PrimitiveSeries(np.array(ts_out, dtype=np.int64), np.array(vals).reshape(len(ts_out), len(correspondence)),
                             tuple(correspondence))
    return series, dropped


def render_markers(pattern: FoldPattern, top, bottom, arm, ts_ms, scale_cm_per_px: float = 0.05,
                   origin_px=(100.0, 100.0)) -> list:
    """Marker tracks a top-down camera would see for the given states (synthetic test data)."""
    xy, _ = frame_geometry(pattern, np.asarray(top), np.asarray(bottom), np.asarray(arm), np.array([0.0, 1.0]))
    n = pattern.num_creases
    if pattern.kind is PatternKind.VFOLD:
        pts = [xy[:, 0, n // 2], xy[:, 0, 0], xy[:, 0, n]]
    else:
        pts = [xy[:, 0, 0], xy[:, 0, n], xy[:, 1, 0], xy[:, 1, n]]
    px_per_m = 100.0 / scale_cm_per_px
    out = []
    for i, ts in enumerate(np.asarray(ts_ms)):
        for mid, p in enumerate(pts):
            out.append(MarkerTrack(int(ts), mid, origin_px[0] + p[i, 0] * px_per_m,
                                   origin_px[1] + p[i, 1] * px_per_m, scale_cm_per_px))
    return out


# ---------------------------------------------------------------------------
# alignment


@dataclass(frozen=True, eq=False)
class AlignedDataset:
    recording: SessionRecording
    targets: PrimitiveSeries
    offset_ms: float
    correlation: float


def _derivative_on_grid(ts, x, grid):
    return np.gradient(np.interp(grid, ts, x))


def estimate_offset(ts_a, a, ts_b, b, search_window_s: float = 2.0):
    """Offset ``d`` (ms) maximizing |NCC| between a'(t) and b'(t + d), and the peak value."""
    lo = max(ts_a[0], ts_b[0])
    hi = min(ts_a[-1], ts_b[-1])
    if hi <= lo:
        raise NoOverlap("streams do not overlap in time")
    w = int(round(search_window_s * 1000))
    grid = np.arange(lo, hi + 1, dtype=float)
    da = _derivative_on_grid(ts_a, a, grid)
    # b is sampled wide enough to cover every lag in the window
    grid_b = np.arange(lo - w, hi + w + 1, dtype=float)
    db = _derivative_on_grid(ts_b, b, grid_b)
    da = da - da.mean()
    db = db - db.mean()
    m = da.size
    nfft = 1 << int(np.ceil(np.log2(m + db.size)))
    corr = np.fft.irfft(np.conj(np.fft.rfft(da, nfft)) * np.fft.rfft(db, nfft), nfft)[: 2 * w + 1]
    # corr[k] pairs a(t) with b(t + k - w); normalize by the matching windows of b
    csum = np.concatenate([[0.0], np.cumsum(db * db)])
    energy_b = csum[np.arange(2 * w + 1) + m] - csum[np.arange(2 * w + 1)]
    ncc = np.abs(corr) / np.sqrt(np.sum(da * da) * np.maximum(energy_b, 1e-300))
    k = int(np.argmax(ncc))
    frac = 0.0
    if 0 < k < 2 * w:
        y0, y1, y2 = ncc[k - 1], ncc[k], ncc[k + 1]
        denom = y0 - 2 * y1 + y2
        if denom < 0:
            frac = 0.5 * (y0 - y2) / denom
    return k - w + frac, float(ncc[k])


def align(recording: SessionRecording, targets: PrimitiveSeries, search_window_s: float = 2.0,
          manual_offset_ms: float | None = None, min_duration_s: float = 10.0,
          weak_threshold: float = 0.3, sync_span_s: float | None = None) -> AlignedDataset:
    """Coarse alignment on unix timestamps, then a derivative cross-correlation refinement.

    The recovered offset is how far the target clock runs ahead of the sensor
    clock.  Targets are then resampled (nearest neighbour) onto the sensor
    timestamps; sensor frames with no target within half a frame are dropped.
    ``sync_span_s`` restricts the refinement to the first seconds of the
    recording, where a dedicated synchronization gesture is expected.
    """
    for name, ts in (("recording", recording.ts_ms), ("targets", targets.ts_ms)):
        if len(ts) < 2 or ts[-1] - ts[0] < min_duration_s * 1000:
            raise TooShort(f"{name} spans less than {min_duration_s:g} s")
    lo = max(recording.ts_ms[0], targets.ts_ms[0])
    hi = min(recording.ts_ms[-1], targets.ts_ms[-1])
    if hi <= lo:
        raise NoOverlap("recording and targets do not overlap in time")
    if manual_offset_ms is None:
        rts, rv = recording.ts_ms.astype(float), recording.values[:, 0]
        if sync_span_s is not None:
            span = rts <= rts[0] + sync_span_s * 1000.0
            rts, rv = rts[span], rv[span]
        offset, peak = estimate_offset(rts, rv, targets.ts_ms.astype(float), targets.values[:, 0], search_window_s)
        if peak < weak_threshold:
            warnings.warn(WeakCorrelation(f"cross-correlation peak {peak:.3f} below {weak_threshold}"), stacklevel=2)
    else:
        offset, peak = float(manual_offset_ms), float("nan")

    shifted = targets.ts_ms.astype(float) - offset
    idx = np.clip(np.searchsorted(shifted, recording.ts_ms), 1, len(shifted) - 1)
    left, right = shifted[idx - 1], shifted[idx]
    idx = np.where(recording.ts_ms - left <= right - recording.ts_ms, idx - 1, idx)
    gap = np.abs(shifted[idx] - recording.ts_ms)
    keep = gap <= HALF_FRAME_MS
    if not keep.any():
        raise NoOverlap("no sensor frame has a target within half a frame after alignment")
    rec = SessionRecording(recording.ts_ms[keep], recording.values[keep], recording.channel_names,
                           recording.session_id)
    tgt = PrimitiveSeries(recording.ts_ms[keep], targets.values[idx[keep]], targets.labels)
    return AlignedDataset(rec, tgt, float(offset), float(peak))
