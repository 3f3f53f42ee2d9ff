"""Ground-truth fold trajectories built from motion elements, and material imperfections of the sensor stream."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .errors import RangeViolation
from .kinematics import FoldPattern, FoldState, PatternKind, pose_rises, primitives_array, vfold_angle
from .physics import FrontendConfig, cap_to_freq, channel_capacitances
from .signals import PrimitiveSeries, SessionRecording

logger = logging.getLogger(__name__)

SAMPLE_RATE = 30.0
MAX_SKEW = 0.5  # largest gradient of the panel run along an edge
DEFAULT_T0_MS = 1_700_000_000_000


class MotionKind(str, Enum):
    SYMMETRIC_OPEN = "symmetric-open"
    SYMMETRIC_CLOSE = "symmetric-close"
    ASYMMETRIC_LEFT = "asymmetric-left"
    ASYMMETRIC_RIGHT = "asymmetric-right"
    DIAGONAL_SKEW = "diagonal-skew"
    HOLD = "hold"


@dataclass(frozen=True)
class MotionElement:
    """One hand motion; ``amplitude`` is a fraction of the deployable range."""

    kind: MotionKind
    duration: float
    amplitude: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", MotionKind(self.kind))
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not 0.0 <= self.amplitude <= 1.0:
            raise ValueError("amplitude must lie in [0, 1]")

    def target(self, pose):
        """Pose (e_top, e_bottom, gradient) reached at the end of this element."""
        et, eb, g = pose
        a = self.amplitude
        k = self.kind
        if k is MotionKind.SYMMETRIC_OPEN:
            return et + a, eb + a, g
        if k is MotionKind.SYMMETRIC_CLOSE:
            return et - a, eb - a, g
        if k is MotionKind.ASYMMETRIC_LEFT:
            return et + a / 2, eb - a / 2, g
        if k is MotionKind.ASYMMETRIC_RIGHT:
            return et - a / 2, eb + a / 2, g
        if k is MotionKind.DIAGONAL_SKEW:
            return et, eb, (-1.0 if g > 0 else 1.0) * a * MAX_SKEW
        return et, eb, g

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "duration": self.duration, "amplitude": self.amplitude}


@dataclass(frozen=True)
class MaterialProfile:
    name: str
    noise_sigma: float  # Hz
    drift_rate: float  # Hz / sqrt(s) random-walk scale
    hysteresis_gamma: float  # play half-width as a fraction of half the channel span

    def __post_init__(self):
        if self.noise_sigma < 0 or self.drift_rate < 0 or self.hysteresis_gamma < 0:
            raise ValueError("material parameters must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


MATERIALS = {
    "cloth": MaterialProfile("cloth", noise_sigma=200.0, drift_rate=5.0, hysteresis_gamma=0.02),
    "paper": MaterialProfile("paper", noise_sigma=600.0, drift_rate=15.0, hysteresis_gamma=0.15),
    "ideal": MaterialProfile("ideal", 0.0, 0.0, 0.0),
}


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Fold states sampled at a fixed rate, stored as stacked arrays.

    ``top``/``bottom`` are (T, n) rises, ``arm`` is (T, 2) and ``pose`` keeps
    the (e_top, e_bottom, gradient) parameters that generated each frame.
    """

    pattern: FoldPattern
    sample_rate: float
    top: np.ndarray
    bottom: np.ndarray
    arm: np.ndarray
    pose: np.ndarray

    def __len__(self) -> int:
        return self.top.shape[0]

    def state(self, i: int) -> FoldState:
        return FoldState(self.top[i], self.bottom[i], tuple(self.arm[i]))

    @property
    def states(self) -> list:
        return [self.state(i) for i in range(len(self))]

    def primitives(self) -> np.ndarray:
        return primitives_array(self.pattern, self.top, self.bottom, self.arm)


def _ease(s):
    return 0.5 * (1.0 - np.cos(np.pi * s))


def generate_trajectory(pattern: FoldPattern, elements, seed: int = 0, start=(0.5, 0.5, 0.0),
                        sample_rate: float = SAMPLE_RATE, jitter: float = 0.02, v_max: float = 0.1) -> Trajectory:
    """Cosine-eased keyframe interpolation through a script of motion elements.

    Each non-hold element's end pose is perturbed by seeded Gaussian jitter
    (``jitter`` of the range), clipped back into the valid range.
    """
    elements = [e if isinstance(e, MotionElement) else MotionElement(**e) for e in elements]
    if not elements:
        raise ValueError("at least one motion element is required")
    rng = np.random.default_rng(seed)
    nominal = tuple(float(x) for x in start)
    keys = [np.asarray(start, dtype=float)]
    for i, el in enumerate(elements):
        # the script is checked on its nominal poses; jitter only perturbs the realized keyframes
        nominal = el.target(nominal)
        if min(nominal[:2]) < -1e-12 or max(nominal[:2]) > 1 + 1e-12:
            raise RangeViolation(f"element {i} ({el.kind.value}) leaves the deployable range: {nominal[:2]}")
        tgt = np.array(nominal) if el.kind is not MotionKind.HOLD else keys[-1].copy()
        if el.kind is not MotionKind.HOLD and jitter > 0:
            tgt = tgt + rng.normal(0.0, jitter, 3) * np.array([1.0, 1.0, MAX_SKEW])
        tgt[:2] = np.clip(tgt[:2], 0.0, 1.0)
        tgt[2] = np.clip(tgt[2], -MAX_SKEW, MAX_SKEW)
        keys.append(tgt)
    keys = np.array(keys)

    durations = np.array([el.duration for el in elements])
    bounds = np.concatenate([[0.0], np.cumsum(durations)])
    count = int(round(bounds[-1] * sample_rate))
    t = np.arange(count) / sample_rate
    idx = np.clip(np.searchsorted(bounds, t, side="right") - 1, 0, len(elements) - 1)
    s = _ease(np.clip((t - bounds[idx]) / durations[idx], 0.0, 1.0))
    pose = keys[idx] + (keys[idx + 1] - keys[idx]) * s[:, None]

    top, bottom = pose_rises(pattern, pose[:, 0], pose[:, 1], pose[:, 2])
    if pattern.kind is PatternKind.VFOLD:
        b = vfold_angle(pose[:, 0], pose[:, 1])
        arm = np.stack([b, b], axis=1)
    else:
        arm = np.zeros((count, 2))
    if count > 1:
        step = max(np.abs(np.diff(top, axis=0)).max(), np.abs(np.diff(bottom, axis=0)).max())
        if step > v_max / sample_rate:
            raise RangeViolation(f"rise changes by {step:.4g} m in one frame; limit is {v_max / sample_rate:.4g} m")
    return Trajectory(pattern, sample_rate, top, bottom, arm, pose)


def random_script(duration_s: float, seed: int = 0, start=(0.5, 0.5, 0.0), min_len: float = 1.5,
                  max_len: float = 5.0) -> list:
    """A random script of motion elements totalling ``duration_s``, always staying in range.

    Elements follow each other without pauses between them and with random
    amplitudes, so no clean boundary separates one motion from the next.
    """
    rng = np.random.default_rng(seed)
    kinds = list(MotionKind)
    prob = np.array([0.22, 0.22, 0.17, 0.17, 0.12, 0.10])
    pose = tuple(float(x) for x in start)
    out, total = [], 0.0
    while total < duration_s - 1e-9:
        d = float(min(rng.uniform(min_len, max_len), duration_s - total))
        if d < 1.0 / SAMPLE_RATE:
            break
        kind = kinds[rng.choice(len(kinds), p=prob)]
        et, eb, _ = pose
        room = {
            MotionKind.SYMMETRIC_OPEN: 1.0 - max(et, eb),
            MotionKind.SYMMETRIC_CLOSE: min(et, eb),
            MotionKind.ASYMMETRIC_LEFT: 2.0 * min(1.0 - et, eb),
            MotionKind.ASYMMETRIC_RIGHT: 2.0 * min(et, 1.0 - eb),
            MotionKind.DIAGONAL_SKEW: 1.0,
            MotionKind.HOLD: 0.0,
        }[kind]
        amp = float(np.clip(rng.uniform(0.2, 1.0) * room, 0.0, 1.0)) if room > 0 else 0.0
        if kind is not MotionKind.HOLD and amp == 0.0:
            kind = MotionKind.HOLD
        el = MotionElement(kind, d, amp)
        pose = el.target(pose)
        out.append(el)
        total += d
    return out


def sync_preamble(cycles: int = 3, amplitude: float = 0.4, half_period: float = 1.0) -> list:
    """Symmetric close/open pulses after a short hold, used to synchronize clocks.

    Every channel and every primitive moves in lockstep during the pulses, so
    their derivatives line up at the true clock offset.  Starting from the
    middle of the range the pulses stay inside it.
    """
    out = [MotionElement(MotionKind.HOLD, half_period)]
    for _ in range(cycles):
        out.append(MotionElement(MotionKind.SYMMETRIC_CLOSE, half_period, amplitude))
        out.append(MotionElement(MotionKind.SYMMETRIC_OPEN, half_period, amplitude))
    return out


def apply_material(raw_freq, profile: MaterialProfile, seed: int = 0, sample_rate: float = SAMPLE_RATE):
    """Corrupt a (T, N) frequency stream: play hysteresis, random-walk drift, white noise.

    The play operator holds its output until the input moves more than its
    half-width away, so the stream lags behind direction reversals; the
    half-width is ``gamma`` times half the channel's span.
    """
    x = np.asarray(raw_freq, dtype=float)
    if x.size == 0:
        raise ValueError("stream must be non-empty")
    squeeze = x.ndim == 1
    x = x.reshape(x.shape[0], -1)
    rng = np.random.default_rng(seed)
    y = x.copy()
    if profile.hysteresis_gamma > 0:
        r = 0.5 * profile.hysteresis_gamma * np.ptp(x, axis=0)
        state = x[0].copy()
        for i in range(x.shape[0]):
            state = np.clip(state, x[i] - r, x[i] + r)
            y[i] = state
    if profile.drift_rate > 0:
        steps = rng.normal(0.0, profile.drift_rate / np.sqrt(sample_rate), x.shape)
        steps[0] = 0.0
        y = y + np.cumsum(steps, axis=0)
    if profile.noise_sigma > 0:
        y = y + rng.normal(0.0, profile.noise_sigma, x.shape)
    return y[:, 0] if squeeze else y


@dataclass(frozen=True, eq=False)
class SimulatedSession:
    trajectory: Trajectory
    recording: SessionRecording
    targets: PrimitiveSeries
    capacitance: np.ndarray


def simulate_session(pattern: FoldPattern, trajectory: Trajectory, profile: MaterialProfile,
                     seed: int = 0, cfg: FrontendConfig = FrontendConfig(), t0_ms: int = DEFAULT_T0_MS,
                     session_id: str = "") -> SimulatedSession:
    """Sensor frequencies and ground-truth primitives for one trajectory."""
    caps = channel_capacitances(pattern, trajectory.top, trajectory.bottom, trajectory.arm, cfg)
    raw = cap_to_freq(caps, cfg)
    freq = apply_material(raw, profile, seed, trajectory.sample_rate)
    if freq.min() < cfg.freq_min or freq.max() > cfg.freq_max:
        logger.warning("simulated frequencies leave the front-end band [%g, %g] Hz", cfg.freq_min, cfg.freq_max)
    ts = t0_ms + np.round(np.arange(len(trajectory)) * 1000.0 / trajectory.sample_rate).astype(np.int64)
    rec = SessionRecording(ts, freq, tuple(f"ch{i}" for i in range(freq.shape[1])), session_id)
    prims = PrimitiveSeries(ts, trajectory.primitives(), tuple(s.lower() for s in pattern.labels))
    return SimulatedSession(trajectory, rec, prims, caps)


def generate_sessions(pattern: FoldPattern, sessions: int = 4, minutes: float = 15.0, material="cloth",
                      seed: int = 0, cfg: FrontendConfig = FrontendConfig(), sync: bool = False) -> list:
    """Independent sessions; session ``k`` draws every random choice from ``(seed, k)``.

    With ``sync`` each session opens with :func:`sync_preamble` and the random
    script fills the remaining time.
    """
    profile = MATERIALS[material] if isinstance(material, str) else material
    out = []
    for k in range(sessions):
        script_seed, jitter_seed, noise_seed = np.random.SeedSequence([seed, k]).generate_state(3)
        pre = sync_preamble() if sync else []
        script = pre + random_script(minutes * 60.0 - sum(e.duration for e in pre), int(script_seed))
        traj = generate_trajectory(pattern, script, int(jitter_seed))
        t0 = DEFAULT_T0_MS + k * 3_600_000
        out.append(simulate_session(pattern, traj, profile, int(noise_seed), cfg, t0, f"session{k:02d}"))
    return out
