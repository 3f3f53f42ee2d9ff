"""Folding-to-capacitance model: resonance conversion, per-segment plate model, volumes."""

from __future__ import annotations

import csv
import functools
import os
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidState, NegativeCapacitance, NegativeRadicand, OutOfRange, ShortCircuit, Singular
from .kinematics import ChannelLayout, FoldPattern, FoldState, panel_widths, validate_state

EPSILON_AIR = 8.8541878128e-12  # F/m


@dataclass(frozen=True)
class FrontendConfig:
    """LC tank of the capacitance-to-digital front end plus per-channel sensor constants."""

    inductance_L: float = 2.2e-6
    fixed_cap_C0: float = 47e-12
    freq_min: float = 1.0e7
    freq_max: float = 2.0e7
    parasitic_cap: float = 30e-12
    flat_clamp: float = 1e-3
    epsilon: float = EPSILON_AIR

    def __post_init__(self):
        if self.inductance_L <= 0 or self.fixed_cap_C0 <= 0:
            raise ValueError("L and C0 must be positive")
        if not 0 < self.freq_min < self.freq_max:
            raise ValueError("frequency band must satisfy 0 < freq_min < freq_max")
        if self.parasitic_cap < 0 or self.epsilon <= 0:
            raise ValueError("parasitic_cap must be >= 0 and epsilon > 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PatchProfile:
    segment_len_a: float
    widths: np.ndarray
    heights: np.ndarray
    epsilon: float = EPSILON_AIR

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.widths, dtype=float))
        h = np.atleast_1d(np.asarray(self.heights, dtype=float))
        w, h = np.broadcast_arrays(w, h)
        object.__setattr__(self, "widths", w)
        object.__setattr__(self, "heights", h)
        if (w <= 0).any() or self.epsilon <= 0:
            raise ValueError("widths and epsilon must be positive")
        if (h < 0).any() or (h >= self.segment_len_a).any():
            raise InvalidState("heights must lie in [0, a)")

    def capacitance(self, flat_clamp: float | None = 1e-3) -> float:
        return float(segment_cap(self.segment_len_a, self.widths, self.heights, self.epsilon, flat_clamp).sum())

    def volume(self) -> float:
        return float(segment_volume(self.segment_len_a, self.widths, self.heights).sum())


@dataclass(frozen=True)
class IdealCurveConstants:
    """Grouped constants of the volume-capacitance curve ``k1*sqrt(k3*X - X**2)``, ``X = k2/(k2 + dC**2)``."""

    k1: float
    k2: float
    k3: float
    r1: float = 1.0
    r2: float = 1.0
    r3: float = 1.0

    def __post_init__(self):
        if min(self.k1, self.k2, self.k3, self.r1, self.r2, self.r3) <= 0:
            raise ValueError("curve constants must be positive")

    @classmethod
    def from_patch(cls, a: float, w: float, epsilon: float = EPSILON_AIR, r1=1.0, r2=1.0, r3=1.0):
        # with unit r-coefficients the curve is exactly segment_volume(cap_to_height(dC))
        return cls(k1=0.5 * w * a * a * r1, k2=(epsilon * w) ** 2 * r2, k3=1.0 * r3, r1=r1, r2=r2, r3=r3)

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# resonance conversion


def freq_to_cap(f, cfg: FrontendConfig = FrontendConfig(), strict: bool = True):
    """Sensor capacitance (F) from the measured tank frequency (Hz)."""
    f = np.asarray(f, dtype=float)
    if ((f < cfg.freq_min) | (f > cfg.freq_max)).any():
        raise OutOfRange(f"frequency outside [{cfg.freq_min:g}, {cfg.freq_max:g}] Hz")
    c = 1.0 / (cfg.inductance_L * (2.0 * np.pi * f) ** 2) - cfg.fixed_cap_C0
    if strict and (c < 0).any():
        raise NegativeCapacitance("frequency above the empty-tank resonance; check L and C0")
    return c if c.ndim else float(c)


def cap_to_freq(c, cfg: FrontendConfig = FrontendConfig()):
    c = np.asarray(c, dtype=float)
    if (c < 0).any() or not np.all(np.isfinite(c)):
        raise ValueError("capacitance must be finite and non-negative")
    f = 1.0 / (2.0 * np.pi * np.sqrt(cfg.inductance_L * (cfg.fixed_cap_C0 + c)))
    return f if f.ndim else float(f)


# ---------------------------------------------------------------------------
# per-segment model


def segment_cap(a, w, dh, epsilon=EPSILON_AIR, flat_clamp: float | None = None):
    """Plate capacitance of one tilted segment: ``eps * w * dl / dh``.

    A flat segment (``dh = 0``) is singular; pass ``flat_clamp`` (fraction of
    ``a``) to evaluate it at ``max(dh, flat_clamp * a)`` instead.
    """
    a = np.asarray(a, dtype=float)
    dh = np.asarray(dh, dtype=float)
    if (dh >= a).any() or (dh < 0).any():
        raise OutOfRange("segment rise must satisfy 0 <= dh < a")
    if flat_clamp:
        dh = np.maximum(dh, flat_clamp * a)
    elif (dh == 0).any():
        raise Singular("flat segment has unbounded capacitance; use flat_clamp")
    out = epsilon * np.asarray(w, dtype=float) * np.sqrt((a - dh) * (a + dh)) / dh
    return out if out.ndim else float(out)


def cap_to_height(dc, a, w, epsilon=EPSILON_AIR):
    dc = np.asarray(dc, dtype=float)
    if (dc < 0).any():
        raise OutOfRange("capacitance change must be non-negative")
    ew = epsilon * np.asarray(w, dtype=float)
    out = np.asarray(a, dtype=float) * ew / np.sqrt(ew * ew + dc * dc)
    return out if out.ndim else float(out)


def segment_volume(a, w, dh):
    """Triangular-prism volume between one segment and the ground plane."""
    a = np.asarray(a, dtype=float)
    dh = np.asarray(dh, dtype=float)
    if (dh < 0).any() or (dh > a).any():
        raise OutOfRange("segment rise must satisfy 0 <= dh <= a")
    out = 0.5 * np.asarray(w, dtype=float) * dh * np.sqrt((a - dh) * (a + dh))
    return out if out.ndim else float(out)


def volume_from_capacitance(dc, constants: IdealCurveConstants):
    dc = np.asarray(dc, dtype=float)
    if (dc < 0).any():
        raise OutOfRange("capacitance change must be non-negative")
    x = constants.k2 / (constants.k2 + dc * dc)
    radicand = x * (constants.k3 - x)
    if (radicand < 0).any():
        raise NegativeRadicand(
            f"k3 = {constants.k3:g} is below k2/(k2 + dC^2) for {int((radicand < 0).sum())} point(s)"
        )
    out = constants.k1 * np.sqrt(radicand)
    return out if out.ndim else float(out)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(64)


def integrated_volume(dc, constants: IdealCurveConstants):
    """``int_0^dC volume_from_capacitance(c) dc``: the volume axis of the ideal capacitance curve."""
    dc = np.asarray(dc, dtype=float)
    nodes = dc[..., None] * (0.5 * (_GL_X + 1.0))
    out = 0.5 * dc * np.sum(_GL_W * volume_from_capacitance(nodes, constants), axis=-1)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# whole-patch quantities


def patch_volume(pattern: FoldPattern, state: FoldState, nodes: int = 48) -> float:
    """Analytic volume under the whole folded patch.

    Sums ``segment_volume`` over the panels; asymmetric states change rise and
    width along the crease, so the sum is integrated across the width with
    Gauss-Legendre rows (exact for symmetric states).
    """
    validate_state(pattern, state)
    if state.symmetric:
        t = np.array([0.5])
        weights = np.array([1.0])
    else:
        x, weights = np.polynomial.legendre.leggauss(nodes)
        t, weights = 0.5 * (x + 1.0), 0.5 * weights
    w = panel_widths(pattern, state.top_profile, state.bottom_profile, state.arm_angles, t)
    h = state.top_profile + (state.bottom_profile - state.top_profile) * t[:, None]
    return float(np.sum(weights[:, None] * segment_volume(pattern.segment_len_a, w, h)))


@functools.lru_cache(maxsize=64)
def _strip_polygons(pattern: FoldPattern):
    from shapely.geometry import LineString

    return [
        LineString(ch.path).buffer(ch.strip_width / 2, cap_style="flat", join_style="mitre")
        for ch in pattern.channel_layouts
    ]


def check_short_circuits(pattern: FoldPattern) -> None:
    """Raise ``ShortCircuit`` if any two strips overlap in the developed pattern."""
    polys = _strip_polygons(pattern)
    for i in range(len(polys)):
        for j in range(i + 1, len(polys)):
            if polys[i].intersects(polys[j]):
                a = pattern.channel_layouts[i].channel_id
                b = pattern.channel_layouts[j].channel_id
                raise ShortCircuit(f"strips of channels {a} and {b} touch")


@dataclass(frozen=True)
class _Samples:
    bay: np.ndarray
    t: np.ndarray
    weight: np.ndarray


@functools.lru_cache(maxsize=256)
def _path_samples(pattern: FoldPattern, layout: ChannelLayout) -> _Samples:
    """Points spaced one segment length apart along the strip's centre line."""
    a, n, W = pattern.segment_len_a, pattern.num_creases, pattern.fixed_edge_len
    p = np.asarray(layout.path)
    seg = np.linalg.norm(np.diff(p, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    count = max(1, int(round(total / a)))
    s = (np.arange(count) + 0.5) * total / count
    u = np.interp(s, cum, p[:, 0])
    v = np.interp(s, cum, p[:, 1])
    bay = np.clip(np.floor(u / a).astype(int), 0, n - 1)
    return _Samples(bay, v / W, np.full(count, total / count / a))


def _strip_sums(pattern: FoldPattern, top, bottom, arm_angles, fn, chunk: int = 1024) -> np.ndarray:
    """Evaluate ``fn(w, dh)`` at every strip sample and sum per channel, shape (..., n_channels)."""
    check_short_circuits(pattern)
    top = np.asarray(top, dtype=float)
    bottom = np.asarray(bottom, dtype=float)
    arm = np.broadcast_to(np.asarray(arm_angles, dtype=float), top.shape[:-1] + (2,))
    lead = top.shape[:-1]
    top2, bottom2, arm2 = top.reshape(-1, top.shape[-1]), bottom.reshape(-1, top.shape[-1]), arm.reshape(-1, 2)

    samples = [_path_samples(pattern, ch) for ch in pattern.channel_layouts]
    t_all, inverse = np.unique(np.concatenate([s.t for s in samples]), return_inverse=True)
    offsets = np.cumsum([0] + [len(s.t) for s in samples])
    W = pattern.fixed_edge_len

    out = np.empty((top2.shape[0], len(samples)))
    for lo in range(0, top2.shape[0], chunk):
        sl = slice(lo, lo + chunk)
        tp, bt = top2[sl], bottom2[sl]
        widths = panel_widths(pattern, tp, bt, arm2[sl], t_all)  # (B, R, n)
        for c, (s, ch) in enumerate(zip(samples, pattern.channel_layouts)):
            rows = inverse[offsets[c]:offsets[c + 1]]
            h = tp[:, s.bay] + (bt[:, s.bay] - tp[:, s.bay]) * s.t
            w = ch.strip_width * widths[:, rows, s.bay] / W
            out[sl, c] = np.sum(s.weight * fn(w, h), axis=-1)
    return out.reshape(lead + (len(samples),))


def channel_capacitances(pattern: FoldPattern, top, bottom, arm_angles=(0.0, 0.0), cfg=FrontendConfig(),
                         include_parasitic: bool = True) -> np.ndarray:
    """Capacitance (F) of every channel for batched states, shape (..., n_channels).

    Each strip sample contributes one ``segment_cap`` of the panel beneath it,
    using the strip width scaled by the panel's projected width; contributions
    add in parallel.
    """
    a = pattern.segment_len_a
    out = _strip_sums(pattern, top, bottom, arm_angles,
                      lambda w, h: segment_cap(a, w, h, cfg.epsilon, cfg.flat_clamp))
    return out + cfg.parasitic_cap if include_parasitic else out


def channel_curve_volumes(pattern: FoldPattern, top, bottom, arm_angles=(0.0, 0.0), cfg=FrontendConfig(),
                          r=(1.0, 1.0, 1.0)) -> np.ndarray:
    """Volume read off the ideal volume-capacitance curve, per channel.

    Every strip sample maps its capacitance change to the area under the ideal
    curve ``int_0^dC volume_from_capacitance``; the samples are summed like
    the capacitances themselves.
    """
    a = pattern.segment_len_a
    unit = IdealCurveConstants.from_patch(a, 1.0, cfg.epsilon, *r)

    def fn(w, h):
        # k1 ~ w and k2 ~ w**2, so the integral for width w is w**2 times the unit-width one at dC/w
        dc = segment_cap(a, w, h, cfg.epsilon, cfg.flat_clamp)
        return w * w * integrated_volume(dc / w, unit)

    return _strip_sums(pattern, top, bottom, arm_angles, fn)


def channel_capacitance(pattern: FoldPattern, state: FoldState, layout: ChannelLayout,
                        cfg: FrontendConfig = FrontendConfig()) -> float:
    validate_state(pattern, state)
    idx = pattern.channel_layouts.index(layout)
    caps = channel_capacitances(pattern, state.top_profile, state.bottom_profile, state.arm_angles, cfg)
    return float(caps[idx])


def layout_curve_constants(pattern: FoldPattern, layout: ChannelLayout, widths_factor=1.0,
                           epsilon: float = EPSILON_AIR) -> IdealCurveConstants:
    """Ideal curve constants for one sample segment of a strip."""
    return IdealCurveConstants.from_patch(pattern.segment_len_a, layout.strip_width * widths_factor, epsilon)


# ---------------------------------------------------------------------------
# curve export


def curve_sweep(a: float, w: float, cfg: FrontendConfig = FrontendConfig(), constants=None, points: int = 200):
    """Ideal single-segment sweep over rises in (0, a): capacitance change, volume, tank frequency."""
    constants = constants or IdealCurveConstants.from_patch(a, w, cfg.epsilon)
    h = np.linspace(a * 0.999, a * cfg.flat_clamp, points)
    dc = segment_cap(a, w, h, cfg.epsilon)
    return {
        "height_m": h,
        "delta_c_f": dc,
        "delta_v_m3": volume_from_capacitance(dc, constants),
        "freq_hz": cap_to_freq(dc + cfg.parasitic_cap, cfg),
    }


def write_curve_csv(path, sweep: dict) -> None:
    cols = ["delta_c_f", "delta_v_m3", "freq_hz", "height_m"]
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(cols)
        for row in zip(*(sweep[c] for c in cols)):
            wr.writerow([f"{x:.9e}" for x in row])
    os.replace(tmp, path)
