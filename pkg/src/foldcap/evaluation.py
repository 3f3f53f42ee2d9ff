"""Agreement statistics for predicted primitives and mesh reconstruction from primitives."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import DegenerateInput, Infeasible
from .kinematics import FoldPattern, FoldState, PatternKind, SurfaceMesh, pose_rises, primitives_array, realize_surface

logger = logging.getLogger(__name__)

LOA_Z = 1.96


# ---------------------------------------------------------------------------
# metrics


def r_squared(truth, pred):
    """Coefficient of determination and squared Pearson correlation, as a pair."""
    y = np.asarray(truth, dtype=float)
    p = np.asarray(pred, dtype=float)
    if y.shape != p.shape or y.size < 2:
        raise ValueError("truth and prediction need equal lengths of at least two")
    ss_tot = np.sum((y - y.mean()) ** 2)
    if ss_tot == 0:
        raise DegenerateInput("truth is constant")
    determination = 1.0 - np.sum((y - p) ** 2) / ss_tot
    sp = np.sum((p - p.mean()) ** 2)
    pearson_sq = 0.0 if sp == 0 else np.sum((y - y.mean()) * (p - p.mean())) ** 2 / (ss_tot * sp)
    return float(determination), float(pearson_sq)


def rmse(truth, pred) -> float:
    y = np.asarray(truth, dtype=float)
    p = np.asarray(pred, dtype=float)
    if y.shape != p.shape or y.size < 1:
        raise ValueError("truth and prediction need equal non-zero lengths")
    return float(np.sqrt(np.mean((y - p) ** 2)))


@dataclass(frozen=True)
class BlandAltman:
    bias: float
    sd: float
    loa_low: float
    loa_high: float

    def to_dict(self) -> dict:
        return asdict(self)


def bland_altman(truth, pred) -> BlandAltman:
    """Bias and 95% limits of agreement of ``pred - truth`` (sample SD)."""
    d = np.asarray(pred, dtype=float) - np.asarray(truth, dtype=float)
    if d.size < 2:
        raise ValueError("need at least two pairs")
    bias = float(d.mean())
    sd = float(d.std(ddof=1))
    return BlandAltman(bias, sd, bias - LOA_Z * sd, bias + LOA_Z * sd)


@dataclass
class EvalReport:
    labels: list
    r2: list
    r2_pearson: list
    rmse_cm: list
    bland_altman: list
    avg_r2: float
    avg_r2_pearson: float
    avg_rmse_cm: float
    n_samples: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path) -> None:
        _atomic_text(path, json.dumps(self.to_dict(), indent=2))


def evaluate(truth, pred, labels=("p1", "p2", "p3")) -> EvalReport:
    """Per-primitive statistics for (M, 3) truth and predictions in cm."""
    y = np.asarray(truth, dtype=float)
    p = np.asarray(pred, dtype=float)
    if y.shape != p.shape or y.ndim != 2:
        raise ValueError("truth and prediction must both be (M, k)")
    r2 = [r_squared(y[:, j], p[:, j]) for j in range(y.shape[1])]
    errs = [rmse(y[:, j], p[:, j]) for j in range(y.shape[1])]
    ba = [bland_altman(y[:, j], p[:, j]).to_dict() for j in range(y.shape[1])]
    det = [a for a, _ in r2]
    prs = [b for _, b in r2]
    return EvalReport(list(labels), det, prs, errs, ba, float(np.mean(det)), float(np.mean(prs)),
                      float(np.mean(errs)), int(y.shape[0]))


# ---------------------------------------------------------------------------
# scatter output


def _atomic_text(path, text: str) -> None:
    path = os.fspath(path)
    with open(path + ".tmp", "w", newline="") as fh:
        fh.write(text)
    os.replace(path + ".tmp", path)


def write_scatter_csv(path, truth, pred, labels) -> None:
    """Long-format rows: primitive, truth, prediction, mean, difference."""
    lines = ["primitive,truth_cm,pred_cm,mean_cm,diff_cm"]
    y, p = np.asarray(truth), np.asarray(pred)
    for j, lab in enumerate(labels):
        for a, b in zip(y[:, j], p[:, j]):
            lines.append(f"{lab},{a:.6f},{b:.6f},{0.5 * (a + b):.6f},{b - a:.6f}")
    _atomic_text(path, "\n".join(lines) + "\n")


def scatter_svg(x, y, title: str = "", xlabel: str = "", ylabel: str = "", hlines=(), diagonal: bool = False,
                size=(360, 300), max_points: int = 4000) -> str:
    """A bare-bones SVG scatter plot with optional horizontal reference lines."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size > max_points:
        keep = np.linspace(0, x.size - 1, max_points).astype(int)
        x, y = x[keep], y[keep]
    w, h = size
    m = 40
    lo_x, hi_x = float(x.min()), float(x.max())
    ys = np.concatenate([y, np.asarray(hlines, dtype=float)])
    lo_y, hi_y = float(ys.min()), float(ys.max())
    if diagonal:
        lo_x = lo_y = min(lo_x, lo_y)
        hi_x = hi_y = max(hi_x, hi_y)
    sx = (w - 2 * m) / ((hi_x - lo_x) or 1.0)
    sy = (h - 2 * m) / ((hi_y - lo_y) or 1.0)

    def px(u):
        return m + (u - lo_x) * sx

    def py(v):
        return h - m - (v - lo_y) * sy

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
           f'<rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}" fill="none" stroke="#444"/>']
    if diagonal:
        out.append(f'<line x1="{px(lo_x):.1f}" y1="{py(lo_x):.1f}" x2="{px(hi_x):.1f}" y2="{py(hi_x):.1f}" '
                   'stroke="#999" stroke-dasharray="4"/>')
    for v in hlines:
        out.append(f'<line x1="{m}" y1="{py(v):.1f}" x2="{w - m}" y2="{py(v):.1f}" stroke="#c33" stroke-dasharray="4"/>')
    out.extend(f'<circle cx="{px(a):.1f}" cy="{py(b):.1f}" r="1.2" fill="#2a6" fill-opacity="0.5"/>'
               for a, b in zip(x, y))
    out.append(f'<text x="{w / 2}" y="16" text-anchor="middle" font-size="12">{title}</text>')
    out.append(f'<text x="{w / 2}" y="{h - 8}" text-anchor="middle" font-size="10">{xlabel}</text>')
    out.append(f'<text x="12" y="{h / 2}" font-size="10" transform="rotate(-90 12 {h / 2})" '
               f'text-anchor="middle">{ylabel}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_scatter_svgs(prefix, truth, pred, labels) -> list:
    """One correlation and one Bland-Altman SVG per primitive; returns the written paths."""
    y, p = np.asarray(truth), np.asarray(pred)
    paths = []
    for j, lab in enumerate(labels):
        ba = bland_altman(y[:, j], p[:, j])
        corr = scatter_svg(y[:, j], p[:, j], f"{lab}: correlation", "truth (cm)", "prediction (cm)", diagonal=True)
        agree = scatter_svg(0.5 * (y[:, j] + p[:, j]), p[:, j] - y[:, j], f"{lab}: Bland-Altman", "mean (cm)",
                            "difference (cm)", hlines=(ba.bias, ba.loa_low, ba.loa_high))
        for kind, text in (("corr", corr), ("ba", agree)):
            path = f"{os.fspath(prefix)}_{lab}_{kind}.svg"
            _atomic_text(path, text)
            paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# reconstruction


@dataclass(frozen=True, eq=False)
class Reconstruction:
    state: FoldState
    mesh: SurfaceMesh
    params: np.ndarray
    primitives: np.ndarray
    residual_cm: float


def _bounds(pattern: FoldPattern):
    if pattern.kind is PatternKind.VFOLD:
        return np.array([0.0, 0.0, 0.0]), np.array([1.0, 1.0, 1.5])
    if pattern.kind is PatternKind.SUNRAY:
        return np.array([0.0, 0.0, -0.5]), np.array([1.0, 1.0, 0.5])
    return np.array([0.0, 0.0]), np.array([1.0, 1.0])


def _state_arrays(pattern: FoldPattern, x):
    x = np.asarray(x, dtype=float)
    if pattern.kind is PatternKind.VFOLD:
        top, bottom = pose_rises(pattern, x[..., 0], x[..., 1])
        arm = np.stack([x[..., 2], x[..., 2]], axis=-1)
    elif pattern.kind is PatternKind.SUNRAY:
        top, bottom = pose_rises(pattern, x[..., 0], x[..., 1], x[..., 2])
        arm = np.zeros(x.shape[:-1] + (2,))
    else:
        top, bottom = pose_rises(pattern, x[..., 0], x[..., 1])
        arm = np.zeros(x.shape[:-1] + (2,))
    return top, bottom, arm


def _initial_guess(pattern: FoldPattern, prims):
    lo, hi = pattern.deploy_range
    e = np.clip((np.asarray(prims[:2]) / 100.0 - lo) / (hi - lo), 0.0, 1.0)
    if pattern.kind is PatternKind.VFOLD:
        return np.array([e[0], e[1], 0.5])
    if pattern.kind is PatternKind.SUNRAY:
        return np.array([e[0], e[1], 0.0])
    return e


def _clamp_primitives(pattern: FoldPattern, prims):
    """Clamp the two edge primitives into what the pattern can reach, warning when that changes them."""
    lo, hi = _bounds(pattern)
    corners = np.array(np.meshgrid(*[np.linspace(a, b, 3) for a, b in zip(lo, hi)])).reshape(len(lo), -1).T
    reach = primitives_array(pattern, *_state_arrays(pattern, corners))
    pmin, pmax = reach.min(axis=0), reach.max(axis=0)
    clamped = prims.copy()
    clamped[:2] = np.clip(prims[:2], pmin[:2], pmax[:2])
    if not np.array_equal(clamped, prims):
        logger.warning("primitives %s clamped to the reachable range", np.round(prims, 3).tolist())
    return clamped


def reconstruct(pattern: FoldPattern, primitives, seed=None, rows: int | None = None) -> Reconstruction:
    """Fold state whose primitives best match ``primitives`` (cm), and its mesh.

    Least squares over the pattern's low-dimensional pose: the two deployment
    fractions, plus the fan gradient for the sunray or the arm angle for the
    V-fold.  ``seed`` is a starting pose, typically the previous frame's.
    """
    prims = np.asarray(primitives, dtype=float).reshape(3)
    if not np.all(np.isfinite(prims)) or (prims < 0).any():
        raise Infeasible("primitives must be finite and non-negative", float("inf"))
    W = pattern.fixed_edge_len
    if pattern.kind.quadratic and prims[2] > prims[0] + 100.0 * W:
        raise Infeasible("diagonal exceeds top extent plus fixed edge", float(prims[2] - prims[0] - 100.0 * W))
    prims = _clamp_primitives(pattern, prims)
    lo, hi = _bounds(pattern)

    def resid(x):
        return primitives_array(pattern, *_state_arrays(pattern, x)) - prims

    starts = [_initial_guess(pattern, prims)]
    if seed is not None:
        starts.insert(0, np.clip(np.asarray(seed, dtype=float), lo, hi))
    if pattern.kind is PatternKind.VFOLD:
        starts += [np.array([s[0], s[1], b]) for s in starts[-1:] for b in (0.15, 0.9)]
    best = None
    for x0 in starts:
        r0 = resid(x0)
        if np.linalg.norm(r0) < 1e-9:
            x, r = x0, r0
        else:
            sol = least_squares(resid, x0, bounds=(lo, hi), xtol=1e-12, ftol=1e-12, gtol=1e-12)
            x, r = sol.x, sol.fun
        if best is None or np.linalg.norm(r) < np.linalg.norm(best[1]):
            best = (x, r)
        if np.abs(best[1]).max() < 1e-4:
            break
    x, r = best
    residual = float(np.linalg.norm(r))
    if residual > 0.1 * W * 100.0:  # 10% of the fixed edge, in cm
        raise Infeasible(f"best fit misses by {residual:.3f} cm", residual)
    top, bottom, arm = _state_arrays(pattern, x)
    state = FoldState(top, bottom, tuple(arm))
    return Reconstruction(state, realize_surface(pattern, state, rows), x, r + prims, residual)


def reconstruct_sequence(pattern: FoldPattern, primitives, rows: int | None = None) -> list:
    """Frame-by-frame reconstruction, each frame seeded from the previous solution."""
    out, seed = [], None
    for p in np.asarray(primitives, dtype=float):
        rec = reconstruct(pattern, p, seed, rows)
        seed = rec.params
        out.append(rec)
    return out
