"""Rigid-panel fold kinematics for the accordion, chevron, V-fold and sunray patterns.

Patterns are described in developed (flat) coordinates ``(u, v)``: ``u`` runs
across the creases (the fold direction, ``0 .. num_creases * a``) and ``v``
runs along them (``0 .. fixed_edge_len``).  A fold state assigns every panel
("bay") a rise ``dh`` above the ground plane on the top edge (``v = 0``) and the
bottom edge (``v = fixed_edge_len``); rows in between interpolate linearly.

Panels form a zig-zag whose valleys rest on the ground, so the two panels that
meet at a ridge share the same rise.  Each panel keeps its surface length
``a`` in the fold direction and covers ``sqrt(a**2 - dh**2)`` of ground.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InvalidState

logger = logging.getLogger(__name__)

# fraction of ``a`` where requested rises get clamped (dl = 0 is singular)
MAX_RISE_FRACTION = 0.999
# V-fold arm droop (rad) at fully folded / fully deployed arms
VFOLD_ANGLE_FOLDED = 0.6
VFOLD_ANGLE_DEPLOYED = 0.1


class PatternKind(str, Enum):
    ACCORDION_R = "accordion-r"
    ACCORDION_P = "accordion-p"
    ACCORDION_D = "accordion-d"
    CHEVRON_R = "chevron-r"
    CHEVRON_P = "chevron-p"
    VFOLD = "v-fold"
    SUNRAY = "sunray"

    @property
    def family(self) -> str:
        return "vfold" if self is PatternKind.VFOLD else self.value.split("-")[0]

    @property
    def quadratic(self) -> bool:
        return self.family in ("accordion", "chevron")


PATTERN_NAMES = tuple(k.value for k in PatternKind)


class Orientation(str, Enum):
    PERPENDICULAR = "perpendicular"
    PARALLEL = "parallel"
    DIAGONAL = "diagonal"


@dataclass(frozen=True)
class ChannelLayout:
    """A conductive strip: a polyline in developed ``(u, v)`` coordinates (m)."""

    channel_id: int
    orientation: Orientation
    path: tuple
    strip_width: float

    def __post_init__(self):
        object.__setattr__(self, "orientation", Orientation(self.orientation))
        object.__setattr__(self, "path", tuple(tuple(map(float, p)) for p in self.path))
        if len(self.path) < 2:
            raise ValueError("a channel path needs at least two points")
        if self.strip_width <= 0:
            raise ValueError("strip_width must be positive")

    @property
    def length(self) -> float:
        p = np.asarray(self.path)
        return float(np.linalg.norm(np.diff(p, axis=0), axis=1).sum())


@dataclass(frozen=True)
class FoldPattern:
    kind: PatternKind
    fixed_edge_len: float
    segment_len_a: float
    num_creases: int
    patch_width_w: float
    deploy_range: tuple = (0.02, 0.20)
    sunray_arc_angle: float = 0.0
    chevron_offset: float = 0.0
    channel_layouts: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", PatternKind(self.kind))
        object.__setattr__(self, "deploy_range", tuple(map(float, self.deploy_range)))
        object.__setattr__(self, "channel_layouts", tuple(self.channel_layouts))
        if self.fixed_edge_len <= 0 or self.segment_len_a <= 0 or self.patch_width_w <= 0:
            raise ValueError("pattern dimensions must be positive")
        if self.num_creases < 2 or self.num_creases % 2:
            raise ValueError("num_creases must be an even number >= 2")
        if self.kind is PatternKind.VFOLD and self.num_creases % 4:
            raise ValueError("a V-fold needs num_creases divisible by 4 (two even arms)")
        lo, hi = self.deploy_range
        if not 0 < lo < hi:
            raise ValueError("deploy_range must satisfy 0 < min < max")
        if self.arm_panels * self.segment_len_a < hi:
            raise ValueError("flat length is shorter than the maximum deployable edge length")
        u_max, v_max = self.flat_length, self.fixed_edge_len
        for ch in self.channel_layouts:
            p = np.asarray(ch.path)
            if (p < -1e-12).any() or (p[:, 0] > u_max + 1e-12).any() or (p[:, 1] > v_max + 1e-12).any():
                raise ValueError(f"channel {ch.channel_id} path leaves the pattern bounds")

    @property
    def flat_length(self) -> float:
        return self.num_creases * self.segment_len_a

    @property
    def arm_panels(self) -> int:
        """Panels per deployable edge (half the panels for the two-armed V-fold)."""
        return self.num_creases // 2 if self.kind is PatternKind.VFOLD else self.num_creases

    @property
    def labels(self) -> tuple:
        if self.kind.quadratic:
            return ("Top", "Base", "Diagonal")
        return ("Left", "Right", "Diagonal")

    @property
    def n_channels(self) -> int:
        return len(self.channel_layouts)


@dataclass(frozen=True, eq=False)
class FoldState:
    """Per-panel rises (m) on the top and bottom edge; ``arm_angles`` only matter for the V-fold."""

    top_profile: np.ndarray
    bottom_profile: np.ndarray
    arm_angles: tuple = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "top_profile", np.asarray(self.top_profile, dtype=float))
        object.__setattr__(self, "bottom_profile", np.asarray(self.bottom_profile, dtype=float))
        object.__setattr__(self, "arm_angles", tuple(float(x) for x in self.arm_angles))

    @classmethod
    def uniform(cls, pattern: FoldPattern, rise: float, bottom: float | None = None, arm_angles=(0.0, 0.0)):
        n = pattern.num_creases
        bottom = rise if bottom is None else bottom
        return cls(np.full(n, float(rise)), np.full(n, float(bottom)), arm_angles)

    @property
    def symmetric(self) -> bool:
        return bool(np.array_equal(self.top_profile, self.bottom_profile))


@dataclass(frozen=True)
class GeometryPrimitives:
    p1: float
    p2: float
    p3: float
    labels: tuple = ("Top", "Base", "Diagonal")

    def as_array(self) -> np.ndarray:
        return np.array([self.p1, self.p2, self.p3])

    def as_dict(self) -> dict:
        return dict(zip(self.labels, (self.p1, self.p2, self.p3)))


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    vertices: np.ndarray
    faces: np.ndarray
    panel_ids: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float).reshape(-1, 3))
        object.__setattr__(self, "faces", np.asarray(self.faces, dtype=np.int64).reshape(-1, 3))
        if self.panel_ids is None:
            object.__setattr__(self, "panel_ids", np.zeros(len(self.faces), dtype=np.int64))


def validate_state(pattern: FoldPattern, state: FoldState) -> None:
    n, a = pattern.num_creases, pattern.segment_len_a
    for name in ("top_profile", "bottom_profile"):
        h = getattr(state, name)
        if h.shape != (n,):
            raise InvalidState(f"{name} must have length {n}, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise InvalidState(f"{name} contains non-finite values")
        if (h < 0).any() or (h >= a).any():
            raise InvalidState(f"{name} rises must lie in [0, a) with a = {a}")
        if not np.allclose(h[0::2], h[1::2], rtol=0, atol=1e-12 * a):
            raise InvalidState(f"{name}: panels meeting at a ridge must share their rise")
    if pattern.kind is PatternKind.VFOLD:
        if any(not 0 <= b < np.pi / 2 for b in state.arm_angles):
            raise InvalidState("arm_angles must lie in [0, pi/2)")


# ---------------------------------------------------------------------------
# batched geometry core; leading dimensions are frames


def _row_heights(top, bottom, t):
    # (..., n), (..., n), (R,) -> (..., R, n)
    return top[..., None, :] + (bottom - top)[..., None, :] * t[:, None]


def _bay_directions(pattern: FoldPattern, arm_angles):
    """Unit plan direction of every bay, shape (..., n, 2)."""
    n = pattern.num_creases
    kind = pattern.kind
    if kind is PatternKind.SUNRAY:
        alpha = pattern.sunray_arc_angle / n
        theta = (np.arange(n) - (n - 1) / 2) * alpha
        d = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return np.broadcast_to(d, arm_angles.shape[:-1] + (n, 2))
    if kind is PatternKind.VFOLD:
        bl, br = arm_angles[..., 0], arm_angles[..., 1]
        left = np.stack([np.cos(bl), np.sin(bl)], axis=-1)  # points from tip toward hinge
        right = np.stack([np.cos(br), -np.sin(br)], axis=-1)
        half = n // 2
        return np.concatenate(
            [np.repeat(left[..., None, :], half, axis=-2), np.repeat(right[..., None, :], half, axis=-2)], axis=-2
        )
    return np.broadcast_to(np.array([1.0, 0.0]), arm_angles.shape[:-1] + (n, 2))


def _trapezoid(pattern: FoldPattern, top_extent, base_extent):
    """Isosceles placement of the two rigid guiding arms: (horizontal inset, arm height)."""
    inset = 0.5 * (top_extent - base_extent)
    height = np.sqrt(pattern.fixed_edge_len**2 - inset**2)
    return inset, height


def _walk(pattern: FoldPattern, dl, directions, start):
    """Accumulate bay runs ``dl`` (..., R, n) from the row start points (..., R, 2)."""
    n = pattern.num_creases
    steps = dl[..., None] * directions[..., None, :, :]
    xy = np.empty(dl.shape[:-1] + (n + 1, 2))
    if pattern.kind is PatternKind.VFOLD:
        half = n // 2
        xy[..., half, :] = start
        # left arm: walk outward from the hinge against the bay direction
        left = np.cumsum(steps[..., :half, :][..., ::-1, :], axis=-2)[..., ::-1, :]
        xy[..., :half, :] = start[..., None, :] - left
        xy[..., half + 1 :, :] = start[..., None, :] + np.cumsum(steps[..., half:, :], axis=-2)
    else:
        xy[..., 0, :] = start
        xy[..., 1:, :] = start[..., None, :] + np.cumsum(steps, axis=-2)
    return xy


def _frame(pattern: FoldPattern, top, bottom, arm_angles, t, derivative=False):
    top = np.asarray(top, dtype=float)
    bottom = np.asarray(bottom, dtype=float)
    arm_angles = np.broadcast_to(np.asarray(arm_angles, dtype=float), top.shape[:-1] + (2,))
    t = np.asarray(t, dtype=float)
    a, W = pattern.segment_len_a, pattern.fixed_edge_len

    h = _row_heights(top, bottom, t)
    dl = np.sqrt(np.maximum(a * a - h * h, 0.0))
    directions = _bay_directions(pattern, arm_angles)

    lead = h.shape[:-1]
    start = np.zeros(lead + (2,))
    dstart = np.zeros(lead + (2,))
    if pattern.kind.quadratic:
        te = np.sqrt(a * a - top * top).sum(-1)
        be = np.sqrt(a * a - bottom * bottom).sum(-1)
        inset, height = _trapezoid(pattern, te, be)
        start[..., 0] = inset[..., None] * t
        start[..., 1] = height[..., None] * t
        dstart[..., 0] = inset[..., None]
        dstart[..., 1] = height[..., None]
        if pattern.kind.family == "chevron":
            # the kink shears rows along the fold direction, which leaves areas unchanged
            start[..., 0] += pattern.chevron_offset * (1.0 - np.abs(2.0 * t - 1.0))
    else:
        start[..., 1] = W * t
        dstart[..., 1] = W

    xy = _walk(pattern, dl, directions, start)
    z = np.zeros(lead + (pattern.num_creases + 1,))
    z[..., 1::2] = h[..., 0::2]
    if not derivative:
        return xy, z, None
    with np.errstate(divide="ignore", invalid="ignore"):
        ddl = np.where(dl > 0, -h * (bottom - top)[..., None, :] / dl, 0.0)
    dxy = _walk(pattern, ddl, directions, dstart)
    return xy, z, (dxy, directions)


def frame_geometry(pattern: FoldPattern, top, bottom, arm_angles, t):
    """Vertex positions for rows at width fractions ``t``.

    Returns ``xy`` with shape (..., R, n + 1, 2) and ``z`` with shape (..., R, n + 1).
    """
    xy, z, _ = _frame(pattern, top, bottom, arm_angles, t)
    return xy, z


def panel_widths(pattern: FoldPattern, top, bottom, arm_angles=(0.0, 0.0), t=(0.0,)):
    """Ground-projected panel width perpendicular to the fold direction at rows ``t``.

    This is the Jacobian of the ruled panel surface with respect to the row
    parameter; shape (..., R, n).  For symmetric states it does not depend on ``t``.
    """
    _, _, (dxy, d) = _frame(pattern, top, bottom, arm_angles, t, derivative=True)
    n = pattern.num_creases
    d = d[..., None, :, :]
    p = dxy[..., :n, :]
    return d[..., 0] * p[..., 1] - d[..., 1] * p[..., 0]


def primitives_array(pattern: FoldPattern, top, bottom, arm_angles=(0.0, 0.0)) -> np.ndarray:
    """Geometry primitives in cm for batched states, shape (..., 3)."""
    xy, z = frame_geometry(pattern, top, bottom, arm_angles, np.array([0.0, 1.0]))
    n = pattern.num_creases
    if pattern.kind is PatternKind.VFOLD:
        hinge = xy[..., 0, n // 2, :]
        tip_l, tip_r = xy[..., 0, 0, :], xy[..., 0, n, :]
        p1 = np.linalg.norm(tip_l - hinge, axis=-1)
        p2 = np.linalg.norm(tip_r - hinge, axis=-1)
        d3 = np.concatenate([tip_l - tip_r, (z[..., 0, 0] - z[..., 0, n])[..., None]], axis=-1)
    else:
        p1 = np.linalg.norm(xy[..., 0, n, :] - xy[..., 0, 0, :], axis=-1)
        p2 = np.linalg.norm(xy[..., 1, n, :] - xy[..., 1, 0, :], axis=-1)
        d3 = np.concatenate([xy[..., 1, n, :] - xy[..., 0, 0, :], (z[..., 1, n] - z[..., 0, 0])[..., None]], axis=-1)
    p3 = np.linalg.norm(d3, axis=-1)
    return 100.0 * np.stack([p1, p2, p3], axis=-1)


# ---------------------------------------------------------------------------
# public single-state API


def _default_rows(pattern: FoldPattern, rows):
    rows = 1 if rows is None else int(rows)
    if rows < 1:
        raise ValueError("rows must be >= 1")
    if pattern.kind.family == "chevron" and rows % 2:
        rows = max(2, rows + 1)  # the chevron kink needs a middle row
    return rows


def realize_surface(pattern: FoldPattern, state: FoldState, rows: int | None = None) -> SurfaceMesh:
    """Triangulated zig-zag surface for a fold state.

    ``rows`` is the number of strips the width is cut into; panels of a
    symmetric state are planar, so one strip (two for the chevron kink) is exact.
    Asymmetric states are ruled surfaces and converge as ``rows`` grows.
    """
    validate_state(pattern, state)
    rows = _default_rows(pattern, rows)
    n = pattern.num_creases
    t = np.linspace(0.0, 1.0, rows + 1)
    xy, z = frame_geometry(pattern, state.top_profile, state.bottom_profile, state.arm_angles, t)
    vertices = np.concatenate([xy, z[..., None]], axis=-1).reshape(-1, 3)

    r, i = np.meshgrid(np.arange(rows), np.arange(n), indexing="ij")
    v00 = (r * (n + 1) + i).ravel()
    v01 = v00 + 1
    v11 = v01 + (n + 1)
    v10 = v00 + (n + 1)
    faces = np.empty((2 * v00.size, 3), dtype=np.int64)
    faces[0::2] = np.stack([v00, v01, v11], axis=1)
    faces[1::2] = np.stack([v00, v11, v10], axis=1)
    panel_ids = np.repeat(i.ravel(), 2)
    return SurfaceMesh(vertices, faces, panel_ids)


def extract_primitives(pattern: FoldPattern, state: FoldState) -> GeometryPrimitives:
    validate_state(pattern, state)
    p = primitives_array(pattern, state.top_profile, state.bottom_profile, state.arm_angles)
    return GeometryPrimitives(float(p[0]), float(p[1]), float(p[2]), pattern.labels)


def volume_under_surface(mesh: SurfaceMesh) -> float:
    """Volume between the mesh and the ground plane, summed over vertical triangular prisms."""
    p = mesh.vertices[mesh.faces]
    e1 = p[:, 1, :2] - p[:, 0, :2]
    e2 = p[:, 2, :2] - p[:, 0, :2]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    return float(np.sum(area * p[:, :, 2].mean(axis=1)))


# ---------------------------------------------------------------------------
# low-dimensional pose family shared by motion synthesis and reconstruction


def vfold_angle(e_left, e_right):
    """Arm droop coupled to deployment: folded arms hang, deployed arms are pushed up."""
    mean = 0.5 * (np.asarray(e_left) + np.asarray(e_right))
    return VFOLD_ANGLE_FOLDED - (VFOLD_ANGLE_FOLDED - VFOLD_ANGLE_DEPLOYED) * mean


def pose_rises(pattern: FoldPattern, e_top, e_bottom, gradient=0.0):
    """Per-panel rises for deployment fractions in [0, 1].

    ``e_top``/``e_bottom`` map linearly onto ``deploy_range`` (path length of an
    edge, or of an arm for the V-fold, where they mean left/right arm and both
    rows share the arm's rise).  ``gradient`` tilts the panel run linearly along
    the fold direction while keeping each edge's total length.
    Returns ``(top, bottom)`` arrays of shape (..., n).
    """
    a = pattern.segment_len_a
    lo, hi = pattern.deploy_range
    e_top, e_bottom, gradient = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (e_top, e_bottom, gradient)))
    m = pattern.arm_panels // 2  # ridges per edge / arm
    ramp = np.arange(m) / max(m - 1, 1) - 0.5

    def ridge_runs(e):
        mean_run = (lo + e * (hi - lo)) / pattern.arm_panels
        return mean_run[..., None] * (1.0 + gradient[..., None] * ramp)

    def rises(runs):
        runs = np.clip(runs, 0.0, a)
        h = np.sqrt(a * a - runs * runs)
        cap = MAX_RISE_FRACTION * a
        if (h > cap).any():
            logger.warning("clamping %d panel rises to %.3g m", int((h > cap).sum()), cap)
            h = np.minimum(h, cap)
        return np.repeat(h, 2, axis=-1)

    if pattern.kind is PatternKind.VFOLD:
        left = rises(ridge_runs(e_top))
        right = rises(ridge_runs(e_bottom))
        both = np.concatenate([left, right], axis=-1)
        return both, both.copy()
    return rises(ridge_runs(e_top)), rises(ridge_runs(e_bottom))


def pose_state(pattern: FoldPattern, e_top: float, e_bottom: float, gradient: float = 0.0, angle=None) -> FoldState:
    top, bottom = pose_rises(pattern, e_top, e_bottom, gradient)
    if pattern.kind is PatternKind.VFOLD:
        b = float(vfold_angle(e_top, e_bottom)) if angle is None else float(angle)
        return FoldState(top, bottom, (b, b))
    return FoldState(top, bottom)


# ---------------------------------------------------------------------------
# default patterns and channel layouts


def _strips(kind: PatternKind, L: float, W: float, a: float, width: float, n_channels: int):
    layouts = []
    if kind in (PatternKind.ACCORDION_R, PatternKind.CHEVRON_R):
        for k in range(n_channels):
            v = W * (k + 0.5) / n_channels
            layouts.append(ChannelLayout(k, Orientation.PERPENDICULAR, ((0.0, v), (L, v)), width))
    elif kind in (PatternKind.ACCORDION_P, PatternKind.CHEVRON_P):
        n = int(round(L / a))
        half = (n_channels + 1) // 2
        bays = [int(n * (j + 1) / (half + 1)) for j in range(half)]
        spans = [(0.04 * W, 0.46 * W), (0.54 * W, 0.96 * W)]
        for k in range(n_channels):
            u = (bays[k % half] + 0.5) * a
            v0, v1 = spans[k // half]
            layouts.append(ChannelLayout(k, Orientation.PARALLEL, ((u, v0), (u, v1)), min(width, 0.8 * a)))
    else:
        if kind is PatternKind.VFOLD:
            per_arm = max(n_channels // 2, 1)
            arm = L / 2
            starts = [arm * side + arm * (0.05 + 0.9 * j / per_arm) for side in (0, 1) for j in range(per_arm)]
            run = 0.9 * arm / per_arm * 0.9
        else:
            starts = [L * (0.02 + 0.96 * j / n_channels) for j in range(n_channels)]
            run = 0.96 * L / n_channels * 0.9
        for k, u0 in enumerate(starts[:n_channels]):
            layouts.append(ChannelLayout(k, Orientation.DIAGONAL, ((u0, 0.02 * W), (u0 + run, 0.98 * W)), width))
    return tuple(layouts)


def default_pattern(kind, n_channels: int = 4) -> FoldPattern:
    """Pattern with the dimensions of the physical samples and ``n_channels`` strips."""
    kind = PatternKind(kind)
    a = 0.01
    if kind.quadratic:
        n, W, width, rng, arc = 30, 0.225, 0.02, (0.02, 0.20), 0.0
    elif kind is PatternKind.VFOLD:
        n, W, width, rng, arc = 32, 0.10, 0.01, (0.02, 0.14), 0.0
    else:
        n, W, width, rng, arc = 20, 0.10, 0.01, (0.05, 0.18), np.pi / 3
    offset = 0.02 if kind.family == "chevron" else 0.0
    layouts = _strips(kind, n * a, W, a, width, n_channels)
    return FoldPattern(kind, W, a, n, width, rng, arc, offset, layouts)


def pattern_to_dict(pattern: FoldPattern) -> dict:
    return {
        "kind": pattern.kind.value,
        "fixed_edge_len": pattern.fixed_edge_len,
        "segment_len_a": pattern.segment_len_a,
        "num_creases": pattern.num_creases,
        "patch_width_w": pattern.patch_width_w,
        "deploy_range": list(pattern.deploy_range),
        "sunray_arc_angle": pattern.sunray_arc_angle,
        "chevron_offset": pattern.chevron_offset,
        "channel_layouts": [
            {
                "channel_id": c.channel_id,
                "orientation": c.orientation.value,
                "path": [list(p) for p in c.path],
                "strip_width": c.strip_width,
            }
            for c in pattern.channel_layouts
        ],
    }


def pattern_from_dict(d: dict) -> FoldPattern:
    """Build a pattern from a config mapping; missing keys fall back to the kind's defaults."""
    d = dict(d)
    kind = PatternKind(d.pop("kind"))
    n_channels = int(d.pop("n_channels", 4))
    base = default_pattern(kind, n_channels)
    layouts = d.pop("channel_layouts", None)
    merged = {**pattern_to_dict(base), **d}
    merged.pop("kind")
    merged.pop("channel_layouts")
    if layouts is None:
        chans = base.channel_layouts
        # regenerate default strips if dimensions were overridden
        if any(k in d for k in ("fixed_edge_len", "segment_len_a", "num_creases", "patch_width_w")):
            chans = _strips(
                kind,
                merged["num_creases"] * merged["segment_len_a"],
                merged["fixed_edge_len"],
                merged["segment_len_a"],
                merged["patch_width_w"],
                n_channels,
            )
    else:
        chans = tuple(ChannelLayout(**c) for c in layouts)
    return FoldPattern(kind=kind, channel_layouts=chans, **merged)


# ---------------------------------------------------------------------------
# Wavefront OBJ


def export_obj(mesh: SurfaceMesh, path) -> None:
    """Write an ASCII OBJ (meters, 1-based faces); vertex and face order are kept as given."""
    lines = [f"# foldcap surface: {len(mesh.vertices)} vertices, {len(mesh.faces)} faces\n"]
    lines += [f"v {x:.9f} {y:.9f} {z:.9f}\n" for x, y, z in mesh.vertices]
    lines += [f"f {i + 1} {j + 1} {k + 1}\n" for i, j, k in mesh.faces]
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "w", encoding="ascii") as fh:
        fh.writelines(lines)
    os.replace(tmp, path)


def read_obj(path) -> SurfaceMesh:
    vertices, faces = [], []
    with open(path, encoding="ascii") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                vertices.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                faces.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
    return SurfaceMesh(np.array(vertices), np.array(faces, dtype=np.int64))
