"""Shared helpers for the test-suite: random valid states and mesh measurements."""

import numpy as np

from foldcap.kinematics import FoldState, PatternKind, default_pattern, pose_state

ALL_KINDS = list(PatternKind)
FAMILY_KINDS = [PatternKind.ACCORDION_R, PatternKind.CHEVRON_R, PatternKind.VFOLD, PatternKind.SUNRAY]


def random_rises(pattern, rng, lo=0.0, hi=0.95):
    """Independent random ridge rises (shared within each ridge pair)."""
    a = pattern.segment_len_a
    half = rng.uniform(lo * a, hi * a, pattern.num_creases // 2)
    return np.repeat(half, 2)


def random_state(pattern, rng, symmetric=False):
    top = random_rises(pattern, rng)
    bottom = top.copy() if symmetric else random_rises(pattern, rng)
    if pattern.kind is PatternKind.VFOLD:
        b = rng.uniform(0.05, 1.2)
        return FoldState(top, top.copy(), (b, b))
    return FoldState(top, bottom)


def random_pose_state(pattern, rng):
    et, eb = rng.uniform(0, 1, 2)
    g = rng.uniform(-0.5, 0.5)
    angle = rng.uniform(0.05, 1.2) if pattern.kind is PatternKind.VFOLD else None
    return pose_state(pattern, et, eb, g, angle=angle)


def patterns(kinds=ALL_KINDS):
    return [default_pattern(k) for k in kinds]
