import numpy as np
import pytest

from foldcap.errors import InvalidState
from foldcap.kinematics import (
    FoldPattern, FoldState, PatternKind, default_pattern, export_obj, extract_primitives, pattern_from_dict,
    pattern_to_dict, pose_rises, pose_state, read_obj, realize_surface,
)

from helpers import ALL_KINDS, random_pose_state, random_state


def flat_accordion(n=20, W=0.225):
    return FoldPattern(PatternKind.ACCORDION_R, W, 0.01, n, 0.02, deploy_range=(0.02, n * 0.01))


def fold_direction_edges(pattern, mesh):
    n = pattern.num_creases
    v = mesh.vertices.reshape(-1, n + 1, 3)
    return np.linalg.norm(np.diff(v, axis=1), axis=-1)


def test_flat_state_is_flat_and_full_length():
    p = flat_accordion()
    mesh = realize_surface(p, FoldState.uniform(p, 0.0))
    assert np.all(mesh.vertices[:, 2] == 0.0)
    v = mesh.vertices.reshape(2, 21, 3)
    assert v[0, -1, 0] - v[0, 0, 0] == pytest.approx(20 * 0.01, abs=1e-15)


def test_pythagorean_bay_run():
    p = flat_accordion()
    mesh = realize_surface(p, FoldState.uniform(p, 0.006))
    runs = np.diff(mesh.vertices.reshape(2, 21, 3)[0, :, 0])
    np.testing.assert_allclose(runs, 0.008, atol=1e-15)
    z = mesh.vertices.reshape(2, 21, 3)[0, :, 2]
    np.testing.assert_allclose(z[1::2], 0.006)
    np.testing.assert_allclose(z[0::2], 0.0)


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
def test_isometry_random_states(kind, rng):
    p = default_pattern(kind)
    for _ in range(20):
        edges = fold_direction_edges(p, realize_surface(p, random_state(p, rng), 7))
        np.testing.assert_allclose(edges, p.segment_len_a, rtol=0, atol=1e-12)


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
def test_mesh_above_ground_and_shared_vertices(kind, rng):
    p = default_pattern(kind)
    mesh = realize_surface(p, random_state(p, rng), 4)
    assert mesh.vertices[:, 2].min() >= 0.0
    rows = 4
    assert len(mesh.vertices) == (rows + 1) * (p.num_creases + 1)
    assert len(mesh.faces) == 2 * rows * p.num_creases
    # every interior crease vertex is used by faces of both neighbouring panels
    for vid in range(1, p.num_creases):
        panels = set(mesh.panel_ids[np.any(mesh.faces == vid, axis=1)])
        assert panels == {vid - 1, vid}


def test_flat_primitives_match_developed_dimensions():
    p = flat_accordion()
    prim = extract_primitives(p, FoldState.uniform(p, 0.0))
    assert prim.labels == ("Top", "Base", "Diagonal")
    assert prim.p1 == pytest.approx(20.0, abs=1e-12)
    assert prim.p2 == pytest.approx(20.0, abs=1e-12)
    assert prim.p3 == pytest.approx(np.hypot(20.0, 22.5), abs=1e-12)
    assert prim.p3 == pytest.approx(30.10, abs=0.005)


@pytest.mark.parametrize("kind", [k for k in ALL_KINDS if k.quadratic], ids=lambda k: k.value)
def test_symmetric_state_gives_equal_top_and_base(kind, rng):
    p = default_pattern(kind)
    st = random_state(p, rng, symmetric=True)
    prim = extract_primitives(p, st)
    assert prim.p1 == prim.p2


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
def test_primitives_match_mesh_measurements(kind, rng):
    p = default_pattern(kind)
    n = p.num_creases
    for _ in range(10):
        st = random_state(p, rng)
        mesh = realize_surface(p, st)
        rows = len(mesh.vertices) // (n + 1) - 1
        v = mesh.vertices.reshape(rows + 1, n + 1, 3)
        prim = extract_primitives(p, st).as_array() / 100.0
        if kind is PatternKind.VFOLD:
            hinge, left, right = v[0, n // 2], v[0, 0], v[0, n]
            measured = [np.linalg.norm((left - hinge)[:2]), np.linalg.norm((right - hinge)[:2]),
                        np.linalg.norm(left - right)]
        else:
            measured = [np.linalg.norm((v[0, n] - v[0, 0])[:2]), np.linalg.norm((v[-1, n] - v[-1, 0])[:2]),
                        np.linalg.norm(v[-1, n] - v[0, 0])]
        np.testing.assert_allclose(prim, measured, rtol=0, atol=1e-9)


def test_quadratic_diagonal_feasible(rng):
    p = default_pattern("accordion-d")
    for _ in range(50):
        prim = extract_primitives(p, random_state(p, rng))
        assert prim.p3 <= prim.p1 + 100 * p.fixed_edge_len
        assert min(prim.p1, prim.p2, prim.p3) >= 0


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
def test_uniform_rise_shrinks_extents(kind):
    p = default_pattern(kind)
    prev = None
    for h in np.linspace(0.0, 0.009, 10):
        st = FoldState.uniform(p, h, arm_angles=(0.4, 0.4))
        prim = extract_primitives(p, st).as_array()
        if prev is not None:
            assert prim[0] < prev[0] and prim[1] < prev[1]
        prev = prim


def test_invalid_states_rejected():
    p = default_pattern("accordion-r")
    n = p.num_creases
    with pytest.raises(InvalidState):
        realize_surface(p, FoldState(np.full(n, 0.01), np.zeros(n)))
    with pytest.raises(InvalidState):
        realize_surface(p, FoldState(np.full(n, -0.001), np.zeros(n)))
    with pytest.raises(InvalidState):
        realize_surface(p, FoldState(np.zeros(n - 2), np.zeros(n - 2)))
    bad = np.zeros(n)
    bad[0] = 0.005  # ridge partner differs
    with pytest.raises(InvalidState):
        extract_primitives(p, FoldState(bad, np.zeros(n)))


def test_pose_rises_keep_edge_length_under_gradient():
    p = default_pattern("accordion-r")
    a = p.segment_len_a
    for g in (-0.5, 0.0, 0.5):
        top, bottom = pose_rises(p, 0.3, 0.8, g)
        lo, hi = p.deploy_range
        np.testing.assert_allclose(np.sqrt(a * a - top**2).sum(), lo + 0.3 * (hi - lo), rtol=1e-12)
        np.testing.assert_allclose(np.sqrt(a * a - bottom**2).sum(), lo + 0.8 * (hi - lo), rtol=1e-12)


def test_pose_rises_clamp_with_warning(caplog):
    p = default_pattern("accordion-r")
    lo, hi = p.deploy_range
    q = FoldPattern(p.kind, p.fixed_edge_len, p.segment_len_a, p.num_creases, p.patch_width_w, (1e-4, hi))
    with caplog.at_level("WARNING"):
        top, _ = pose_rises(q, 0.0, 0.0)
    assert top.max() <= 0.999 * p.segment_len_a
    assert "clamping" in caplog.text


def test_pattern_dict_roundtrip():
    for kind in ALL_KINDS:
        p = default_pattern(kind)
        assert pattern_from_dict(pattern_to_dict(p)) == p


def test_pattern_invariants():
    with pytest.raises(ValueError):
        FoldPattern(PatternKind.ACCORDION_R, 0.225, 0.01, 10, 0.02, (0.02, 0.20))  # too short to deploy 20 cm
    with pytest.raises(ValueError):
        FoldPattern(PatternKind.ACCORDION_R, -1.0, 0.01, 30, 0.02)


def two_bay_mesh():
    p = FoldPattern(PatternKind.ACCORDION_R, 0.05, 0.01, 2, 0.01, (0.005, 0.02))
    return realize_surface(p, FoldState.uniform(p, 0.0))


def test_obj_counts(tmp_path):
    path = tmp_path / "flat.obj"
    export_obj(two_bay_mesh(), path)
    lines = path.read_text().splitlines()
    assert sum(l.startswith("v ") for l in lines) == 6
    assert sum(l.startswith("f ") for l in lines) == 4


def test_obj_roundtrip_and_bounds(tmp_path, rng):
    p = default_pattern("sunray")
    mesh = realize_surface(p, random_state(p, rng), 3)
    path = tmp_path / "m.obj"
    export_obj(mesh, path)
    back = read_obj(path)
    np.testing.assert_allclose(back.vertices, mesh.vertices, atol=5e-7)
    np.testing.assert_array_equal(back.faces, mesh.faces)
    assert back.faces.min() >= 0 and back.faces.max() < len(back.vertices)


def test_obj_deterministic(tmp_path, rng):
    p = default_pattern("v-fold")
    st = random_pose_state(p, rng)
    export_obj(realize_surface(p, st), tmp_path / "a.obj")
    export_obj(realize_surface(p, st), tmp_path / "b.obj")
    assert (tmp_path / "a.obj").read_bytes() == (tmp_path / "b.obj").read_bytes()


def test_export_to_missing_directory_raises(tmp_path):
    with pytest.raises(OSError):
        export_obj(two_bay_mesh(), tmp_path / "missing" / "x.obj")


def test_vfold_pose_has_coupled_arm_angles():
    p = default_pattern("v-fold")
    st = pose_state(p, 0.2, 0.6)
    assert st.arm_angles[0] == st.arm_angles[1]
    assert 0 < st.arm_angles[0] < np.pi / 2
