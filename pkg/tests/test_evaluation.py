import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from foldcap.errors import DegenerateInput, Infeasible
from foldcap.evaluation import (
    bland_altman, evaluate, r_squared, reconstruct, reconstruct_sequence, rmse, scatter_svg, write_scatter_csv,
    write_scatter_svgs,
)
from foldcap.kinematics import PatternKind, default_pattern, extract_primitives, pose_state

from helpers import random_pose_state


def test_r_squared_identity_and_mean():
    y = np.array([1.0, 2.0, 4.0, 7.0])
    assert r_squared(y, y) == (1.0, 1.0)
    det, prs = r_squared(y, np.full(4, y.mean()))
    assert det == 0.0
    with pytest.raises(DegenerateInput):
        r_squared(np.ones(4), y)


def test_determination_differs_from_squared_correlation():
    y = np.array([1.0, 2.0, 3.0, 4.0])
    det, prs = r_squared(y, 2 * y + 5)
    assert prs == pytest.approx(1.0)
    assert det < 0


def test_r_squared_against_direct_formula(rng):
    y = rng.normal(size=200)
    p = y + rng.normal(0, 0.3, size=200)
    det, prs = r_squared(y, p)
    assert det == pytest.approx(1 - np.sum((y - p) ** 2) / np.sum((y - y.mean()) ** 2), rel=1e-12)
    assert prs == pytest.approx(np.corrcoef(y, p)[0, 1] ** 2, rel=1e-12)


def test_rmse_examples():
    assert rmse([1, 2, 3], [1, 2, 3]) == 0.0
    assert rmse([1, 2, 3], [2, 3, 4]) == 1.0
    with pytest.raises(ValueError):
        rmse([], [])


def test_bland_altman_arithmetic():
    ba = bland_altman([1, 2, 3, 4], [1, 3, 2, 4])
    assert ba.bias == 0.0
    assert ba.sd == pytest.approx(0.8165, abs=5e-5)
    assert ba.loa_high == pytest.approx(1.6003, abs=5e-4)
    assert ba.loa_low == pytest.approx(-1.6003, abs=5e-4)


def test_bland_altman_constant_shift():
    y = np.arange(10.0)
    ba = bland_altman(y, y + 0.7)
    assert ba.bias == pytest.approx(0.7) and ba.sd == pytest.approx(0.0, abs=1e-12)


def test_limits_of_agreement_coverage(rng):
    y = rng.uniform(10, 30, 20000)
    p = y + rng.normal(0.2, 0.5, y.size)
    ba = bland_altman(y, p)
    d = p - y
    inside = np.mean((d >= ba.loa_low) & (d <= ba.loa_high))
    assert inside >= 0.93


def test_evaluate_report(tmp_path, rng):
    y = rng.uniform(10, 30, (100, 3))
    p = y + rng.normal(0, 0.5, y.shape)
    rep = evaluate(y, p, ("top", "base", "diagonal"))
    assert rep.n_samples == 100 and rep.labels == ["top", "base", "diagonal"]
    assert rep.avg_r2 == pytest.approx(np.mean(rep.r2))
    assert rep.avg_rmse_cm == pytest.approx(np.mean(rep.rmse_cm))
    rep.to_json(tmp_path / "r.json")
    data = json.loads((tmp_path / "r.json").read_text())
    assert set(data["bland_altman"][0]) >= {"bias", "sd"}
    with pytest.raises(ValueError):
        evaluate(y, p[:, :2])


def test_scatter_outputs(tmp_path, rng):
    y = rng.uniform(10, 30, (50, 3))
    p = y + rng.normal(0, 0.5, y.shape)
    write_scatter_csv(tmp_path / "s.csv", y, p, ("top", "base", "diagonal"))
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert len(lines) == 1 + 3 * 50 and lines[0].startswith("primitive,truth_cm")
    paths = write_scatter_svgs(tmp_path / "fig", y, p, ("top", "base", "diagonal"))
    assert len(paths) == 6
    for path in paths:
        root = ET.parse(path).getroot()
        assert root.tag.endswith("svg")
    assert (tmp_path / "fig_top_corr.svg").exists() and (tmp_path / "fig_diagonal_ba.svg").exists()
    ET.fromstring(scatter_svg([1, 1], [2, 2], "degenerate"))


@pytest.mark.parametrize("kind", list(PatternKind), ids=lambda k: k.value)
def test_reconstruct_recovers_known_state(kind, rng):
    p = default_pattern(kind)
    for _ in range(5):
        st = random_pose_state(p, rng)
        prims = extract_primitives(p, st).as_array()
        rec = reconstruct(p, prims)
        np.testing.assert_allclose(extract_primitives(p, rec.state).as_array(), prims, atol=1e-6)
        assert rec.residual_cm < 1e-6


def test_reconstruct_flat_state():
    p = default_pattern("accordion-r")
    flat = pose_state(p, 1.0, 1.0)
    rec = reconstruct(p, extract_primitives(p, flat).as_array())
    np.testing.assert_allclose(rec.params, [1.0, 1.0], atol=1e-9)
    np.testing.assert_allclose(rec.mesh.vertices[:, 2].max(), flat.top_profile.max(), atol=1e-9)


def test_reconstruct_infeasible_inputs():
    p = default_pattern("accordion-r")
    with pytest.raises(Infeasible):
        reconstruct(p, [10.0, 10.0, 10.0 + 100 * p.fixed_edge_len + 1.0])
    with pytest.raises(Infeasible):
        reconstruct(p, [np.nan, 10.0, 20.0])
    with pytest.raises(Infeasible) as exc:
        reconstruct(p, [10.0, 10.0, 0.5])  # diagonal far shorter than the fixed edge
    assert exc.value.residual > 0


def test_reconstruct_clamps_out_of_reach(caplog):
    p = default_pattern("accordion-r")
    full = extract_primitives(p, pose_state(p, 1.0, 1.0)).as_array()
    with caplog.at_level("WARNING"):
        rec = reconstruct(p, full + np.array([0.3, 0.3, 0.0]))
    assert "clamped" in caplog.text
    assert rec.residual_cm < 0.5


def test_reconstruct_sequence_is_seeded(rng):
    p = default_pattern("sunray")
    states = [pose_state(p, e, e, 0.1) for e in np.linspace(0.2, 0.8, 8)]
    prims = np.array([extract_primitives(p, s).as_array() for s in states])
    recs = reconstruct_sequence(p, prims)
    assert len(recs) == 8
    np.testing.assert_allclose([r.primitives for r in recs], prims, atol=1e-6)
