import numpy as np
import pytest

from foldcap.errors import RangeViolation
from foldcap.kinematics import default_pattern, pose_state
from foldcap.motion import (
    MATERIALS, SAMPLE_RATE, MaterialProfile, MotionElement, MotionKind, apply_material, generate_sessions,
    generate_trajectory, random_script, simulate_session,
)
from foldcap.physics import FrontendConfig


@pytest.fixture(scope="module")
def pattern():
    return default_pattern("accordion-r")


def test_hold_produces_identical_states(pattern):
    traj = generate_trajectory(pattern, [MotionElement("hold", 2.0)], seed=3)
    assert len(traj) == 60
    assert np.all(traj.top == traj.top[0]) and np.all(traj.bottom == traj.bottom[0])
    ref = pose_state(pattern, 0.5, 0.5)
    np.testing.assert_array_equal(traj.top[0], ref.top_profile)


def test_fifteen_minute_script_length(pattern):
    script = random_script(900.0, seed=1)
    assert sum(e.duration for e in script) == pytest.approx(900.0)
    traj = generate_trajectory(pattern, script, seed=1)
    assert len(traj) == 27000
    assert traj.sample_rate == SAMPLE_RATE


def test_trajectory_deterministic(pattern):
    script = random_script(60.0, seed=4)
    a = generate_trajectory(pattern, script, seed=9)
    b = generate_trajectory(pattern, script, seed=9)
    c = generate_trajectory(pattern, script, seed=10)
    np.testing.assert_array_equal(a.pose, b.pose)
    assert not np.array_equal(a.pose, c.pose)


def test_open_then_close_reaches_targets_without_jitter(pattern):
    els = [MotionElement("symmetric-open", 2.0, 0.4), MotionElement("symmetric-close", 2.0, 0.6)]
    traj = generate_trajectory(pattern, els, start=(0.3, 0.3, 0.0), jitter=0.0)
    assert traj.pose[59, 0] == pytest.approx(0.7, abs=1e-3)
    assert traj.pose[-1, 0] == pytest.approx(0.1, abs=2e-3)
    # ease-in/out: the first step is much smaller than the mid-element step
    d = np.abs(np.diff(traj.pose[:60, 0]))
    assert d[0] < 0.05 * d[29]


def test_asymmetric_and_skew_targets():
    assert MotionElement("asymmetric-left", 1.0, 0.4).target((0.5, 0.5, 0.0)) == (0.7, 0.3, 0.0)
    assert MotionElement("asymmetric-right", 1.0, 0.4).target((0.5, 0.5, 0.0)) == (0.3, 0.7, 0.0)
    assert MotionElement("diagonal-skew", 1.0, 1.0).target((0.5, 0.5, 0.2))[2] == -0.5
    assert MotionElement("diagonal-skew", 1.0, 1.0).target((0.5, 0.5, -0.2))[2] == 0.5


def test_range_violation(pattern):
    with pytest.raises(RangeViolation):
        generate_trajectory(pattern, [MotionElement("symmetric-open", 1.0, 0.8)], start=(0.5, 0.5, 0.0))


def test_speed_bound(pattern):
    with pytest.raises(RangeViolation):
        generate_trajectory(pattern, [MotionElement("symmetric-open", 0.2, 1.0), MotionElement("hold", 1.0)],
                            start=(0.0, 0.0, 0.0), v_max=0.01)
    generate_trajectory(pattern, [MotionElement("symmetric-open", 2.0, 1.0)], start=(0.0, 0.0, 0.0), v_max=0.01)
    traj = generate_trajectory(pattern, random_script(120.0, seed=2), seed=2)
    step = np.abs(np.diff(traj.top, axis=0)).max()
    assert step <= 0.1 / SAMPLE_RATE


def test_random_script_stays_in_range():
    for seed in range(5):
        pose = (0.5, 0.5, 0.0)
        for el in random_script(300.0, seed=seed):
            pose = el.target(pose)
            assert 0.0 <= pose[0] <= 1.0 and 0.0 <= pose[1] <= 1.0
            assert 1.5 - 1e-9 <= el.duration <= 5.0 or el is not None


def test_element_validation():
    with pytest.raises(ValueError):
        MotionElement("hold", 0.0)
    with pytest.raises(ValueError):
        MotionElement("symmetric-open", 1.0, 1.5)
    with pytest.raises(ValueError):
        MotionElement("twist", 1.0)
    assert MotionElement(MotionKind.HOLD, 1.0).to_dict() == {"kind": "hold", "duration": 1.0, "amplitude": 0.0}


def test_identity_material_is_exact(rng):
    x = rng.uniform(1.1e7, 1.3e7, (500, 3))
    np.testing.assert_array_equal(apply_material(x, MATERIALS["ideal"], seed=1), x)


def test_drift_random_walk_scale():
    prof = MaterialProfile("drift", 0.0, 5.0, 0.0)
    x = np.zeros((1801, 2000))
    y = apply_material(x, prof, seed=5)
    # variance of a random walk grows linearly: rate^2 * t
    var = y[-1].var()
    assert var == pytest.approx(25.0 * 60.0, rel=0.1)
    minute_means = y[: 1800].reshape(2, 900, -1).mean(axis=1)
    assert np.abs(minute_means).mean() > 0


def test_noise_level():
    prof = MaterialProfile("noise", 200.0, 0.0, 0.0)
    y = apply_material(np.zeros((20000, 1)), prof, seed=1)
    assert y.std() == pytest.approx(200.0, rel=0.03)


def test_play_operator_bounds_and_lag():
    t = np.linspace(0, 4 * np.pi, 2001)
    x = np.sin(t)
    for gamma in (0.02, 0.15):
        y = apply_material(x, MaterialProfile("h", 0.0, 0.0, gamma))
        r = gamma * np.ptp(x) / 2
        assert np.abs(y - x).max() <= r + 1e-12
        assert np.abs(y - x).max() == pytest.approx(r, rel=1e-3)
    # the loop encloses a larger area for the larger half-width
    def loop_area(gamma):
        y = apply_material(x, MaterialProfile("h", 0.0, 0.0, gamma))
        return abs(np.trapezoid(y[1000:], x[1000:]))
    assert loop_area(0.15) > loop_area(0.02) > 0


def test_material_ordering():
    cloth, paper = MATERIALS["cloth"], MATERIALS["paper"]
    assert paper.noise_sigma > cloth.noise_sigma
    assert paper.drift_rate > cloth.drift_rate
    assert paper.hysteresis_gamma > cloth.hysteresis_gamma
    with pytest.raises(ValueError):
        MaterialProfile("bad", -1.0, 0.0, 0.0)


def test_simulated_session_shapes_and_band(pattern):
    traj = generate_trajectory(pattern, random_script(20.0, seed=8), seed=8)
    sess = simulate_session(pattern, traj, MATERIALS["cloth"], seed=8, session_id="s")
    cfg = FrontendConfig()
    assert sess.recording.values.shape == (600, pattern.n_channels)
    assert sess.targets.values.shape == (600, 3)
    assert sess.targets.labels == ("top", "base", "diagonal")
    assert np.all(np.diff(sess.recording.ts_ms) > 0)
    assert cfg.freq_min < sess.recording.values.min() and sess.recording.values.max() < cfg.freq_max


def test_generate_sessions_deterministic_and_independent(pattern):
    a = generate_sessions(pattern, sessions=2, minutes=0.5, seed=11)
    b = generate_sessions(pattern, sessions=2, minutes=0.5, seed=11)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.recording.values, y.recording.values)
        np.testing.assert_array_equal(x.targets.values, y.targets.values)
    assert a[0].recording.session_id == "session00" and a[1].recording.session_id == "session01"
    assert a[1].recording.ts_ms[0] - a[0].recording.ts_ms[0] == 3_600_000
    assert not np.array_equal(a[0].targets.values, a[1].targets.values)


@pytest.mark.parametrize("kind", ["v-fold", "sunray", "chevron-r"])
def test_other_patterns_simulate(kind):
    p = default_pattern(kind)
    s = generate_sessions(p, sessions=1, minutes=0.2, seed=1)[0]
    assert np.all(np.isfinite(s.recording.values))
    assert s.recording.values.shape[1] == p.n_channels
