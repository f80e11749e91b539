import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mentor_loco.controller import (PolicyParams, RunningStats, TrajectoryGenerator, foot_target,
                                    leg_fk, leg_ik, normalize, observation_normalizer_update,
                                    policy_forward, tg_step, tg_targets)
from mentor_loco.errors import ConfigurationError
from mentor_loco.physics import RobotModel

actions = st.lists(st.floats(-1, 1), min_size=6, max_size=6)


def test_ik_straight_leg():
    hip, knee, clamped = leg_ik(0.0, -0.4, 0.2, 0.2)
    assert hip == pytest.approx(0.0, abs=1e-7) and knee == pytest.approx(0.0, abs=1e-7)
    assert not clamped


@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.1))
def test_ik_round_trip(x, z):
    hip, knee, clamped = leg_ik(x, z, 0.2, 0.2)
    fx, fz = leg_fk(hip, knee, 0.2, 0.2)
    r = math.hypot(x, z)
    if not clamped:
        assert math.hypot(fx - x, fz - z) < 1e-6
    else:
        # pulled onto the reachable annulus along the same ray
        target = min(max(r, 0.02), 0.4)
        assert math.hypot(fx, fz) == pytest.approx(target, abs=1e-6)
    assert knee >= 0


def test_foot_path_shape():
    assert foot_target(0.0, 0.05, 0.05, 0.28) == pytest.approx((0.05, -0.28))
    assert foot_target(math.pi / 2, 0.05, 0.05, 0.28) == pytest.approx((0.0, -0.28))
    x, z = foot_target(1.5 * math.pi, 0.05, 0.05, 0.28)
    assert x == pytest.approx(0.0, abs=1e-12) and z == pytest.approx(-0.23)


def test_zero_action_period_closes():
    tg = TrajectoryGenerator(base_frequency=1.0)  # 100 control steps per cycle
    tg, q0 = tg_step(tg, np.zeros(6))
    first = q0
    for _ in range(100):
        tg, q = tg_step(tg, np.zeros(6))
    np.testing.assert_allclose(q, first, atol=1e-9)


def test_max_frequency_period():
    a = np.zeros(6)
    a[0] = 1.0
    tg = TrajectoryGenerator()
    for _ in range(40):
        tg, _ = tg_step(tg, a)
    assert min(tg.phase, 2 * math.pi - tg.phase) < 1e-9


def test_dt_precondition():
    with pytest.raises(ValueError):
        tg_step(TrajectoryGenerator(), np.zeros(6), 0.02)


def test_zero_action_gait_within_limits():
    lim = RobotModel().joint_limits
    for ph in np.linspace(0, 2 * math.pi, 200):
        q = tg_targets(TrajectoryGenerator(), ph, 0.05)
        assert np.all(q >= lim[:, 0]) and np.all(q <= lim[:, 1])


@given(actions, st.floats(0, 2 * math.pi - 1e-9))
def test_phase_continuity(a, phase):
    tg = TrajectoryGenerator(phase=phase)
    tg2, q = tg_step(tg, a)
    d = abs(tg2.phase - tg.phase)
    d = min(d, 2 * math.pi - d)
    assert d <= 2 * math.pi * 2.5 * 0.01 + 1e-12
    assert 0 <= tg2.phase < 2 * math.pi and np.all(np.isfinite(q))


def test_normalizer_closed_form():
    s = RunningStats.empty(2)
    s = observation_normalizer_update(s, [1.0, 2.0])
    assert s.mean.tolist() == [1.0, 2.0] and s.var.tolist() == [0.0, 0.0]
    s = observation_normalizer_update(s, [3.0, 6.0])
    np.testing.assert_allclose(s.mean, [2.0, 4.0])
    np.testing.assert_allclose(s.var, [1.0, 4.0])


def test_constant_stream_normalizes_to_zero():
    s = RunningStats.empty(3)
    for _ in range(10):
        s.push([1.0, -2.0, 5.0])
    assert np.all(normalize(s, [1.0, -2.0, 5.0]) == 0)


@given(st.lists(st.lists(st.floats(-100, 100), min_size=3, max_size=3), min_size=2, max_size=40),
       st.integers(1, 39))
def test_merge_matches_batch(rows, cut):
    x = np.array(rows)
    cut = min(cut, len(x) - 1)
    a, b, full = RunningStats.empty(3), RunningStats.empty(3), RunningStats.empty(3)
    for r in x[:cut]:
        a.push(r)
    for r in x[cut:]:
        b.push(r)
    for r in x:
        full.push(r)
    m = a.merge(b)
    np.testing.assert_allclose(m.mean, x.mean(0), atol=1e-9)
    np.testing.assert_allclose(m.var, x.var(0), rtol=1e-7, atol=1e-7)
    np.testing.assert_allclose(m.var, full.var, rtol=1e-7, atol=1e-7)


def test_policy_zero_weights_zero_action(rng):
    p = PolicyParams(60)
    assert p.num_params == 60 * 32 + 32 + 32 * 32 + 32 + 32 * 6 + 6
    assert np.all(policy_forward(p, rng.normal(size=60)) == 0)


def test_initial_policy_outputs_zero(rng):
    p = PolicyParams.initial(60, rng)
    assert np.all(policy_forward(p, rng.normal(size=60)) == 0)
    assert np.any(p.weights != 0)


def test_policy_output_clamp(rng):
    p = PolicyParams(10, hidden=(4, 4))
    p = p.with_weights(1000 * rng.normal(size=p.num_params))
    out = policy_forward(p, rng.normal(size=10))
    assert np.all(np.abs(out) == 1.0)


def test_policy_pure_and_shape_checked(rng):
    p = PolicyParams(10, hidden=(4, 4)).with_weights(rng.normal(size=PolicyParams(10, hidden=(4, 4)).num_params))
    o = rng.normal(size=10)
    assert np.array_equal(policy_forward(p, o), policy_forward(p, o))
    with pytest.raises(ConfigurationError):
        policy_forward(p, np.zeros(11))
    with pytest.raises(ConfigurationError):
        PolicyParams(10, weights=np.zeros(3))


def test_policy_roundtrip(tmp_path, rng):
    p = PolicyParams.initial(12, rng, hidden=(8, 8), meta={"note": "x"})
    for _ in range(5):
        p.normalizer.push(rng.normal(size=12))
    f = tmp_path / "p.json"
    p.save(f)
    q = PolicyParams.load(f)
    assert np.array_equal(q.weights, p.weights) and q.meta == p.meta
    assert np.array_equal(q.normalizer.m2, p.normalizer.m2)
    o = rng.normal(size=12)
    assert np.array_equal(policy_forward(p, o), policy_forward(q, o))


def test_policy_format_version_checked():
    d = PolicyParams(4, hidden=(2,)).to_dict()
    d["format_version"] = 99
    with pytest.raises(ConfigurationError):
        PolicyParams.from_dict(d)
