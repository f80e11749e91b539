import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mentor_loco.errors import ConfigurationError
from mentor_loco.mentor import (MentorParams, TargetState, checkpoint_position, goal_observation,
                                initial_target, sample_mentor, update_target)
from mentor_loco.terrain import CourseSpec

COURSE = CourseSpec(gap_x=2.0, gap_size=0.9)
M = MentorParams(0.5, 0.1, 0.2, 0.05, 0.3)
coord = st.floats(-3, 3)


def test_checkpoint_examples():
    cx, cz = checkpoint_position(COURSE, M)
    assert cx == pytest.approx(2.55, abs=1e-12)
    assert cz == pytest.approx(0.53, abs=1e-12)
    assert checkpoint_position(COURSE, MentorParams(0, 0, 0, 0, 0.1)) == (2.0, 0.3)


@given(st.floats(0.0, 1.5), st.floats(0.0, 1.5), st.floats(-1, 1), st.floats(-1, 1),
       st.floats(-1, 1), st.floats(-1, 1))
def test_checkpoint_affine_in_gap_size(g1, g2, m1, m2, m3, m4):
    m = MentorParams(m1, m2, m3, m4, 0.3)
    a = checkpoint_position(CourseSpec(gap_size=g1), m)
    b = checkpoint_position(CourseSpec(gap_size=g2), m)
    assert b[0] - a[0] == pytest.approx((g2 - g1) * m1, abs=1e-12)
    assert b[1] - a[1] == pytest.approx((g2 - g1) * m3, abs=1e-12)


def test_radius_must_be_positive():
    with pytest.raises(ConfigurationError):
        MentorParams(m5=0.0)


def test_collect_at_checkpoint():
    t = initial_target((0.0, 0.3), M, COURSE)
    t2 = update_target(t, (2.55, 0.53), M, COURSE)
    assert t2.collected and (t2.x, t2.z) == (6.0, 0.3)
    assert t2.prev_distance == pytest.approx(math.hypot(6.0 - 2.55, 0.3 - 0.53))


def test_not_collected_outside_radius():
    t = initial_target((0.0, 0.3), M, COURSE)
    t2 = update_target(t, (2.55 + 0.31, 0.53), M, COURSE)
    assert not t2.collected
    assert t2.prev_distance == pytest.approx(0.31)


@given(st.lists(st.tuples(coord, coord), min_size=1, max_size=30))
def test_collection_latches(path):
    t = initial_target((0.0, 0.3), M, COURSE)
    t = update_target(t, (2.55, 0.53), M, COURSE)
    for p in path:
        t = update_target(t, p, M, COURSE)
        assert t.collected and (t.x, t.z) == (6.0, 0.3)


def test_goal_observation_examples():
    assert goal_observation((1, 1), 0.0, TargetState(1, 1, False, 0)).tolist() == [0, 0, 0]
    assert goal_observation((1, 0.3), 0.0, TargetState(4, 0.3, False, 0)).tolist() == [3, 0, 0]
    g = goal_observation((2, 0.3), 0.0, TargetState(2, 0.8, False, 0))
    np.testing.assert_allclose(g, [0.5, 0, 0.5], atol=1e-12)


@given(coord, coord, coord, coord)
def test_goal_distance_dominates_height(x, z, tx, tz):
    g = goal_observation((x, z), 0.0, TargetState(tx, tz, False, 0))
    assert g[0] >= abs(g[2]) - 1e-12 and g[1] == 0


def test_sample_mentor_degenerate():
    m = sample_mentor(np.random.default_rng(0), [(1, 1), (2, 2), (3, 3), (4, 4), (0.2, 0.2)])
    assert m.as_tuple() == (1, 2, 3, 4, 0.2)


def test_sample_mentor_radius_mean_and_determinism():
    ranges = [(0, 1.5), (-0.5, 0.5), (0, 1.5), (-0.5, 0.5), (0.1, 0.5)]
    rng = np.random.default_rng(1)
    r = [sample_mentor(rng, ranges).m5 for _ in range(10_000)]
    assert abs(np.mean(r) - 0.3) < 0.01
    a = sample_mentor(np.random.default_rng(9), ranges)
    assert a == sample_mentor(np.random.default_rng(9), ranges)


def test_sample_mentor_bad_ranges():
    with pytest.raises(ConfigurationError):
        sample_mentor(np.random.default_rng(0), [(0, 1)] * 4)
    with pytest.raises(ConfigurationError):
        sample_mentor(np.random.default_rng(0), [(0, 1)] * 4 + [(0.0, 0.5)])
