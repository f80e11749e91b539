import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mentor_loco.errors import ConfigurationError
from mentor_loco.terrain import CourseSpec, Hurdle, height_at, sample_course


def test_heights_default_gap():
    c = CourseSpec(gap_x=2.0, gap_size=0.9)
    assert height_at(1.0, c) == 0.0
    assert height_at(2.4, c) == -1.0
    assert height_at(3.5, c) == 0.0
    # edges: gap covers [g_x, g_x + g_s)
    assert height_at(2.0, c) == -1.0
    assert height_at(2.9, c) == 0.0


def test_hurdle_centered_in_gap():
    c = CourseSpec(gap_x=2.0, gap_size=0.45, hurdle=Hurdle(0.2, 0.05))
    assert height_at(2.225, c) == pytest.approx(0.2)
    assert height_at(2.1, c) == -1.0
    assert height_at(2.3, c) == -1.0
    assert height_at(2.26, c) == -1.0


def test_vectorized_query():
    c = CourseSpec()
    h = height_at(np.array([0.0, 2.5, 4.0]), c)
    assert h.tolist() == [0.0, -1.0, 0.0]


def test_no_gap_is_flat():
    c = CourseSpec(gap_size=0.0)
    edges, heights = c.profile()
    assert edges.size == 0 and heights.tolist() == [0.0]


@pytest.mark.parametrize("kw", [dict(gap_x=0.0), dict(gap_size=-0.1), dict(gap_x=5.5, gap_size=0.6),
                                dict(gap_depth=0.0), dict(hurdle=Hurdle(0.2, 0.0)),
                                dict(hurdle=Hurdle(-0.1, 0.05))])
def test_invalid_course(kw):
    with pytest.raises(ConfigurationError):
        CourseSpec(**kw)


def test_json_roundtrip():
    c = CourseSpec(gap_x=2.3, gap_size=0.45, hurdle=Hurdle(0.2, 0.05))
    assert CourseSpec.from_json(c.to_json()) == c


def test_sample_degenerate_range_is_fixed(rng):
    for _ in range(20):
        c = sample_course(rng, (0.3, 0.9), (2.0, 2.0))
        assert c.gap_x == 2.0


def test_sample_gap_size_mean():
    rng = np.random.default_rng(7)
    g = [sample_course(rng, (0.3, 0.9), (2.0, 3.0)).gap_size for _ in range(10_000)]
    assert abs(np.mean(g) - 0.6) < 0.02


def test_sample_deterministic():
    a = sample_course(np.random.default_rng(3), (0.3, 0.9), (2.0, 3.0))
    b = sample_course(np.random.default_rng(3), (0.3, 0.9), (2.0, 3.0))
    assert a == b


@pytest.mark.parametrize("gs, gx", [((0.9, 0.3), (2.0, 2.0)), ((0.3, 0.9), (3.0, 2.0)),
                                    ((float("nan"), 0.9), (2.0, 2.0))])
def test_sample_invalid_range(gs, gx, rng):
    with pytest.raises(ConfigurationError):
        sample_course(rng, gs, gx)


@given(st.floats(0.0, 1.5), st.floats(0.5, 3.5), st.integers(0, 2**32 - 1),
       st.booleans())
def test_sampled_specs_valid_and_piecewise_constant(gs_hi, gx_hi, seed, hurdle):
    rng = np.random.default_rng(seed)
    c = sample_course(rng, (0.0, gs_hi), (0.5, gx_hi), Hurdle() if hurdle else None)
    assert 0 < c.gap_x and c.gap_end < c.goal_x
    edges, heights = c.profile()
    assert np.all(np.diff(edges) > 0)
    # constant between consecutive breakpoints
    bounds = np.concatenate(([-1.0], edges, [7.0]))
    for i, (a, b) in enumerate(zip(bounds[:-1], bounds[1:])):
        probes = a + (b - a) * np.array([0.1, 0.5, 0.9])
        assert np.all(height_at(probes, c) == heights[i])
    assert set(np.unique(height_at(np.linspace(-1, 7, 2000), c))) <= set(heights.tolist())
