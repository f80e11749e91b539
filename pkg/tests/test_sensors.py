import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mentor_loco.errors import ConfigurationError
from mentor_loco.physics import RobotState, step
from mentor_loco.sensors import LidarSpec, encoder_read, imu_read, lidar_scan
from mentor_loco.terrain import CourseSpec

FIVE = LidarSpec(ray_count=5)  # 0, -45, -90, -135, -180 degrees
FLAT = CourseSpec(gap_size=0.0)


def test_default_fan():
    a = LidarSpec().angles()
    assert a.size == 40 and a[0] == 0.0 and a[-1] == pytest.approx(-math.pi)


def test_flat_ground_readings():
    r = lidar_scan(RobotState.make(x=0.5, z=0.3), FIVE, FLAT)
    assert r[2] == pytest.approx(0.06, abs=1e-12)
    assert r[1] == pytest.approx(0.3 * math.sqrt(2) / 5.0, abs=1e-12)
    assert r[3] == pytest.approx(0.3 * math.sqrt(2) / 5.0, abs=1e-12)
    assert r[0] == 1.0 and r[4] == 1.0


def test_pitch_rotates_rays():
    r = lidar_scan(RobotState.make(x=0.5, z=0.3, pitch=0.1), FIVE, FLAT)
    assert r[2] == pytest.approx(0.3 / math.cos(0.1) / 5.0, abs=1e-12)


def test_gap_floor_and_wall():
    c = CourseSpec(gap_x=2.0, gap_size=0.9)
    r = lidar_scan(RobotState.make(x=2.45, z=0.3), FIVE, c)
    assert r[2] == pytest.approx(1.3 / 5.0, abs=1e-12)
    # 45 degrees forward-down from x=2.45 meets the far wall at x=2.9, 0.45 m lower
    assert r[1] == pytest.approx(0.45 * math.sqrt(2) / 5.0, abs=1e-12)


def test_max_range_clamp():
    r = lidar_scan(RobotState.make(z=6.0), FIVE, FLAT)
    assert np.all(r == 1.0)


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        LidarSpec(ray_count=0)
    with pytest.raises(ConfigurationError):
        LidarSpec(max_range=0.0)


@given(st.floats(-1, 7), st.floats(0.05, 2.0), st.floats(-1.0, 1.0))
def test_readings_in_unit_interval(x, z, pitch):
    r = lidar_scan(RobotState.make(x=x, z=z, pitch=pitch), LidarSpec(),
                   CourseSpec(hurdle={"height": 0.2, "width": 0.05}))
    assert np.all((r >= 0) & (r <= 1))


@given(st.floats(0.05, 2.0), st.floats(0.01, 2.0))
def test_down_ray_monotone_in_height(z, dz):
    lo = lidar_scan(RobotState.make(z=z), FIVE, FLAT)[2]
    hi = lidar_scan(RobotState.make(z=z + dz), FIVE, FLAT)[2]
    assert hi > lo or hi == 1.0


@given(st.floats(0.5, 2.0), st.floats(-1.0, 1.0), st.floats(-0.4, 0.4))
def test_scan_translation_equivariant(x, dx, pitch):
    c0 = CourseSpec(gap_x=2.0, gap_size=0.6)
    c1 = CourseSpec(gap_x=2.0 + dx, gap_size=0.6)
    a = lidar_scan(RobotState.make(x=x, z=0.3, pitch=pitch), LidarSpec(), c0)
    b = lidar_scan(RobotState.make(x=x + dx, z=0.3, pitch=pitch), LidarSpec(), c1)
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_imu():
    assert imu_read(RobotState.make()).tolist() == [0, 0, 0, 0, 0]
    assert imu_read(RobotState.make(pitch=0.1, pitch_rate=-0.5)).tolist() == [0, 0.1, -0.5, 0, 0]


@given(st.floats(-1, 1), st.floats(-5, 5))
def test_imu_planar_slots_zero(p, w):
    v = imu_read(RobotState.make(pitch=p, pitch_rate=w))
    assert v[0] == 0 and v[3] == 0 and v[4] == 0


def test_encoder():
    assert encoder_read(RobotState.make()).tolist() == [0, 0, 0, 0]
    s = RobotState.make(z=1.0, joint_vel=(50.0, 0, 0, 0))
    nxt = step(s, np.zeros(4), None)
    assert encoder_read(nxt)[0] - encoder_read(s)[0] == pytest.approx(0.05, abs=2e-3)
    assert np.array_equal(encoder_read(s), encoder_read(s))
