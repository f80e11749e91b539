import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mentor_loco.analysis import (EpisodeLog, analyze_log, cost_of_transport, flight_phases,
                                  joint_power, torque_feasible)
from mentor_loco.errors import ConfigurationError


def synthetic(n=300, v=1.0, tau=(0, 0, 0, 0), qd=(0, 0, 0, 0), air=None):
    t = np.round(np.arange(n) * 0.01, 10)
    contacts = np.ones((n, 2), bool)
    if air is not None:
        contacts[air] = False
    return EpisodeLog(
        t=t, com=np.c_[v * t, np.full(n, 0.3)], com_vel=np.c_[np.full(n, v), np.zeros(n)],
        pitch=np.zeros(n), contacts=contacts, q=np.zeros((n, 4)),
        qd=np.tile(qd, (n, 1)).astype(float), tau=np.tile(tau, (n, 1)).astype(float),
        power=np.zeros(n), reward=np.zeros(n), events=[None] * n)


def test_cot_example():
    # 120 W over two motors per joint: 60 W of per-motor torque times speed
    log = synthetic(tau=(6.0, 0, 0, 0), qd=(10.0, 0, 0, 0))
    cot = cost_of_transport(log, 12.0)
    assert np.allclose(cot, 120.0 / (12 * 9.81 * 1.0), atol=1e-12, rtol=0)
    assert cot[0] == pytest.approx(1.019, abs=5e-4)


def test_cot_missing_below_velocity_floor():
    log = synthetic(v=0.0, tau=(6.0, 0, 0, 0), qd=(10.0, 0, 0, 0))
    assert np.all(np.isnan(cost_of_transport(log, 12.0)))


def test_cot_zero_in_flight():
    log = synthetic(v=2.0, air=slice(100, 120))
    assert np.all(cost_of_transport(log, 12.0)[100:120] == 0.0)


def test_power_conventions():
    log = synthetic(tau=(5.0, -5.0, 0, 0), qd=(1.0, 2.0, 0, 0))
    assert joint_power(log, 2, "positive")[0] == pytest.approx(10.0)
    assert joint_power(log, 2, "signed")[0] == pytest.approx(-10.0)
    with pytest.raises(ConfigurationError):
        joint_power(log, 2, "electrical")


@given(st.lists(st.floats(-12, 12), min_size=4, max_size=4),
       st.lists(st.floats(-40, 40), min_size=4, max_size=4), st.floats(0.05, 5))
def test_cot_nonnegative(tau, qd, v):
    cot = cost_of_transport(synthetic(n=5, v=v, tau=tau, qd=qd), 12.0)
    assert np.all(cot >= 0)


def test_cot_window_averages():
    log = synthetic(n=10, tau=(6.0, 0, 0, 0), qd=(10.0, 0, 0, 0))
    log.qd[::2, 0] = 0.0
    cot = cost_of_transport(log, 12.0, window=2)
    assert cot[5] == pytest.approx(60.0 / (12 * 9.81))


def test_flight_phases_examples():
    assert flight_phases(synthetic()) == []
    log = synthetic(air=slice(100, 121))
    assert flight_phases(log) == [(1.0, 1.2)]


@given(st.lists(st.booleans(), min_size=1, max_size=80))
def test_flight_phases_maximal_sorted(pattern):
    air = np.array(pattern)
    log = synthetic(n=len(air))
    log.contacts[air] = False
    phases = flight_phases(log)
    assert phases == sorted(phases)
    covered = np.zeros(len(air), bool)
    for a, b in phases:
        i, j = round(a / 0.01), round(b / 0.01)
        assert air[i:j + 1].all()
        assert i == 0 or not air[i - 1]
        assert j == len(air) - 1 or not air[j + 1]
        covered[i:j + 1] = True
    assert np.array_equal(covered, air)


def test_torque_feasibility_flag(tmp_path):
    log = synthetic(tau=(13.0, 0, 0, 0))
    assert not torque_feasible(log)
    s = analyze_log(log, tmp_path, 12.0)
    assert s["peak_torque"] == 13.0 and not s["torque_feasible"]
    assert {p.name for p in tmp_path.iterdir()} >= {"cot.csv", "torque.csv", "flight.csv"}


def test_log_roundtrip_and_validation(tmp_path):
    log = synthetic(n=20, air=slice(5, 8))
    f = tmp_path / "ep.jsonl"
    log.save(f)
    back = EpisodeLog.load(f)
    assert flight_phases(back) == flight_phases(log)
    with pytest.raises(ConfigurationError):
        synthetic(n=3).__class__(**{**synthetic(n=3).__dict__, "t": np.array([0, 0.02, 0.03])})
    with pytest.raises(ConfigurationError):
        EpisodeLog.from_records([])


def test_analysis_is_pure(tmp_path):
    log = synthetic(n=50, tau=(3, 1, 0, 0), qd=(2, 2, 0, 0), air=slice(10, 20))
    a = analyze_log(log, tmp_path / "a", 12.0)
    b = analyze_log(log, tmp_path / "b", 12.0)
    assert a == b
    assert (tmp_path / "a" / "cot.csv").read_text() == (tmp_path / "b" / "cot.csv").read_text()
