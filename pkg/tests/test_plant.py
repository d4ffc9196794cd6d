"""Tests for the valve/pressure/hysteresis simulator."""

import math

import numpy as np
import pytest

from hydrarm.geometry import THETA_MAX
from hydrarm.plant import (P_MAX, P_MIN, ArmState, PlantConfig,
                           TrajectoryScript, initial_state, load_script,
                           observe, run_scripted, save_script, step)

QUIET = PlantConfig(pressure_noise=0.0, marker_noise=0.0)

U_OFF = (0,) * 8
# Fig. 5 style protocol: both right actuators filled, then drained.
U_RIGHT_IN = (0, 0, 1, 0, 0, 0, 1, 0)
U_RIGHT_OUT = (0, 0, 0, 1, 0, 0, 0, 1)
FIG5_SCRIPT = TrajectoryScript(events=(
    (0.0, U_RIGHT_IN), (31.0, U_RIGHT_OUT), (73.0, U_OFF)))


def run_fig5(cfg=QUIET, duration=78.0):
    return run_scripted(cfg, FIG5_SCRIPT, duration=duration)


class TestStep:
    def test_closed_valves_stationary(self):
        s0 = initial_state(QUIET)
        s1 = step(s0, U_OFF, QUIET)
        assert np.array_equal(s1.p, s0.p)
        assert np.array_equal(s1.theta, s0.theta)
        assert s1.t == pytest.approx(QUIET.dt)

    def test_fill_step_oracle(self):
        """Forward Euler by hand: one step moves P by fill_rate*(pump-P)*dt.

        At dt = 0.1 that hand rule gives 100 + 0.15*(120-100)*0.1 = 100.30;
        the config caps dt at 0.02, so assert the exact single-step value at
        dt = 0.01 and the composed 10-step value against the same recursion.
        """
        cfg = PlantConfig(dt=0.01, pressure_noise=0.0, marker_noise=0.0)
        s = ArmState(t=0.0, p=np.array([96.0, 100.0, 96.0, 96.0]),
                     u=U_OFF, theta=np.zeros(2), z=np.zeros(2))
        u = (0, 0, 1, 0, 0, 0, 0, 0)
        s1 = step(s, u, cfg)
        assert s1.p[1] == pytest.approx(100.0 + 0.15 * 20.0 * 0.01, abs=1e-12)
        expected = 100.0
        for _ in range(10):
            expected += cfg.fill_rate * (cfg.p_pump - expected) * cfg.dt
            s = step(s, u, cfg)
        assert s.p[1] == pytest.approx(expected, abs=1e-12)

    def test_deadband_onset(self):
        """theta_1 stays zero until P_diff first exceeds the 3.7 kPa band."""
        cfg = QUIET
        s = initial_state(cfg)
        u = (0, 0, 1, 0, 0, 0, 0, 0)
        crossed = False
        for _ in range(3000):
            s = step(s, u, cfg)
            pdiff = s.p[1] - s.p[0]
            if not crossed and pdiff <= cfg.play_width[0]:
                assert s.theta[0] == 0.0
            if pdiff > cfg.play_width[0]:
                crossed = True
        assert crossed
        assert s.theta[0] > 0.0

    def test_rejects_nonfinite_state(self):
        s = initial_state(QUIET)
        bad = ArmState(t=0.0, p=np.array([math.nan, 96, 96, 96]),
                       u=s.u, theta=s.theta, z=s.z)
        with pytest.raises(ValueError):
            step(bad, U_OFF, QUIET)

    def test_rejects_bad_valves(self):
        with pytest.raises(ValueError):
            step(initial_state(QUIET), (0, 1), QUIET)

    def test_pure_function(self):
        s0 = initial_state(QUIET)
        u = (1, 0, 0, 1, 1, 0, 0, 0)
        a = step(s0, u, QUIET)
        b = step(s0, u, QUIET)
        assert np.array_equal(a.p, b.p)
        assert np.array_equal(a.theta, b.theta)
        assert np.array_equal(a.z, b.z)
        # input state untouched
        assert np.array_equal(s0.p, initial_state(QUIET).p)


class TestObserve:
    def test_noise_free_is_exact(self):
        s = initial_state(QUIET)
        p, markers = observe(s, QUIET, np.random.default_rng(1))
        assert np.array_equal(p, s.p)
        assert markers[0].x == pytest.approx(0.0)

    def test_seeded_determinism(self):
        cfg = PlantConfig()
        s = initial_state(cfg)
        p1, m1 = observe(s, cfg, np.random.default_rng(cfg.seed))
        p2, m2 = observe(s, cfg, np.random.default_rng(cfg.seed))
        assert np.array_equal(p1, p2)
        assert m1 == m2

    def test_noise_scale(self):
        """Sample std of the injected pressure noise matches sigma."""
        cfg = PlantConfig(pressure_noise=0.1, marker_noise=0.0)
        s = initial_state(cfg)
        rng = np.random.default_rng(7)
        devs = np.concatenate(
            [observe(s, cfg, rng)[0] - s.p for _ in range(2500)])
        assert 0.09 < devs.std() < 0.11


class TestRunScripted:
    def test_empty_script_row_count(self):
        log = run_scripted(QUIET, TrajectoryScript(), duration=10.0)
        assert len(log) == 100
        assert all(np.array_equal(r.p, log[0].p) for r in log)
        assert log[0].t == 0.0
        assert log[-1].t == pytest.approx(9.9)

    def test_rejects_bad_scripts(self):
        with pytest.raises(ValueError):
            run_scripted(QUIET, TrajectoryScript(), duration=0.0)
        bad = TrajectoryScript(events=((5.0, U_OFF), (2.0, U_OFF)))
        with pytest.raises(ValueError):
            run_scripted(QUIET, bad, duration=10.0)

    def test_determinism(self):
        cfg = PlantConfig(seed=3)
        a = run_scripted(cfg, FIG5_SCRIPT, noise=True)
        b = run_scripted(cfg, FIG5_SCRIPT, noise=True)
        for ra, rb in zip(a, b):
            assert ra.t == rb.t and ra.u == rb.u
            assert np.array_equal(ra.p, rb.p)
            assert ra.markers == rb.markers

    def test_script_file_round_trip(self, tmp_path):
        path = tmp_path / "fig5.json"
        save_script(FIG5_SCRIPT, path)
        loaded = load_script(path)
        assert loaded.events == FIG5_SCRIPT.events
        assert loaded.end_time() == 73.0


class TestHysteresisLandmarks:
    def test_branches_are_distinct(self):
        """Pressurization and depressurization trace different (pd, theta)."""
        log = run_fig5()
        pd1 = np.array([r.p[1] - r.p[0] for r in log])
        th1 = np.array([r.theta[0] for r in log])
        up = {}
        for x, y in zip(pd1[:311], th1[:311]):
            up[round(x, 1)] = y
        gaps = [abs(y - up[round(x, 1)])
                for x, y in zip(pd1[311:], th1[311:]) if round(x, 1) in up]
        assert max(gaps) > 0.05

    def test_loop_areas(self):
        log = run_fig5()

        def loop_area(x, y):
            return 0.5 * abs(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

        pd1 = np.array([r.p[1] - r.p[0] for r in log])
        th1 = np.array([r.theta[0] for r in log])
        pd2 = np.array([r.p[3] - r.p[2] for r in log])
        th2 = np.array([r.theta[1] for r in log])
        a1 = loop_area(pd1, th1)
        a2 = loop_area(pd2, th2)
        assert a1 > 0.0
        assert a2 > 0.0
        assert a1 > a2

    def test_post_cycle_coupling(self):
        """After the full cycle the left module-1 pressure exceeds the right."""
        log = run_fig5()
        final_pd1 = log[-1].p[1] - log[-1].p[0]
        assert -4.0 <= final_pd1 <= -1.0


class TestInvariants:
    def test_pressure_bounds_and_play_containment(self):
        cfg = QUIET
        rng = np.random.default_rng(11)
        s = initial_state(cfg)
        for i in range(4000):
            if i % 97 == 0:
                u = tuple(int(v) for v in rng.integers(0, 2, 8))
            s = step(s, u, cfg)
            assert np.all(s.p >= P_MIN - 1e-12)
            assert np.all(s.p <= P_MAX + 1e-12)
            for m in range(2):
                pdiff = s.p[2 * m + 1] - s.p[2 * m]
                assert abs(s.z[m] - pdiff) <= cfg.play_width[m] + 1e-12
            assert np.all(np.abs(s.theta) <= THETA_MAX + 1e-12)

    def test_monotone_fill(self):
        cfg = QUIET
        s = initial_state(cfg)
        u = (1, 0, 0, 0, 0, 0, 0, 0)
        prev = s.p[0]
        for _ in range(8000):
            s = step(s, u, cfg)
            assert s.p[0] >= prev - 1e-12
            prev = s.p[0]
        assert prev == pytest.approx(min(cfg.p_pump, P_MAX), abs=0.05)
