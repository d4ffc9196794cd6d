"""Valve-level building blocks: bang-bang regulation and coverage scripts.

The regulator realizes learned pressure targets on the on/off solenoid
hardware.  The coverage generator emits the open-loop data-collection
suite: per-actuator limit sweeps, a raster over the two modules' pressure
differences, pairwise co-pressurization, and a seeded random walk.  Valve
open durations are computed from the first-order fill/drain rates, so the
scripts are deterministic functions of (seed, plant config).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .plant import N_ACTUATORS, N_VALVES, PlantConfig, TrajectoryScript


@dataclass(frozen=True)
class RegulatorConfig:
    deadband: float = 0.5     # kPa
    update_rate: float = 10.0  # Hz

    def __post_init__(self):
        if self.deadband <= 0.0:
            raise ValueError("deadband must be > 0")


def regulate(target, current, rc: RegulatorConfig | None = None) -> tuple:
    """Bang-bang valve command driving each actuator toward its target.

    Per actuator: fill when more than a deadband below target, drain when
    more than a deadband above, otherwise keep both valves closed.  Never
    opens in and out of the same actuator together.
    """
    rc = rc or RegulatorConfig()
    target = [float(v) for v in target]
    current = [float(v) for v in current]
    if len(target) != N_ACTUATORS or len(current) != N_ACTUATORS:
        raise ValueError(f"expected {N_ACTUATORS} pressures")
    u = [0] * N_VALVES
    for k in range(N_ACTUATORS):
        err = target[k] - current[k]
        if err > rc.deadband:
            u[2 * k] = 1
        elif err < -rc.deadband:
            u[2 * k + 1] = 1
    return tuple(u)


# ---------------------------------------------------------------------------
# Coverage scripts


class _ScriptBuilder:
    """Open-loop schedule builder tracking estimated actuator pressures.

    Fill/drain durations come from the first-order flow model; estimates
    ignore the bend-rate coupling, which only shifts levels by ~1 kPa and
    does not matter for coverage purposes.
    """

    def __init__(self, cfg: PlantConfig):
        self.cfg = cfg
        self.t = 0.0
        self.p = [cfg.p_ambient] * N_ACTUATORS
        self.actions: list[tuple[float, int, int]] = []  # (time, valve, bit)

    def _fill_time(self, p0: float, target: float) -> float:
        return math.log((self.cfg.p_pump - p0) /
                        (self.cfg.p_pump - target)) / self.cfg.fill_rate

    def _drain_time(self, p0: float, target: float) -> float:
        return math.log((p0 - self.cfg.p_ambient) /
                        (target - self.cfg.p_ambient)) / self.cfg.drain_rate

    def move(self, targets: dict[int, float], settle: float = 0.0) -> None:
        """Drive actuators to target kPa simultaneously, then settle.

        Each valve closes at its own computed time; the clock advances to
        the slowest actuator plus the settle margin.
        """
        end = self.t
        for k, target in targets.items():
            p0 = self.p[k]
            target = min(max(target, self.cfg.p_ambient + 0.4),
                         self.cfg.p_pump - 0.5)
            if abs(target - p0) < 1e-9:
                continue
            if target > p0:
                dur = self._fill_time(p0, target)
                valve = 2 * k
            else:
                dur = self._drain_time(p0, target)
                valve = 2 * k + 1
            self.actions.append((self.t, valve, 1))
            self.actions.append((self.t + dur, valve, 0))
            self.p[k] = target
            end = max(end, self.t + dur)
        self.t = end + settle

    def hold(self, duration: float) -> None:
        self.t += duration

    def set_all(self, bits) -> None:
        for v in range(N_VALVES):
            self.actions.append((self.t, v, int(bits[v])))

    def build(self) -> TrajectoryScript:
        """Merge valve actions into a strictly increasing event list.

        An all-closed end marker at the current time defines the script
        duration.
        """
        self.set_all([0] * N_VALVES)
        state = [0] * N_VALVES
        grouped: dict[float, list[tuple[int, int]]] = {}
        for t, valve, bit in self.actions:
            grouped.setdefault(round(t, 2), []).append((valve, bit))
        events = []
        for t in sorted(grouped):
            for valve, bit in grouped[t]:
                state[valve] = bit
            events.append((t, tuple(state)))
        return TrajectoryScript(events=tuple(events))


def _raster(cfg: PlantConfig, levels: list[float]) -> TrajectoryScript:
    """Module-1 staircase with a full module-2 crossing in every hold.

    Module 1 steps monotonically through the given pressure-difference
    levels (one actuator filled stepwise, the other untouched), so the
    module-1 hysteresis branch matches a from-rest monotone approach.
    Module 2 crosses its whole difference range once per level, always
    with a single active actuator and the idle side parked near ambient;
    that keeps the shape-to-pressure relation nearly unique, like the
    one-actuator-at-a-time runs of the reference protocol.
    """
    b = _ScriptBuilder(cfg)
    positive = levels[0] >= 0.0
    act1 = 1 if positive else 0      # stepped module-1 actuator
    lo = cfg.p_ambient + 0.5
    hi = cfg.p_pump - 1.5            # 96.5 .. 118.5 at defaults
    m2_left, m2_right = (2, 3)
    b.move({m2_left: hi}, settle=3.0)  # start module 2 at full negative diff
    direction = 1
    for lvl in levels:
        b.move({act1: cfg.p_ambient + abs(lvl)}, settle=3.0)
        # one-sided crossing: drain the active actuator home, then fill the
        # opposite one, with brief anchor pauses
        src, dst = (m2_left, m2_right) if direction > 0 else (m2_right, m2_left)
        b.move({src: lo + (hi - lo) * 0.55}, settle=6.5)
        b.move({src: lo + (hi - lo) * 0.22}, settle=6.5)
        b.move({src: lo}, settle=6.5)
        b.move({dst: lo + (hi - lo) * 0.35}, settle=6.5)
        b.move({dst: lo + (hi - lo) * 0.68}, settle=6.5)
        b.move({dst: hi}, settle=6.5)
        direction = -direction
    return b.build()


def _limit_cycles(cfg: PlantConfig, acts: tuple[int, int],
                  other_acts: tuple[int, int]) -> TrajectoryScript:
    """Bring each of two actuators to its pressure limit and back, in a few
    configurations of the other module, plus one full crossing of the other
    module with this one at rest."""
    b = _ScriptBuilder(cfg)
    hi = cfg.p_pump - 0.3  # ~119.7, above the 119 kPa coverage landmark
    lo = cfg.p_ambient + 1.0
    # full crossing of the other module while this module rests (diff ~ 0),
    # one active actuator at a time
    b.move({other_acts[0]: cfg.p_pump - 1.5}, settle=3.0)
    b.move({other_acts[0]: lo}, settle=3.0)
    b.move({other_acts[1]: cfg.p_pump - 1.5}, settle=3.0)
    b.move({other_acts[1]: lo}, settle=3.0)
    for config_level in (None, 110.0):
        if config_level is not None:
            b.move({other_acts[1]: config_level}, settle=3.0)
        for k in acts:
            b.move({k: hi}, settle=2.5)
            b.hold(62.0)
            b.move({k: lo}, settle=2.5)
            b.hold(8.0)
    return b.build()


def _pairwise(cfg: PlantConfig) -> TrajectoryScript:
    """Co-pressurize actuator pairs toward the limit, hold, release.

    Cross-module pairs keep each module's idle actuator at baseline (the
    same policy as the rasters); one brief same-module segment probes the
    straight-shape/high-pressure corner without dominating the data.
    """
    b = _ScriptBuilder(cfg)
    hi = cfg.p_pump - 1.0
    mid = 110.0
    lo = cfg.p_ambient + 1.0
    cross = [((0, 3), hi), ((1, 2), hi), ((1, 3), hi), ((0, 2), hi),
             ((0, 3), mid), ((1, 2), mid), ((0, 2), mid)]
    for (a, c), level in cross:
        b.move({a: level, c: level}, settle=3.0)
        b.hold(28.0)
        b.move({a: lo, c: lo}, settle=3.0)
        b.hold(10.0)
    b.move({0: 112.0, 1: 112.0}, settle=3.0)  # same-module corner, module 1
    b.hold(6.0)
    b.move({0: lo, 1: lo}, settle=3.0)
    return b.build()


def _random_walk(cfg: PlantConfig, seed: int,
                 duration: float = 490.0) -> TrajectoryScript:
    """Seeded random ladders over per-module difference targets.

    Random target levels are visited in ascending order per module half
    (right side first, then left), with random dwells and interleaving, so
    the schedule is randomized while each module still approaches every
    state monotonically from rest, matching the rest of the suite.
    """
    rng = np.random.default_rng(seed)
    b = _ScriptBuilder(cfg)
    lo = cfg.p_ambient + 0.5
    active = [None, None]  # actuator currently holding its module's level
    while b.t < duration:
        module = int(rng.integers(0, 2))
        side = int(rng.integers(0, 2))
        act = 2 * module + side
        if active[module] is not None and active[module] != act:
            b.move({active[module]: lo}, settle=float(rng.uniform(0.5, 2.0)))
        elif active[module] == act:
            # fresh ladder on the same side: drain back home first
            b.move({act: lo}, settle=float(rng.uniform(0.5, 2.0)))
        levels = np.sort(rng.uniform(2.0, 22.0, int(rng.integers(3, 6))))
        for lvl in levels:
            if b.t >= duration:
                break
            b.move({act: cfg.p_ambient + float(lvl)},
                   settle=float(rng.uniform(0.5, 2.0)))
            b.hold(float(rng.uniform(2.0, 6.0)))
        active[module] = act
    return b.build()


def make_coverage_scripts(seed: int = 0,
                          cfg: PlantConfig | None = None
                          ) -> dict[str, TrajectoryScript]:
    """Deterministic data-collection suite totaling 50-60 minutes.

    Every run lasts 8-17 minutes; together they take each actuator to its
    pressure limit in several configurations and cover the per-module
    pressure-difference grid.
    """
    cfg = cfg or PlantConfig()
    pos_levels = [2.0 + 2.0 * i for i in range(11)]   # +2 .. +22 kPa
    neg_levels = [-v for v in pos_levels]
    scripts = {
        "raster_pos": _raster(cfg, pos_levels),
        "raster_neg": _raster(cfg, neg_levels),
        "limits_m1": _limit_cycles(cfg, (0, 1), (2, 3)),
        "limits_m2": _limit_cycles(cfg, (2, 3), (0, 1)),
        "pairwise": _pairwise(cfg),
        "random_walk": _random_walk(cfg, seed),
    }
    return scripts
