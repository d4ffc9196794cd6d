"""Fixed-step simulator of the valve-driven hydraulic arm.

Four antagonistic bladder actuators (two per module) are filled from a pump
and drained to ambient through binary solenoid valves.  Each module bends
according to its left/right pressure difference routed through a play
(backlash) operator and a saturation, which reproduces the observed
dead-band hysteresis.  All dynamics are explicit Euler at a fixed dt and
fully deterministic; sensor noise is injected only at observation time.

Valve vector ordering (module, side; side 1 = left, 2 = right):
    [in(1,1), out(1,1), in(1,2), out(1,2), in(2,1), out(2,1), in(2,2), out(2,2)]
Pressure vector ordering: [P11, P12, P21, P22] in kPa.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import THETA_MAX, ArmGeometry, MarkerTuple, marker_positions

P_MIN = 95.0   # kPa, sensor/normalization floor
P_MAX = 121.0  # kPa, sensor/normalization ceiling

N_ACTUATORS = 4
N_VALVES = 8


@dataclass(frozen=True)
class PlantConfig:
    """Simulator parameters.

    p_ambient / p_pump:
        Drain and supply pressures in kPa.  Actuators relax toward ambient
        when the out-valve is open and fill toward pump pressure when the
        in-valve is open.

    fill_rate / drain_rate:
        First-order rates in 1/s.  Draining relies on actuator elasticity
        and is slower than filling.

    play_width:
        Half-width in kPa of the per-module play (backlash) band.  Module 1
        must drag module 2 along, so its dead-band is much wider.

    z_scale / bend_ceiling:
        The play output feeds theta_target = bend_ceiling * tanh(z / z_scale).
        The ceiling sits above the geometric bend limit on purpose: the
        actuators run out of differential pressure well before the arm
        reaches its mechanical limit, so the curve stays in its gentle
        region over the whole reachable range and theta never clamps.

    response_time:
        Per-module first-order time constants in s for the bend angle.

    coupling:
        kPa*s/rad gain transferring bend-rate into the pressure of an
        actuator whose valves are both closed (the shrinking antagonist
        squeezes the trapped water column).

    coupling_release:
        Fraction of the coupling gain acting when the squeeze relaxes.
        Squeezing is a contact force; releasing it only weakly lowers the
        trapped pressure, which is what leaves the passive actuator above
        its neighbour after a full pressurize/depressurize cycle.

    dt:
        Integrator step in s.  Must satisfy dt <= 0.02 for stability at the
        chosen rates.
    """

    p_ambient: float = 96.0
    p_pump: float = 120.0
    fill_rate: float = 0.30
    drain_rate: float = 0.20
    play_width: tuple[float, float] = (3.7, 0.4)
    z_scale: float = 30.0
    bend_ceiling: float = 0.55
    response_time: tuple[float, float] = (1.6, 0.8)
    coupling: float = 11.0
    coupling_release: float = 0.25
    dt: float = 0.01
    pressure_noise: float = 0.1    # kPa, observation only
    marker_noise: float = 0.0005   # m, observation only
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0.0 or self.dt > 0.02:
            raise ValueError("dt must be in (0, 0.02]")
        if self.fill_rate <= 0.0 or self.drain_rate <= 0.0:
            raise ValueError("flow rates must be > 0")
        if any(t <= 0.0 for t in self.response_time):
            raise ValueError("response times must be > 0")
        if self.p_ambient >= self.p_pump:
            raise ValueError("p_ambient must be below p_pump")


@dataclass(frozen=True)
class ArmState:
    """Full simulator state at time t."""

    t: float
    p: np.ndarray          # (4,) actuator pressures, kPa
    u: tuple               # (8,) valve bits
    theta: np.ndarray      # (2,) module bend angles, rad
    z: np.ndarray          # (2,) play-operator internal state, kPa

    def pdiff(self) -> np.ndarray:
        """Per-module right-minus-left pressure difference in kPa."""
        return np.array([self.p[1] - self.p[0], self.p[3] - self.p[2]])


def initial_state(cfg: PlantConfig) -> ArmState:
    """Rest state: all pressures at ambient, arm straight, valves closed."""
    return ArmState(
        t=0.0,
        p=np.full(N_ACTUATORS, cfg.p_ambient),
        u=(0,) * N_VALVES,
        theta=np.zeros(2),
        z=np.zeros(2),
    )


def _as_valves(u) -> tuple:
    vals = tuple(int(bool(v)) for v in u)
    if len(vals) != N_VALVES:
        raise ValueError(f"expected {N_VALVES} valve bits, got {len(vals)}")
    return vals


def step(state: ArmState, cmd, cfg: PlantConfig) -> ArmState:
    """Advance the state by one explicit-Euler step of cfg.dt seconds.

    Pure function: identical inputs give identical outputs.  Pressures are
    clamped to the sensor range before the play update so that the play
    containment |z - P_diff| <= w holds on the stored state.
    """
    if not (np.all(np.isfinite(state.p)) and np.all(np.isfinite(state.theta))
            and np.all(np.isfinite(state.z)) and math.isfinite(state.t)):
        raise ValueError("non-finite plant state")
    u = _as_valves(cmd)
    dt = cfg.dt

    # Bend rate from the current state, used for the squeeze coupling.
    theta_dot = np.empty(2)
    for i in range(2):
        target = cfg.bend_ceiling * math.tanh(state.z[i] / cfg.z_scale)
        theta_dot[i] = (target - state.theta[i]) / cfg.response_time[i]

    p = state.p.copy()
    for k in range(N_ACTUATORS):
        module = k // 2
        sign = 1.0 if k % 2 == 0 else -1.0  # +1 left, -1 right
        vin, vout = u[2 * k], u[2 * k + 1]
        dp = 0.0
        if vin:
            dp += cfg.fill_rate * (cfg.p_pump - p[k])
        if vout:
            dp -= cfg.drain_rate * (p[k] - cfg.p_ambient)
        if not vin and not vout:
            squeeze = -cfg.coupling * theta_dot[module] * sign
            if squeeze < 0.0:
                squeeze *= cfg.coupling_release
            dp += squeeze
        p[k] += dt * dp
    np.clip(p, P_MIN, P_MAX, out=p)

    theta = state.theta.copy()
    z = state.z.copy()
    for i in range(2):
        pdiff = p[2 * i + 1] - p[2 * i]
        w = cfg.play_width[i]
        z[i] = min(pdiff + w, max(pdiff - w, z[i]))
        target = cfg.bend_ceiling * math.tanh(z[i] / cfg.z_scale)
        theta[i] += dt * (target - theta[i]) / cfg.response_time[i]
    np.clip(theta, -THETA_MAX, THETA_MAX, out=theta)

    return ArmState(t=state.t + dt, p=p, u=u, theta=theta, z=z)


def observe(state: ArmState, cfg: PlantConfig, rng: np.random.Generator,
            geom: ArmGeometry | None = None):
    """Noisy sensor view of the state: (pressures, markers).

    Gaussian noise with the configured standard deviations is added to the
    pressures and to the marker x/y coordinates; zero sigma reproduces the
    true state exactly.
    """
    geom = geom or ArmGeometry()
    markers = marker_positions(geom, state.theta)
    if cfg.pressure_noise > 0.0:
        p = state.p + rng.normal(0.0, cfg.pressure_noise, N_ACTUATORS)
    else:
        p = state.p.copy()
    if cfg.marker_noise > 0.0:
        noisy = []
        for m in markers:
            dx, dy = rng.normal(0.0, cfg.marker_noise, 2)
            noisy.append(MarkerTuple(m.x + dx, m.y + dy, m.phi))
        markers = noisy
    return p, markers


# ---------------------------------------------------------------------------
# Scripted runs


@dataclass(frozen=True)
class TrajectoryScript:
    """Time-ordered open-loop valve schedule.

    Each event is (time_s, valve_bits).  The script ends at `duration`
    seconds; when duration is None the last event time is used, so scripts
    conventionally close with an all-valves-off end marker.
    """

    events: tuple = field(default_factory=tuple)
    duration: float | None = None

    def end_time(self) -> float:
        if self.duration is not None:
            return float(self.duration)
        if not self.events:
            raise ValueError("script has no events and no duration")
        return float(self.events[-1][0])


def save_script(script: TrajectoryScript, path) -> None:
    """Write the schedule as a JSON array of {"t": s, "u": [8 x 0/1]}."""
    rows = [{"t": float(t), "u": list(_as_valves(u))}
            for t, u in script.events]
    with open(path, "w") as f:
        json.dump(rows, f, indent=1)
        f.write("\n")


def load_script(path) -> TrajectoryScript:
    with open(path) as f:
        rows = json.load(f)
    if not isinstance(rows, list):
        raise ValueError(f"{path}: script must be a JSON array")
    events = []
    last_t = -math.inf
    for row in rows:
        t = float(row["t"])
        if t <= last_t:
            raise ValueError(f"{path}: event times must be strictly increasing")
        last_t = t
        events.append((t, _as_valves(row["u"])))
    return TrajectoryScript(events=tuple(events))


@dataclass
class RunRow:
    """One 10 Hz log sample: observed sensors plus ground-truth bend."""

    t: float
    p: np.ndarray
    u: tuple
    markers: list
    theta: np.ndarray


LOG_RATE = 10.0  # Hz


def run_scripted(cfg: PlantConfig, script: TrajectoryScript,
                 duration: float | None = None,
                 noise: bool = False,
                 geom: ArmGeometry | None = None) -> list[RunRow]:
    """Integrate a script from rest and log one row every 0.1 s.

    Rows are recorded at t = 0.0, 0.1, ... up to but excluding the end
    time.  Deterministic: the same config, script, and seed always produce
    the identical log.
    """
    geom = geom or ArmGeometry()
    end = duration if duration is not None else script.end_time()
    if end <= 0.0:
        raise ValueError("script duration must be > 0")
    times = [t for t, _ in script.events]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("script event times must be strictly increasing")

    noise_cfg = cfg if noise else replace(
        cfg, pressure_noise=0.0, marker_noise=0.0)
    rng = np.random.default_rng(cfg.seed)

    n_steps = round(end / cfg.dt)
    steps_per_row = round(1.0 / (LOG_RATE * cfg.dt))
    if steps_per_row < 1 or abs(steps_per_row * LOG_RATE * cfg.dt - 1.0) > 1e-9:
        raise ValueError("dt must divide the 0.1 s logging interval")

    state = initial_state(cfg)
    u = state.u
    next_event = 0
    log: list[RunRow] = []
    for n in range(n_steps):
        t = n * cfg.dt
        while next_event < len(script.events) and \
                script.events[next_event][0] <= t + 1e-9:
            u = script.events[next_event][1]
            next_event += 1
        if n % steps_per_row == 0:
            p_obs, markers = observe(state, noise_cfg, rng, geom)
            log.append(RunRow(t=round(t, 6), p=p_obs, u=u,
                              markers=markers, theta=state.theta.copy()))
        state = step(state, u, cfg)
    return log
