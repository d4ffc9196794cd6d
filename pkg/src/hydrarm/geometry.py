"""Planar piecewise-constant-curvature chain for the two-module arm.

Each module is a circular arc of fixed length whose total bend angle is
commanded per module.  Markers sit at equal arc fractions along each module
and carry (x, y, phi) where phi is the centerline tangent measured from the
horizontal.  Units: meters and radians throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Per-module bend limit.  At theta = (-pi/8, -pi/8) the tip reaches
# x ~ +0.149 m, which keeps the workspace inside x in [-0.15, 0.15] m.
THETA_MAX = math.pi / 8

# Below this bend the arc is treated as a straight segment (positions only;
# the tangent still rotates), avoiding the 1/theta blow-up.
_STRAIGHT_EPS = 1e-6


@dataclass(frozen=True)
class ArmGeometry:
    """Chain parameters. Defaults give a straight span of y in [0, 0.40] m."""

    module_count: int = 2
    module_length: float = 0.20
    markers_per_module: int = 5
    base_x: float = 0.0
    base_y: float = 0.0
    base_phi: float = math.pi / 2

    def __post_init__(self):
        if self.module_count < 1:
            raise ValueError("module_count must be >= 1")
        if self.module_length <= 0.0:
            raise ValueError("module_length must be > 0")
        if self.markers_per_module < 1:
            raise ValueError("markers_per_module must be >= 1")

    @property
    def marker_count(self) -> int:
        return self.module_count * self.markers_per_module


@dataclass(frozen=True)
class MarkerTuple:
    """One centerline marker: position and tangent angle w.r.t. horizontal."""

    x: float
    y: float
    phi: float


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.fmod(a + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


def _check_theta(geom: ArmGeometry, theta, check_limit: bool) -> list[float]:
    vals = [float(t) for t in theta]
    if len(vals) != geom.module_count:
        raise ValueError(
            f"expected {geom.module_count} bend angles, got {len(vals)}"
        )
    for t in vals:
        if not math.isfinite(t):
            raise ValueError("bend angles must be finite")
        if check_limit and abs(t) > THETA_MAX + 1e-12:
            raise ValueError(f"bend angle {t} exceeds limit {THETA_MAX}")
    return vals


def marker_positions(geom: ArmGeometry, theta,
                     check_limit: bool = True) -> list[MarkerTuple]:
    """Map per-module bend angles to the centerline marker tuples.

    Module i is an arc of length L and total bend theta[i] starting at the
    previous module's tip with the previous tip tangent.  Marker j sits at
    arc fraction j / markers_per_module.  Positive bend curves toward -x
    (counterclockwise tangent rotation).  The base origin marker is not
    included in the output.  `check_limit=False` skips the bend-limit check
    for pure-geometry use outside the actuated range.
    """
    vals = _check_theta(geom, theta, check_limit)
    L = geom.module_length
    m = geom.markers_per_module

    # Positions treat sub-threshold bends as exactly zero (straight segment,
    # no tangent tilt), so the chain is continuous to machine precision at
    # theta -> 0.  Tangents always accumulate the exact bend so the marker
    # phi values invert back to theta losslessly.
    x, y, psi_pos = geom.base_x, geom.base_y, geom.base_phi
    psi = geom.base_phi

    markers: list[MarkerTuple] = []
    for th in vals:
        straight = abs(th) < _STRAIGHT_EPS
        k = 0.0 if straight else th / L
        for j in range(1, m + 1):
            s = (j / m) * L
            if straight:
                mx = x + s * math.cos(psi_pos)
                my = y + s * math.sin(psi_pos)
            else:
                mx = x + (math.sin(psi_pos + k * s) - math.sin(psi_pos)) / k
                my = y - (math.cos(psi_pos + k * s) - math.cos(psi_pos)) / k
            markers.append(MarkerTuple(mx, my, wrap_angle(psi + th * j / m)))
        # Next module starts at this module's tip with the tip tangent.
        if straight:
            x += L * math.cos(psi_pos)
            y += L * math.sin(psi_pos)
        else:
            x += (math.sin(psi_pos + th) - math.sin(psi_pos)) / k
            y -= (math.cos(psi_pos + th) - math.cos(psi_pos)) / k
            psi_pos += th
        psi += th
    return markers


def bend_from_markers(markers: list[MarkerTuple],
                      geom: ArmGeometry | None = None) -> list[float]:
    """Recover per-module bend angles from an ordered base-to-tip marker list.

    theta[i] is the tangent of module i's last marker minus the previous
    module's last-marker tangent (base tangent for module 1), wrapped to
    (-pi, pi].
    """
    geom = geom or ArmGeometry()
    if len(markers) != geom.marker_count:
        raise ValueError(
            f"expected {geom.marker_count} markers, got {len(markers)}"
        )
    theta = []
    prev_phi = geom.base_phi
    for i in range(geom.module_count):
        tip = markers[(i + 1) * geom.markers_per_module - 1]
        theta.append(wrap_angle(tip.phi - prev_phi))
        prev_phi = tip.phi
    return theta


def tip_position(geom: ArmGeometry, theta) -> tuple[float, float]:
    """Convenience: (x, y) of the arm tip for the given bend angles."""
    tip = marker_positions(geom, theta)[-1]
    return tip.x, tip.y
