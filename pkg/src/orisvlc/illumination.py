"""Work-plane illuminance and the lighting constraints (average floor,
per-point cap, min/avg uniformity) written as linear rows over the LED
powers and an auxiliary minimum-illuminance variable."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import los_gain
from .scene import IlluminationConstraints, Receiver, Scene


@dataclass(frozen=True)
class SensingGrid:
    points: np.ndarray      # (N, 3)
    spacing: float
    height: float
    gains: np.ndarray       # (N, L) unblocked LoS gain per point
    area: float             # photodetector area the gains were computed with
    k_ev: float = 280.0     # lm/W

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def lux_per_watt(self) -> np.ndarray:
        return self.k_ev / self.area * self.gains


def build_sensing_grid(scene: Scene) -> SensingGrid:
    """Closed grid over the floor footprint at receiver height.

    Illuminance is a cosine-weighted hemispherical quantity, so the grid
    uses a 90 degree acceptance regardless of the communication FoV.
    """
    w, d, _ = scene.room
    s = scene.sensing_spacing
    xs = np.linspace(0.0, w, int(round(w / s)) + 1)
    ys = np.linspace(0.0, d, int(round(d / s)) + 1)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    z = scene.body.device_height
    pts = np.stack([xx.ravel(), yy.ravel(), np.full(xx.size, z)], axis=1)
    meter = Receiver(area=scene.receiver.area, fov=np.pi / 2)
    gains = los_gain(scene.led_positions[None, :, :], pts[:, None, :], scene.lambert_m, meter)
    return SensingGrid(pts, s, z, gains, scene.receiver.area, scene.illumination.k_ev)


def illuminance(P, grid: SensingGrid) -> np.ndarray:
    return grid.lux_per_watt @ np.asarray(P, dtype=float)


def illuminance_point(P, grid: SensingGrid, n: int) -> float:
    if not 0 <= n < grid.size:
        raise IndexError(f"sensing point {n} out of range [0, {grid.size})")
    return float(grid.lux_per_watt[n] @ np.asarray(P, dtype=float))


@dataclass(frozen=True)
class IlluminationSummary:
    e_avg: float
    e_min: float
    e_max: float
    uniformity: float

    def satisfies(self, cons: IlluminationConstraints, rtol: float = 1e-6) -> bool:
        return (self.e_avg >= cons.e_th * (1 - rtol)
                and self.e_max <= cons.e_max * (1 + rtol)
                and self.uniformity >= cons.u_min * (1 - rtol))


def illumination_summary(P, grid: SensingGrid) -> IlluminationSummary:
    e = illuminance(P, grid)
    avg = float(e.mean())
    lo = float(e.min())
    u = lo / avg if avg > 0 else 0.0
    return IlluminationSummary(avg, lo, float(e.max()), u)


def constraint_rows(grid: SensingGrid, cons: IlluminationConstraints):
    """Rows ``A x <= b`` over ``x = (P_0 .. P_{L-1}, E_min)``.

    Order: average floor, uniformity, N rows ``E_min <= E_v(n)``, then N
    rows ``E_v(n) <= E_max``. Nonnegativity of ``x`` is left to the bounds.
    """
    g = cons.k_ev / grid.area * grid.gains
    n, L = g.shape
    g_avg = g.mean(axis=0)
    A = np.zeros((2 * n + 2, L + 1))
    b = np.zeros(2 * n + 2)
    A[0, :L] = -g_avg
    b[0] = -cons.e_th
    A[1, :L] = cons.u_min * g_avg
    A[1, L] = -1.0
    A[2:n + 2, :L] = -g
    A[2:n + 2, L] = 1.0
    A[n + 2:, :L] = g
    b[n + 2:] = cons.e_max
    return A, b
