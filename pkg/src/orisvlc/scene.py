"""Room description shared by every module: luminaires, receiver, walls,
materials, user body and lighting requirements.

Defaults reproduce the reference office: a 4 x 4 x 3 m room lit by a 2 x 2
LED lattice, one wall able to host mirrors/ORIS elements.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Tuple

import numpy as np

from .geometry import WallGrid, WALL_IDS


@dataclass(frozen=True)
class Receiver:
    area: float = 1e-4            # m^2
    fov: float = np.deg2rad(50)   # semi-angle, rad
    responsivity: float = 1.0     # A/W

    def __post_init__(self):
        if self.area <= 0 or self.responsivity <= 0:
            raise ValueError("receiver area and responsivity must be positive")
        if not 0 < self.fov <= np.pi / 2:
            raise ValueError(f"FoV semi-angle out of range: {self.fov}")


@dataclass(frozen=True)
class NoiseModel:
    n0: float = 2.5e-20        # W/Hz
    bandwidth: float = 20e6    # Hz

    def __post_init__(self):
        if self.n0 <= 0 or self.bandwidth <= 0:
            raise ValueError("noise PSD and bandwidth must be positive")

    @property
    def power(self) -> float:
        return self.n0 * self.bandwidth


@dataclass(frozen=True)
class IlluminationConstraints:
    e_th: float = 500.0     # lux, average floor
    e_max: float = 800.0    # lux, per-point cap
    u_min: float = 0.5
    k_ev: float = 280.0     # lm/W

    def __post_init__(self):
        if not 0 < self.e_th <= self.e_max:
            raise ValueError("need 0 < E_th <= E_max")
        if not 0 < self.u_min <= 1:
            raise ValueError("need 0 < U_min <= 1")
        if self.k_ev <= 0:
            raise ValueError("luminous efficacy must be positive")


@dataclass(frozen=True)
class BodyModel:
    radius: float = 0.15
    height: float = 1.75
    device_offset: float = 0.3
    device_height: float = 1.0


DEFAULT_LEDS = ((1.0, 1.0, 3.0), (1.0, 3.0, 3.0), (3.0, 1.0, 3.0), (3.0, 3.0, 3.0))


@dataclass(frozen=True)
class Scene:
    room: Tuple[float, float, float] = (4.0, 4.0, 3.0)
    leds: Tuple[Tuple[float, float, float], ...] = DEFAULT_LEDS
    half_power_angle: float = np.deg2rad(80)
    receiver: Receiver = field(default_factory=Receiver)
    wall_grid: Tuple[int, int] = (30, 15)      # elements along the wall, up the wall
    oris_wall: str = "x0"
    mode: str = "oris"                         # oris | mirror | none
    r_wall: float = 0.2
    r_spec: float = 0.99
    body: BodyModel = field(default_factory=BodyModel)
    illumination: IlluminationConstraints = field(default_factory=IlluminationConstraints)
    noise: NoiseModel = field(default_factory=NoiseModel)
    sensing_spacing: float = 0.25

    def __post_init__(self):
        if self.oris_wall not in WALL_IDS:
            raise ValueError(f"unknown ORIS wall {self.oris_wall!r}")
        if self.mode not in ("oris", "mirror", "none"):
            raise ValueError(f"unknown reflector mode {self.mode!r}")
        if not (0 < self.r_wall <= 1 and 0 < self.r_spec <= 1):
            raise ValueError("reflection coefficients must lie in (0, 1]")
        if not 0 < self.half_power_angle < np.pi / 2:
            raise ValueError("half-power semi-angle must lie in (0, pi/2)")
        leds = np.asarray(self.leds, dtype=float)
        if leds.ndim != 2 or leds.shape[1] != 3 or len(leds) == 0:
            raise ValueError("leds must be a non-empty list of (x, y, z)")
        if np.any(leds[:, 2] <= self.body.device_height):
            raise ValueError("luminaires must sit above the receiver plane")
        if np.any(leds < 0) or np.any(leds > np.asarray(self.room)):
            raise ValueError("luminaires must lie inside the room")
        if self.sensing_spacing <= 0:
            raise ValueError("sensing grid spacing must be positive")

    def with_fov(self, psi: float) -> "Scene":
        return replace(self, receiver=replace(self.receiver, fov=psi))

    def with_mode(self, mode: str) -> "Scene":
        return replace(self, mode=mode)

    @property
    def lambert_m(self) -> float:
        return -1.0 / np.log2(np.cos(self.half_power_angle))

    @cached_property
    def led_positions(self) -> np.ndarray:
        return np.asarray(self.leds, dtype=float)

    @property
    def n_leds(self) -> int:
        return len(self.leds)

    @cached_property
    def walls(self) -> Tuple[WallGrid, ...]:
        """All four walls, the ORIS-capable one first."""
        order = (self.oris_wall,) + tuple(w for w in WALL_IDS if w != self.oris_wall)
        return tuple(WallGrid(w, self.room, *self.wall_grid) for w in order)

    @property
    def oris_grid(self) -> WallGrid:
        return self.walls[0]

    @property
    def n_capable(self) -> int:
        return self.oris_grid.size

    @cached_property
    def elements(self) -> "ElementTable":
        return ElementTable.build(self)


@dataclass(frozen=True)
class ElementTable:
    """Flattened view of every wall element plus the luminaire-side geometry,
    which does not depend on where the user stands."""

    centers: np.ndarray         # (K, 3)
    normals: np.ndarray         # (K, 3) pointing into the room
    areas: np.ndarray           # (K,)
    capable: np.ndarray         # (K,) bool, elements on the ORIS wall
    d1: np.ndarray              # (L, K) LED -> element distance
    cos_led: np.ndarray         # (L, K) irradiance cosine at the LED
    cos_wall_in: np.ndarray     # (L, K) incidence cosine at the element

    @classmethod
    def build(cls, scene: Scene) -> "ElementTable":
        centers = np.concatenate([w.centers for w in scene.walls])
        normals = np.concatenate([np.tile(w.normal, (w.size, 1)) for w in scene.walls])
        areas = np.concatenate([np.full(w.size, w.element_area) for w in scene.walls])
        capable = np.zeros(len(centers), dtype=bool)
        capable[: scene.walls[0].size] = True
        leds = scene.led_positions
        vec = centers[None, :, :] - leds[:, None, :]
        d1 = np.linalg.norm(vec, axis=-1)
        cos_led = -vec[..., 2] / d1
        cos_wall_in = -np.einsum("lkj,kj->lk", vec, normals) / d1
        return cls(centers, normals, areas, capable, d1, cos_led, cos_wall_in)


def tiny_scene(**overrides) -> Scene:
    """Two-LED, six-element room small enough for exhaustive enumeration."""
    base = dict(
        room=(3.0, 2.0, 3.0),
        leds=((0.75, 1.0, 3.0), (2.25, 1.0, 3.0)),
        wall_grid=(3, 2),
        sensing_spacing=0.25,
    )
    base.update(overrides)
    return Scene(**base)
