"""DC channel gains of the LoS, fixed-mirror, ORIS and diffuse-wall paths and
their blockage-masked combination for a given LED/element assignment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import UserPose, WallGrid, segments_blocked, specular_point
from .scene import Receiver, Scene

UP = np.array([0.0, 0.0, 1.0])


def lambert_index(half_power_angle: float) -> float:
    return -1.0 / np.log2(np.cos(half_power_angle))


def _in_fov(cos_inc, fov):
    return (cos_inc > 0.0) & (cos_inc >= np.cos(fov))


def los_gain(led, pd, m: float, rx: Receiver) -> np.ndarray:
    """Lambertian line-of-sight gain for a downward LED and upward PD.

    Broadcasts over leading dimensions of ``led`` and ``pd``.
    """
    vec = np.asarray(pd, float) - np.asarray(led, float)
    d = np.linalg.norm(vec, axis=-1)
    cos_irr = -vec[..., 2] / d
    cos_inc = cos_irr                     # both faces are horizontal
    g = (m + 1) * rx.area / (2 * np.pi * d ** 2) * np.clip(cos_irr, 0, None) ** m * cos_inc
    return np.where(_in_fov(cos_inc, rx.fov), g, 0.0)


def oris_gain(led, refl, pd, m: float, rx: Receiver, r_spec: float,
              wall_normal=None) -> np.ndarray:
    """Specular gain through a steerable element at ``refl``.

    The element is assumed oriented to hit the PD, so only the LED
    irradiance angle and the PD incidence angle enter. Broadcasts over
    ``refl``.
    """
    led = np.asarray(led, float)
    refl = np.asarray(refl, float)
    pd = np.asarray(pd, float)
    v1 = refl - led
    v2 = pd - refl
    d1 = np.linalg.norm(v1, axis=-1)
    d2 = np.linalg.norm(v2, axis=-1)
    cos_irr = -v1[..., 2] / d1
    cos_inc = -v2[..., 2] / d2
    ok = _in_fov(cos_inc, rx.fov) & (cos_irr > 0)
    if wall_normal is not None:
        n = np.asarray(wall_normal, float)
        ok &= (np.sum(-v1 * n, axis=-1) > 0) & (np.sum(v2 * n, axis=-1) > 0)
    g = (r_spec * (m + 1) * rx.area / (2 * np.pi * (d1 + d2) ** 2)
         * np.clip(cos_irr, 0, None) ** m * cos_inc)
    return np.where(ok, g, 0.0)


def mirror_gain(led, k: int, pd, wall: WallGrid, m: float, rx: Receiver,
                r_spec: float) -> float:
    """Fixed flat mirror at element ``k``: nonzero only if the reflection
    point of the led -> wall -> pd path falls inside that element."""
    hit = specular_point(np.asarray(led, float), np.asarray(pd, float), wall)
    if hit is None or hit[1] != k:
        return 0.0
    return _mirror_value(np.asarray(led, float), hit[0], np.asarray(pd, float), m, rx, r_spec)


def _mirror_value(led, p, pd, m, rx, r_spec) -> float:
    # at the reflection point cos^m * cos_inc = cos^(m+1); reuse the ORIS
    # expression so both reflector kinds give bit-identical gains there
    return float(oris_gain(led, p, pd, m, rx, r_spec))


def wall_gain(led, elem, normal, area, pd, m: float, rx: Receiver,
              r_wall: float) -> np.ndarray:
    """Two-hop diffuse gain through a Lambertian wall patch of ``area`` m^2.

    Broadcasts over ``elem``/``normal``/``area``; geometry behind either
    surface gives zero.
    """
    led = np.asarray(led, float)
    elem = np.asarray(elem, float)
    normal = np.asarray(normal, float)
    v1 = elem - led
    v2 = np.asarray(pd, float) - elem
    d1 = np.linalg.norm(v1, axis=-1)
    d2 = np.linalg.norm(v2, axis=-1)
    cos_led = -v1[..., 2] / d1
    cos_wall_in = np.sum(-v1 * normal, axis=-1) / d1
    cos_wall_out = np.sum(v2 * normal, axis=-1) / d2
    cos_pd = -v2[..., 2] / d2
    return _diffuse(cos_led, cos_wall_in, cos_wall_out, cos_pd, d1, d2, area, m, rx, r_wall)


def _diffuse(cos_led, cos_wall_in, cos_wall_out, cos_pd, d1, d2, area, m, rx, r_wall):
    ok = (cos_led > 0) & (cos_wall_in > 0) & (cos_wall_out > 0) & _in_fov(cos_pd, rx.fov)
    g = (r_wall * (m + 1) * rx.area * area / (2 * np.pi * d1 ** 2 * d2 ** 2)
         * np.clip(cos_led, 0, None) ** m * cos_wall_in * cos_wall_out * cos_pd)
    return np.where(ok, g, 0.0)


def nlos_gain(h_wall, h_spec, beta):
    """Gain of an element acting as wall (beta = 0) or specular surface (beta = 1)."""
    return h_wall + (h_spec - h_wall) * beta


@dataclass(frozen=True)
class ChannelMatrix:
    """Pre-blockage gains for one user pose plus the blockage indicators.

    Element axis runs over every wall element of the scene; ``capable``
    marks those on the wall that may host specular elements.
    """

    h_los: np.ndarray      # (L,)
    h_wall: np.ndarray     # (L, K)
    h_spec: np.ndarray     # (L, K)
    i_los: np.ndarray      # (L,) bool, True = unblocked
    i_nlos: np.ndarray     # (L, K) bool
    capable: np.ndarray    # (K,) bool

    @property
    def n_leds(self) -> int:
        return self.h_los.shape[0]

    @property
    def n_elements(self) -> int:
        return self.h_wall.shape[1]

    def masked_wall(self) -> np.ndarray:
        return np.where(self.i_nlos, self.h_wall, 0.0)

    def masked_spec(self) -> np.ndarray:
        return np.where(self.i_nlos, self.h_spec, 0.0)

    def base_gains(self) -> np.ndarray:
        """Per-LED gain with every element left as plain wall."""
        return np.where(self.i_los, self.h_los, 0.0) + self.masked_wall().sum(axis=1)


def overall_gain(beta, cm: ChannelMatrix) -> np.ndarray:
    """Blockage-masked per-LED gain for assignment ``beta`` (L x K, 0/1)."""
    beta = np.asarray(beta, dtype=float)
    nlos = nlos_gain(cm.h_wall, cm.h_spec, beta)
    return (np.where(cm.i_los, cm.h_los, 0.0)
            + np.where(cm.i_nlos, nlos, 0.0).sum(axis=1))


def build_channel(scene: Scene, pose: UserPose) -> ChannelMatrix:
    """Channel matrix for ``pose`` with reflector type ``scene.mode``."""
    et = scene.elements
    rx = scene.receiver
    m = scene.lambert_m
    leds = scene.led_positions
    pd = pose.pd_position
    body = pose.body

    h_los = los_gain(leds, pd[None, :], m, rx)
    i_los = ~segments_blocked(leds, pd[None, :], body)

    v2 = pd[None, :] - et.centers
    d2 = np.linalg.norm(v2, axis=-1)
    cos_wall_out = np.sum(v2 * et.normals, axis=-1) / d2
    cos_pd = -v2[:, 2] / d2

    h_wall = _diffuse(et.cos_led, et.cos_wall_in, cos_wall_out[None, :], cos_pd[None, :],
                      et.d1, d2[None, :], et.areas[None, :], m, rx, scene.r_wall)

    blocked_out = segments_blocked(et.centers, pd[None, :], body)
    blocked_in = segments_blocked(leds[:, None, :], et.centers[None, :, :], body)
    i_nlos = ~(blocked_in | blocked_out[None, :])

    h_spec = np.zeros_like(h_wall)
    cap = et.capable
    if scene.mode == "oris":
        ok = _in_fov(cos_pd[cap], rx.fov) & (et.cos_led[:, cap] > 0)
        g = (scene.r_spec * (m + 1) * rx.area / (2 * np.pi * (et.d1[:, cap] + d2[None, cap]) ** 2)
             * np.clip(et.cos_led[:, cap], 0, None) ** m * cos_pd[None, cap])
        h_spec[:, cap] = np.where(ok, g, 0.0)
    elif scene.mode == "mirror":
        wall = scene.oris_grid
        for l, led in enumerate(leds):
            hit = specular_point(led, pd, wall)
            if hit is None:
                continue
            p, k = hit
            # the reflection path itself must be clear; the element's indicator
            # stays centre-based because the diffuse gain shares it
            if not (segments_blocked(led, p, body) or segments_blocked(p, pd, body)):
                h_spec[l, k] = _mirror_value(led, p, pd, m, rx, scene.r_spec)
    return ChannelMatrix(h_los, h_wall, h_spec, i_los, i_nlos, cap.copy())


def ray_traced_coverage(mode: str, x_led: float, psi: float, *, z_led: float = 3.0,
                        z_user: float = 1.0, wall_height: float = 3.0,
                        step: float = 0.02, x_span: float = 8.0,
                        wall_samples: int = 300, m: float = None) -> float:
    """Simulated counterpart of :func:`geometry.coverage_limit`.

    Sweeps the user away from the wall plane x = 0 in ``step`` increments
    and returns the furthest position that still gets a nonzero specular
    gain. ORIS elements are sampled at ``wall_samples`` heights; a fixed
    mirror reflects at the single image-method point.
    """
    rx = Receiver(fov=psi)
    if m is None:
        m = lambert_index(np.deg2rad(80))
    led = np.array([x_led, 0.0, z_led])
    zs = (np.arange(wall_samples) + 0.5) * wall_height / wall_samples
    refl = np.stack([np.zeros_like(zs), np.zeros_like(zs), zs], axis=1)
    best = 0.0
    for x in np.arange(step, x_span + step / 2, step):
        pd = np.array([x, 0.0, z_user])
        if mode == "mirror":
            # the led -> image(pd) line crosses the wall at height z
            z = z_led + x_led / (x_led + x) * (z_user - z_led)
            cos_inc = (z - z_user) / np.hypot(x, z - z_user)
            lit = 0 <= z <= wall_height and bool(_in_fov(cos_inc, psi))
        elif mode == "oris":
            lit = float(np.max(oris_gain(led, refl, pd, m, rx, 1.0))) > 0
        else:
            raise ValueError(f"unknown coverage mode {mode!r}")
        if lit:
            best = x
    return best
