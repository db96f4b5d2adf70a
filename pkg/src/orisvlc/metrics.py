"""Link figures of merit: SNR (direct and expanded-product forms), outage
indicator, the big-M bound and optical energy efficiency."""

from __future__ import annotations

import numpy as np

from .channel import ChannelMatrix, overall_gain
from .illumination import SensingGrid
from .scene import NoiseModel, Scene


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def snr_direct(P, beta, cm: ChannelMatrix, noise: NoiseModel,
               responsivity: float = 1.0) -> float:
    amp = responsivity * float(np.dot(np.asarray(P, float), overall_gain(beta, cm)))
    return amp * amp / noise.power


def snr_linearized(P, varrho, cm: ChannelMatrix, noise: NoiseModel,
                   responsivity: float = 1.0) -> float:
    """SNR as the sum of the eight quadratic/bilinear terms in (P, varrho),
    with ``varrho[l, k] = P[l] * beta[l, k]``."""
    P = np.asarray(P, float)
    varrho = np.asarray(varrho, float)
    i_l = cm.i_los.astype(float)
    i_lk = cm.i_nlos.astype(float)
    r_los = P * cm.h_los                                            # (L,)
    r_nlos = P[:, None] * cm.h_wall + varrho * (cm.h_spec - cm.h_wall)   # (L, K)
    s_nlos = (i_lk * r_nlos).sum(axis=1)                            # (L,)
    L = len(P)
    upper_l = np.triu(np.ones((L, L)), 1)

    t1 = np.sum(i_l * r_los ** 2)
    t2 = np.sum(i_lk * r_nlos ** 2)
    w = i_lk * r_nlos
    # pairs k < k': each w_k times the sum of the entries after it
    after = w.sum(axis=1, keepdims=True) - np.cumsum(w, axis=1)
    t3 = 2.0 * np.sum(w * after)
    t4 = 2.0 * np.sum(i_l * r_los * s_nlos)
    a = i_l * r_los
    t5 = 2.0 * (a @ upper_l @ a)
    t6 = 2.0 * (a @ upper_l @ s_nlos)          # l < l': LoS of l, NLoS of l'
    t7 = 2.0 * (s_nlos @ upper_l @ a)          # l < l': NLoS of l, LoS of l'
    t8 = 2.0 * (s_nlos @ upper_l @ s_nlos)
    total = t1 + t2 + t3 + t4 + t5 + t6 + t7 + t8
    return responsivity ** 2 / noise.power * total


def outage_flag(gamma: float, gamma_th: float) -> int:
    """1 when the link is served (gamma >= threshold), 0 in outage."""
    return int(gamma >= gamma_th)


def big_m_holds(gamma: float, gamma_th: float, b: int, M: float, slack: float = 1e-9) -> bool:
    """Both big-M inequalities defining ``b``; the strict one is relaxed by ``slack``."""
    lower = gamma >= gamma_th - M * (1 - b)
    upper = gamma <= gamma_th + M * b - slack * gamma_th
    return bool(lower and upper)


def power_caps(grid: SensingGrid, e_max: float) -> np.ndarray:
    """Largest power each LED may emit alone before some point exceeds ``e_max``."""
    return e_max / grid.lux_per_watt.max(axis=0)


def big_m(scene: Scene, grid: SensingGrid) -> float:
    """Upper bound on the SNR anywhere in the room.

    Every LED at its solo illumination cap, LoS at the shortest vertical
    distance with unit cosines, and every wall element acting as an
    ideally aimed specular reflector at its luminaire distance.
    """
    rx = scene.receiver
    m = scene.lambert_m
    caps = power_caps(grid, scene.illumination.e_max)
    et = scene.elements
    dz = scene.led_positions[:, 2] - scene.body.device_height
    los_bound = (m + 1) * rx.area / (2 * np.pi * dz ** 2)
    spec_bound = (max(scene.r_spec, scene.r_wall) * (m + 1) * rx.area
                  / (2 * np.pi * et.d1 ** 2)).sum(axis=1)
    amp = rx.responsivity * float(np.dot(caps, los_bound + spec_bound))
    return amp * amp / scene.noise.power


def energy_efficiency(gamma: float, P, bandwidth: float, gamma_th: float) -> float:
    """Capacity lower bound per optical watt, bit/J; zero in outage."""
    if gamma < gamma_th:
        return 0.0
    total = float(np.sum(P))
    if total <= 0:
        raise ValueError("served link with zero total optical power")
    return bandwidth / 2 * np.log2(1 + np.e / (2 * np.pi) * gamma) / total
