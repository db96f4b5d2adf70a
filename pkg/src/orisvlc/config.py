"""Versioned JSON scenario file.

Every field is optional; omitted ones take the reference-office defaults.
Angles are given in degrees and SNR thresholds in dB; both are converted
once when the :class:`Scene` and :class:`ExperimentPlan` are built.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .montecarlo import APPROACHES, MODES, ExperimentPlan
from .scene import (DEFAULT_LEDS, BodyModel, IlluminationConstraints, NoiseModel,
                    Receiver, Scene)

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid or inconsistent scenario configuration."""


@dataclass(frozen=True)
class ScenarioConfig:
    room: Tuple[float, float, float] = (4.0, 4.0, 3.0)
    leds: Tuple[Tuple[float, float, float], ...] = DEFAULT_LEDS
    half_power_angle_deg: float = 80.0
    pd_area: float = 1e-4
    responsivity: float = 1.0
    wall_grid: Tuple[int, int] = (30, 15)
    oris_wall: str = "x0"
    modes: Tuple[str, ...] = ("oris",)
    r_wall: float = 0.2
    r_spec: float = 0.99
    body_radius: float = 0.15
    body_height: float = 1.75
    device_offset: float = 0.3
    device_height: float = 1.0
    e_th: float = 500.0
    e_max: float = 800.0
    u_min: float = 0.5
    k_ev: float = 280.0
    n0: float = 2.5e-20
    bandwidth: float = 20e6
    sensing_spacing: float = 0.25
    gamma_th_db: Tuple[float, ...] = tuple(float(g) for g in range(10, 51, 2))
    psi_deg: Tuple[float, ...] = (30.0, 40.0, 50.0)
    approaches: Tuple[str, ...] = APPROACHES
    trials: int = 1000
    seed: int = 0
    n_max: int = 128
    t_max: int = 20
    delta: float = 1e-6
    heatmap_gamma_db: float = 40.0
    workers: int = 1
    output_dir: Optional[str] = None

    def scene(self, psi_deg: Optional[float] = None) -> Scene:
        rx = Receiver(area=self.pd_area, responsivity=self.responsivity,
                      fov=np.deg2rad(psi_deg if psi_deg is not None else self.psi_deg[0]))
        return Scene(
            room=self.room, leds=self.leds,
            half_power_angle=float(np.deg2rad(self.half_power_angle_deg)),
            receiver=rx, wall_grid=self.wall_grid, oris_wall=self.oris_wall,
            mode=self.modes[0] if self.modes else "none",
            r_wall=self.r_wall, r_spec=self.r_spec,
            body=BodyModel(self.body_radius, self.body_height, self.device_offset,
                           self.device_height),
            illumination=IlluminationConstraints(self.e_th, self.e_max, self.u_min, self.k_ev),
            noise=NoiseModel(self.n0, self.bandwidth),
            sensing_spacing=self.sensing_spacing,
        )

    def plan(self) -> ExperimentPlan:
        return ExperimentPlan(
            psi_deg=self.psi_deg, gamma_db=self.gamma_th_db, approaches=self.approaches,
            modes=self.modes, trials=self.trials, seed=self.seed, n_max=self.n_max,
            t_max=self.t_max, delta=self.delta, heatmap_gamma_db=self.heatmap_gamma_db)

    def validate(self) -> "ScenarioConfig":
        """Build every derived object once so bad values fail early."""
        try:
            if len(self.room) != 3 or min(self.room) <= 0:
                raise ValueError("room needs three positive dimensions")
            if len(self.wall_grid) != 2 or min(self.wall_grid) < 1:
                raise ValueError("wall_grid needs two positive counts")
            if self.workers < 1:
                raise ValueError("workers must be >= 1")
            if self.n_max < 0 or self.t_max < 1 or self.delta <= 0:
                raise ValueError("need n_max >= 0, t_max >= 1, delta > 0")
            inset = max(self.body_radius, self.device_offset)
            if 2 * inset >= min(self.room[:2]):
                raise ValueError("the user body does not fit in the room")
            for p in self.psi_deg:
                self.scene(p)
            self.plan()
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def to_dict(self) -> Dict[str, Any]:
        d = {"schema_version": SCHEMA_VERSION}
        for k, v in asdict(self).items():
            d[k] = _plain(v)
        return d

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        data = dict(data)
        version = data.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        kwargs = {}
        for k, v in data.items():
            kwargs[k] = _coerce(k, v, getattr(cls, k, None) if k != "leds" else DEFAULT_LEDS)
        return cls(**kwargs).validate()

    def with_overrides(self, **kw) -> "ScenarioConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw).validate() if kw else self


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v


def _coerce(key: str, value, default):
    """Convert a JSON value to the type of the field's default."""
    try:
        if isinstance(default, tuple):
            if not isinstance(value, list):
                raise TypeError
            if default and isinstance(default[0], tuple):
                return tuple(tuple(float(x) for x in row) for row in value)
            if default and isinstance(default[0], int) and not isinstance(default[0], bool):
                return tuple(_int(x) for x in value)
            if default and isinstance(default[0], str):
                return tuple(_str(x) for x in value)
            return tuple(_float(x) for x in value)
        if key == "output_dir":
            return None if value is None else _str(value)
        if isinstance(default, bool):
            raise TypeError
        if isinstance(default, int):
            return _int(value)
        if isinstance(default, float):
            return _float(value)
        if isinstance(default, str):
            return _str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key!r}: {value!r}") from None
    raise ConfigError(f"bad value for {key!r}: {value!r}")


def _float(x) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise TypeError
    x = float(x)
    if not np.isfinite(x):
        raise ValueError
    return x


def _int(x) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise TypeError
    return x


def _str(x) -> str:
    if not isinstance(x, str):
        raise TypeError
    return x


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return ScenarioConfig.from_dict(data)


def dump_config(cfg: ScenarioConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)


def parse_range(text: str) -> Tuple[float, ...]:
    """``start:step:stop`` (inclusive) or a comma list."""
    text = text.strip()
    try:
        if ":" in text:
            start, step, stop = (float(t) for t in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            return tuple(float(round(start + i * step, 10)) for i in range(n))
        vals = tuple(float(t) for t in text.split(",") if t.strip())
        if not vals:
            raise ValueError
        return vals
    except ValueError:
        raise ConfigError(f"cannot parse range {text!r}; use start:step:stop or a,b,c") from None
