"""Spatial primitives: cylinder occlusion, wall grids, image-method reflection
points and the analytic coverage limits of fixed mirrors and ORIS elements.

Points are plain ``numpy`` arrays of shape ``(3,)`` (or ``(..., 3)`` for
batches) in metres, with the floor at ``z = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

_EPS = 1e-12

# wall id -> (axis normal to the wall, which side of the room it sits on)
WALL_IDS = ("x0", "xW", "y0", "yD")


def point(x: float, y: float, z: float) -> np.ndarray:
    p = np.array([x, y, z], dtype=float)
    if not np.all(np.isfinite(p)):
        raise ValueError(f"non-finite point {p}")
    return p


@dataclass(frozen=True)
class BodyCylinder:
    """Opaque vertical cylinder standing on the floor."""

    axis_base: np.ndarray
    radius: float = 0.15
    height: float = 1.75

    def __post_init__(self):
        if self.radius <= 0 or self.height <= 0:
            raise ValueError("cylinder radius and height must be positive")

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Closed-volume membership test for points of shape (..., 3)."""
        pts = np.asarray(pts, dtype=float)
        horiz = np.hypot(pts[..., 0] - self.axis_base[0], pts[..., 1] - self.axis_base[1])
        z0 = self.axis_base[2]
        return (horiz <= self.radius) & (pts[..., 2] >= z0) & (pts[..., 2] <= z0 + self.height)


@dataclass(frozen=True)
class UserPose:
    body: BodyCylinder
    pd_position: np.ndarray
    heading: float


def make_pose(x: float, y: float, heading: float, *, radius: float = 0.15,
              height: float = 1.75, offset: float = 0.3,
              device_height: float = 1.0) -> UserPose:
    """Body centred at (x, y) with the photodiode held ``offset`` metres
    in front of it along ``heading``."""
    heading = float(np.mod(heading, 2 * np.pi))
    if heading >= 2 * np.pi:        # mod of a tiny negative rounds up to 2*pi
        heading = 0.0
    body = BodyCylinder(point(x, y, 0.0), radius, height)
    pd = point(x + offset * np.cos(heading), y + offset * np.sin(heading), device_height)
    return UserPose(body, pd, heading)


def segments_blocked(a: np.ndarray, b: np.ndarray, body: BodyCylinder) -> np.ndarray:
    """Vectorised occlusion test of open segments ``a -> b`` against ``body``.

    ``a`` and ``b`` broadcast against each other with trailing dimension 3.
    A segment is blocked when any interior point lies in the closed cylinder
    (lateral surface, caps or volume); tangent contact counts as blocked.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    d = b - a
    c = body.axis_base

    # horizontal: |q0 + t dq|^2 <= r^2
    q0x = a[..., 0] - c[0]
    q0y = a[..., 1] - c[1]
    dqx = d[..., 0]
    dqy = d[..., 1]
    qa = dqx * dqx + dqy * dqy
    qb = 2.0 * (q0x * dqx + q0y * dqy)
    qc = q0x * q0x + q0y * q0y - body.radius ** 2

    flat = qa < _EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = qb * qb - 4.0 * qa * qc
        root = np.sqrt(np.maximum(disc, 0.0))
        t1 = np.where(flat, -np.inf, (-qb - root) / (2.0 * qa))
        t2 = np.where(flat, np.inf, (-qb + root) / (2.0 * qa))
    horiz_empty = np.where(flat, qc > 0.0, disc < 0.0)

    # vertical slab z0 <= z(t) <= z0 + h
    z0 = c[2]
    z1 = z0 + body.height
    dz = d[..., 2]
    level = np.abs(dz) < _EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        ta = (z0 - a[..., 2]) / dz
        tb = (z1 - a[..., 2]) / dz
    t3 = np.where(level, -np.inf, np.minimum(ta, tb))
    t4 = np.where(level, np.inf, np.maximum(ta, tb))
    vert_empty = level & ((a[..., 2] < z0) | (a[..., 2] > z1))

    lo = np.maximum(np.maximum(t1, t3), 0.0)
    hi = np.minimum(np.minimum(t2, t4), 1.0)
    hit = (lo <= hi) & (lo < 1.0) & (hi > 0.0)
    return hit & ~horiz_empty & ~vert_empty


def segment_blocked(a, b, body: BodyCylinder) -> bool:
    return bool(segments_blocked(np.asarray(a, float), np.asarray(b, float), body))


@dataclass(frozen=True)
class WallGrid:
    """One wall of a box room split into ``n_h x n_z`` rectangular elements.

    Element ``k`` sits in row ``k // n_h`` (counted upwards from the floor)
    and column ``k % n_h`` along the wall's horizontal axis.
    """

    wall_id: str
    room: Tuple[float, float, float]
    n_h: int = 30
    n_z: int = 15
    centers: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.wall_id not in WALL_IDS:
            raise ValueError(f"unknown wall {self.wall_id!r}; expected one of {WALL_IDS}")
        if self.n_h < 1 or self.n_z < 1:
            raise ValueError("wall grid needs at least one element per axis")
        hs = (np.arange(self.n_h) + 0.5) * self.elem_width
        zs = (np.arange(self.n_z) + 0.5) * self.elem_height
        hh, zz = np.meshgrid(hs, zs)
        pts = np.empty((self.n_z * self.n_h, 3))
        pts[:, self.normal_axis] = self.plane
        pts[:, self.horizontal_axis] = hh.ravel()
        pts[:, 2] = zz.ravel()
        object.__setattr__(self, "centers", pts)

    @property
    def normal_axis(self) -> int:
        return 0 if self.wall_id[0] == "x" else 1

    @property
    def horizontal_axis(self) -> int:
        return 1 - self.normal_axis

    @property
    def plane(self) -> float:
        return 0.0 if self.wall_id[1] == "0" else self.room[self.normal_axis]

    @property
    def normal(self) -> np.ndarray:
        """Unit normal pointing into the room."""
        n = np.zeros(3)
        n[self.normal_axis] = 1.0 if self.wall_id[1] == "0" else -1.0
        return n

    @property
    def width(self) -> float:
        return self.room[self.horizontal_axis]

    @property
    def elem_width(self) -> float:
        return self.width / self.n_h

    @property
    def elem_height(self) -> float:
        return self.room[2] / self.n_z

    @property
    def size(self) -> int:
        return self.n_h * self.n_z

    @property
    def element_area(self) -> float:
        return self.elem_width * self.elem_height

    def depth(self, pts: np.ndarray) -> np.ndarray:
        """Signed distance from the wall plane, positive inside the room."""
        pts = np.asarray(pts, dtype=float)
        return (pts[..., self.normal_axis] - self.plane) * self.normal[self.normal_axis]

    def element_at(self, p: np.ndarray) -> Optional[int]:
        """Index of the element containing in-plane point ``p``, or None."""
        h = p[self.horizontal_axis]
        z = p[2]
        tol = 1e-12
        if h < -tol or h > self.width + tol or z < -tol or z > self.room[2] + tol:
            return None
        ih = min(int(np.floor(max(h, 0.0) / self.elem_width)), self.n_h - 1)
        iz = min(int(np.floor(max(z, 0.0) / self.elem_height)), self.n_z - 1)
        return iz * self.n_h + ih


def specular_point(led: np.ndarray, pd: np.ndarray,
                   wall: WallGrid) -> Optional[Tuple[np.ndarray, int]]:
    """Mirror reflection point on ``wall`` for the path led -> wall -> pd.

    Reflects ``pd`` across the wall plane and intersects the segment from
    ``led`` to that image with the plane. Returns the point and the index of
    the element that contains it, or None when the path does not exist.
    """
    dl = float(wall.depth(led))
    dp = float(wall.depth(pd))
    if dl < 0.0 or dp <= 0.0:
        return None
    axis = wall.normal_axis
    image = np.array(pd, dtype=float)
    image[axis] = 2.0 * wall.plane - image[axis]
    t = dl / (dl + dp)
    p = led + t * (image - led)
    p[axis] = wall.plane
    k = wall.element_at(p)
    if k is None:
        return None
    return p, k


def _check_psi(psi: float) -> None:
    if not 0.0 < psi < np.pi / 2:
        raise ValueError(f"FoV semi-angle must lie in (0, pi/2), got {psi}")


def coverage_limit(mode: str, led: np.ndarray, z_u: float, psi: float) -> float:
    """Largest distance from the reflecting wall (the plane x = 0) at which a
    user at height ``z_u`` still receives a reflection of ``led``.

    ``led`` supplies the wall distance ``x_l = led[0]`` and height
    ``z_l = led[2]``. Mirror limits below zero mean no coverage and are
    clamped to 0.
    """
    _check_psi(psi)
    x_l, z_l = float(led[0]), float(led[2])
    if z_u >= z_l:
        raise ValueError("receiver must sit below the luminaire")
    if mode == "oris":
        return (z_l - z_u) * np.tan(psi)
    if mode == "mirror":
        # reflection point height for the extreme ray, then the bounding line
        # of the reachable region solved for x at z = z_u
        z_k = z_l - x_l / np.tan(psi)
        x_max = (z_u - z_k) / -np.tan(np.pi / 2 - psi)
        return max(0.0, float(x_max))
    raise ValueError(f"unknown coverage mode {mode!r}")
