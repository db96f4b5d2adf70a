"""Reference implementations used only by the tests.

Deliberately naive: scalar math, explicit loops and brute-force search, no
code shared with the package beyond plain data containers.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


# ---------------------------------------------------------------- geometry


def sampled_blocked(a, b, base, radius, height, n=10_000) -> bool:
    """Point-membership sampling of the open segment a -> b."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    t = (np.arange(n) + 0.5) / n
    pts = a[None, :] + t[:, None] * (b - a)[None, :]
    horiz = np.hypot(pts[:, 0] - base[0], pts[:, 1] - base[1])
    inside = (horiz <= radius) & (pts[:, 2] >= base[2]) & (pts[:, 2] <= base[2] + height)
    return bool(inside.any())


def angle_between(u, v) -> float:
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    c = float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))
    return math.acos(max(-1.0, min(1.0, c)))


# ---------------------------------------------------------------- channel


def lambert_m(half_power_deg: float) -> float:
    return -math.log(2) / math.log(math.cos(math.radians(half_power_deg)))


def dist(p, q) -> float:
    return math.sqrt(sum((float(x) - float(y)) ** 2 for x, y in zip(p, q)))


def los(led, pd, m, area, fov_rad) -> float:
    d = dist(led, pd)
    cos_t = (led[2] - pd[2]) / d
    if cos_t <= 0 or math.acos(min(1.0, cos_t)) > fov_rad + 1e-15:
        return 0.0
    return (m + 1) * area / (2 * math.pi * d * d) * cos_t ** m * cos_t


def oris(led, elem, pd, m, area, fov_rad, r) -> float:
    d1 = dist(led, elem)
    d2 = dist(elem, pd)
    cos_irr = (led[2] - elem[2]) / d1
    cos_inc = (elem[2] - pd[2]) / d2
    if cos_irr <= 0 or cos_inc <= 0 or math.acos(min(1.0, cos_inc)) > fov_rad + 1e-15:
        return 0.0
    return r * (m + 1) * area / (2 * math.pi * (d1 + d2) ** 2) * cos_irr ** m * cos_inc


def diffuse(led, elem, normal, a_k, pd, m, area, fov_rad, r) -> float:
    d1 = dist(led, elem)
    d2 = dist(elem, pd)
    cos_led = (led[2] - elem[2]) / d1
    cos_in = sum((float(l) - float(e)) * float(n) for l, e, n in zip(led, elem, normal)) / d1
    cos_out = sum((float(p) - float(e)) * float(n) for p, e, n in zip(pd, elem, normal)) / d2
    cos_pd = (elem[2] - pd[2]) / d2
    if min(cos_led, cos_in, cos_out, cos_pd) <= 0 or math.acos(min(1.0, cos_pd)) > fov_rad + 1e-15:
        return 0.0
    return (r * (m + 1) * area * a_k / (2 * math.pi * d1 ** 2 * d2 ** 2)
            * cos_led ** m * cos_in * cos_out * cos_pd)


def overall_gain_loop(beta, cm):
    """Masked gain sum by hand, one scalar at a time."""
    L, K = cm.h_wall.shape
    out = []
    for l in range(L):
        s = float(cm.h_los[l]) if cm.i_los[l] else 0.0
        for k in range(K):
            if cm.i_nlos[l, k]:
                s += float(cm.h_spec[l, k]) if beta[l][k] else float(cm.h_wall[l, k])
        out.append(s)
    return out


def snr_loop(P, beta, cm, n0, bw, rho=1.0) -> float:
    h = overall_gain_loop(beta, cm)
    amp = rho * math.fsum(float(p) * g for p, g in zip(P, h))
    return amp * amp / (n0 * bw)


# ---------------------------------------------------------------- LP


def _vertices(G, h, n, tol=1e-9):
    """All basic feasible points of {x : G x <= h} (G has >= n rows)."""
    rows = len(G)
    subsets = np.array(list(itertools.combinations(range(rows), n)), dtype=int)
    if subsets.size == 0:
        return np.zeros((0, n))
    M = G[subsets]                               # (S, n, n)
    rhs = h[subsets]                             # (S, n)
    det = np.linalg.det(M)
    ok = np.abs(det) > 1e-10
    if not ok.any():
        return np.zeros((0, n))
    X = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
    scale = 1.0 + np.abs(h)
    feas = np.all(X @ G.T <= h + tol * scale, axis=1)
    return X[feas]


def vertex_enum_lp(c, A, b):
    """min c x s.t. A x <= b, x >= 0 by enumerating vertices.

    Returns ("infeasible", None), ("unbounded", None) or ("optimal", value).
    The feasible set is pointed (x >= 0), so a nonempty one has a vertex;
    unboundedness is decided on the normalised recession cone
    {d >= 0, sum d = 1, A d <= 0} by enumerating its vertices as well.
    """
    c = np.asarray(c, float)
    A = np.asarray(A, float).reshape(-1, len(c))
    b = np.asarray(b, float)
    n = len(c)
    G = np.vstack([A, -np.eye(n)])
    h = np.concatenate([b, np.zeros(n)])
    V = _vertices(G, h, n)
    if len(V) == 0:
        return "infeasible", None
    # recession cone: replace one coordinate through sum d = 1
    Gc = np.vstack([A, -np.eye(n), np.ones((1, n)), -np.ones((1, n))])
    hc = np.concatenate([np.zeros(len(A) + n), [1.0, -1.0]])
    D = _vertices(Gc, hc, n)
    if len(D) and float((D @ c).min()) < -1e-9:
        return "unbounded", None
    return "optimal", float((V @ c).min())


# ---------------------------------------------------------------- subsets


def best_subset_score(scores, size):
    """Largest total score of ``size`` (led, element) pairs with at most one
    LED per element, by enumerating element subsets and LED choices."""
    L, K = scores.shape
    best = -math.inf
    for elems in itertools.combinations(range(K), size):
        for leds in itertools.product(range(L), repeat=size):
            best = max(best, sum(scores[l, k] for l, k in zip(leds, elems)))
    return best
