"""Power allocation and reflector placement.

Placement (subroutine 1) ranks every (LED, element) pair on the ORIS wall by
its blockage-masked specular contribution with a selection sort; Minimum
Mirrors (MM) adds pairs in that order until the SNR target is met, Minimum
Power (MP) keeps the best ``n_max``. Power (subroutine 2) is a small LP over
the lighting constraints. The alternating loop iterates the two, and
:func:`oracle_solve` enumerates every placement of tiny rooms exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from numba import njit

from .channel import ChannelMatrix, overall_gain
from .illumination import SensingGrid, build_sensing_grid, constraint_rows, illuminance
from .lp import INFEASIBLE, UNBOUNDED, LinearProgram, LPResult, lp_solve
from .metrics import db_to_linear, outage_flag, snr_direct
from .scene import IlluminationConstraints, NoiseModel, Scene

SNR_MARGIN = 1e-7       # relative head-room on the SNR row so LP round-off cannot flip b
SUM_SLACK = 1e-9        # relative slack when pinning the total power in a second stage
ORACLE_BUDGET = 10 ** 6


class InfeasibleIllumination(RuntimeError):
    """The lighting requirements cannot be met by any power allocation."""


class EnumerationBudgetExceeded(ValueError):
    pass


@dataclass(frozen=True)
class AoConfig:
    approach: str = "mp"          # mm | mp
    n_max: int = 128
    t_max: int = 20
    delta: float = 1e-6           # relative SNR change that counts as converged
    floor: float = 1e-12
    epsilon: float = 1e-9
    gamma_th: float = float(db_to_linear(40.0))

    def __post_init__(self):
        if self.approach not in ("mm", "mp"):
            raise ValueError(f"unknown approach {self.approach!r}")
        if self.n_max < 0 or self.t_max < 1 or self.delta <= 0:
            raise ValueError("need n_max >= 0, t_max >= 1, delta > 0")


@dataclass
class PowerAllocation:
    P: np.ndarray
    e_min: float

    @property
    def total(self) -> float:
        return float(np.sum(self.P))


@dataclass
class SolveResult:
    b: int
    gamma: float
    power: PowerAllocation
    beta: np.ndarray              # (L, K) bool
    iterations: int = 1
    converged: bool = True
    gamma_trace: Tuple[float, ...] = ()

    @property
    def mirrors_used(self) -> int:
        return int(self.beta.sum())

    @property
    def total_power(self) -> float:
        return self.power.total

    @property
    def P(self) -> np.ndarray:
        return self.power.P


# ---------------------------------------------------------------- LPs


class IlluminationLP:
    """LPs over the lighting polytope, solved by row generation.

    Only a handful of the ``2N + 2`` lighting rows are ever tight, so each
    solve starts from a fixed seed set, adds the most violated rows and
    re-solves until the full system holds. The seed set and the order rows
    enter are deterministic, so results do not depend on call history.
    """

    batch = 8

    def __init__(self, grid: SensingGrid, cons: IlluminationConstraints):
        self.grid = grid
        self.cons = cons
        self.A, self.b = constraint_rows(grid, cons)
        n, L = grid.gains.shape
        self.n_leds = L
        g = grid.gains
        seed = {0, 1, 2 + int(np.argmin(g.sum(axis=1)))}
        seed.update(n + 2 + int(np.argmax(g[:, l])) for l in range(L))
        self.seed = np.array(sorted(seed))
        self.row_tol = 1e-9 * np.maximum(1.0, np.abs(self.b))

    @property
    def n_vars(self) -> int:
        return self.n_leds + 1

    def solve(self, c, extra_a=None, extra_b=None) -> LPResult:
        """Minimise ``c @ x`` over ``x = (P, E_min, *extra)`` subject to all
        lighting rows plus the optional extra rows."""
        c = np.asarray(c, float)
        nv = len(c)
        pad = nv - self.n_vars
        if extra_a is None:
            extra_a = np.zeros((0, nv))
            extra_b = np.zeros(0)
        extra_a = np.atleast_2d(np.asarray(extra_a, float))
        extra_b = np.asarray(extra_b, float).ravel()
        active = self.seed
        while True:
            rows = self.A[active]
            if pad:
                rows = np.hstack([rows, np.zeros((len(active), pad))])
            lp = LinearProgram(c, np.vstack([rows, extra_a]),
                               np.concatenate([self.b[active], extra_b]))
            res = lp_solve(lp)
            if res.status == INFEASIBLE:
                return res
            if res.status == UNBOUNDED:
                if len(active) == len(self.b):
                    return res
                active = np.arange(len(self.b))
                continue
            viol = self.A @ res.x[:self.n_vars] - self.b
            bad = np.flatnonzero(viol > self.row_tol)
            if bad.size == 0:
                return res
            bad = bad[np.argsort(-viol[bad], kind="stable")][: self.batch]
            active = np.union1d(active, bad)

    def max_gain(self, h) -> LPResult:
        """Largest ``h @ P`` the lighting constraints allow."""
        c = np.append(-np.asarray(h, float), 0.0)
        res = self.solve(c)
        if res.ok:
            res.value = -res.value
        return res

    def min_power(self, snr_row: Optional[Tuple[np.ndarray, float]] = None) -> LPResult:
        """Least total power, ties broken towards the smallest peak LED power.

        ``snr_row = (h, need)`` adds the constraint ``h @ P >= need``.
        """
        L = self.n_leds
        ea = np.zeros((0, L + 1))
        eb = np.zeros(0)
        if snr_row is not None:
            h, need = snr_row
            ea = np.append(-np.asarray(h, float), 0.0)[None, :]
            eb = np.array([-need])
        c1 = np.append(np.ones(L), 0.0)
        first = self.solve(c1, ea, eb)
        if not first.ok:
            return first
        total = first.value
        # second stage over (P, E_min, t): minimise t with P_l <= t
        ea2 = np.hstack([ea, np.zeros((len(ea), 1))])
        cap_rows = np.hstack([np.eye(L), np.zeros((L, 1)), -np.ones((L, 1))])
        sum_row = np.append(np.append(np.ones(L), 0.0), 0.0)[None, :]
        A2 = np.vstack([ea2, cap_rows, sum_row])
        b2 = np.concatenate([eb, np.zeros(L), [total * (1 + SUM_SLACK) + 1e-12]])
        c2 = np.zeros(L + 2)
        c2[-1] = 1.0
        second = self.solve(c2, A2, b2)
        if not second.ok:
            return first
        second.x = second.x[: L + 1]
        second.value = float(np.sum(second.x[:L]))
        return second


def _allocation(x: np.ndarray, grid: SensingGrid) -> PowerAllocation:
    L = grid.gains.shape[1]
    P = np.maximum(np.asarray(x[:L], float), 0.0)
    return PowerAllocation(P, float(illuminance(P, grid).min()))


def benchmark_power(grid: SensingGrid, cons: IlluminationConstraints) -> PowerAllocation:
    """Minimum total optical power meeting every lighting constraint."""
    res = IlluminationLP(grid, cons).min_power()
    if not res.ok:
        raise InfeasibleIllumination(f"lighting constraints cannot be met ({res.status})")
    return _allocation(res.x, grid)


class SolverContext:
    """Per-scene state shared by every user pose: sensing grid, lighting LP
    and the benchmark allocation."""

    def __init__(self, scene: Scene):
        self.scene = scene
        self.grid = build_sensing_grid(scene)
        self.lp = IlluminationLP(self.grid, scene.illumination)
        res = self.lp.min_power()
        if not res.ok:
            raise InfeasibleIllumination(f"lighting constraints cannot be met ({res.status})")
        self.benchmark = _allocation(res.x, self.grid)
        self.noise = scene.noise
        self.responsivity = scene.receiver.responsivity

    def with_scene(self, scene: Scene) -> "SolverContext":
        """Reuse the lighting state for a scene differing only in FoV/mode."""
        other = object.__new__(SolverContext)
        other.__dict__.update(self.__dict__)
        other.scene = scene
        other.responsivity = scene.receiver.responsivity
        return other

    def need(self, gamma_th: float) -> float:
        """Channel-weighted power sum that reaches ``gamma_th``."""
        return np.sqrt(gamma_th * self.noise.power) / self.responsivity


# ------------------------------------------------------ subroutine 1


@njit(cache=True)
def _selection_order(scores):
    L, K = scores.shape
    taken = np.zeros(K, np.bool_)
    ls = np.empty(K, np.int64)
    ks = np.empty(K, np.int64)
    n = 0
    for _ in range(K):
        best = 0.0
        bl = -1
        bk = -1
        for l in range(L):
            for k in range(K):
                if not taken[k] and scores[l, k] > best:
                    best = scores[l, k]
                    bl = l
                    bk = k
        if bl < 0:
            break
        taken[bk] = True
        ls[n] = bl
        ks[n] = bk
        n += 1
    return ls[:n], ks[:n]


def pair_scores(cm: ChannelMatrix, P) -> np.ndarray:
    """Specular contribution of each (LED, element) pair at powers ``P``;
    zero off the ORIS wall."""
    s = cm.masked_spec() * np.asarray(P, float)[:, None]
    s[:, ~cm.capable] = 0.0
    return s


def selection_rank(scores: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Selection sort of (LED, element) pairs by descending score with at
    most one LED per element; zero-score pairs are never ranked. Equal
    scores go to the lowest LED index, then the lowest element index."""
    cols = np.flatnonzero(scores.any(axis=0)) if scores.size else np.zeros(0, int)
    ls, ks = _selection_order(np.ascontiguousarray(scores[:, cols], dtype=np.float64))
    return ls, cols[ks]


def _beta_from(cm: ChannelMatrix, ls, ks, count: int) -> np.ndarray:
    beta = np.zeros(cm.h_wall.shape, dtype=bool)
    beta[ls[:count], ks[:count]] = True
    return beta


def _mm_count(cm: ChannelMatrix, P, ls, ks, gamma_th, n_max, noise, responsivity) -> int:
    P = np.asarray(P, float)
    amp0 = responsivity * float(P @ cm.base_gains())
    if amp0 * amp0 / noise.power >= gamma_th:
        return 0
    limit = min(n_max, len(ls))
    if limit == 0:
        return 0
    step = (responsivity * P[ls[:limit]] * cm.i_nlos[ls[:limit], ks[:limit]]
            * (cm.h_spec - cm.h_wall)[ls[:limit], ks[:limit]])
    amps = amp0 + np.cumsum(step)
    hit = np.flatnonzero(amps * amps / noise.power >= gamma_th)
    return int(hit[0]) + 1 if hit.size else limit


def subroutine1_mm(cm: ChannelMatrix, P, cfg: AoConfig, noise: NoiseModel,
                   responsivity: float = 1.0, rank=None) -> np.ndarray:
    """Fewest pairs, best first, that lift the SNR to the threshold."""
    ls, ks = rank if rank is not None else selection_rank(pair_scores(cm, P))
    n = _mm_count(cm, P, ls, ks, cfg.gamma_th, cfg.n_max, noise, responsivity)
    return _beta_from(cm, ls, ks, n)


def subroutine1_mp(cm: ChannelMatrix, P, cfg: AoConfig, rank=None) -> np.ndarray:
    """The ``n_max`` best pairs, zero-score pairs excluded."""
    ls, ks = rank if rank is not None else selection_rank(pair_scores(cm, P))
    return _beta_from(cm, ls, ks, min(cfg.n_max, len(ls)))


# ------------------------------------------------------ subroutine 2


def subroutine2(beta, cm: ChannelMatrix, ctx: SolverContext, cfg: AoConfig,
                _max_cache: Optional[Dict[bytes, LPResult]] = None):
    """Power for a fixed placement; returns ``(PowerAllocation, b)``.

    MP: least power that meets the SNR target, or the benchmark allocation
    if the target is out of reach. MM: the allocation maximising the
    received signal.
    """
    h = overall_gain(beta, cm)
    need = ctx.need(cfg.gamma_th) * (1 + SNR_MARGIN)

    def max_gain():
        key = h.tobytes()
        if _max_cache is not None and key in _max_cache:
            return _max_cache[key]
        res = ctx.lp.max_gain(h)
        if not res.ok:
            raise InfeasibleIllumination(f"lighting LP {res.status}")
        if _max_cache is not None:
            _max_cache[key] = res
        return res

    if cfg.approach == "mm":
        power = _allocation(max_gain().x, ctx.grid)
    else:
        bench = ctx.benchmark
        if float(h @ bench.P) >= need:
            power = bench
        elif max_gain().value < need:
            power = bench
        else:
            res = ctx.lp.min_power((h, need))
            power = _allocation(res.x, ctx.grid) if res.ok else bench
    gamma = snr_direct(power.P, beta, cm, ctx.noise, ctx.responsivity)
    return power, outage_flag(gamma, cfg.gamma_th)


# ------------------------------------------------------ solvers


class PoseSolver:
    """All approaches for one channel matrix, memoising the pieces that do
    not depend on the SNR threshold (rankings per power vector and the
    max-signal LP per gain vector)."""

    def __init__(self, ctx: SolverContext, cm: ChannelMatrix):
        self.ctx = ctx
        self.cm = cm
        self._ranks: Dict[bytes, tuple] = {}
        self._max: Dict[bytes, LPResult] = {}

    def rank(self, P):
        key = np.asarray(P, float).tobytes()
        r = self._ranks.get(key)
        if r is None:
            r = selection_rank(pair_scores(self.cm, P))
            self._ranks[key] = r
        return r

    def _result(self, power, beta, gamma_th, iterations=1, converged=True, trace=()):
        gamma = snr_direct(power.P, beta, self.cm, self.ctx.noise, self.ctx.responsivity)
        return SolveResult(outage_flag(gamma, gamma_th), gamma, power, beta,
                           iterations, converged, tuple(trace))

    def no_mirror(self, gamma_th: float) -> SolveResult:
        beta = np.zeros(self.cm.h_wall.shape, dtype=bool)
        return self._result(self.ctx.benchmark, beta, gamma_th)

    def benchmark(self, cfg: AoConfig) -> SolveResult:
        P = self.ctx.benchmark.P
        beta = subroutine1_mm(self.cm, P, cfg, self.ctx.noise, self.ctx.responsivity,
                              rank=self.rank(P))
        return self._result(self.ctx.benchmark, beta, cfg.gamma_th)

    def ao(self, cfg: AoConfig) -> SolveResult:
        ctx, cm = self.ctx, self.cm
        P = ctx.benchmark.P
        prev = None
        best = None
        best_key = None
        trace = []
        converged = False
        t = 0
        for t in range(1, cfg.t_max + 1):
            rank = self.rank(P)
            if cfg.approach == "mm":
                beta = subroutine1_mm(cm, P, cfg, ctx.noise, ctx.responsivity, rank=rank)
            else:
                beta = subroutine1_mp(cm, P, cfg, rank=rank)
            power, b = subroutine2(beta, cm, ctx, cfg, self._max)
            gamma = snr_direct(power.P, beta, cm, ctx.noise, ctx.responsivity)
            trace.append(gamma)
            resource = int(beta.sum()) if cfg.approach == "mm" else power.total
            key = (b, -resource)
            if best_key is None or key >= best_key:
                best, best_key = (power, beta), key
            if prev is not None and abs(gamma - prev) / max(prev, cfg.floor) < cfg.delta:
                converged = True
                break
            prev = gamma
            P = power.P
        power, beta = best
        return self._result(power, beta, cfg.gamma_th, t, converged, trace)


def ao_solve(ctx: SolverContext, cm: ChannelMatrix, cfg: AoConfig) -> SolveResult:
    return PoseSolver(ctx, cm).ao(cfg)


def benchmark_solve(ctx: SolverContext, cm: ChannelMatrix, cfg: AoConfig) -> SolveResult:
    return PoseSolver(ctx, cm).benchmark(cfg)


def no_mirror_solve(ctx: SolverContext, cm: ChannelMatrix, gamma_th: float) -> SolveResult:
    return PoseSolver(ctx, cm).no_mirror(gamma_th)


# ------------------------------------------------------ exact oracle


@dataclass
class OracleResult:
    result: SolveResult
    enumerated: int
    evaluated: int


def oracle_solve(ctx: SolverContext, cm: ChannelMatrix, gamma_th: float,
                 objective: str = "mp", n_max: int = 128) -> OracleResult:
    """Exhaustive search over every placement satisfying the per-element
    exclusivity and ``n_max`` limits.

    ``objective='mp'`` ranks by (served, least power, fewest elements),
    ``'mm'`` by (served, fewest elements). Pairs whose specular gain does not
    beat the plain wall gain cannot help and are skipped after counting.
    """
    L = cm.n_leds
    cap = np.flatnonzero(cm.capable)
    if (L + 1) ** len(cap) > ORACLE_BUDGET:
        need_k = int(np.floor(np.log(ORACLE_BUDGET) / np.log(L + 1)))
        raise EnumerationBudgetExceeded(
            f"(L+1)^K = {L + 1}^{len(cap)} exceeds {ORACLE_BUDGET}; "
            f"reduce the reflector grid to at most {need_k} elements")
    gain = np.where(cm.i_nlos, cm.h_spec - cm.h_wall, 0.0)
    need = ctx.need(gamma_th) * (1 + SNR_MARGIN)
    bench = ctx.benchmark
    enumerated = evaluated = 0
    best = None
    best_key = None
    max_cache: Dict[bytes, LPResult] = {}
    for choice in itertools.product(range(-1, L), repeat=len(cap)):
        used = sum(c >= 0 for c in choice)
        if used > n_max:
            continue
        enumerated += 1
        if any(c >= 0 and gain[c, k] <= 0 for c, k in zip(choice, cap)):
            continue
        evaluated += 1
        beta = np.zeros(cm.h_wall.shape, dtype=bool)
        for c, k in zip(choice, cap):
            if c >= 0:
                beta[c, k] = True
        h = overall_gain(beta, cm)
        key_h = h.tobytes()
        mx = max_cache.get(key_h)
        if mx is None:
            mx = ctx.lp.max_gain(h)
            max_cache[key_h] = mx
        served = mx.value >= need
        if objective == "mm":
            power = _allocation(mx.x, ctx.grid)
            key = (int(served), -used)
        else:
            if not served:
                power = bench
            elif float(h @ bench.P) >= need:
                power = bench
            else:
                res = ctx.lp.min_power((h, need))
                power = _allocation(res.x, ctx.grid)
            key = (int(served), -round(power.total, 9), -used)
        if best_key is None or key > best_key:
            best_key = key
            best = (power, beta)
    power, beta = best
    gamma = snr_direct(power.P, beta, cm, ctx.noise, ctx.responsivity)
    res = SolveResult(outage_flag(gamma, gamma_th), gamma, power, beta)
    return OracleResult(res, enumerated, evaluated)
