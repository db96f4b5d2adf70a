"""Monte Carlo harness: random user poses, every approach solved on the same
pose, and streaming aggregation into outage/power/efficiency statistics.

Each trial draws from its own counter-based stream seeded by
``(base_seed, trial)``, so records do not depend on execution order and a
run gives identical output for any worker count.
"""

from __future__ import annotations

import multiprocessing as mp
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .channel import build_channel
from .geometry import UserPose, make_pose
from .metrics import db_to_linear, energy_efficiency
from .optimizer import AoConfig, PoseSolver, SolverContext
from .scene import BodyModel, Scene

APPROACHES = ("no-mirror", "benchmark", "mm", "mp")
MODES = ("oris", "mirror")


@dataclass(frozen=True)
class ExperimentPlan:
    psi_deg: Tuple[float, ...] = (30.0, 40.0, 50.0)
    gamma_db: Tuple[float, ...] = tuple(float(g) for g in range(10, 51, 2))
    approaches: Tuple[str, ...] = APPROACHES
    modes: Tuple[str, ...] = ("oris",)
    trials: int = 1000
    seed: int = 0
    n_max: int = 128
    t_max: int = 20
    delta: float = 1e-6
    heatmap_gamma_db: float = 40.0

    def __post_init__(self):
        bad = set(self.approaches) - set(APPROACHES)
        if bad:
            raise ValueError(f"unknown approaches {sorted(bad)}")
        bad = set(self.modes) - set(MODES)
        if bad:
            raise ValueError(f"unknown reflector modes {sorted(bad)}")
        if self.trials < 0:
            raise ValueError("trials must be >= 0")
        for p in self.psi_deg:
            if not 0 < p < 90:
                raise ValueError(f"FoV semi-angle {p} deg outside (0, 90)")
        if not self.gamma_db:
            raise ValueError("empty SNR threshold sweep")

    def cases(self) -> List[Tuple[str, str]]:
        """(mode, approach) pairs solved at each (psi, gamma) point. The
        no-mirror baseline does not depend on the reflector type."""
        out = []
        if "no-mirror" in self.approaches:
            out.append(("none", "no-mirror"))
        for mode in self.modes:
            out.extend((mode, a) for a in self.approaches if a != "no-mirror")
        return out

    @property
    def heatmap_index(self) -> int:
        g = np.asarray(self.gamma_db)
        return int(np.argmin(np.abs(g - self.heatmap_gamma_db)))


RESULT_DTYPE = [("b", "i1"), ("gamma", "f8"), ("power", "f8"), ("mirrors", "i4"),
                ("iterations", "i4"), ("converged", "?"), ("eta", "f8")]


@dataclass
class TrialRecord:
    trial: int
    pose: UserPose
    # shape (n_psi, n_gamma, n_cases)
    results: np.ndarray
    powers: np.ndarray            # (n_psi, n_gamma, n_cases, L)
    # ORIS-wall element indices placed at the heatmap threshold, per (psi, case)
    placements: Dict[Tuple[int, int], np.ndarray] = field(default_factory=dict)


def trial_rng(base_seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([base_seed, trial])))


def sample_user(rng: np.random.Generator, room, body: BodyModel) -> UserPose:
    """Uniform body position and heading. The sampling rectangle is inset so
    neither the body nor the hand-held device leaves the room."""
    inset = max(body.radius, body.device_offset)
    w, d = room[0], room[1]
    x = rng.uniform(inset, w - inset)
    y = rng.uniform(inset, d - inset)
    heading = rng.uniform(0.0, 2 * np.pi)
    return make_pose(x, y, heading, radius=body.radius, height=body.height,
                     offset=body.device_offset, device_height=body.device_height)


class TrialRunner:
    """Solves every case of a plan for one pose; built once per worker."""

    def __init__(self, scene: Scene, plan: ExperimentPlan):
        self.scene = scene
        self.plan = plan
        base = SolverContext(scene)
        # the no-mirror baseline only needs wall gains, so it borrows the
        # channel of the first reflector mode
        self.channel_modes = tuple(plan.modes) or ("oris",)
        self.contexts = {}
        for p in plan.psi_deg:
            for mode in self.channel_modes:
                s = scene.with_fov(np.deg2rad(p)).with_mode(mode)
                self.contexts[(p, mode)] = base.with_scene(s)
        self.thresholds = [float(db_to_linear(g)) for g in plan.gamma_db]

    def run(self, trial: int) -> TrialRecord:
        plan = self.plan
        rng = trial_rng(plan.seed, trial)
        pose = sample_user(rng, self.scene.room, self.scene.body)
        cases = plan.cases()
        L = self.scene.n_leds
        shape = (len(plan.psi_deg), len(plan.gamma_db), len(cases))
        res = np.zeros(shape, dtype=RESULT_DTYPE)
        powers = np.zeros(shape + (L,))
        placements = {}
        hidx = plan.heatmap_index
        bw = self.scene.noise.bandwidth
        for ip, psi in enumerate(plan.psi_deg):
            solvers = {}
            for mode in self.channel_modes:
                ctx = self.contexts[(psi, mode)]
                solvers[mode] = PoseSolver(ctx, build_channel(ctx.scene, pose))
            solvers["none"] = solvers[self.channel_modes[0]]
            for ig, gth in enumerate(self.thresholds):
                for ic, (mode, approach) in enumerate(cases):
                    ps = solvers[mode]
                    if approach == "no-mirror":
                        r = ps.no_mirror(gth)
                    else:
                        cfg = AoConfig(approach="mm" if approach == "benchmark" else approach,
                                       n_max=plan.n_max, t_max=plan.t_max,
                                       delta=plan.delta, gamma_th=gth)
                        r = ps.benchmark(cfg) if approach == "benchmark" else ps.ao(cfg)
                    eta = energy_efficiency(r.gamma, r.P, bw, gth)
                    res[ip, ig, ic] = (r.b, r.gamma, r.total_power, r.mirrors_used,
                                       r.iterations, r.converged, eta)
                    powers[ip, ig, ic] = r.P
                    if ig == hidx and approach != "no-mirror":
                        cap = ps.cm.capable
                        placements[(ip, ic)] = np.flatnonzero(r.beta[:, cap].any(axis=0))
        return TrialRecord(trial, pose, res, powers, placements)


_WORKER: Optional[TrialRunner] = None


def _init_worker(scene, plan):
    global _WORKER
    _WORKER = TrialRunner(scene, plan)


def _run_one(trial: int) -> TrialRecord:
    return _WORKER.run(trial)


def run_trials(scene: Scene, plan: ExperimentPlan, workers: int = 1,
               trials: Optional[Iterable[int]] = None) -> Iterator[TrialRecord]:
    """Yield one record per trial, in trial order, whatever ``workers`` is."""
    indices = list(range(plan.trials)) if trials is None else list(trials)
    if not indices:
        return
    if workers <= 1:
        runner = TrialRunner(scene, plan)
        for t in indices:
            yield _run_with_context(runner, t)
        return
    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context()
    with ctx.Pool(workers, initializer=_init_worker, initargs=(scene, plan)) as pool:
        chunk = max(1, min(16, len(indices) // (4 * workers)))
        yield from pool.imap(_run_one_safe, indices, chunksize=chunk)


def _run_with_context(runner: TrialRunner, trial: int) -> TrialRecord:
    try:
        return runner.run(trial)
    except Exception as exc:
        raise TrialFailure(trial, runner.plan.seed, exc) from exc


def _run_one_safe(trial: int) -> TrialRecord:
    return _run_with_context(_WORKER, trial)


class TrialFailure(RuntimeError):
    def __init__(self, trial: int, seed: int, cause: Exception):
        super().__init__(f"trial {trial} (base seed {seed}) failed: {cause!r}")
        self.trial = trial
        self.seed = seed

    def __reduce__(self):
        return (_rebuild_failure, (self.trial, self.seed, str(self.args[0])))


def _rebuild_failure(trial, seed, msg):
    err = TrialFailure.__new__(TrialFailure)
    RuntimeError.__init__(err, msg)
    err.trial, err.seed = trial, seed
    return err


# ------------------------------------------------------------ aggregation


@dataclass
class CaseStats:
    mode: str
    approach: str
    psi_deg: float
    gamma_db: float
    trials: int
    p_out: float
    std_err: float
    mean_power: float
    mean_eta: float
    mean_mirrors: float
    iterations: Dict[str, int]
    non_converged: int


@dataclass
class AggregateReport:
    plan: ExperimentPlan
    trials: int
    stats: List[CaseStats]
    heatmaps: Dict[Tuple[str, str, float], np.ndarray]   # (mode, approach, psi) -> (K,) counts

    def get(self, mode: str, approach: str, psi_deg: float, gamma_db: float) -> CaseStats:
        for s in self.stats:
            if (s.mode, s.approach, s.psi_deg, s.gamma_db) == (mode, approach, psi_deg, gamma_db):
                return s
        raise KeyError((mode, approach, psi_deg, gamma_db))

    def curve(self, mode: str, approach: str, psi_deg: float, field_name: str = "p_out"):
        return np.array([getattr(self.get(mode, approach, psi_deg, g), field_name)
                         for g in self.plan.gamma_db])


class Aggregator:
    """Running sums over trial records; feed records with :meth:`add`."""

    def __init__(self, plan: ExperimentPlan, n_elements: int):
        self.plan = plan
        self.cases = plan.cases()
        shape = (len(plan.psi_deg), len(plan.gamma_db), len(self.cases))
        self.n = 0
        self.outage = np.zeros(shape, dtype=np.int64)
        self.power = np.zeros(shape)
        self.eta = np.zeros(shape)
        self.mirrors = np.zeros(shape, dtype=np.int64)
        self.it_le4 = np.zeros(shape, dtype=np.int64)
        self.it_max = np.zeros(shape, dtype=np.int64)
        self.unconverged = np.zeros(shape, dtype=np.int64)
        self.heat = np.zeros((len(plan.psi_deg), len(self.cases), n_elements), dtype=np.int64)

    def add(self, rec: TrialRecord) -> None:
        r = rec.results
        self.n += 1
        self.outage += 1 - r["b"]
        self.power += r["power"]
        self.eta += r["eta"]
        self.mirrors += r["mirrors"]
        self.it_le4 += r["iterations"] <= 4
        self.it_max += r["iterations"] == self.plan.t_max
        self.unconverged += ~r["converged"]
        for (ip, ic), ks in rec.placements.items():
            self.heat[ip, ic, ks] += 1

    def report(self) -> AggregateReport:
        plan = self.plan
        T = self.n
        stats = []
        heat = {}
        for ip, psi in enumerate(plan.psi_deg):
            for ic, (mode, approach) in enumerate(self.cases):
                if approach != "no-mirror":
                    heat[(mode, approach, psi)] = self.heat[ip, ic].copy()
                for ig, g in enumerate(plan.gamma_db):
                    idx = (ip, ig, ic)
                    p = self.outage[idx] / T if T else 0.0
                    le4, tmax = int(self.it_le4[idx]), int(self.it_max[idx])
                    stats.append(CaseStats(
                        mode, approach, psi, g, T, float(p),
                        float(np.sqrt(p * (1 - p) / T)) if T else 0.0,
                        float(self.power[idx] / T) if T else 0.0,
                        float(self.eta[idx] / T) if T else 0.0,
                        float(self.mirrors[idx] / T) if T else 0.0,
                        {"le4": le4, "tmax": tmax, "other": T - le4 - tmax},
                        int(self.unconverged[idx])))
        return AggregateReport(plan, T, stats, heat)


def aggregate(records: Iterable[TrialRecord], plan: ExperimentPlan, n_elements: int) -> AggregateReport:
    agg = Aggregator(plan, n_elements)
    for rec in records:
        agg.add(rec)
    return agg.report()
