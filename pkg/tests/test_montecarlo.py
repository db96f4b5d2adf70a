import pickle

import numpy as np
import pytest

from orisvlc.geometry import UserPose
from orisvlc.montecarlo import (RESULT_DTYPE, Aggregator, ExperimentPlan, TrialFailure, TrialRecord,
                                aggregate, run_trials, sample_user, trial_rng)
from orisvlc.scene import BodyModel, Scene

BODY = BodyModel()
ROOM = (4.0, 4.0, 3.0)
SMALL = ExperimentPlan(psi_deg=(40.0, 50.0), gamma_db=(30.0, 40.0, 46.0), trials=6, seed=3,
                       modes=("oris", "mirror"))


@pytest.fixture(scope="module")
def small_records():
    return list(run_trials(Scene(), SMALL))


class TestSampling:
    def test_mean_is_room_centre(self):
        rng = trial_rng(1, 0)
        pos = np.array([sample_user(rng, ROOM, BODY).body.axis_base[:2] for _ in range(100_000)])
        width = 4.0 - 2 * 0.3
        sigma = width / np.sqrt(12) / np.sqrt(len(pos))
        assert np.all(np.abs(pos.mean(axis=0) - 2.0) < 3 * sigma)

    def test_pd_and_body_inside_room(self):
        rng = trial_rng(2, 0)
        for _ in range(5000):
            pose = sample_user(rng, ROOM, BODY)
            pd = pose.pd_position
            c = pose.body.axis_base
            assert 0 <= pd[0] <= 4 and 0 <= pd[1] <= 4
            assert 0.15 <= c[0] <= 3.85 and 0.15 <= c[1] <= 3.85

    def test_same_seed_same_pose(self):
        a = sample_user(trial_rng(5, 17), ROOM, BODY)
        b = sample_user(trial_rng(5, 17), ROOM, BODY)
        assert a.pd_position.tobytes() == b.pd_position.tobytes() and a.heading == b.heading
        c = sample_user(trial_rng(5, 18), ROOM, BODY)
        assert c.heading != a.heading


class TestRunTrials:
    def test_zero_trials(self):
        plan = ExperimentPlan(trials=0)
        assert list(run_trials(Scene(), plan)) == []
        rep = aggregate([], plan, 450)
        assert rep.trials == 0 and all(s.p_out == 0 for s in rep.stats)

    def test_record_layout(self, small_records):
        cases = SMALL.cases()
        assert cases[0] == ("none", "no-mirror")
        assert len(cases) == 7
        for rec in small_records:
            assert rec.results.shape == (2, 3, 7)
            assert rec.powers.shape == (2, 3, 7, 4)
            assert isinstance(rec.pose, UserPose)
        assert [r.trial for r in small_records] == list(range(6))

    def test_matched_ordering(self, small_records):
        cases = SMALL.cases()
        col = {c: i for i, c in enumerate(cases)}
        for rec in small_records:
            b = rec.results["b"]
            for mode in ("oris", "mirror"):
                assert np.all(b[..., col[("none", "no-mirror")]] <= b[..., col[(mode, "benchmark")]])
                assert np.all(b[..., col[(mode, "benchmark")]] <= b[..., col[(mode, "mm")]])
                assert np.all(b[..., col[(mode, "benchmark")]] <= b[..., col[(mode, "mp")]])

    def test_worker_count_does_not_change_records(self, small_records):
        par = list(run_trials(Scene(), SMALL, workers=2))
        for a, b in zip(small_records, par):
            assert a.results.tobytes() == b.results.tobytes()
            assert a.powers.tobytes() == b.powers.tobytes()
            assert a.placements.keys() == b.placements.keys()

    def test_trial_subset_matches_full_run(self, small_records):
        (rec,) = run_trials(Scene(), SMALL, trials=[4])
        assert rec.results.tobytes() == small_records[4].results.tobytes()

    def test_failure_names_trial(self, monkeypatch):
        import orisvlc.montecarlo as mc

        def boom(self, cfg):
            raise ArithmeticError("solver exploded")
        monkeypatch.setattr(mc.PoseSolver, "ao", boom)
        with pytest.raises(TrialFailure, match="trial 0 .base seed 3.") as err:
            list(run_trials(Scene(), SMALL))
        assert err.value.trial == 0
        clone = pickle.loads(pickle.dumps(err.value))
        assert clone.trial == 0 and clone.seed == 3 and str(clone) == str(err.value)


def _fake(trial, b_value, plan, mirrors=0):
    shape = (len(plan.psi_deg), len(plan.gamma_db), len(plan.cases()))
    res = np.zeros(shape, dtype=RESULT_DTYPE)
    res["b"] = b_value
    res["iterations"] = 2
    res["converged"] = True
    res["mirrors"] = mirrors
    res["power"] = 84.0
    return TrialRecord(trial, None, res, np.zeros(shape + (4,)))


class TestAggregate:
    plan = ExperimentPlan(psi_deg=(50.0,), gamma_db=(40.0,), trials=5)

    def test_all_served(self):
        rep = aggregate([_fake(t, 1, self.plan) for t in range(5)], self.plan, 450)
        assert all(s.p_out == 0.0 and s.std_err == 0.0 for s in rep.stats)
        assert all(s.mean_power == pytest.approx(84.0) for s in rep.stats)
        assert all(s.iterations == {"le4": 5, "tmax": 0, "other": 0} for s in rep.stats)

    def test_all_outage(self):
        rep = aggregate([_fake(t, 0, self.plan) for t in range(5)], self.plan, 450)
        assert all(s.p_out == 1.0 for s in rep.stats)

    def test_order_independent(self, small_records):
        a = aggregate(small_records, SMALL, 450)
        b = aggregate(small_records[::-1], SMALL, 450)
        assert [s.p_out for s in a.stats] == [s.p_out for s in b.stats]
        assert all(np.array_equal(a.heatmaps[k], b.heatmaps[k]) for k in a.heatmaps)

    def test_heatmap_counts_equal_mirrors(self, small_records):
        rep = aggregate(small_records, SMALL, 450)
        hidx = SMALL.heatmap_index
        assert SMALL.gamma_db[hidx] == 40.0
        for ic, (mode, approach) in enumerate(SMALL.cases()):
            if approach == "no-mirror":
                assert (mode, approach, 50.0) not in rep.heatmaps
                continue
            for ip, psi in enumerate(SMALL.psi_deg):
                total = sum(int(r.results["mirrors"][ip, hidx, ic]) for r in small_records)
                counts = rep.heatmaps[(mode, approach, psi)]
                assert counts.sum() == total
                assert counts.max(initial=0) <= rep.trials
                assert counts.sum() <= rep.trials * SMALL.n_max

    def test_statistics_bounds(self, small_records):
        rep = aggregate(small_records, SMALL, 450)
        for s in rep.stats:
            assert 0.0 <= s.p_out <= 1.0
            assert s.std_err <= np.sqrt(0.25 / rep.trials) + 1e-15
            assert s.trials == 6
            assert sum(s.iterations.values()) == 6

    def test_streaming_equals_batch(self, small_records):
        agg = Aggregator(SMALL, 450)
        for r in small_records:
            agg.add(r)
        assert agg.report().stats == aggregate(small_records, SMALL, 450).stats


def test_plan_validation():
    with pytest.raises(ValueError):
        ExperimentPlan(approaches=("mp", "magic"))
    with pytest.raises(ValueError):
        ExperimentPlan(modes=("laser",))
    with pytest.raises(ValueError):
        ExperimentPlan(psi_deg=(95.0,))
    with pytest.raises(ValueError):
        ExperimentPlan(trials=-1)


def test_outage_reduction_factor_at_40_db():
    plan = ExperimentPlan(psi_deg=(50.0,), gamma_db=(40.0,), approaches=("no-mirror", "mp"),
                          trials=1000, seed=2024)
    rep = aggregate(run_trials(Scene(), plan), plan, 450)
    none = rep.get("none", "no-mirror", 50.0, 40.0).p_out
    mp = rep.get("oris", "mp", 50.0, 40.0).p_out
    assert mp > 0 or none > 0
    assert none >= 3 * mp
