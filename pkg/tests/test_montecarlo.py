import math

import numpy as np
import pytest

from seqcert.core import DomainError, HypothesisViolated
from seqcert.intervals import ConfidenceLevel
from seqcert.montecarlo import (
    ConfigurationError,
    Drifting,
    FixedN,
    Iid,
    MaxOverRun,
    PastDependent,
    RateEstimate,
    ReplicationPlan,
    ThresholdLogT,
    exact_rejection_thresholds,
    replication_rng,
    run_coverage,
    run_exact_stopping,
    run_normality,
    run_validity,
    simulate_paths,
    stopped_log_t,
)
from seqcert.pvalues import log_p_exact
from seqcert.supermartingale import PbrPoint, TrainedSplit, batch_log_trajectory


def test_replication_streams_are_independent_of_chunking():
    a = simulate_paths(Iid(0.3), 50, 7, range(0, 10)).bits
    b = simulate_paths(Iid(0.3), 50, 7, range(5, 10)).bits
    np.testing.assert_array_equal(a[5:], b)
    assert not np.array_equal(replication_rng(7, 0).random(5), replication_rng(8, 0).random(5))


def test_iid_mean_within_four_sigma():
    bits = simulate_paths(Iid(0.3), 10_000, 1, range(100)).bits
    sd = math.sqrt(0.3 * 0.7 / bits.size)
    assert abs(bits.mean() - 0.3) <= 4 * sd


def test_drifting_schedule():
    gen = Drifting(((500, 0.1), (0, 0.4)))
    assert gen.schedule[0] == (0, 0.4) and gen.cap == 0.4
    bits = simulate_paths(gen, 1000, 2, range(400)).bits
    assert bits[:, :500].mean() == pytest.approx(0.4, abs=0.01)
    assert bits[:, 500:].mean() == pytest.approx(0.1, abs=0.01)
    with pytest.raises(DomainError):
        Drifting(((3, 0.5),))


def test_past_dependent_respects_cap():
    batch = simulate_paths(PastDependent(0.4), 200, 3, range(50))
    assert np.all(batch.theta_max <= 0.4)
    assert np.all(batch.theta_max >= 0.05)
    with pytest.raises(DomainError):
        PastDependent(0.1, floor=0.2)


def test_threads_do_not_change_results(monkeypatch):
    plan = ReplicationPlan(2500, 11, Iid(0.5), MaxOverRun(100))
    level = ConfidenceLevel(0.2)
    monkeypatch.setenv("SEQCERT_THREADS", "1")
    one = run_validity(plan, 0.5, level)
    monkeypatch.setenv("SEQCERT_THREADS", "3")
    three = run_validity(plan, 0.5, level)
    assert one == three


class TestValidity:
    def test_generator_above_null_rejected(self):
        plan = ReplicationPlan(10, 0, Iid(0.6), FixedN(10))
        with pytest.raises(ConfigurationError):
            run_validity(plan, 0.5, ConfidenceLevel(0.05))

    @pytest.mark.parametrize("gen", [Iid(0.5), Iid(0.3), PastDependent(0.5), Drifting(((0, 0.5), (100, 0.2)))])
    def test_rate_below_level(self, gen):
        plan = ReplicationPlan(3000, 4, gen, MaxOverRun(300))
        est = run_validity(plan, 0.5, ConfidenceLevel(0.1))
        assert est.at_most(0.1)

    def test_point_factors_need_exact_null(self):
        plan = ReplicationPlan(10, 0, Iid(0.3), FixedN(10))
        with pytest.raises(ConfigurationError):
            run_validity(plan, 0.5, ConfidenceLevel(0.05), PbrPoint())
        # the unclamped factors bet on low frequencies and lose validity below phi
        plan = ReplicationPlan(500, 0, Iid(0.3), FixedN(300))
        traj = batch_log_trajectory(simulate_paths(plan.generator, 300, 0, range(500)).bits, 0.5, PbrPoint())
        assert np.mean(traj[:, -1] >= ConfidenceLevel(0.1).alpha) > 0.5

    @pytest.mark.parametrize("policy", [PbrPoint(), TrainedSplit(50)])
    def test_other_policies(self, policy):
        plan = ReplicationPlan(2000, 5, Iid(0.5), ThresholdLogT(math.log(10), 200))
        assert run_validity(plan, 0.5, ConfidenceLevel(0.1), policy).at_most(0.1)

    def test_loose_level_small_n(self):
        plan = ReplicationPlan(4000, 6, Iid(0.5), FixedN(10))
        assert run_validity(plan, 0.5, ConfidenceLevel(0.5)).at_most(0.5)

    def test_threshold_and_max_agree(self):
        level = ConfidenceLevel(0.1)
        a = run_validity(ReplicationPlan(1000, 8, Iid(0.5), ThresholdLogT(level.alpha, 200)), 0.5, level)
        b = run_validity(ReplicationPlan(1000, 8, Iid(0.5), MaxOverRun(200)), 0.5, level)
        assert a.rate == b.rate


def test_stopped_log_t():
    traj = np.array([[0.1, 0.5, 0.2], [0.0, -0.1, 0.3], [-0.2, -0.3, -0.1]])
    np.testing.assert_array_equal(stopped_log_t(traj, ThresholdLogT(0.4, 3)), [0.5, 0.3, -0.1])
    np.testing.assert_array_equal(stopped_log_t(traj, MaxOverRun(3)), [0.5, 0.3, 0.0])
    np.testing.assert_array_equal(stopped_log_t(traj, FixedN(2)), [0.5, -0.1, -0.3])


def test_exact_thresholds_are_minimal():
    level = ConfidenceLevel(0.05)
    th = exact_rejection_thresholds(40, 0.5, level)
    for k in (5, 13, 40):
        s = th[k - 1]
        assert s > k or log_p_exact(k, s, 0.5) >= level.alpha
        assert s == 0 or log_p_exact(k, s - 1, 0.5) < level.alpha


def test_exact_stopping_inflates_error():
    plan = ReplicationPlan(2000, 9, Iid(0.5), FixedN(500))
    assert run_exact_stopping(plan, 0.5, ConfidenceLevel(0.05)).rate > 0.1


class TestCoverage:
    def test_exact_covers(self):
        plan = ReplicationPlan(2000, 10, Iid(0.4), FixedN(60))
        for kind in ("exact", "ch", "pbr"):
            assert run_coverage(plan, kind, ConfidenceLevel(0.1), 0.4).at_least(0.9)

    def test_past_dependent_target(self):
        plan = ReplicationPlan(1000, 12, PastDependent(0.6), FixedN(80))
        assert run_coverage(plan, "pbr", ConfidenceLevel(0.1)).at_least(0.9)

    def test_config_errors(self):
        with pytest.raises(ConfigurationError):
            run_coverage(ReplicationPlan(10, 0, Iid(0.4), MaxOverRun(10)), "ch", ConfidenceLevel(0.1))
        with pytest.raises(ConfigurationError):
            run_coverage(ReplicationPlan(10, 0, Iid(0.4), FixedN(10)), "ch", ConfidenceLevel(0.1), 0.5)


class TestNormality:
    def test_gain_sd(self):
        plan = ReplicationPlan(2000, 13, Iid(0.75), FixedN(2000))
        rep = run_normality(plan, "ch", 0.25, 0.75)
        assert rep.sd_ratio == pytest.approx(1.0, abs=0.1)
        assert abs(rep.sample_mean) < 0.2 and rep.ks_stat < 0.06

    def test_gap_sd(self):
        plan = ReplicationPlan(2000, 14, Iid(0.75), FixedN(2000))
        for stat in ("gap_pbr", "gap_exact"):
            assert run_normality(plan, "ch", 0.25, 0.75, stat).sd_ratio == pytest.approx(1.0, abs=0.1)

    def test_excluded_point(self):
        plan = ReplicationPlan(10, 0, Iid(0.5), FixedN(100))
        with pytest.raises(HypothesisViolated):
            run_normality(plan, "ch", 0.3, 0.5, "gap_pbr")

    def test_bad_inputs(self):
        with pytest.raises(ConfigurationError):
            run_normality(ReplicationPlan(10, 0, Iid(0.5), FixedN(10)), "ch", 0.3, 0.6)
        with pytest.raises(DomainError):
            run_normality(ReplicationPlan(10, 0, Iid(0.5), FixedN(10)), "ch", 0.3, 0.5, "other")


def test_rate_estimate():
    est = RateEstimate.from_hits(np.array([True, False, False, False]))
    assert est.rate == 0.25 and est.stderr == pytest.approx(math.sqrt(0.1875 / 4))
    assert est.at_most(0.2) and not est.at_most(0.0, z=0.0)
    with pytest.raises(DomainError):
        ReplicationPlan(0, 0, Iid(0.5), FixedN(1))
