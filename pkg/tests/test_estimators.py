import math

import numpy as np
import pytest

from evlg.estimators import (
    CorrelationSet,
    EstimateWithError,
    Method,
    bootstrap_distribution,
    bootstrap_sigma,
    clopper_pearson,
    clopper_pearson_sigma,
    dichotomic_correlations,
    estimate_contrast,
    estimate_K_dichotomic,
    estimate_K_simplified,
    k_dichotomic,
    k_simplified,
    mean_q3,
    monte_carlo_sigma,
    quantum_witness,
    violation_significance,
)
from evlg.experiment import (
    Arm,
    CampaignConfig,
    IDEAL,
    ShotTable,
    sample_campaign,
    sample_dichotomic_campaign,
)
from evlg.protocols import RamseyConfig
from evlg.qubit import CoherenceModel, DecayShape

from .oracles import clopper_pearson_bisect


def counts_table(arm: Arm, n_d1: int, n_d2: int, n_removed: int = 0, pid="lg_ramsey", wait=5.0):
    n = n_d1 + n_d2 + n_removed
    outcomes = np.array([0] * n_d1 + [1] * n_d2 + [2] * n_removed, dtype=np.uint8)
    return ShotTable(
        np.full(n, pid), np.full(n, arm.code, dtype=np.uint8),
        np.full(n, wait), outcomes, np.arange(n, dtype=np.int64),
    )


def three_arm_table(without, up, down):
    return ShotTable.concat(
        [
            counts_table(Arm.WITHOUT_Q2, *without),
            counts_table(Arm.INTERCEPT_UP, *up),
            counts_table(Arm.INTERCEPT_DOWN, *down),
        ]
    )


class TestMeanQ3:
    def test_all_d1(self):
        assert mean_q3(counts_table(Arm.WITHOUT_Q2, 10, 0)).value == 1.0

    def test_balanced(self):
        assert mean_q3(counts_table(Arm.WITHOUT_Q2, 7, 7)).value == 0.0

    def test_high_contrast_arm(self):
        est = mean_q3(counts_table(Arm.WITHOUT_Q2, 21, 979))
        assert abs(est.value + 0.958) < 1e-12
        assert est.n_shots_used == 1000

    def test_removed_excluded(self):
        est = mean_q3(counts_table(Arm.INTERCEPT_UP, 30, 10, 60))
        assert est.value == 0.5
        assert est.n_shots_used == 40

    def test_empty_post_selection_rejected(self):
        with pytest.raises(ValueError):
            mean_q3(counts_table(Arm.INTERCEPT_UP, 0, 0, 5))

    def test_accepts_record_iterables(self):
        records = list(counts_table(Arm.INTERCEPT_UP, 30, 10, 60).records())
        est = mean_q3(records)
        assert est.value == 0.5
        assert est.n_shots_used == 40
        assert bootstrap_sigma(records, frac_d1, 200, seed=1) > 0.0


class TestKSimplified:
    def test_ideal_maximum(self):
        table = three_arm_table((0, 1000, 0), (250, 250, 500), (250, 250, 500))
        est = estimate_K_simplified(
            table.filter(arm=Arm.WITHOUT_Q2),
            table.filter(arm=Arm.INTERCEPT_UP),
            table.filter(arm=Arm.INTERCEPT_DOWN),
        )
        assert est.value == 2.0

    def test_fully_decohered(self):
        table = three_arm_table((500, 500, 0), (250, 250, 500), (250, 250, 500))
        est = estimate_K_simplified(
            table.filter(arm=Arm.WITHOUT_Q2),
            table.filter(arm=Arm.INTERCEPT_UP),
            table.filter(arm=Arm.INTERCEPT_DOWN),
        )
        assert est.value == 1.0

    def test_high_contrast_point(self):
        without = counts_table(Arm.WITHOUT_Q2, 21, 979)
        up = counts_table(Arm.INTERCEPT_UP, 250, 250, 500)
        down = counts_table(Arm.INTERCEPT_DOWN, 250, 250, 500)
        est = estimate_K_simplified(without, up, down)
        assert abs(est.value - 1.958) < 1e-12

    def test_identity_exact(self):
        from evlg.estimators import mean_q3_intercepted

        without = counts_table(Arm.WITHOUT_Q2, 321, 679)
        up = counts_table(Arm.INTERCEPT_UP, 260, 240, 500)
        down = counts_table(Arm.INTERCEPT_DOWN, 245, 255, 500)
        est = estimate_K_simplified(without, up, down)
        lhs = 1.0 + mean_q3_intercepted(up, down).value - mean_q3(without).value
        assert abs(est.value - lhs) <= 1e-15

    def test_statistic_helper_matches(self):
        table = three_arm_table((100, 900, 0), (260, 240, 500), (245, 255, 500))
        est = estimate_K_simplified(
            table.filter(arm=Arm.WITHOUT_Q2),
            table.filter(arm=Arm.INTERCEPT_UP),
            table.filter(arm=Arm.INTERCEPT_DOWN),
        )
        assert abs(k_simplified(table) - est.value) <= 1e-15


class TestContrastAndWitness:
    def test_contrast_extremes(self):
        assert estimate_contrast(counts_table(Arm.WITHOUT_Q2, 0, 100)).value == 1.0
        assert estimate_contrast(counts_table(Arm.WITHOUT_Q2, 50, 50)).value == 0.0

    def test_contrast_from_unbalanced_counts(self):
        est = estimate_contrast(counts_table(Arm.WITHOUT_Q2, 21, 979))
        assert abs(est.value - 0.958) < 1e-12
        assert not est.clamped

    def test_contrast_clamped_and_flagged(self):
        est = estimate_contrast(counts_table(Arm.WITHOUT_Q2, 60, 40))
        assert est.value == 0.0
        assert est.clamped

    def test_contrast_equals_negated_mean(self):
        table = counts_table(Arm.WITHOUT_Q2, 21, 979)
        assert estimate_contrast(table).value == -mean_q3(table).value

    def test_witness(self):
        assert quantum_witness(2.0) == 1.0
        assert quantum_witness(1.0) == 0.0
        assert abs(quantum_witness(1.958) - 0.958) < 1e-12

    def test_significance(self):
        assert violation_significance(EstimateWithError(1.5, 0.5, Method.EXACT, 10)) == 1.0
        assert violation_significance(EstimateWithError(1.0, 0.1, Method.EXACT, 10)) == 0.0
        got = violation_significance(EstimateWithError(1.958, 0.033, Method.EXACT, 10))
        assert abs(got - 29.0303030303) < 1e-6
        with pytest.raises(ValueError):
            violation_significance(EstimateWithError(1.5, 0.0, Method.EXACT, 10))


class TestKDichotomic:
    def make(self, v):
        return EstimateWithError(v, 0.01, Method.EXACT, 100)

    def test_quantum_value(self):
        corr = CorrelationSet(self.make(0.5), self.make(0.5), self.make(-0.5))
        assert estimate_K_dichotomic(corr).value == 1.5

    def test_classical_deterministic(self):
        corr = CorrelationSet(self.make(1.0), self.make(1.0), self.make(1.0))
        assert estimate_K_dichotomic(corr).value == 1.0

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            CorrelationSet(self.make(1.5), self.make(0.5), self.make(0.5))

    def test_pipeline_from_campaign(self):
        cfg = CampaignConfig(
            seed=77, wait_grid=[0.0],
            ramsey=RamseyConfig(pulse_theta=math.pi / 3),
            imperfections=IDEAL, shots_per_arm=100_000,
        )
        table = sample_dichotomic_campaign(cfg)
        corr = dichotomic_correlations(table)
        est = estimate_K_dichotomic(corr)
        for got, want in ((corr.q2q1, 0.5), (corr.q3q2, 0.5), (corr.q3q1, -0.5)):
            assert abs(got.value - want) <= 5 * got.sigma
        assert abs(est.value - 1.5) <= 3 * est.sigma
        assert abs(k_dichotomic(table) - est.value) <= 1e-15


BERNOULLI_SE = math.sqrt(0.25 / 1000.0)  # 0.015811


def frac_d1(table: ShotTable) -> float:
    n_d1, n_d2, _ = table.counts()
    return n_d1 / (n_d1 + n_d2)


class TestResamplingSigmas:
    def test_bootstrap_constant_dataset(self):
        table = counts_table(Arm.WITHOUT_Q2, 0, 400)
        assert bootstrap_sigma(table, frac_d1, 200, seed=1) == 0.0

    def test_monte_carlo_constant_dataset(self):
        table = counts_table(Arm.WITHOUT_Q2, 0, 400)
        assert monte_carlo_sigma(table, frac_d1, 200, seed=1) == 0.0

    def test_bootstrap_bernoulli_matches_analytic(self):
        table = counts_table(Arm.WITHOUT_Q2, 500, 500)
        sigma = bootstrap_sigma(table, frac_d1, 4000, seed=3)
        assert abs(sigma - BERNOULLI_SE) / BERNOULLI_SE < 0.10

    def test_monte_carlo_bernoulli_matches_analytic(self):
        table = counts_table(Arm.WITHOUT_Q2, 500, 500)
        sigma = monte_carlo_sigma(table, frac_d1, 4000, seed=3)
        assert abs(sigma - BERNOULLI_SE) / BERNOULLI_SE < 0.10

    def test_routes_agree_on_campaign(self):
        cfg = CampaignConfig(
            seed=11, wait_grid=[30.0],
            ramsey=RamseyConfig(coherence=CoherenceModel(DecayShape.EXPONENTIAL, 130.0)),
            imperfections=IDEAL, shots_per_arm=3000,
        )
        table = sample_campaign(cfg)
        b = bootstrap_sigma(table, k_simplified, 1500, seed=5)
        m = monte_carlo_sigma(table, k_simplified, 1500, seed=5)
        assert abs(b - m) / m <= 0.2

    def test_sigma_scale_at_default_shots(self):
        # campaign tuned to contrast 0.958 at the default 2000 shots per arm
        tau = 130.0
        wait = -tau * math.log(0.958)
        cfg = CampaignConfig(
            seed=20260811, wait_grid=[wait],
            ramsey=RamseyConfig(coherence=CoherenceModel(DecayShape.EXPONENTIAL, tau)),
            imperfections=IDEAL, shots_per_arm=2000,
        )
        table = sample_campaign(cfg)
        result = bootstrap_distribution(table, k_simplified, 20_000, seed=2)
        assert abs(result.sigma - 0.033) / 0.033 < 0.30
        # the fitted and plain widths should agree closely on this smooth case
        assert abs(result.sigma - result.sigma_plain) / result.sigma_plain < 0.1

    def test_determinism_and_seed_sensitivity(self):
        table = counts_table(Arm.WITHOUT_Q2, 300, 700)
        a = bootstrap_sigma(table, frac_d1, 400, seed=9)
        b = bootstrap_sigma(table, frac_d1, 400, seed=9)
        c = bootstrap_sigma(table, frac_d1, 400, seed=10)
        assert a == b
        assert a != c

    def test_resample_count_floor(self):
        table = counts_table(Arm.WITHOUT_Q2, 300, 700)
        with pytest.raises(ValueError):
            bootstrap_sigma(table, frac_d1, 99, seed=1)
        with pytest.raises(ValueError):
            monte_carlo_sigma(table, frac_d1, 50, seed=1)


class TestClopperPearson:
    def test_zero_successes(self):
        lo, hi = clopper_pearson(0, 20, 0.95)
        assert lo == 0.0
        assert abs(hi - 0.16843) < 5e-4
        olo, ohi = clopper_pearson_bisect(0, 20, 0.95)
        assert abs(hi - ohi) < 1e-6

    def test_all_successes(self):
        lo, hi = clopper_pearson(20, 20, 0.95)
        assert hi == 1.0
        assert abs(lo - (1.0 - 0.16843)) < 5e-4

    def test_central_case_against_bisection_oracle(self):
        lo, hi = clopper_pearson(5, 10, 0.95)
        assert abs(lo - 0.187) < 1e-3
        assert abs(hi - 0.813) < 1e-3
        olo, ohi = clopper_pearson_bisect(5, 10, 0.95)
        assert abs(lo - olo) < 1e-6
        assert abs(hi - ohi) < 1e-6

    def test_random_cases_against_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            n = int(rng.integers(1, 40))
            k = int(rng.integers(0, n + 1))
            conf = float(rng.uniform(0.5, 0.99))
            lo, hi = clopper_pearson(k, n, conf)
            olo, ohi = clopper_pearson_bisect(k, n, conf)
            assert abs(lo - olo) < 1e-6 and abs(hi - ohi) < 1e-6
            assert lo <= k / n <= hi

    def test_one_sigma_bridge(self):
        sigma = clopper_pearson_sigma(500, 1000)
        assert abs(sigma - BERNOULLI_SE) / BERNOULLI_SE < 0.05

    def test_validation(self):
        with pytest.raises(ValueError):
            clopper_pearson(5, 4)
        with pytest.raises(ValueError):
            clopper_pearson(-1, 4)
        with pytest.raises(ValueError):
            clopper_pearson(1, 4, confidence=1.0)

    def test_coverage_quick(self):
        # exact method over-covers; spot check at modest n
        rng = np.random.default_rng(12)
        n = 60
        lows = np.empty(n + 1)
        highs = np.empty(n + 1)
        for k in range(n + 1):
            lows[k], highs[k] = clopper_pearson(k, n, 0.95)
        ps = rng.uniform(size=2000)
        ks = rng.binomial(n, ps)
        covered = (lows[ks] <= ps) & (ps <= highs[ks])
        assert covered.mean() >= 0.95


class TestContrastLawClosure:
    def test_k_converges_to_one_plus_contrast(self):
        # programmed contrast via the wait time; at 1e5 shots the gap to the
        # 1 + C law is within five analytic sigmas
        tau = 100.0
        c0 = 0.6
        cfg = CampaignConfig(
            seed=314, wait_grid=[-tau * math.log(c0)],
            ramsey=RamseyConfig(coherence=CoherenceModel(DecayShape.EXPONENTIAL, tau)),
            imperfections=IDEAL, shots_per_arm=100_000,
        )
        table = sample_campaign(cfg)
        k = estimate_K_simplified(
            table.filter(arm=Arm.WITHOUT_Q2),
            table.filter(arm=Arm.INTERCEPT_UP),
            table.filter(arm=Arm.INTERCEPT_DOWN),
        )
        c_exact = cfg.ramsey.coherence.factor(cfg.wait_grid[0])
        assert abs(k.value - 1.0 - c_exact) <= 5.0 * k.sigma


class TestRangeInvariants:
    def test_interior_contrast_campaign(self):
        tau = 130.0
        cfg = CampaignConfig(
            seed=5, wait_grid=[-tau * math.log(0.9)],
            ramsey=RamseyConfig(coherence=CoherenceModel(DecayShape.EXPONENTIAL, tau)),
            imperfections=IDEAL, shots_per_arm=5000,
        )
        table = sample_campaign(cfg)
        without = table.filter(arm=Arm.WITHOUT_Q2)
        up = table.filter(arm=Arm.INTERCEPT_UP)
        down = table.filter(arm=Arm.INTERCEPT_DOWN)
        for sub in (without, up, down):
            assert -1.0 <= mean_q3(sub).value <= 1.0
        k = estimate_K_simplified(without, up, down)
        assert 0.0 <= k.value <= 2.0
        c = estimate_contrast(without)
        assert 0.0 <= c.value <= 1.0

    def test_post_selection_count_discipline(self):
        up = counts_table(Arm.INTERCEPT_UP, 30, 20, 50)
        assert mean_q3(up).n_shots_used == 50
