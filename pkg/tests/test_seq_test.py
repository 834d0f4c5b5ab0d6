#!/usr/bin/env python3
"""
Tests for the multistage two-hypothesis test
"""

import math
import os
import unittest

import numpy as np

from stagecross.errors import DomainError, PreconditionError
from stagecross.mc_engine import replication_rng
from stagecross.seq_test import (
    OUTCOME_COLUMNS,
    TABLE1_COLUMNS,
    OutcomeBatch,
    Procedure,
    SimpleHypotheses,
    TestConfig,
    best_group_size,
    integrated_risk,
    llr_stats,
    optimal_plan,
    outcome_rows,
    procedure_summary,
    run_outcomes,
    run_two_decision_test,
    simulate_procedure,
    table1,
)

BAND = 4.0
HYP = SimpleHypotheses.symmetric(0.25)
LOG_BOUNDARY = math.log(1000.0)


class TestHypotheses(unittest.TestCase):

    def test_llr_stats(self):
        stats = llr_stats(HYP)
        self.assertEqual((stats.sigma0, stats.mu0, stats.sigma1, stats.mu1), (0.5, 0.25, 0.5, 0.25))
        self.assertEqual(HYP.llr_step_mean(1), 0.125)
        self.assertEqual(HYP.llr_step_mean(0), -0.125)

    def test_asymmetric_pair(self):
        stats = llr_stats(SimpleHypotheses(0.0, 1.0))
        self.assertEqual(stats.sigma0, stats.sigma1)
        self.assertEqual(stats.mu0, 0.5)

    def test_identical(self):
        with self.assertRaises(DomainError):
            SimpleHypotheses(0.3, 0.3)


class TestConfigValues(unittest.TestCase):

    def test_boundaries(self):
        cfg = TestConfig.from_ratio(1.0, 0.001)
        stats = llr_stats(HYP)
        for i in (0, 1):
            self.assertAlmostEqual(cfg.boundary(stats, i), 13.815510557964274, places=12)
        self.assertAlmostEqual(cfg.log_boundary, LOG_BOUNDARY, places=14)
        self.assertAlmostEqual(cfg.c, 0.001, places=15)

    def test_validation(self):
        with self.assertRaises(DomainError):
            TestConfig(c=1.0, d=0.001)
        with self.assertRaises(DomainError):
            TestConfig(c=0.001, d=0.001, pi0=0.3, pi1=0.3)
        with self.assertRaises(DomainError):
            TestConfig(c=0.001, d=0.001, w0=0.0)
        with self.assertRaises(DomainError):
            TestConfig(c=0.0, d=0.0).log_boundary
        with self.assertRaises(DomainError):
            Procedure.group(0)

    def test_optimal_plan(self):
        for ratio, m in ((1.0, 12), (5.0, 8), (10.0, 6)):
            plan = optimal_plan(HYP, TestConfig.from_ratio(ratio, 0.001))
            self.assertEqual(plan.m_stars, (m, m))
            self.assertEqual(plan.label, f"{m}/{m}")
            self.assertEqual(plan.specs[0].h.coeff, ratio)


class TestSingleRuns(unittest.TestCase):

    def check_outcome(self, outcome, cfg):
        self.assertGreaterEqual(abs(outcome.path[-1]), cfg.log_boundary)
        self.assertTrue(all(abs(v) < cfg.log_boundary for v in outcome.path[:-1]))
        self.assertEqual(outcome.M, len(outcome.path))
        self.assertEqual(outcome.D, int(outcome.path[-1] > 0.0))
        self.assertGreaterEqual(outcome.M, 1)

    def test_stopping_rule(self):
        cfg = TestConfig.from_ratio(5.0, 0.001)
        plan = optimal_plan(HYP, cfg)
        for truth in (0, 1):
            for index in range(100):
                outcome = run_two_decision_test(HYP, cfg, Procedure.optimal(), truth,
                                                replication_rng(4, truth, index), plan=plan)
                self.check_outcome(outcome, cfg)
                grouped = run_two_decision_test(HYP, cfg, Procedure.group(5), truth,
                                                replication_rng(4, truth, index))
                self.check_outcome(grouped, cfg)
                self.assertEqual(grouped.N, 5 * grouped.M)

    def test_one_observation_per_stage(self):
        cfg = TestConfig.from_ratio(1.0, 0.001)
        for index in range(50):
            outcome = run_two_decision_test(HYP, cfg, Procedure.group(1), 1, replication_rng(8, 1, index))
            self.assertEqual(outcome.N, outcome.M)

    def test_truth_domain(self):
        with self.assertRaises(DomainError):
            run_two_decision_test(HYP, TestConfig.from_ratio(1.0, 0.001), Procedure.group(1), 2,
                                  replication_rng(0, 0))


class TestGroupSequential(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.cfg = TestConfig.from_ratio(1.0, 0.001)
        cls.batches = simulate_procedure(HYP, cls.cfg, Procedure.group(1), 8000, 2024)

    def test_expected_sample_size(self):
        summary = procedure_summary(self.batches[1], self.cfg)
        self.assertLess(abs(summary["EN"] / 57.5 - 1.0), 0.03)
        self.assertEqual(summary["EN"], summary["EM"])
        # Wald approximation without overshoot is a lower bound
        self.assertGreater(summary["EN"], LOG_BOUNDARY / 0.125)

    def test_integrated_risk(self):
        risk, se = integrated_risk(self.batches, self.cfg)
        self.assertLess(abs(risk - 0.115), 0.005)
        self.assertGreater(se, 0.0)

    def test_error_rates(self):
        for truth in (0, 1):
            summary = procedure_summary(self.batches[truth], self.cfg)
            self.assertLess(summary["err_rate"], 10 * self.cfg.d)

    def test_zero_costs_leave_error_penalties(self):
        free = TestConfig(c=0.0, d=0.0)
        risk, _ = integrated_risk(self.batches, free)
        expected = sum(0.5 * np.mean(self.batches[i].D != i) for i in (0, 1))
        self.assertAlmostEqual(risk, expected, places=12)

    def test_missing_truth(self):
        with self.assertRaises(PreconditionError):
            integrated_risk({1: self.batches[1]}, self.cfg)
        empty = OutcomeBatch(0, np.array([], dtype=int), np.array([], dtype=int), np.array([], dtype=int))
        with self.assertRaises(PreconditionError):
            integrated_risk({0: empty, 1: self.batches[1]}, self.cfg)

    def test_outcome_rows(self):
        rows = outcome_rows(Procedure.group(1), 1.0, self.cfg, self.batches, "1")
        self.assertEqual([list(row) for row in rows], [OUTCOME_COLUMNS, OUTCOME_COLUMNS])
        self.assertEqual([row["truth"] for row in rows], [0, 1])


class TestOptimalProcedure(unittest.TestCase):

    def test_risk_against_best_group_test(self):
        cfg = TestConfig.from_ratio(1.0, 0.001)
        optimal = simulate_procedure(HYP, cfg, Procedure.optimal(), 5000, 77)
        risk, _ = integrated_risk(optimal, cfg)
        self.assertLess(abs(risk / 0.068 - 1.0), 0.10)
        summary = procedure_summary(optimal[1], cfg)
        self.assertLess(abs(summary["EM"] - 5.2), 1.0)
        grouped, _ = integrated_risk(simulate_procedure(HYP, cfg, Procedure.group(15), 5000, 77), cfg)
        self.assertLess(risk, grouped)

    def test_symmetric_hypotheses(self):
        cfg = TestConfig.from_ratio(5.0, 0.001)
        batches = simulate_procedure(HYP, cfg, Procedure.optimal(), 3000, 5)
        s0 = procedure_summary(batches[0], cfg)
        s1 = procedure_summary(batches[1], cfg)
        for key in ("EN", "EM"):
            se = math.hypot(s0[f"se_{key}"], s1[f"se_{key}"])
            self.assertLess(abs(s0[key] - s1[key]), BAND * se, msg=key)

    def test_parallel_matches_serial(self):
        cfg = TestConfig.from_ratio(10.0, 0.001)
        serial = run_outcomes(HYP, cfg, Procedure.optimal(), 1, 200, 6, workers=1)
        pooled = run_outcomes(HYP, cfg, Procedure.optimal(), 1, 200, 6, workers=2)
        np.testing.assert_array_equal(serial.N, pooled.N)
        np.testing.assert_array_equal(serial.D, pooled.D)


class TestGroupSizeSearch(unittest.TestCase):

    def test_best_of_three(self):
        cfg = TestConfig.from_ratio(1.0, 0.001)
        best, curve = best_group_size(HYP, cfg, [1, 15, 30], 2000, 12)
        self.assertEqual(best, 15)
        r = dict(zip(curve["k"], curve["r"]))
        self.assertGreater(r[1], r[15])
        self.assertLess(r[15], r[30])

    def test_empty_grid(self):
        with self.assertRaises(DomainError):
            best_group_size(HYP, TestConfig.from_ratio(1.0, 0.001), [], 10, 0)


class TestTable1(unittest.TestCase):

    def test_block_layout(self):
        summary, detail = table1(HYP, [1.0], 0.001, 300, 3, k_star={1.0: 15})
        self.assertEqual(list(summary.columns), TABLE1_COLUMNS)
        self.assertEqual(list(summary["procedure"]), ["delta", "delta_g(1)", "delta_g(15)", "delta_g(30)"])
        self.assertEqual(summary["r_delta_pct"].iloc[0], 100.0)
        self.assertEqual(summary["k_or_mstar"].iloc[0], "12/12")
        self.assertEqual(len(detail), 8)
        self.assertEqual(list(detail.columns), OUTCOME_COLUMNS)


class TestComparisonTable(unittest.TestCase):
    """All three cost blocks at production size against the published figures"""

    D_OVER_C = [1.0, 5.0, 10.0]
    K_STAR = {1.0: 15, 5.0: 22, 10.0: 37}

    @classmethod
    def setUpClass(cls):
        cls.summary, cls.detail = table1(HYP, cls.D_OVER_C, 0.001, 20000, 2024,
                                         k_star=cls.K_STAR, workers=os.cpu_count() or 1)

    def row(self, d_over_c, procedure):
        block = self.summary[self.summary["d_over_c"] == d_over_c]
        return block[block["procedure"] == procedure].iloc[0]

    def test_optimal_procedure_wins_every_block(self):
        for d_over_c in self.D_OVER_C:
            k = self.K_STAR[d_over_c]
            risks = [self.row(d_over_c, label)["r"]
                     for label in ("delta", f"delta_g({k})", f"delta_g({2 * k})", "delta_g(1)")]
            self.assertTrue(all(a < b for a, b in zip(risks, risks[1:])), msg=f"d/c={d_over_c}: {risks}")

    def test_optimal_risk(self):
        for d_over_c, expected in ((5.0, 0.017), (10.0, 0.0097)):
            self.assertLess(abs(self.row(d_over_c, "delta")["r"] / expected - 1.0), 0.10, msg=f"d/c={d_over_c}")

    def test_group_rows(self):
        for d_over_c, label, em, r in ((5.0, "delta_g(22)", 3.3, 0.018), (10.0, "delta_g(37)", 2.2, 0.0104)):
            row = self.row(d_over_c, label)
            self.assertLess(abs(row["EM"] / em - 1.0), 0.05, msg=label)
            self.assertLess(abs(row["r"] / r - 1.0), 0.10, msg=label)

    def test_error_rates_small(self):
        self.assertEqual(len(self.detail), 2 * len(self.summary))
        self.assertTrue((self.detail["err_rate"] < 10 * 0.001).all())


if __name__ == '__main__':
    unittest.main()
