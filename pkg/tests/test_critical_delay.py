"""Tests for the critical_delay module."""

import math
import unittest

import numpy as np

from delayhopf.charpoly import CharSpecP1, char_spec_p0, char_spec_p1, char_value
from delayhopf.critical_delay import (
    CriticalDelayReport,
    LadderEntry,
    QuarticSpec,
    critical_delay_p0,
    critical_delay_p1,
    omega_plus,
    positive_root_test,
    quartic_from_spec,
    quartic_positive_roots,
    resolvent,
    tau_ladder_p0,
    tau_ladder_p1,
    transversality_p0,
    transversality_p1,
)
from delayhopf.errors import DegenerateCrossing, NoCrossing
from delayhopf.model import Label, SystemParams, find_equilibrium
from tests import P0_PARAMS, P1_PARAMS


def quartic(p, q, u, v):
    return QuarticSpec(p, q, u, v)


class TestP0Ladder(unittest.TestCase):
    """Test cases for the closed-form ladder at P0."""

    def test_omega_plus(self):
        self.assertAlmostEqual(omega_plus(P0_PARAMS), 0.8, places=12)
        self.assertIsNone(omega_plus(P0_PARAMS.with_feedback(0.2)))
        params = SystemParams(a=1.0, b=1.0, c=1.0, d=0.2, k=0.5, K=1.0)
        self.assertAlmostEqual(omega_plus(params), 1.0, places=12)

    def test_ladder_values(self):
        ladder = tau_ladder_p0(P0_PARAMS, j_max=3)
        self.assertEqual(len(ladder), 4)
        self.assertAlmostEqual(ladder[0], 1.15912, delta=1e-5)
        self.assertAlmostEqual(ladder[1], 9.01310, delta=1e-4)
        for lower, upper in zip(ladder, ladder[1:]):
            self.assertAlmostEqual(upper - lower, 2 * math.pi / 0.8, places=10)

    def test_ladder_residuals(self):
        spec = char_spec_p0(P0_PARAMS)
        for tau in tau_ladder_p0(P0_PARAMS):
            self.assertLess(abs(char_value(spec, 0.8j, tau)), 1e-8)

    def test_no_crossing(self):
        with self.assertRaises(NoCrossing):
            tau_ladder_p0(P0_PARAMS.with_feedback(0.1))

    def test_transversality_p0(self):
        tau0 = tau_ladder_p0(P0_PARAMS)[0]
        rate = transversality_p0(P0_PARAMS, tau0)
        self.assertGreater(rate, 0)
        denominator = (math.cos(0.8 * tau0) - tau0) ** 2 + math.sin(0.8 * tau0) ** 2
        self.assertAlmostEqual(rate * denominator, 0.64, places=10)

    def test_report(self):
        report = critical_delay_p0(P0_PARAMS)
        self.assertAlmostEqual(report.omega0, 0.8, places=12)
        self.assertAlmostEqual(report.z0, 0.64, places=12)
        self.assertAlmostEqual(report.tau0, 1.15912, delta=1e-4)
        self.assertAlmostEqual(report.tau1, 9.01310, delta=1e-4)
        self.assertEqual(report.transversality_sign, 1)
        self.assertEqual(report.tau0, min(e.tau for e in report.tau_ladder))
        self.assertTrue(all(r < 1e-8 for r in report.residuals))
        self.assertTrue(all(e.direction == 1 for e in report.tau_ladder))

    def test_single_crossing_frequency(self):
        # |transcendental factor| vanishes on the positive imaginary axis only at omega_plus
        spec = char_spec_p0(P0_PARAMS)
        omegas = np.linspace(0.01, 5.0, 5000)
        modulus_gap = np.abs(1j * omegas + spec.b - spec.K) - spec.K
        sign_changes = np.nonzero(np.diff(np.sign(modulus_gap)))[0]
        self.assertEqual(len(sign_changes), 1)
        self.assertAlmostEqual(omegas[sign_changes[0]], 0.8, delta=2e-3)


class TestQuartic(unittest.TestCase):
    """Test cases for the quartic, its resolvent and the positive root test."""

    def test_zero_spec(self):
        spec = CharSpecP1(0, 0, 0, 0, 0, 0, 0)
        q = quartic_from_spec(spec)
        self.assertEqual((q.p, q.q, q.u, q.v), (0, 0, 0, 0))

    def test_quartic_from_p1_spec(self):
        spec = char_spec_p1(P1_PARAMS, find_equilibrium(P1_PARAMS, Label.P1))
        q = quartic_from_spec(spec)
        self.assertAlmostEqual(q.v, 11.56, places=10)
        self.assertAlmostEqual(q.p, spec.a1**2 - 2 * spec.b1 - spec.a2**2, places=12)

    def test_quartic_is_squared_modulus_difference(self):
        spec = char_spec_p1(P1_PARAMS, find_equilibrium(P1_PARAMS, Label.P1))
        q = quartic_from_spec(spec)
        for omega in (0.3, 1.0, 2.2):
            lam = 1j * omega
            expected = abs(spec.r(lam)) ** 2 - abs(spec.q(lam)) ** 2
            self.assertAlmostEqual(q.h(omega**2), expected, places=9)

    def test_resolvent_trivial(self):
        report = resolvent(quartic(0, 0, 0, 0))
        self.assertEqual((report.p1_res, report.q1_res, report.D), (0, 0, 0))
        for z in report.z:
            self.assertEqual(abs(z), 0)

    def test_resolvent_double_stationary_point(self):
        q = quartic(-4, 0, 0, 0)
        report = resolvent(q)
        zs = sorted(z.real for z in report.z)
        np.testing.assert_allclose(zs, [0.0, 0.0, 3.0], atol=1e-9)
        for z in report.z:
            self.assertLess(abs(q.h_prime(z)), 1e-9)

    def test_resolvent_stationary_points(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            p, qq, u, v = rng.uniform(-5, 5, size=4)
            q = quartic(p, qq, u, abs(v))
            for z in resolvent(q).z:
                self.assertLess(abs(q.h_prime(z)), 1e-9 * (1 + abs(z) ** 3))

    def test_positive_root_test(self):
        no_roots = quartic(1.0, 2.0, 3.0, 4.0)
        self.assertEqual(positive_root_test(no_roots, resolvent(no_roots)), (False, None))

        four_roots = quartic(-10.0, 35.0, -50.0, 24.0)
        found, witness = positive_root_test(four_roots, resolvent(four_roots))
        self.assertTrue(found)
        self.assertGreater(witness, 1.0)
        self.assertLess(witness, 4.0)
        self.assertLessEqual(four_roots.h(witness), 0)

    def test_positive_roots(self):
        np.testing.assert_allclose(
            quartic_positive_roots(quartic(-10.0, 35.0, -50.0, 24.0)),
            [1.0, 2.0, 3.0, 4.0],
            atol=1e-9,
        )
        self.assertEqual(quartic_positive_roots(quartic(0, 0, 0, 1.0)), [])
        np.testing.assert_allclose(quartic_positive_roots(quartic(0, 0, 0, -1.0)), [1.0])

    def test_root_test_agrees_with_enumeration(self):
        rng = np.random.default_rng(2024)
        disagreements = 0
        for _ in range(1000):
            a1, b1, c1, d1, a2, b2, c2 = rng.uniform(-3, 3, size=7)
            q = quartic_from_spec(CharSpecP1(a1, b1, c1, d1, a2, b2, c2))
            found, _ = positive_root_test(q, resolvent(q))
            if found != bool(quartic_positive_roots(q)):
                disagreements += 1
        self.assertEqual(disagreements, 0)


class TestP1Ladder(unittest.TestCase):
    """Test cases for the branch-verified ladder at P1."""

    def setUp(self):
        self.spec = char_spec_p1(P1_PARAMS, find_equilibrium(P1_PARAMS, Label.P1))
        self.roots = quartic_positive_roots(quartic_from_spec(self.spec))

    def test_two_crossing_frequencies(self):
        self.assertEqual(len(self.roots), 2)
        self.assertAlmostEqual(self.roots[0], 1.39, delta=0.01)
        self.assertAlmostEqual(self.roots[1], 2.65, delta=0.01)

    def test_ladder(self):
        ladder = tau_ladder_p1(self.spec, self.roots, j_max=3)
        self.assertEqual(len(ladder), 6)
        self.assertEqual([e.tau for e in ladder], sorted(e.tau for e in ladder))
        self.assertAlmostEqual(ladder[0].tau, 0.30329, delta=1e-4)
        for entry in ladder:
            self.assertLess(entry.residual, 1e-8)
            self.assertLess(abs(char_value(self.spec, 1j * entry.omega, entry.tau)), 1e-8)
        for k in (1, 2):
            family = [e for e in ladder if e.k == k]
            for lower, upper in zip(family, family[1:]):
                self.assertAlmostEqual(
                    upper.tau - lower.tau, 2 * math.pi / lower.omega, places=9
                )

    def test_crossing_directions(self):
        ladder = tau_ladder_p1(self.spec, self.roots)
        directions = {e.k: e.direction for e in ladder}
        self.assertEqual(directions, {1: -1, 2: 1})
        branches = {e.k: e.branch for e in ladder}
        self.assertEqual(branches[1], "mirrored")

    def test_report(self):
        report = critical_delay_p1(self.spec)
        self.assertAlmostEqual(report.tau0, 0.30329, delta=1e-4)
        self.assertEqual(report.transversality_sign, 1)
        self.assertGreater(report.transversality_rate, 0)
        self.assertAlmostEqual(report.z0, report.omega0**2, places=12)
        self.assertGreater(report.tau1, report.tau0)

    def test_empty_roots(self):
        with self.assertRaises(NoCrossing):
            tau_ladder_p1(self.spec, [])

    def test_degenerate_crossing(self):
        # h(z) = (z - 1)^4 has a stationary root at z = 1
        degenerate = CharSpecP1(0, 2.0, 0, 1.0, 0, 0, 0)
        report = CriticalDelayReport(
            label="P1",
            omega0=1.0,
            z0=1.0,
            tau_ladder=(LadderEntry(1, 1, 1.0, 1.0, 0.0),),
            tau0=1.0,
            tau1=None,
            transversality_sign=0,
            transversality_rate=0.0,
        )
        self.assertAlmostEqual(quartic_from_spec(degenerate).h_prime(1.0), 0.0)
        with self.assertRaises(DegenerateCrossing):
            transversality_p1(degenerate, report)


if __name__ == "__main__":
    unittest.main()
