"""Tests for the model module."""

import math
import unittest

import numpy as np

from delayhopf.errors import DegenerateParameters, ValidationError
from delayhopf.model import (
    Label,
    State,
    SystemParams,
    equilibria,
    equilibrium_residual,
    find_equilibrium,
    jacobians_at,
    rhs,
    rhs_array,
    shift_from_origin,
    shift_to_origin,
    theta_squared,
)
from tests import P0_PARAMS, P1_PARAMS


class TestSystemParams(unittest.TestCase):
    """Test cases for parameter validation."""

    def test_values_become_floats(self):
        params = SystemParams(a=1, b=2, c=3, d=0, k=1, K=0)
        self.assertIsInstance(params.a, float)
        self.assertEqual(params.as_dict()["c"], 3.0)

    def test_negative_value_names_field(self):
        with self.assertRaises(ValidationError) as ctx:
            SystemParams(a=1.0, b=-0.4, c=1.0, d=0.2, k=0.1, K=1.0)
        self.assertEqual(ctx.exception.field, "b")
        self.assertIn("b", str(ctx.exception))

    def test_non_finite_rejected(self):
        with self.assertRaises(ValidationError):
            SystemParams(a=math.nan, b=0.4, c=1.0, d=0.2, k=0.1, K=1.0)
        with self.assertRaises(ValidationError):
            SystemParams(a=1.0, b=0.4, c=math.inf, d=0.2, k=0.1, K=1.0)

    def test_bool_rejected(self):
        with self.assertRaises(ValidationError):
            SystemParams(a=True, b=0.4, c=1.0, d=0.2, k=0.1, K=1.0)

    def test_with_feedback(self):
        params = P0_PARAMS.with_feedback(0.1)
        self.assertEqual(params.K, 0.1)
        self.assertEqual(params.a, P0_PARAMS.a)


class TestRhs(unittest.TestCase):
    """Test cases for the right-hand side."""

    def test_rhs_vanishes_at_p0(self):
        eq = find_equilibrium(P0_PARAMS, Label.P0)
        value = rhs(eq.point, eq.point, P0_PARAMS)
        for component in value:
            self.assertAlmostEqual(component, 0.0, places=14)

    def test_only_delayed_y_matters(self):
        current = State(0.3, 1.2, -0.4, 0.7)
        delayed = State(9.0, 0.5, -9.0, 9.0)
        other = State(-5.0, 0.5, 5.0, -5.0)
        np.testing.assert_array_equal(
            rhs(current, delayed, P1_PARAMS).as_array(),
            rhs(current, other, P1_PARAMS).as_array(),
        )

    def test_known_value(self):
        current = np.array([1.0, 2.0, 0.5, 0.5])
        delayed = np.array([0.0, 1.0, 0.0, 0.0])
        value = rhs_array(current, delayed, P1_PARAMS)
        expected = [
            0.5 + (2.0 - 0.2) * 1.0 + 0.5,
            1.0 - 0.2 * 2.0 - 1.0 + 1.0 * (2.0 - 1.0),
            -1.0 - 2.5 * 0.5,
            -0.2 * 1.0 * 2.0 - 1.0 * 0.5,
        ]
        np.testing.assert_allclose(value, expected, rtol=0, atol=1e-15)


class TestEquilibria(unittest.TestCase):
    """Test cases for equilibrium computation."""

    def test_p1_coordinates(self):
        eq = find_equilibrium(P1_PARAMS, Label.P1)
        expected = (0.92, 0.75, -0.37, -0.14)
        for got, want in zip(eq.point, expected):
            self.assertAlmostEqual(got, want, delta=5e-3)
        self.assertAlmostEqual(eq.theta**2, 0.85, places=12)

    def test_p2_mirrors_p1(self):
        p1 = find_equilibrium(P1_PARAMS, Label.P1).point
        p2 = find_equilibrium(P1_PARAMS, Label.P2).point
        self.assertAlmostEqual(p2.x, -p1.x)
        self.assertAlmostEqual(p2.y, p1.y)
        self.assertAlmostEqual(p2.z, -p1.z)
        self.assertAlmostEqual(p2.u, -p1.u)

    def test_residuals_vanish(self):
        for params in (P0_PARAMS, P1_PARAMS):
            for eq in equilibria(params):
                self.assertLess(equilibrium_residual(eq, params), 1e-12)

    def test_feedback_does_not_move_equilibria(self):
        for params in (P0_PARAMS, P1_PARAMS):
            self.assertEqual(
                equilibria(params.with_feedback(0.0)), equilibria(params.with_feedback(7.0))
            )

    def test_unique_equilibrium_when_ratio_negative(self):
        params = SystemParams(a=5.0, b=0.4, c=1.5, d=0.1, k=0.17, K=1.0)
        self.assertLess(theta_squared(params), 0)
        found = equilibria(params)
        self.assertEqual([eq.label for eq in found], [Label.P0])
        with self.assertRaises(DegenerateParameters):
            find_equilibrium(params, Label.P1)

    def test_degenerate_parameters(self):
        with self.assertRaises(DegenerateParameters):
            equilibria(SystemParams(a=1.0, b=0.4, c=1.0, d=0.5, k=0.5, K=1.0))
        with self.assertRaises(DegenerateParameters):
            equilibria(SystemParams(a=1.0, b=0.0, c=1.0, d=0.2, k=0.5, K=1.0))


class TestCoordinates(unittest.TestCase):
    """Test cases for the shift that puts P0 at the origin."""

    def test_p0_maps_to_origin(self):
        eq = find_equilibrium(P0_PARAMS, Label.P0)
        shifted = shift_to_origin(eq.point, P0_PARAMS)
        self.assertEqual(tuple(shifted), (0.0, 0.0, 0.0, 0.0))

    def test_shift_round_trip(self):
        state = State(1.0, 2.0, 0.5, 0.5)
        back = shift_from_origin(shift_to_origin(state, P0_PARAMS), P0_PARAMS)
        for got, want in zip(back, state):
            self.assertAlmostEqual(got, want, places=14)


class TestJacobians(unittest.TestCase):
    """Test cases comparing closed-form Jacobians with finite differences."""

    def finite_difference(self, point, params, delayed):
        eps = 1e-6
        base = point.as_array()
        matrix = np.zeros((4, 4))
        for j in range(4):
            step = np.zeros(4)
            step[j] = eps
            if delayed:
                plus = rhs_array(base, base + step, params)
                minus = rhs_array(base, base - step, params)
            else:
                plus = rhs_array(base + step, base, params)
                minus = rhs_array(base - step, base, params)
            matrix[:, j] = (plus - minus) / (2 * eps)
        return matrix

    def test_jacobians_match_finite_differences(self):
        for params in (P0_PARAMS, P1_PARAMS):
            for eq in equilibria(params):
                pair = jacobians_at(eq, params)
                np.testing.assert_allclose(
                    pair.j0,
                    self.finite_difference(eq.point, params, delayed=False),
                    atol=1e-7,
                )
                np.testing.assert_allclose(
                    pair.jtau,
                    self.finite_difference(eq.point, params, delayed=True),
                    atol=1e-7,
                )

    def test_combined(self):
        eq = find_equilibrium(P0_PARAMS, Label.P0)
        pair = jacobians_at(eq, P0_PARAMS)
        np.testing.assert_array_equal(pair.combined(0.0), pair.j0)
        self.assertAlmostEqual(pair.combined(1.0)[1, 1], -P0_PARAMS.b)


if __name__ == "__main__":
    unittest.main()
