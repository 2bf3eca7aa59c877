"""Tests for the solver module."""

import math
import unittest

import numpy as np
from scipy.integrate import solve_ivp

from delayhopf.errors import NonFiniteState, OutOfRange, StepTooLarge, ValidationError
from delayhopf.model import Label, State, find_equilibrium, rhs_array, shift_from_origin
from delayhopf.solver import (
    HistoryFunction,
    integrate,
    integrate_dde,
    sample,
    shift_trajectory,
)
from tests import P0_PARAMS, P1_PARAMS


def pure_delay(t, current, delayed):
    return delayed


def mixed_delay(t, current, delayed):
    return current + delayed


class TestHistoryFunction(unittest.TestCase):
    """Test cases for initial data on [-tau, 0]."""

    def test_constant(self):
        history = HistoryFunction.constant(State(1.0, 2.0, 3.0, 4.0))
        self.assertEqual(history.dimension, 4)
        np.testing.assert_array_equal(history(-5.0), [1.0, 2.0, 3.0, 4.0])
        self.assertTrue(history.covers(-100.0, 0.0))

    def test_sampled_linear_is_exact(self):
        times = np.linspace(-1.0, 0.0, 11)
        history = HistoryFunction.sampled(times, times[:, None], np.ones((11, 1)))
        self.assertAlmostEqual(float(history(-0.55)[0]), -0.55, places=14)
        self.assertEqual(float(history(times[7])[0]), times[7])

    def test_sampled_out_of_range(self):
        times = np.linspace(-1.0, 0.0, 11)
        history = HistoryFunction.sampled(times, times[:, None], np.ones((11, 1)))
        self.assertFalse(history.covers(-2.0, 0.0))
        with self.assertRaises(OutOfRange):
            history(-1.5)

    def test_invalid_knots(self):
        with self.assertRaises(ValidationError):
            HistoryFunction.sampled([0.0, 0.0], [[1.0], [1.0]], [[0.0], [0.0]])
        with self.assertRaises(ValidationError):
            HistoryFunction("linear")


class TestMethodOfSteps(unittest.TestCase):
    """Test cases for the RK4 method of steps on scalar problems."""

    def test_pure_delay_known_solution(self):
        # y(t) = 1 + t on [0, 1], 1 + t^2 / 2 + 1 / 2 on [1, 2]
        traj = integrate_dde(pure_delay, 1.0, HistoryFunction.constant([1.0]), 2.0, 0.01)
        self.assertEqual(traj.end, 2.0)
        self.assertAlmostEqual(float(traj.at(0.5)[0]), 1.5, places=12)
        self.assertAlmostEqual(float(traj.at(1.0)[0]), 2.0, places=12)
        self.assertAlmostEqual(float(traj.at(2.0)[0]), 3.5, places=12)
        self.assertAlmostEqual(float(traj.at(1.505)[0]), 1.5 + 1.505**2 / 2, places=10)

    def test_sampled_history(self):
        # history y = t gives y = t^2 / 2 - t on [0, 1]
        times = np.linspace(-1.0, 0.0, 21)
        history = HistoryFunction.sampled(times, times[:, None], np.ones((21, 1)))
        traj = integrate_dde(pure_delay, 1.0, history, 1.0, 0.01)
        self.assertAlmostEqual(float(traj.at(1.0)[0]), -0.5, places=12)
        self.assertAlmostEqual(float(traj.at(-0.25)[0]), -0.25, places=12)

    def test_fourth_order_convergence(self):
        exact = 2 * math.e**2 + 1
        errors = []
        for n in (16, 32, 64, 128, 256):
            traj = integrate_dde(
                mixed_delay, 1.0, HistoryFunction.constant([1.0]), 2.0, 1.0 / n
            )
            errors.append(abs(float(traj.states[-1, 0]) - exact))
        for coarse, fine in zip(errors, errors[1:]):
            self.assertGreater(coarse / fine, 12.0)
            self.assertLess(coarse / fine, 20.0)

    def test_step_snaps_to_delay(self):
        traj = integrate_dde(pure_delay, 0.3, HistoryFunction.constant([1.0]), 1.0, 0.07)
        h = traj.times[1] - traj.times[0]
        self.assertAlmostEqual(0.3 / h, round(0.3 / h), places=9)
        self.assertLessEqual(h, 0.07)
        self.assertGreaterEqual(traj.end, 1.0)
        self.assertLess(traj.end, 1.0 + h + 1e-12)

    def test_step_too_large(self):
        with self.assertRaises(StepTooLarge):
            integrate_dde(pure_delay, 0.1, HistoryFunction.constant([1.0]), 1.0, 0.05)

    def test_invalid_inputs(self):
        history = HistoryFunction.constant([1.0])
        with self.assertRaises(ValidationError) as ctx:
            integrate_dde(pure_delay, 1.0, history, 1.0, 0.0)
        self.assertEqual(ctx.exception.field, "step")
        with self.assertRaises(ValidationError):
            integrate_dde(pure_delay, -1.0, history, 1.0, 0.01)
        with self.assertRaises(ValidationError):
            integrate_dde(pure_delay, 1.0, history, 0.0, 0.01)

    def test_zero_delay_is_plain_rk4(self):
        h = 0.05
        traj = integrate_dde(
            lambda t, y, d: -y, 0.0, HistoryFunction.constant([1.0]), 1.0, h
        )
        y = np.array([1.0])
        for _ in range(20):
            k1 = -y
            k2 = -(y + 0.5 * h * k1)
            k3 = -(y + 0.5 * h * k2)
            k4 = -(y + h * k3)
            y = y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        np.testing.assert_allclose(traj.states[-1], y, rtol=1e-14)

    def test_blow_up_truncates(self):
        traj = integrate_dde(
            lambda t, y, d: 50.0 * y, 0.0, HistoryFunction.constant([1.0]), 2.0, 0.01
        )
        self.assertTrue(traj.blew_up)
        self.assertGreater(traj.blow_up_time, 0.5)
        self.assertLess(traj.blow_up_time, 0.7)
        self.assertLess(traj.end, traj.blow_up_time)
        self.assertTrue(np.all(np.isfinite(traj.states)))

    def test_blow_up_strict(self):
        with self.assertRaises(NonFiniteState) as ctx:
            integrate_dde(
                lambda t, y, d: 50.0 * y,
                0.0,
                HistoryFunction.constant([1.0]),
                2.0,
                0.01,
                strict=True,
            )
        self.assertGreater(ctx.exception.time, 0.5)


class TestFinancialSystem(unittest.TestCase):
    """Test cases for integrating the delayed financial system."""

    def test_equilibrium_is_kept(self):
        eq = find_equilibrium(P1_PARAMS, Label.P1)
        traj = integrate(P1_PARAMS, 0.2, HistoryFunction.constant(eq.point), 100.0, 0.01)
        deviation = np.abs(traj.states - eq.point.as_array())
        self.assertLess(float(np.max(deviation)), 1e-9)

    def test_zero_delay_matches_solve_ivp(self):
        start = np.array([1.0, 2.0, 0.5, 0.5])
        traj = integrate(P1_PARAMS, 0.0, HistoryFunction.constant(start), 10.0, 0.01)
        reference = solve_ivp(
            lambda t, y: rhs_array(y, y, P1_PARAMS),
            (0.0, 10.0),
            start,
            rtol=1e-11,
            atol=1e-12,
        )
        np.testing.assert_allclose(traj.states[-1], reference.y[:, -1], atol=1e-6)

    def test_deterministic(self):
        history = HistoryFunction.constant([1.0, 2.0, 0.5, 0.5])
        first = integrate(P1_PARAMS, 0.3, history, 20.0, 0.01)
        second = integrate(P1_PARAMS, 0.3, history, 20.0, 0.01)
        np.testing.assert_array_equal(first.states, second.states)
        np.testing.assert_array_equal(first.times, second.times)

    def test_wrong_dimension(self):
        with self.assertRaises(ValidationError):
            integrate(P1_PARAMS, 0.3, HistoryFunction.constant([1.0]), 1.0, 0.01)

    def test_sample(self):
        history = HistoryFunction.constant([1.0, 2.0, 0.5, 0.5])
        traj = integrate(P1_PARAMS, 0.3, history, 5.0, 0.01)
        state = sample(traj, float(traj.times[10]))
        self.assertIsInstance(state, State)
        np.testing.assert_array_equal(state.as_array(), traj.states[10])
        self.assertEqual(tuple(sample(traj, -0.2)), (1.0, 2.0, 0.5, 0.5))
        with self.assertRaises(OutOfRange):
            sample(traj, traj.end + 1.0)
        with self.assertRaises(OutOfRange):
            sample(traj, -0.5)

    def test_converges_to_p0_below_critical_delay(self):
        start = shift_from_origin(State(1.0, 2.0, 0.5, 0.5), P0_PARAMS)
        traj = integrate(P0_PARAMS, 0.7, HistoryFunction.constant(start), 200.0, 0.01)
        shifted = shift_trajectory(traj)
        tail = shifted.states[shifted.times > 190.0]
        self.assertLess(float(np.max(np.abs(tail))), 1e-4)


class TestShiftTrajectory(unittest.TestCase):
    """Test cases for moving a trajectory into P0-centred coordinates."""

    def setUp(self):
        history = HistoryFunction.constant([0.1, 2.5, 0.0, 0.0])
        self.traj = integrate(P0_PARAMS, 0.5, history, 2.0, 0.01)

    def test_shift(self):
        shifted = shift_trajectory(self.traj)
        self.assertEqual(shifted.coordinates, "shifted")
        np.testing.assert_allclose(
            shifted.states[:, 1], self.traj.states[:, 1] - 2.5, atol=1e-15
        )
        np.testing.assert_array_equal(shifted.states[:, 0], self.traj.states[:, 0])
        np.testing.assert_allclose(shifted.history(-0.2), [0.1, 0.0, 0.0, 0.0])
        self.assertIs(shift_trajectory(shifted), shifted)

    def test_shift_needs_params(self):
        bare = integrate_dde(pure_delay, 1.0, HistoryFunction.constant([1.0]), 1.0, 0.1)
        with self.assertRaises(ValidationError):
            shift_trajectory(bare)


if __name__ == "__main__":
    unittest.main()
