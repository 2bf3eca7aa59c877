"""Module for integrating delay differential equations by the method of steps."""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from delayhopf import BLOWUP_THRESHOLD, DEFAULT_STEP
from delayhopf.errors import (
    NonFiniteState,
    OutOfRange,
    StepTooLarge,
    ValidationError,
)
from delayhopf.model import State, SystemParams, rhs_array

logger = logging.getLogger(__name__)

DelayedRhs = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


def _hermite(t0, t1, y0, y1, d0, d1, t):
    """Cubic Hermite interpolant on [t0, t1] from end values and slopes."""
    h = t1 - t0
    s = (t - t0) / h
    s2 = s * s
    s3 = s2 * s
    return (
        (2 * s3 - 3 * s2 + 1) * y0
        + (s3 - 2 * s2 + s) * h * d0
        + (-2 * s3 + 3 * s2) * y1
        + (s3 - s2) * h * d1
    )


def _interpolate(times, states, derivatives, t):
    i = int(np.searchsorted(times, t, side="right")) - 1
    if 0 <= i < len(times) and times[i] == t:
        return states[i].copy()
    i = min(max(i, 0), len(times) - 2)
    return _hermite(
        times[i],
        times[i + 1],
        states[i],
        states[i + 1],
        derivatives[i],
        derivatives[i + 1],
        t,
    )


@dataclass(frozen=True)
class HistoryFunction:
    """Initial data on [-tau, 0]: a constant state or a dense buffer of knots."""

    kind: str
    constant_value: Optional[np.ndarray] = None
    times: Optional[np.ndarray] = None
    states: Optional[np.ndarray] = None
    derivatives: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == "constant":
            if self.constant_value is None:
                raise ValidationError("constant history needs a value", "history")
            return
        if self.kind != "sampled":
            raise ValidationError(f"unknown history kind {self.kind!r}", "history")
        if self.times is None or self.states is None or self.derivatives is None:
            raise ValidationError("sampled history needs knots", "history")
        if len(self.times) < 2 or np.any(np.diff(self.times) <= 0):
            raise ValidationError("knot times must be strictly increasing", "history")

    @classmethod
    def constant(cls, value) -> "HistoryFunction":
        if isinstance(value, State):
            value = value.as_array()
        return cls("constant", constant_value=np.atleast_1d(np.asarray(value, float)))

    @classmethod
    def sampled(cls, times, states, derivatives) -> "HistoryFunction":
        return cls(
            "sampled",
            times=np.asarray(times, dtype=float),
            states=np.atleast_2d(np.asarray(states, dtype=float)),
            derivatives=np.atleast_2d(np.asarray(derivatives, dtype=float)),
        )

    @property
    def dimension(self) -> int:
        if self.kind == "constant":
            return len(self.constant_value)
        return self.states.shape[1]

    def covers(self, start: float, end: float) -> bool:
        if self.kind == "constant":
            return True
        return self.times[0] <= start and self.times[-1] >= end

    def __call__(self, t: float) -> np.ndarray:
        if self.kind == "constant":
            return self.constant_value.copy()
        if t < self.times[0] or t > self.times[-1]:
            raise OutOfRange(f"history sampled at t={t} outside its knots")
        return _interpolate(self.times, self.states, self.derivatives, t)

    def shifted(self, offset: np.ndarray) -> "HistoryFunction":
        """Return the history translated by a constant vector."""
        if self.kind == "constant":
            return replace(self, constant_value=self.constant_value + offset)
        return replace(self, states=self.states + offset)


@dataclass(frozen=True)
class Trajectory:
    """Knots of a computed solution with the data needed for dense output."""

    times: np.ndarray
    states: np.ndarray
    derivatives: np.ndarray
    tau: float
    history: HistoryFunction
    params: Optional[SystemParams] = None
    coordinates: str = "original"
    blow_up_time: Optional[float] = None

    @property
    def blew_up(self) -> bool:
        return self.blow_up_time is not None

    @property
    def start(self) -> float:
        return -self.tau

    @property
    def end(self) -> float:
        return float(self.times[-1])

    def component(self, index: int) -> np.ndarray:
        return self.states[:, index]

    def at(self, t: float) -> np.ndarray:
        """Dense output as an array; exact at knots."""
        if t < self.start or t > self.end:
            raise OutOfRange(f"t={t} outside [{self.start}, {self.end}]")
        if t < self.times[0]:
            return self.history(t)
        return _interpolate(self.times, self.states, self.derivatives, t)


def _check_step(tau: float, step: float, t_end: float) -> None:
    if not step > 0:
        raise ValidationError(f"must be positive, got {step}", "step")
    if not t_end > 0:
        raise ValidationError(f"must be positive, got {t_end}", "horizon")
    if tau < 0:
        raise ValidationError(f"must be nonnegative, got {tau}", "tau")
    if tau > 0 and step > tau / 4.0:
        raise StepTooLarge(f"step {step} exceeds tau/4 = {tau / 4.0}")


def integrate_dde(
    fun: DelayedRhs,
    tau: float,
    history: HistoryFunction,
    t_end: float,
    step: float = DEFAULT_STEP,
    strict: bool = False,
) -> Trajectory:
    """Integrate y'(t) = fun(t, y(t), y(t - tau)) with classic RK4.

    The step is shrunk to tau/n so that multiples of tau fall on knots.
    Delayed values come from the history on [-tau, 0] and from cubic
    Hermite interpolation of the computed knots afterwards.

    Args:
        fun: Right-hand side taking (t, current, delayed)
        tau: Delay, 0 for an ordinary differential equation
        history: Initial data on [-tau, 0]
        t_end: Integration stops at the first knot at or after t_end
        step: Requested step size, at most tau/4
        strict: Raise NonFiniteState on blow-up instead of truncating

    Returns:
        Trajectory with knots at t = 0, h, 2h, ...
    """
    _check_step(tau, step, t_end)
    if tau > 0:
        per_delay = max(4, math.ceil(tau / step - 1e-9))
        h = tau / per_delay
        if not history.covers(-tau, 0.0):
            raise ValidationError("history does not cover [-tau, 0]", "history")
    else:
        per_delay = 0
        h = step
    count = math.ceil(t_end / h - 1e-9)

    dim = history.dimension
    times = h * np.arange(count + 1)
    states = np.empty((count + 1, dim))
    derivatives = np.empty((count + 1, dim))
    states[0] = history(0.0)

    def delayed(k: int, c: float, current: np.ndarray) -> np.ndarray:
        if tau == 0:
            return current
        m = k - per_delay
        if m < 0:
            return history(min(0.0, max(-tau, times[k] + c * h - tau)))
        if c == 0.0:
            return states[m]
        if c == 1.0:
            return states[m + 1]
        return 0.5 * (states[m] + states[m + 1]) + h * (
            derivatives[m] - derivatives[m + 1]
        ) / 8.0

    blow_up_time = None
    last = count
    for k in range(count):
        t = times[k]
        y = states[k]
        k1 = fun(t, y, delayed(k, 0.0, y))
        derivatives[k] = k1
        y2 = y + 0.5 * h * k1
        k2 = fun(t + 0.5 * h, y2, delayed(k, 0.5, y2))
        y3 = y + 0.5 * h * k2
        k3 = fun(t + 0.5 * h, y3, delayed(k, 0.5, y3))
        y4 = y + h * k3
        k4 = fun(t + h, y4, delayed(k, 1.0, y4))
        new = y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0

        if not np.all(np.isfinite(new)) or np.max(np.abs(new)) > BLOWUP_THRESHOLD:
            blow_up_time = float(times[k + 1])
            if strict:
                raise NonFiniteState(
                    f"solution exceeded {BLOWUP_THRESHOLD:g} at t={blow_up_time}",
                    blow_up_time,
                )
            logger.info("solution blew up at t=%.6g; truncating", blow_up_time)
            last = k
            break
        states[k + 1] = new

    if blow_up_time is None:
        y = states[count]
        derivatives[count] = fun(times[count], y, delayed(count, 0.0, y))

    return Trajectory(
        times=times[: last + 1],
        states=states[: last + 1],
        derivatives=derivatives[: last + 1],
        tau=float(tau),
        history=history,
        blow_up_time=blow_up_time,
    )


def integrate(
    params: SystemParams,
    tau: float,
    history: HistoryFunction,
    t_end: float,
    step: float = DEFAULT_STEP,
    strict: bool = False,
) -> Trajectory:
    """Integrate the delayed financial system in original coordinates."""
    if history.dimension != 4:
        raise ValidationError("history must have four components", "history")

    def fun(t, current, lagged):
        return rhs_array(current, lagged, params)

    trajectory = integrate_dde(fun, tau, history, t_end, step, strict)
    logger.debug(
        "integrated tau=%.6g to t=%.6g with %d knots",
        tau,
        trajectory.end,
        len(trajectory.times),
    )
    return replace(trajectory, params=params)


def sample(traj: Trajectory, t: float) -> State:
    """State of the trajectory at time t, from history or dense output."""
    return State.from_array(traj.at(t))


def shift_trajectory(traj: Trajectory) -> Trajectory:
    """Express a trajectory in coordinates with P0 at the origin."""
    if traj.params is None or traj.params.b <= 0:
        raise ValidationError("shifting needs params with b > 0", "b")
    if traj.coordinates == "shifted":
        return traj
    offset = np.array([0.0, -1.0 / traj.params.b, 0.0, 0.0])
    return replace(
        traj,
        states=traj.states + offset,
        history=traj.history.shifted(offset),
        coordinates="shifted",
    )
