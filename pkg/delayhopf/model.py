"""Module defining the delayed financial system, its equilibria and linearizations."""

import logging
import math
from dataclasses import dataclass, fields, replace
from enum import Enum
from typing import Dict, Iterator, List, Optional

import numpy as np

from delayhopf.errors import DegenerateParameters, ValidationError

logger = logging.getLogger(__name__)

STATE_NAMES = ("x", "y", "z", "u")


@dataclass(frozen=True)
class SystemParams:
    """Model constants.

    Attributes:
        a: saving amount
        b: cost per investment
        c: elasticity of demand of commercial markets
        d: profit-margin coupling
        k: profit-margin damping
        K: strength of the delayed feedback on investment demand
    """

    a: float
    b: float
    c: float
    d: float
    k: float
    K: float

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ValidationError(f"must be a number, got {value!r}", f.name)
            if not math.isfinite(value):
                raise ValidationError("must be finite", f.name)
            if value < 0:
                raise ValidationError(f"must be nonnegative, got {value}", f.name)
            object.__setattr__(self, f.name, float(value))

    def with_feedback(self, K: float) -> "SystemParams":
        """Return a copy with a different feedback strength."""
        return replace(self, K=K)

    def as_dict(self) -> Dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class State:
    """Interest rate x, investment demand y, price index z, average profit margin u."""

    x: float
    y: float
    z: float
    u: float

    def __iter__(self) -> Iterator[float]:
        return iter((self.x, self.y, self.z, self.u))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.u], dtype=float)

    @classmethod
    def from_array(cls, values) -> "State":
        x, y, z, u = (float(v) for v in values)
        return cls(x, y, z, u)

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self)


class Label(str, Enum):
    P0 = "P0"
    P1 = "P1"
    P2 = "P2"


@dataclass(frozen=True)
class Equilibrium:
    """A labeled fixed point; theta is only set for P1 and P2."""

    label: Label
    point: State
    theta: Optional[float] = None


@dataclass(frozen=True)
class JacobianPair:
    """Instantaneous (j0) and delayed (jtau) parts of the linearization."""

    j0: np.ndarray
    jtau: np.ndarray

    def combined(self, weight: complex = 1.0) -> np.ndarray:
        """Return j0 + weight * jtau, e.g. weight = exp(-lambda*tau)."""
        return self.j0 + weight * self.jtau


def rhs_array(
    current: np.ndarray, delayed: np.ndarray, params: SystemParams
) -> np.ndarray:
    """Right-hand side on plain arrays; used by the integrator."""
    x, y, z, u = current
    return np.array(
        [
            z + (y - params.a) * x + u,
            1.0 - params.b * y - x * x + params.K * (y - delayed[1]),
            -x - params.c * z,
            -params.d * x * y - params.k * u,
        ]
    )


def rhs(current: State, delayed: State, params: SystemParams) -> State:
    """Evaluate the delayed system at a current and a delayed state.

    Only the y-component of the delayed state enters, through the
    feedback term K[y(t) - y(t - tau)].
    """
    return State.from_array(rhs_array(current.as_array(), delayed.as_array(), params))


def _require_analysis_params(params: SystemParams) -> None:
    if params.b == 0:
        raise DegenerateParameters("b must be positive for the equilibrium analysis")
    if params.c == 0:
        raise DegenerateParameters("c must be positive for the equilibrium analysis")
    if params.d == params.k:
        raise DegenerateParameters("d == k makes the equilibrium formulas singular")


def theta_squared(params: SystemParams) -> float:
    """Return kb(1+ac)/(c(d-k)) + 1, the existence ratio of P1 and P2."""
    _require_analysis_params(params)
    a, b, c, d, k = params.a, params.b, params.c, params.d, params.k
    return k * b * (1 + a * c) / (c * (d - k)) + 1.0


def equilibria(params: SystemParams) -> List[Equilibrium]:
    """Compute the equilibria of the system.

    Args:
        params: Model constants with b > 0, c > 0 and d != k

    Returns:
        [P0] when the existence ratio is <= 0, otherwise [P0, P1, P2]
    """
    _require_analysis_params(params)
    a, b, c, d, k = params.a, params.b, params.c, params.d, params.k

    p0 = Equilibrium(Label.P0, State(0.0, 1.0 / b, 0.0, 0.0))
    ratio = (k * b + a * b * c * k + c * d - c * k) / (c * (d - k))
    if ratio <= 0:
        logger.debug("existence ratio %.6g <= 0: unique equilibrium", ratio)
        return [p0]

    theta = math.sqrt(theta_squared(params))
    y1 = k * (1 + a * c) / (c * (k - d))
    u_factor = d * (1 + a * c) / (c * (d - k))
    p1 = Equilibrium(Label.P1, State(theta, y1, -theta / c, u_factor * theta), theta)
    p2 = Equilibrium(
        Label.P2, State(-theta, y1, theta / c, -u_factor * theta), theta
    )
    return [p0, p1, p2]


def find_equilibrium(params: SystemParams, label: Label) -> Equilibrium:
    """Return the equilibrium with the given label or raise DegenerateParameters."""
    label = Label(label)
    for eq in equilibria(params):
        if eq.label == label:
            return eq
    raise DegenerateParameters(f"equilibrium {label.value} does not exist for {params}")


def equilibrium_residual(eq: Equilibrium, params: SystemParams) -> float:
    """Infinity norm of the right-hand side at the equilibrium."""
    value = rhs(eq.point, eq.point, params)
    return max(abs(v) for v in value)


def shift_to_origin(state: State, params: SystemParams) -> State:
    """Map y to y - 1/b so that P0 sits at the origin."""
    if params.b <= 0:
        raise DegenerateParameters("b must be positive to shift coordinates")
    return State(state.x, state.y - 1.0 / params.b, state.z, state.u)


def shift_from_origin(state: State, params: SystemParams) -> State:
    """Inverse of shift_to_origin."""
    if params.b <= 0:
        raise DegenerateParameters("b must be positive to shift coordinates")
    return State(state.x, state.y + 1.0 / params.b, state.z, state.u)


def jacobians_at(eq: Equilibrium, params: SystemParams) -> JacobianPair:
    """Linearize the system at an equilibrium.

    The matrices are the closed forms for P0 and P1; P2 uses the P1 forms
    with theta replaced by -theta.
    """
    a, b, c, d, k, K = params.a, params.b, params.c, params.d, params.k, params.K
    jtau = np.zeros((4, 4))
    jtau[1, 1] = -K

    if eq.label == Label.P0:
        j0 = np.array(
            [
                [1.0 / b - a, 0.0, 1.0, 1.0],
                [0.0, -b + K, 0.0, 0.0],
                [-1.0, 0.0, -c, 0.0],
                [-d / b, 0.0, 0.0, -k],
            ]
        )
        return JacobianPair(j0, jtau)

    if eq.theta is None:
        raise DegenerateParameters(f"{eq.label.value} requires theta")
    theta = eq.theta if eq.label == Label.P1 else -eq.theta
    j0 = np.array(
        [
            [(k + a * c * d) / (c * (k - d)), theta, 1.0, 1.0],
            [-2.0 * theta, -b + K, 0.0, 0.0],
            [-1.0, 0.0, -c, 0.0],
            [-d * k * (1 + a * c) / (c * (k - d)), -d * theta, 0.0, -k],
        ]
    )
    return JacobianPair(j0, jtau)
