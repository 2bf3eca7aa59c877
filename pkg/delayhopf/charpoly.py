"""Module for characteristic functions and Routh-Hurwitz gates."""

import logging
from dataclasses import dataclass
from typing import List, Tuple, Union

import numpy as np

from delayhopf.errors import DegenerateParameters
from delayhopf.model import Equilibrium, Label, SystemParams

logger = logging.getLogger(__name__)


class _QuasiPolynomialForm:
    """Shared evaluation of R(lambda) + Q(lambda) exp(-lambda tau).

    Subclasses provide `r_coeffs` and `q_coeffs`, highest degree first.
    """

    @property
    def r_coeffs(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def q_coeffs(self) -> np.ndarray:
        raise NotImplementedError

    def r(self, lam):
        return np.polyval(self.r_coeffs, lam)

    def q(self, lam):
        return np.polyval(self.q_coeffs, lam)

    def r_prime(self, lam):
        return np.polyval(np.polyder(self.r_coeffs), lam)

    def q_prime(self, lam):
        q = self.q_coeffs
        if len(q) < 2:
            return np.zeros_like(np.asarray(lam, dtype=complex))
        return np.polyval(np.polyder(q), lam)

    def value(self, lam, tau: float):
        return self.r(lam) + self.q(lam) * np.exp(-lam * tau)

    def derivative(self, lam, tau: float):
        decay = np.exp(-lam * tau)
        return self.r_prime(lam) + (self.q_prime(lam) - tau * self.q(lam)) * decay

    def tau_derivative(self, lam, tau: float):
        return -lam * self.q(lam) * np.exp(-lam * tau)

    def root_bound(self) -> float:
        """Modulus bound for roots with nonnegative real part."""
        r = np.asarray(self.r_coeffs, dtype=float)
        q = np.asarray(self.q_coeffs, dtype=float)
        if len(q) >= len(r):
            raise DegenerateParameters("deg Q must be below deg R for bounded roots")
        padded = np.zeros_like(r)
        padded[len(r) - len(q) :] = q
        if len(r) == 1:
            return 1.0
        return 1.0 + float(np.max(np.abs(r[1:]) + np.abs(padded[1:]))) / abs(r[0])

    def tau_zero_coeffs(self) -> np.ndarray:
        r = np.asarray(self.r_coeffs, dtype=float)
        q = np.asarray(self.q_coeffs, dtype=float)
        total = r.copy()
        total[len(r) - len(q) :] += q
        return total


@dataclass(frozen=True)
class QuasiPolynomial(_QuasiPolynomialForm):
    """Generic R(lambda) + Q(lambda) exp(-lambda tau) with deg Q < deg R."""

    r_terms: Tuple[float, ...]
    q_terms: Tuple[float, ...] = ()

    @property
    def r_coeffs(self) -> np.ndarray:
        return np.asarray(self.r_terms, dtype=float)

    @property
    def q_coeffs(self) -> np.ndarray:
        if not self.q_terms:
            return np.zeros(1)
        return np.asarray(self.q_terms, dtype=float)


@dataclass(frozen=True)
class CharSpecP0:
    """[lambda + b - K + K exp(-lambda tau)] (lambda^3 + p1 lambda^2 + p2 lambda + p3)."""

    p1: float
    p2: float
    p3: float
    b: float
    K: float

    @property
    def cubic_coeffs(self) -> np.ndarray:
        return np.array([1.0, self.p1, self.p2, self.p3])

    def cubic(self, lam):
        return np.polyval(self.cubic_coeffs, lam)

    def transcendental(self, lam, tau: float):
        return lam + self.b - self.K + self.K * np.exp(-lam * tau)

    def value(self, lam, tau: float):
        return self.transcendental(lam, tau) * self.cubic(lam)

    def derivative(self, lam, tau: float):
        t_prime = 1.0 - self.K * tau * np.exp(-lam * tau)
        c_prime = np.polyval(np.polyder(self.cubic_coeffs), lam)
        return t_prime * self.cubic(lam) + self.transcendental(lam, tau) * c_prime

    def tau_derivative(self, lam, tau: float):
        return -self.K * lam * np.exp(-lam * tau) * self.cubic(lam)

    def root_bound(self) -> float:
        cubic_bound = 1.0 + max(abs(self.p1), abs(self.p2), abs(self.p3))
        return max(cubic_bound, abs(self.b - self.K) + self.K)

    def tau_zero_coeffs(self) -> np.ndarray:
        return np.polymul([1.0, self.b], self.cubic_coeffs)


@dataclass(frozen=True)
class CharSpecP1(_QuasiPolynomialForm):
    """R(lambda) = lambda^4 + a1 lambda^3 + b1 lambda^2 + c1 lambda + d1,
    Q(lambda) = a2 lambda^3 + b2 lambda^2 + c2 lambda."""

    a1: float
    b1: float
    c1: float
    d1: float
    a2: float
    b2: float
    c2: float

    @property
    def r_coeffs(self) -> np.ndarray:
        return np.array([1.0, self.a1, self.b1, self.c1, self.d1])

    @property
    def q_coeffs(self) -> np.ndarray:
        return np.array([self.a2, self.b2, self.c2, 0.0])

    def as_quasi_polynomial(self) -> QuasiPolynomial:
        return QuasiPolynomial(
            tuple(self.r_coeffs.tolist()), tuple(self.q_coeffs.tolist())
        )


CharSpec = Union[CharSpecP0, CharSpecP1, QuasiPolynomial]


def char_spec_p0(params: SystemParams) -> CharSpecP0:
    """Coefficients of the characteristic equation at P0."""
    a, b, c, d, k = params.a, params.b, params.c, params.d, params.k
    if b <= 0:
        raise DegenerateParameters("b must be positive at P0")
    p1 = k + a + c - 1.0 / b
    p2 = c * k + a * k + a * c - (k + c - d) / b + 1.0
    p3 = (1.0 + a * c - c / b) * k + c * d / b
    return CharSpecP0(p1, p2, p3, b, params.K)


def char_spec_p1(params: SystemParams, eq: Equilibrium) -> CharSpecP1:
    """Coefficients of R and Q at P1 (identical at P2: theta only enters squared)."""
    if eq.label not in (Label.P1, Label.P2) or eq.theta is None:
        raise DegenerateParameters("char_spec_p1 needs the P1 or P2 equilibrium")
    a, b, c, d, k, K = params.a, params.b, params.c, params.d, params.k, params.K
    if d == k or c == 0:
        raise DegenerateParameters("d == k makes the P1 coefficients singular")
    th2 = eq.theta**2
    cdk = c * (d - k)

    a1 = b + c + k - K + (a * c * d + k) / cdk
    b1 = (
        1.0
        + c * k
        + 2.0 * th2
        + (c + k) * (b - K)
        + (a * c * d * (b + c - K) + k * (b + c - d + k - K)) / cdk
    )
    c1 = (b - K) / cdk * (
        c * d + k * (k - d) + c * c * (a * d + k * (d - k))
    ) + 2.0 * (c - d + k) * th2
    d1 = 2.0 * c * (k - d) * th2
    a2 = K
    b2 = (c + k + (a * c * d + k) / cdk) * K
    c2 = (1.0 + c * k + (a * d * c * c + k * (c - d + k)) / cdk) * K
    return CharSpecP1(a1, b1, c1, d1, a2, b2, c2)


def char_value(spec: CharSpec, lam, tau: float):
    """Evaluate the characteristic function; lam may be a scalar or an array."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return spec.value(lam, tau)


def char_derivative(spec: CharSpec, lam, tau: float):
    """Partial derivative of the characteristic function in lambda."""
    return spec.derivative(lam, tau)


def char_tau_derivative(spec: CharSpec, lam, tau: float):
    """Partial derivative of the characteristic function in tau."""
    return spec.tau_derivative(lam, tau)


def tau_zero_polynomial(spec: CharSpec) -> np.ndarray:
    """Degree-4 polynomial obtained at tau = 0, highest degree first."""
    return spec.tau_zero_coeffs()


def companion_roots(coeffs) -> np.ndarray:
    """Roots of a polynomial via the eigenvalues of its companion matrix."""
    coeffs = np.trim_zeros(np.asarray(coeffs, dtype=float), "f")
    if len(coeffs) < 2:
        return np.array([], dtype=complex)
    companion = np.diag(np.ones(len(coeffs) - 2), -1)
    companion[0, :] = -coeffs[1:] / coeffs[0]
    return np.linalg.eigvals(companion)


@dataclass(frozen=True)
class GateCondition:
    """One Routh-Hurwitz inequality `value > 0`."""

    name: str
    value: float

    @property
    def holds(self) -> bool:
        return self.value > 0

    @property
    def marginal(self) -> bool:
        return self.value == 0


@dataclass(frozen=True)
class StabilityGate:
    """Outcome of a Routh-Hurwitz check with per-condition detail."""

    conditions: Tuple[GateCondition, ...]

    @property
    def passed(self) -> bool:
        return all(c.holds for c in self.conditions)

    @property
    def marginal(self) -> bool:
        return any(c.marginal for c in self.conditions)

    @property
    def violations(self) -> List[str]:
        return [c.name for c in self.conditions if not c.holds]

    def as_dict(self) -> dict:
        return {c.name: c.holds for c in self.conditions}


def routh_hurwitz_p0(spec: CharSpecP0) -> StabilityGate:
    """Gate on the cubic factor at P0: p1 > 0, p3 > 0, p1 p2 > p3."""
    return StabilityGate(
        (
            GateCondition("p1>0", spec.p1),
            GateCondition("p3>0", spec.p3),
            GateCondition("p1p2>p3", spec.p1 * spec.p2 - spec.p3),
        )
    )


def routh_hurwitz_p1_tau0(spec: CharSpecP1) -> StabilityGate:
    """Gate on the tau = 0 quartic at P1."""
    A = spec.a1 + spec.a2
    B = spec.b1 + spec.b2
    C = spec.c1 + spec.c2
    D = spec.d1
    return StabilityGate(
        (
            GateCondition("a1+a2>0", A),
            GateCondition("(a1+a2)(b1+b2)-(c1+c2)>0", A * B - C),
            GateCondition("d1>0", D),
            GateCondition(
                "(c1+c2)[(a1+a2)(b1+b2)-(c1+c2)]-(a1+a2)^2 d1>0",
                C * (A * B - C) - A * A * D,
            ),
        )
    )
