"""Module computing crossing frequencies and critical delays at P0 and P1."""

import cmath
import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from delayhopf import (
    CROSSING_TOLERANCE,
    DEFAULT_JMAX,
    REALNESS_TOLERANCE,
    SIMPLICITY_TOLERANCE,
)
from delayhopf.charpoly import CharSpecP1, char_spec_p0, char_value
from delayhopf.errors import (
    BranchFailure,
    DegenerateCrossing,
    DegenerateParameters,
    NoCrossing,
)
from delayhopf.model import SystemParams

logger = logging.getLogger(__name__)

SIGMA = complex(-0.5, math.sqrt(3.0) / 2.0)


@dataclass(frozen=True)
class QuarticSpec:
    """h(z) = z^4 + p z^3 + q z^2 + u z + v with z = omega^2."""

    p: float
    q: float
    u: float
    v: float
    source: Optional[CharSpecP1] = field(default=None, compare=False)

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([1.0, self.p, self.q, self.u, self.v])

    def h(self, z):
        return np.polyval(self.coeffs, z)

    def h_prime(self, z):
        return 4 * z**3 + 3 * self.p * z**2 + 2 * self.q * z + self.u


@dataclass(frozen=True)
class ResolventReport:
    """Cardano data for the stationary points of h."""

    p1_res: float
    q1_res: float
    D: float
    y: Tuple[complex, complex, complex]
    z: Tuple[complex, complex, complex]

    def real_stationary_points(self) -> List[float]:
        return [
            s.real
            for s in self.z
            if abs(s.imag) <= REALNESS_TOLERANCE * max(1.0, abs(s))
        ]


@dataclass(frozen=True)
class LadderEntry:
    """One critical delay tau_k^(j) with its crossing frequency."""

    k: int
    j: int
    tau: float
    omega: float
    residual: float
    direction: int = 1
    branch: str = "arccos"


@dataclass(frozen=True)
class CriticalDelayReport:
    """Crossing data and critical delays for one equilibrium."""

    label: str
    omega0: float
    z0: float
    tau_ladder: Tuple[LadderEntry, ...]
    tau0: float
    tau1: Optional[float]
    transversality_sign: int
    transversality_rate: float

    @property
    def residuals(self) -> List[float]:
        return [entry.residual for entry in self.tau_ladder]


def omega_plus(params: SystemParams) -> Optional[float]:
    """Crossing frequency of the transcendental factor at P0, or None when K <= b/2."""
    if params.b <= 0:
        raise DegenerateParameters("b must be positive")
    if params.K <= params.b / 2.0:
        return None
    return math.sqrt(2.0 * params.K * params.b - params.b**2)


def tau_ladder_p0(params: SystemParams, j_max: int = DEFAULT_JMAX) -> List[float]:
    """Critical delays tau_j, j = 0..j_max, of the transcendental factor at P0."""
    omega = omega_plus(params)
    if omega is None:
        raise NoCrossing(f"K = {params.K} <= b/2 = {params.b / 2}: no crossing")
    base = math.acos((params.K - params.b) / params.K) / omega
    return [base + 2.0 * j * math.pi / omega for j in range(j_max + 1)]


def transversality_p0(params: SystemParams, tau_j: float) -> float:
    """d Re(lambda)/d tau at (i omega_+, tau_j); always positive."""
    omega = omega_plus(params)
    if omega is None:
        raise NoCrossing("transversality needs K > b/2")
    K = params.K
    denominator = (math.cos(omega * tau_j) - K * tau_j) ** 2 + math.sin(
        omega * tau_j
    ) ** 2
    return omega**2 / denominator


def critical_delay_p0(
    params: SystemParams, j_max: int = DEFAULT_JMAX
) -> CriticalDelayReport:
    """Build the critical delay report of P0 from the closed-form ladder."""
    spec = char_spec_p0(params)
    omega = omega_plus(params)
    taus = tau_ladder_p0(params, j_max)
    entries = []
    for j, tau in enumerate(taus):
        residual = abs(char_value(spec, 1j * omega, tau))
        if residual >= CROSSING_TOLERANCE:
            raise BranchFailure(f"P0 crossing residual {residual:.3g} at tau={tau}")
        entries.append(LadderEntry(1, j, tau, omega, residual))
    return CriticalDelayReport(
        label="P0",
        omega0=omega,
        z0=omega**2,
        tau_ladder=tuple(entries),
        tau0=taus[0],
        tau1=taus[1] if len(taus) > 1 else None,
        transversality_sign=1,
        transversality_rate=transversality_p0(params, taus[0]),
    )


def quartic_from_spec(spec: CharSpecP1) -> QuarticSpec:
    """Squared-modulus quartic |R(i w)|^2 - |Q(i w)|^2 in z = w^2."""
    a1, b1, c1, d1 = spec.a1, spec.b1, spec.c1, spec.d1
    a2, b2, c2 = spec.a2, spec.b2, spec.c2
    return QuarticSpec(
        p=a1 * a1 - 2 * b1 - a2 * a2,
        q=b1 * b1 + 2 * d1 - 2 * a1 * c1 - b2 * b2 + 2 * a2 * c2,
        u=c1 * c1 - 2 * b1 * d1 - c2 * c2,
        v=d1 * d1,
        source=spec,
    )


def _principal_cbrt(value: complex) -> complex:
    if value == 0:
        return 0j
    return cmath.exp(cmath.log(value) / 3.0)


def _polish_stationary_point(quartic: QuarticSpec, z: complex) -> complex:
    # Newton on h'(z) recovers digits lost to cancellation in Cardano's formula
    for _ in range(3):
        slope = 12 * z * z + 6 * quartic.p * z + 2 * quartic.q
        if slope == 0:
            break
        step = quartic.h_prime(z) / slope
        if not cmath.isfinite(step) or abs(step) > 1e-6 * (1.0 + abs(z)):
            break
        z -= step
    return z


def resolvent(quartic: QuarticSpec) -> ResolventReport:
    """Stationary points of h through the depressed cubic y^3 + p1 y + q1 = 0."""
    p, q, u = quartic.p, quartic.q, quartic.u
    p1_res = q / 2.0 - 3.0 * p * p / 16.0
    q1_res = p**3 / 32.0 - p * q / 8.0 + u / 4.0
    D = (q1_res / 2.0) ** 2 + (p1_res / 3.0) ** 3

    if D >= 0:
        root_d = math.sqrt(D)
        A = complex(np.cbrt(-q1_res / 2.0 + root_d))
        B = complex(np.cbrt(-q1_res / 2.0 - root_d))
    else:
        A = _principal_cbrt(complex(-q1_res / 2.0, math.sqrt(-D)))
        # pair the conjugate radicand so that A * B = -p1/3
        B = -p1_res / (3.0 * A) if A != 0 else 0j

    ys = (A + B, SIGMA * A + SIGMA**2 * B, SIGMA**2 * A + SIGMA * B)
    if D < 0:
        ys = tuple(
            complex(y.real, 0.0) if abs(y.imag) < 1e-10 * max(1.0, abs(y)) else y
            for y in ys
        )
    zs = []
    for y in ys:
        z = y - p / 4.0
        if abs(z.imag) <= REALNESS_TOLERANCE * max(1.0, abs(z)):
            z = complex(_polish_stationary_point(quartic, z.real), 0.0)
        zs.append(z)
    return ResolventReport(p1_res, q1_res, D, tuple(ys), tuple(zs))


def positive_root_test(
    quartic: QuarticSpec, report: ResolventReport
) -> Tuple[bool, Optional[float]]:
    """Decide whether h has a positive root from its stationary points.

    Returns:
        Tuple of (has_positive_root, witness stationary point or None)
    """
    if report.D >= 0:
        z1 = report.z[0]
        if abs(z1.imag) > REALNESS_TOLERANCE * max(1.0, abs(z1)):
            return False, None
        if z1.real > 0 and quartic.h(z1.real) < 0:
            return True, z1.real
        return False, None

    candidates = [
        z for z in report.real_stationary_points() if z > 0 and quartic.h(z) <= 0
    ]
    if not candidates:
        return False, None
    witness = min(candidates, key=quartic.h)
    return True, witness


def quartic_positive_roots(quartic: QuarticSpec) -> List[float]:
    """All real positive roots of h, with multiplicity, in ascending order."""
    roots = np.roots(quartic.coeffs)
    found = []
    for root in roots:
        if abs(root.imag) > REALNESS_TOLERANCE * max(1.0, abs(root)):
            continue
        z = root.real
        for _ in range(3):
            slope = quartic.h_prime(z)
            if slope == 0:
                break
            step = quartic.h(z) / slope
            if abs(step) > 1e-6 * (1.0 + abs(z)):
                break
            z -= step
        if z > 0:
            found.append(float(z))
    return sorted(found)


def _tau_cosine(spec: CharSpecP1, omega: float) -> float:
    a1, b1, c1, d1 = spec.a1, spec.b1, spec.c1, spec.d1
    a2, b2, c2 = spec.a2, spec.b2, spec.c2
    w2 = omega * omega
    w4 = w2 * w2
    numerator = (
        (b2 - a1 * a2) * w4 + (a1 * c2 + a2 * c1 - b1 * b2) * w2 + b2 * d1 - c1 * c2
    )
    denominator = a2 * a2 * w4 + (b2 * b2 - 2 * a2 * c2) * w2 + c2 * c2
    if denominator <= 0:
        raise BranchFailure(f"Q(i omega) vanishes at omega={omega}")
    return numerator / denominator


def tau_ladder_p1(
    spec: CharSpecP1, roots: List[float], j_max: int = DEFAULT_JMAX
) -> List[LadderEntry]:
    """Branch-verified critical delays for every positive quartic root.

    Args:
        spec: Characteristic coefficients at P1
        roots: Positive roots z* of the quartic h
        j_max: Number of delays per frequency (j = 1..j_max)

    Returns:
        Ladder entries sorted by delay
    """
    if not roots:
        raise NoCrossing("no positive quartic roots")
    quartic = quartic_from_spec(spec)
    entries = []
    for k, z in enumerate(roots, start=1):
        omega = math.sqrt(z)
        angle = math.acos(min(1.0, max(-1.0, _tau_cosine(spec, omega))))
        direction = 1 if quartic.h_prime(z) > 0 else -1

        base, branch = None, None
        for candidate, name in (
            (angle / omega, "arccos"),
            ((2.0 * math.pi - angle) / omega, "mirrored"),
        ):
            residual = abs(char_value(spec, 1j * omega, candidate))
            if residual < CROSSING_TOLERANCE:
                base, branch = candidate, name
                break
            logger.debug(
                "omega_%d=%.6g: %s branch residual %.3g", k, omega, name, residual
            )
        if base is None:
            raise BranchFailure(f"no arccos branch verifies at omega={omega}")

        for j in range(1, j_max + 1):
            tau = base + 2.0 * (j - 1) * math.pi / omega
            residual = abs(char_value(spec, 1j * omega, tau))
            entries.append(LadderEntry(k, j, tau, omega, residual, direction, branch))
    entries.sort(key=lambda e: (e.tau, e.k, e.j))
    return entries


def crossing_rate(spec, omega: float, tau: float) -> float:
    """Re(d lambda / d tau) at lambda = i omega by implicit differentiation."""
    lam = 1j * omega
    slope = -spec.tau_derivative(lam, tau) / spec.derivative(lam, tau)
    return float(slope.real)


def transversality_p1(spec: CharSpecP1, report: CriticalDelayReport) -> int:
    """Sign of d Re(lambda)/d tau at tau0, which follows the sign of h'(z0)."""
    quartic = quartic_from_spec(spec)
    slope = quartic.h_prime(report.z0)
    if abs(slope) < SIMPLICITY_TOLERANCE:
        raise DegenerateCrossing(f"h'(z0) = {slope:.3g} vanishes at z0={report.z0}")
    lam = 1j * report.omega0
    tau = report.tau0
    simplicity = abs(
        spec.r_prime(lam) * cmath.exp(lam * tau)
        + spec.q_prime(lam)
        - tau * spec.q(lam)
    )
    if simplicity <= SIMPLICITY_TOLERANCE:
        raise DegenerateCrossing(f"i*omega0 is a multiple root (|.|={simplicity:.3g})")
    return 1 if slope > 0 else -1


def critical_delay_p1(
    spec: CharSpecP1, j_max: int = DEFAULT_JMAX, label: str = "P1"
) -> CriticalDelayReport:
    """Build the critical delay report of P1 through the quartic pipeline."""
    roots = quartic_positive_roots(quartic_from_spec(spec))
    ladder = tau_ladder_p1(spec, roots, j_max)
    first = ladder[0]
    report = CriticalDelayReport(
        label=label,
        omega0=first.omega,
        z0=first.omega**2,
        tau_ladder=tuple(ladder),
        tau0=first.tau,
        tau1=ladder[1].tau if len(ladder) > 1 else None,
        transversality_sign=0,
        transversality_rate=crossing_rate(spec, first.omega, first.tau),
    )
    return replace(report, transversality_sign=transversality_p1(spec, report))
