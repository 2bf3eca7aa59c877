"""Module for counting right half-plane roots and tracking roots in tau."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from delayhopf import (
    CONTOUR_CLEARANCE,
    CONTOUR_RETRIES,
    CROSSING_TOLERANCE,
    DEFAULT_CONTOUR_SAMPLES,
    MAX_CONTOUR_SAMPLES,
    WINDING_RESIDUAL_LIMIT,
)
from delayhopf.charpoly import CharSpec
from delayhopf.errors import (
    ContourOnRoot,
    LostRoot,
    NonIntegerWinding,
    ValidationError,
)

logger = logging.getLogger(__name__)

# Largest phase change of f allowed between neighbouring contour samples
PHASE_STEP_LIMIT = math.pi / 8
CONVERGENCE_LIMIT = 1e-3
MIN_TRACK_STEP = 1e-6


@dataclass(frozen=True)
class ContourSpec:
    """Rectangle [offset, depth] x [-half_width, half_width] in the lambda plane."""

    half_width: float
    depth: float
    samples: int = DEFAULT_CONTOUR_SAMPLES
    offset: float = 0.0

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValidationError("must be positive", "half_width")
        if not self.depth > self.offset:
            raise ValidationError("must exceed the left edge", "depth")
        if self.samples < 64:
            raise ValidationError("needs at least 64 samples per edge", "samples")

    def corners(self) -> Tuple[complex, complex, complex, complex]:
        """Counter-clockwise corners starting at the lower right."""
        H = self.half_width
        return (
            complex(self.depth, -H),
            complex(self.depth, H),
            complex(self.offset, H),
            complex(self.offset, -H),
        )


@dataclass(frozen=True)
class RootCount:
    count: int
    winding_residual: float
    contour: ContourSpec
    perturbations: int = 0


@dataclass(frozen=True)
class RootPath:
    """A tracked root lambda(tau) on a uniform tau grid."""

    taus: np.ndarray
    lambdas: np.ndarray
    residuals: np.ndarray

    @property
    def final(self) -> complex:
        return complex(self.lambdas[-1])

    def __iter__(self):
        return iter(zip(self.taus.tolist(), self.lambdas.tolist()))


@dataclass(frozen=True)
class CountJump:
    """A tau interval across which the right half-plane count changes."""

    lower: float
    upper: float
    before: int
    after: int

    @property
    def size(self) -> int:
        return self.after - self.before


def default_contour(
    spec: CharSpec, samples: int = DEFAULT_CONTOUR_SAMPLES
) -> ContourSpec:
    """Contour reaching twice the modulus bound of right half-plane roots."""
    extent = 2.0 * spec.root_bound()
    return ContourSpec(half_width=extent, depth=extent, samples=samples)


def _edge_mesh(spec: CharSpec, tau: float, start: complex, end: complex, t):
    lam = start + (end - start) * t
    return lam, spec.value(lam, tau)


def _refine_locally(spec, tau, start, end, t):
    """Bisect every segment whose phase step exceeds the limit."""
    while True:
        lam, f = _edge_mesh(spec, tau, start, end, t)
        steps = np.abs(np.angle(f[1:] / f[:-1]))
        coarse = steps > PHASE_STEP_LIMIT
        if not coarse.any() or len(t) + int(coarse.sum()) > MAX_CONTOUR_SAMPLES:
            return t, lam, f
        mids = 0.5 * (t[:-1][coarse] + t[1:][coarse])
        t = np.sort(np.concatenate([t, mids]))


def _edge_winding(spec, tau, start, end, samples) -> Tuple[complex, float]:
    """Trapezoidal integral of f'/f along one edge, divided by 2 pi i.

    Returns:
        Tuple of (edge contribution, minimum |f| seen on the edge)
    """
    t = np.linspace(0.0, 1.0, samples + 1)
    t, lam, f = _refine_locally(spec, tau, start, end, t)
    previous = trapezoid(spec.derivative(lam, tau) / f, lam) / (2j * math.pi)
    smallest = float(np.min(np.abs(f)))

    while 2 * len(t) - 1 <= MAX_CONTOUR_SAMPLES:
        mids = 0.5 * (t[:-1] + t[1:])
        t = np.sort(np.concatenate([t, mids]))
        t, lam, f = _refine_locally(spec, tau, start, end, t)
        current = trapezoid(spec.derivative(lam, tau) / f, lam) / (2j * math.pi)
        smallest = min(smallest, float(np.min(np.abs(f))))
        if abs(current - previous) < CONVERGENCE_LIMIT:
            return current, smallest
        previous = current
    logger.debug("edge %s -> %s hit the sample cap", start, end)
    return previous, smallest


def _clearance(spec: CharSpec, tau: float, contour: ContourSpec) -> float:
    corners = contour.corners()
    t = np.linspace(0.0, 1.0, contour.samples + 1)
    smallest = math.inf
    for i in range(4):
        _, f = _edge_mesh(spec, tau, corners[i], corners[(i + 1) % 4], t)
        smallest = min(smallest, float(np.min(np.abs(f))))
    return smallest


def _perturbed(contour: ContourSpec, attempt: int) -> ContourSpec:
    return replace(
        contour,
        offset=contour.offset + 1e-5 * 4**attempt,
        half_width=contour.half_width * (1.0 + 0.01 * attempt),
    )


def count_rhp_roots(
    spec: CharSpec, tau: float, contour: Optional[ContourSpec] = None
) -> RootCount:
    """Count characteristic roots with positive real part by the argument principle.

    Args:
        spec: Characteristic function (P0, P1 or a generic quasi-polynomial)
        tau: Delay
        contour: Rectangle to integrate over (default: twice the root bound)

    Returns:
        RootCount with the rounded winding number and the contour actually used
    """
    base = contour or default_contour(spec)
    attempt = 0
    current = base
    while True:
        corners = current.corners()
        total = 0j
        smallest = _clearance(spec, tau, current)
        if smallest >= CONTOUR_CLEARANCE:
            for i in range(4):
                part, edge_min = _edge_winding(
                    spec, tau, corners[i], corners[(i + 1) % 4], current.samples
                )
                total += part
                smallest = min(smallest, edge_min)
        if smallest >= CONTOUR_CLEARANCE:
            break
        attempt += 1
        if attempt > CONTOUR_RETRIES:
            raise ContourOnRoot(
                f"|f| = {smallest:.3g} on the contour at tau={tau} after "
                f"{CONTOUR_RETRIES} perturbations"
            )
        current = _perturbed(base, attempt)
        logger.debug(
            "root near contour at tau=%.6g, retry %d with offset %.3g",
            tau,
            attempt,
            current.offset,
        )

    count = int(round(total.real))
    residual = abs(total - count)
    if residual >= WINDING_RESIDUAL_LIMIT or count < 0:
        raise NonIntegerWinding(
            f"winding {total.real:.4f}{total.imag:+.4f}i at tau={tau} is not an integer"
        )
    return RootCount(count, residual, current, attempt)


def count_profile(
    spec: CharSpec,
    taus: Sequence[float],
    contour: Optional[ContourSpec] = None,
    jobs: Optional[int] = None,
) -> List[RootCount]:
    """Right half-plane counts over a tau grid, in grid order."""
    if jobs == 1 or len(taus) < 2:
        return [count_rhp_roots(spec, tau, contour) for tau in taus]
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        futures = [executor.submit(count_rhp_roots, spec, tau, contour) for tau in taus]
        return [future.result() for future in futures]


def locate_jumps(
    spec: CharSpec,
    taus: Sequence[float],
    width: float = 1e-3,
    contour: Optional[ContourSpec] = None,
    jobs: Optional[int] = None,
) -> List[CountJump]:
    """Find where the count changes on a grid and bisect each change to `width`."""
    taus = sorted(taus)
    counts = [c.count for c in count_profile(spec, taus, contour, jobs)]
    jumps = []
    for i in range(len(taus) - 1):
        if counts[i] == counts[i + 1]:
            continue
        lower, upper = taus[i], taus[i + 1]
        while upper - lower > width:
            middle = 0.5 * (lower + upper)
            if count_rhp_roots(spec, middle, contour).count == counts[i]:
                lower = middle
            else:
                upper = middle
        jumps.append(CountJump(lower, upper, counts[i], counts[i + 1]))
    return jumps


def _newton(spec: CharSpec, lam: complex, tau: float, iterations: int = 20):
    for _ in range(iterations):
        slope = spec.derivative(lam, tau)
        if slope == 0:
            break
        step = spec.value(lam, tau) / slope
        lam = lam - step
        if abs(step) < 1e-14 * (1.0 + abs(lam)):
            break
    return complex(lam), float(abs(spec.value(lam, tau)))


def _advance(spec, lam, tau, h):
    """One predictor-corrector step; returns None when the corrector fails."""
    velocity = -spec.tau_derivative(lam, tau) / spec.derivative(lam, tau)
    predicted = lam + h * velocity
    corrected, residual = _newton(spec, predicted, tau + h, iterations=8)
    if not math.isfinite(residual) or residual >= CROSSING_TOLERANCE:
        return None
    if abs(corrected - predicted) > 0.5 * abs(predicted - lam) + 1e-3 * abs(h):
        # corrector landed on a different root
        return None
    return corrected


def track_root(
    spec: CharSpec,
    lambda_start: complex,
    tau_start: float,
    tau_end: float,
    steps: int = 20,
) -> RootPath:
    """Follow a characteristic root from tau_start to tau_end.

    Args:
        spec: Characteristic function
        lambda_start: Root (or a close approximation) at tau_start
        tau_start: Initial delay
        tau_end: Final delay, on either side of tau_start
        steps: Number of uniform tau steps recorded on the path

    Returns:
        RootPath with steps + 1 points
    """
    if steps < 1:
        raise ValidationError("must be at least 1", "steps")
    lam, residual = _newton(spec, complex(lambda_start), tau_start)
    if residual >= CROSSING_TOLERANCE or abs(lam - lambda_start) > 1e-3 * (
        1.0 + abs(lambda_start)
    ):
        raise LostRoot(f"{lambda_start} is not a root at tau={tau_start}")

    grid = np.linspace(tau_start, tau_end, steps + 1)
    lambdas = [lam]
    residuals = [residual]
    tau = tau_start
    for target in grid[1:]:
        h = target - tau
        while tau != target:
            h = math.copysign(min(abs(h), abs(target - tau)), target - tau)
            advanced = _advance(spec, lam, tau, h)
            if advanced is None:
                h /= 2.0
                logger.debug("halving tau step to %.3g at tau=%.6g", h, tau)
                if abs(h) < MIN_TRACK_STEP:
                    raise LostRoot(f"Newton corrector failed near tau={tau:.6g}")
                continue
            lam = advanced
            tau = tau + h
            if abs(target - tau) <= 1e-12 * (1.0 + abs(target)):
                tau = target
        lambdas.append(lam)
        residuals.append(float(abs(spec.value(lam, tau))))
    return RootPath(grid, np.array(lambdas), np.array(residuals))


def crossing_slope(
    spec: CharSpec, lambda0: complex, tau0: float, delta: float = 1e-4
) -> float:
    """Central difference of Re lambda(tau) across tau0 from tracked roots."""
    above = track_root(spec, lambda0, tau0, tau0 + delta, steps=4).final
    below = track_root(spec, lambda0, tau0, tau0 - delta, steps=4).final
    return (above.real - below.real) / (2.0 * delta)
