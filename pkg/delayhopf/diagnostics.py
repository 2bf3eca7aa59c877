"""Module turning analytic reports and trajectories into stability verdicts."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import find_peaks

from delayhopf import (
    AMPLITUDE_FLOOR,
    DECAY_RATIO,
    DEFAULT_HORIZON,
    DEFAULT_STEP,
    GROWTH_RATIO,
    PERIOD_TOLERANCE,
    TRANSIENT_FRACTION,
    WINDOW_FRACTION,
)
from delayhopf.charpoly import (
    char_spec_p0,
    char_spec_p1,
    routh_hurwitz_p0,
    routh_hurwitz_p1_tau0,
)
from delayhopf.critical_delay import (
    critical_delay_p0,
    critical_delay_p1,
    omega_plus,
    positive_root_test,
    quartic_from_spec,
    quartic_positive_roots,
    resolvent,
)
from delayhopf.errors import (
    ConsistencyFailure,
    DelayHopfError,
    TooShort,
    ValidationError,
)
from delayhopf.model import (
    Equilibrium,
    Label,
    State,
    SystemParams,
    find_equilibrium,
    shift_to_origin,
)
from delayhopf.oracle import count_rhp_roots
from delayhopf.solver import HistoryFunction, Trajectory, integrate

logger = logging.getLogger(__name__)


class Regime(str, Enum):
    STABLE_ALL_TAU = "StableAllTau"
    STABLE_BELOW_TAU0 = "StableBelowTau0"
    HOPF_AT_TAU0 = "HopfAtTau0"
    UNSTABLE_IN_WINDOW = "UnstableInWindow"
    INCONCLUSIVE = "Inconclusive"


class Trend(str, Enum):
    DECAYING = "decaying"
    SUSTAINED = "sustained"
    GROWING = "growing"


HOPF_TRIPLE = (
    Regime.STABLE_BELOW_TAU0,
    Regime.HOPF_AT_TAU0,
    Regime.UNSTABLE_IN_WINDOW,
)


@dataclass(frozen=True)
class StabilityVerdict:
    """Analytic verdict for one equilibrium.

    A Hopf verdict carries the full triple: stable on [0, tau0), Hopf at
    tau0, unstable on (tau0, tau1).
    """

    label: Label
    regimes: Tuple[Regime, ...]
    provenance: str
    gate: Dict[str, bool] = field(default_factory=dict)
    tau0: Optional[float] = None
    tau1: Optional[float] = None
    omega0: Optional[float] = None
    transversality_sign: Optional[int] = None

    def __post_init__(self):
        if not self.regimes:
            raise ValidationError("needs at least one regime", "regimes")
        needs_tau0 = set(HOPF_TRIPLE)
        if needs_tau0.intersection(self.regimes) and self.tau0 is None:
            raise ValidationError("regime requires tau0", "tau0")
        if Regime.STABLE_ALL_TAU in self.regimes:
            # no crossing: nothing to report at any delay
            if len(self.regimes) > 1:
                raise ValidationError("StableAllTau excludes other regimes", "regimes")
            if self.tau0 is not None or self.omega0 is not None:
                raise ValidationError("StableAllTau has no crossing delay", "tau0")

    @property
    def regime(self) -> Regime:
        if self.regimes == HOPF_TRIPLE:
            return Regime.HOPF_AT_TAU0
        return self.regimes[0]

    def regime_at(self, tau: float, tolerance: float = 1e-4) -> Regime:
        """Regime that applies at a specific delay; beyond tau1 it is Inconclusive."""
        if self.regimes != HOPF_TRIPLE:
            return self.regimes[0]
        if abs(tau - self.tau0) <= tolerance:
            return Regime.HOPF_AT_TAU0
        if tau < self.tau0:
            return Regime.STABLE_BELOW_TAU0
        if self.tau1 is not None and tau >= self.tau1:
            return Regime.INCONCLUSIVE
        return Regime.UNSTABLE_IN_WINDOW


def _inconclusive(label: Label, gate, reason: str) -> StabilityVerdict:
    logger.info("%s: %s", label.value, reason)
    return StabilityVerdict(label, (Regime.INCONCLUSIVE,), reason, gate.as_dict())


def classify_p0(params: SystemParams) -> StabilityVerdict:
    """Stability of P0 from the cubic gate and the transcendental factor."""
    spec = char_spec_p0(params)
    gate = routh_hurwitz_p0(spec)
    if not gate.passed:
        return _inconclusive(
            Label.P0, gate, f"cubic gate failed: {', '.join(gate.violations)}"
        )
    if omega_plus(params) is None:
        return StabilityVerdict(
            Label.P0,
            (Regime.STABLE_ALL_TAU,),
            "cubic gate holds and K <= b/2: no crossing for any delay",
            gate.as_dict(),
        )
    report = critical_delay_p0(params)
    return StabilityVerdict(
        Label.P0,
        HOPF_TRIPLE,
        "cubic gate holds and K > b/2: crossing at omega_plus",
        gate.as_dict(),
        tau0=report.tau0,
        tau1=report.tau1,
        omega0=report.omega0,
        transversality_sign=report.transversality_sign,
    )


def classify_p1(params: SystemParams, label: Label = Label.P1) -> StabilityVerdict:
    """Stability of P1 (or its mirror P2) from the quartic gate and h(z)."""
    label = Label(label)
    eq = find_equilibrium(params, label)
    spec = char_spec_p1(params, eq)
    gate = routh_hurwitz_p1_tau0(spec)
    if not gate.passed:
        return _inconclusive(
            label, gate, f"quartic gate failed: {', '.join(gate.violations)}"
        )

    quartic = quartic_from_spec(spec)
    has_root, witness = positive_root_test(quartic, resolvent(quartic))
    roots = quartic_positive_roots(quartic)
    if has_root != bool(roots):
        raise ConsistencyFailure(
            f"resolvent test says {has_root} but h has positive roots {roots}"
        )
    if not has_root:
        return StabilityVerdict(
            label,
            (Regime.STABLE_ALL_TAU,),
            "quartic gate holds and h(z) has no positive root",
            gate.as_dict(),
        )

    logger.debug("%s: h has positive roots %s (witness %.6g)", label.value, roots, witness)
    report = critical_delay_p1(spec, label=label.value)
    if report.transversality_sign < 0:
        return _inconclusive(label, gate, "first crossing moves roots to the left")
    return StabilityVerdict(
        label,
        HOPF_TRIPLE,
        "quartic gate holds, h(z) has a positive root and h'(z0) > 0",
        gate.as_dict(),
        tau0=report.tau0,
        tau1=report.tau1,
        omega0=report.omega0,
        transversality_sign=report.transversality_sign,
    )


def classify(params: SystemParams, label: Label) -> StabilityVerdict:
    label = Label(label)
    if label == Label.P0:
        return classify_p0(params)
    return classify_p1(params, label)


@dataclass(frozen=True)
class EnvelopeConfig:
    """Thresholds for envelope and period analysis."""

    decay_ratio: float = DECAY_RATIO
    growth_ratio: float = GROWTH_RATIO
    transient_fraction: float = TRANSIENT_FRACTION
    window_fraction: float = WINDOW_FRACTION
    period_tolerance: float = PERIOD_TOLERANCE
    amplitude_floor: float = AMPLITUDE_FLOOR
    min_peaks: int = 4
    min_knots: int = 50

    def __post_init__(self):
        if not 0 < self.decay_ratio < 1 < self.growth_ratio:
            raise ValidationError("need decay_ratio < 1 < growth_ratio", "decay_ratio")
        if self.transient_fraction + 2 * self.window_fraction > 1:
            raise ValidationError("windows overlap", "window_fraction")
        if self.amplitude_floor < 0:
            raise ValidationError("must be non-negative", "amplitude_floor")


@dataclass(frozen=True)
class OscillationReport:
    component: int
    envelope_trend: Trend
    period_estimate: Optional[float]
    amplitude_ratio: float
    first_amplitude: float
    last_amplitude: float
    peak_count: int = 0


def _reference(traj: Trajectory, eq: Optional[Equilibrium], component: int) -> float:
    if eq is None:
        return 0.0
    point = eq.point
    if traj.coordinates == "shifted":
        point = shift_to_origin(point, traj.params)
    return point.as_array()[component]


def analyze_oscillation(
    traj: Trajectory,
    component: int,
    eq: Optional[Equilibrium] = None,
    config: Optional[EnvelopeConfig] = None,
) -> OscillationReport:
    """Classify the envelope of one component around an equilibrium.

    Args:
        traj: Integrated trajectory
        component: State index (0 = x, 1 = y, 2 = z, 3 = u)
        eq: Equilibrium to measure deviations from (origin when omitted)
        config: Envelope thresholds

    Returns:
        OscillationReport; truncated (blown-up) trajectories are growing
    """
    config = config or EnvelopeConfig()
    times = traj.times
    if len(times) < config.min_knots:
        raise TooShort(f"{len(times)} knots, need at least {config.min_knots}")
    reference = _reference(traj, eq, component)
    deviation = traj.component(component) - reference

    if traj.blew_up:
        return OscillationReport(
            component, Trend.GROWING, None, math.inf, float("nan"), math.inf
        )

    floor = config.amplitude_floor * (1.0 + abs(reference))
    horizon = times[-1]
    first_start = config.transient_fraction * horizon
    first_end = first_start + config.window_fraction * horizon
    last_start = (1.0 - config.window_fraction) * horizon
    first = np.abs(deviation[(times >= first_start) & (times <= first_end)])
    last = np.abs(deviation[times >= last_start])
    if len(first) == 0 or len(last) == 0:
        raise TooShort("envelope windows contain no knots")
    first_amp = float(first.max())
    last_amp = float(last.max())

    # amplitudes at rounding level count as zero
    first_level = first_amp if first_amp > floor else 0.0
    last_level = last_amp if last_amp > floor else 0.0
    if last_level == 0.0:
        ratio = 0.0
    elif first_level == 0.0:
        ratio = math.inf
    else:
        ratio = last_level / first_level
    if ratio < config.decay_ratio:
        trend = Trend.DECAYING
    elif ratio > config.growth_ratio:
        trend = Trend.GROWING
    else:
        trend = Trend.SUSTAINED

    tail = times >= horizon * 2.0 / 3.0
    segment = deviation[tail]
    scale = float(np.max(np.abs(segment))) if len(segment) else 0.0
    period = None
    peaks = np.array([], dtype=int)
    if scale > floor:
        peaks, _ = find_peaks(segment, prominence=1e-3 * scale)
        if len(peaks) >= config.min_peaks:
            period = float(np.mean(np.diff(times[tail][peaks])))

    return OscillationReport(
        component, trend, period, ratio, first_amp, last_amp, len(peaks)
    )


def period_matches(
    report: OscillationReport, omega0: float, tolerance: float = PERIOD_TOLERANCE
) -> bool:
    """True when the estimated period is within tolerance of 2 pi / omega0."""
    if report.period_estimate is None:
        return False
    expected = 2.0 * math.pi / omega0
    return abs(report.period_estimate - expected) <= tolerance * expected


@dataclass(frozen=True)
class CrossCheckRow:
    """Analytic, oracle and simulated view of a single delay."""

    tau: float
    regime: Regime
    rhp_count: int
    trend: Trend
    amplitude_ratio: float
    blow_up_time: Optional[float] = None

    def disagreement(self) -> Optional[str]:
        """Describe the first mismatch between the three layers, if any."""
        if self.regime in (Regime.STABLE_ALL_TAU, Regime.STABLE_BELOW_TAU0):
            if self.rhp_count != 0:
                return f"analytic stable but oracle counts {self.rhp_count}"
            if self.trend == Trend.GROWING:
                return "analytic stable but simulation grows"
        elif self.regime == Regime.UNSTABLE_IN_WINDOW:
            if self.rhp_count < 2:
                return f"analytic unstable but oracle counts {self.rhp_count}"
            if self.trend == Trend.DECAYING:
                return "analytic unstable but simulation decays"
        elif self.regime == Regime.INCONCLUSIVE:
            if self.rhp_count == 0 and self.trend == Trend.GROWING:
                return "oracle counts 0 but simulation grows"
            if self.rhp_count > 0 and self.trend == Trend.DECAYING:
                return f"oracle counts {self.rhp_count} but simulation decays"
        return None


@dataclass(frozen=True)
class CrossCheckReport:
    verdict: StabilityVerdict
    rows: Tuple[CrossCheckRow, ...]
    disagreements: Tuple[Tuple[float, str], ...]
    failures: Tuple[Tuple[float, str], ...] = ()

    @property
    def passed(self) -> bool:
        return not self.disagreements and not self.failures


def _default_initial(eq: Equilibrium) -> State:
    return State.from_array(eq.point.as_array() + 0.1)


def check_delay(
    params: SystemParams,
    eq: Equilibrium,
    verdict: StabilityVerdict,
    tau: float,
    initial: State,
    horizon: float,
    step: float,
    component: int = 1,
    config: Optional[EnvelopeConfig] = None,
) -> CrossCheckRow:
    """Build one cross-check row: oracle count, simulation and analytic regime."""
    if eq.label == Label.P0:
        spec = char_spec_p0(params)
    else:
        spec = char_spec_p1(params, eq)
    count = count_rhp_roots(spec, tau)
    history = HistoryFunction.constant(initial)
    if tau > 0:
        step = min(step, tau / 4.0)
    trajectory = integrate(params, tau, history, horizon, step)
    report = analyze_oscillation(trajectory, component, eq, config)
    return CrossCheckRow(
        tau=tau,
        regime=verdict.regime_at(tau),
        rhp_count=count.count,
        trend=report.envelope_trend,
        amplitude_ratio=report.amplitude_ratio,
        blow_up_time=trajectory.blow_up_time,
    )


def cross_check(
    params: SystemParams,
    eq: Equilibrium,
    tau_grid: Sequence[float],
    initial: Optional[State] = None,
    horizon: float = DEFAULT_HORIZON,
    step: float = DEFAULT_STEP,
    component: int = 1,
    jobs: Optional[int] = None,
    config: Optional[EnvelopeConfig] = None,
    progress_callback: Optional[Callable[[int, int, float], None]] = None,
) -> CrossCheckReport:
    """Compare analytic verdicts, oracle counts and simulations over a tau grid.

    Args:
        params: Model constants
        eq: Equilibrium under study
        tau_grid: Delays to check
        initial: Constant history (default: eq.point + 0.1 in every component)
        horizon: Simulated time per delay
        step: Integration step
        component: State index whose envelope is classified
        jobs: Worker threads; 1 runs sequentially
        config: Envelope thresholds
        progress_callback: Optional callback (rows_done, total_rows, tau)

    Returns:
        CrossCheckReport with rows in grid order; a failing delay lands in
        `failures` instead of aborting the whole check
    """
    verdict = classify(params, eq.label)
    initial = initial or _default_initial(eq)
    total = len(tau_grid)

    def run(tau):
        return check_delay(
            params, eq, verdict, tau, initial, horizon, step, component, config
        )

    rows = []
    failures = []
    with ThreadPoolExecutor(max_workers=jobs or None) as executor:
        futures = [executor.submit(run, tau) for tau in tau_grid]
        for i, (tau, future) in enumerate(zip(tau_grid, futures)):
            try:
                rows.append(future.result())
            except DelayHopfError as e:
                failures.append((tau, str(e)))
            if progress_callback:
                progress_callback(i + 1, total, tau)

    disagreements = []
    for row in rows:
        problem = row.disagreement()
        if problem:
            logger.warning("tau=%.6g: %s", row.tau, problem)
            disagreements.append((row.tau, problem))
    return CrossCheckReport(verdict, tuple(rows), tuple(disagreements), tuple(failures))
