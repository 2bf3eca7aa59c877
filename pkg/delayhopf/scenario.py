"""Module for scenario files, CSV series and JSON reports."""

import json
import logging
import math
import re
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from delayhopf import CROSSING_TOLERANCE, DEFAULT_HORIZON, DEFAULT_STEP
from delayhopf.critical_delay import CriticalDelayReport
from delayhopf.diagnostics import (
    HOPF_TRIPLE,
    CrossCheckReport,
    OscillationReport,
    Regime,
    StabilityVerdict,
    Trend,
)
from delayhopf.errors import ParseError, ValidationError
from delayhopf.model import STATE_NAMES, Equilibrium, Label, State, SystemParams
from delayhopf.solver import Trajectory

logger = logging.getLogger(__name__)

OUTPUT_KINDS = ("timeseries", "phase2d", "phase3d", "report")
COORDINATES = ("original", "shifted")
TOP_LEVEL_KEYS = {
    "name",
    "equilibrium",
    "coordinates",
    "outputs",
    "params",
    "delay",
    "initial",
    "integration",
}
CSV_HEADER = "t," + ",".join(STATE_NAMES)


@dataclass(frozen=True)
class Scenario:
    """A reproducible run: model constants, delay(s), history and outputs."""

    name: str
    params: SystemParams
    equilibrium: Label
    taus: Tuple[float, ...]
    initial: State
    horizon: float = DEFAULT_HORIZON
    step: float = DEFAULT_STEP
    coordinates: str = "original"
    outputs: Tuple[str, ...] = ("timeseries",)

    def __post_init__(self):
        if not self.taus:
            raise ValidationError("sweep count must be at least 1", "count")
        if any(not math.isfinite(t) or t < 0 for t in self.taus):
            raise ValidationError("delays must be finite and nonnegative", "delay")
        if not self.horizon > 0:
            raise ValidationError(f"must be positive, got {self.horizon}", "horizon")
        if not self.step > 0:
            raise ValidationError(f"must be positive, got {self.step}", "step")
        shortest = min((t for t in self.taus if t > 0), default=None)
        if shortest is not None and self.step > shortest / 4.0:
            raise ValidationError(
                f"{self.step} exceeds tau/4 = {shortest / 4.0:g} for tau={shortest:g}",
                "step",
            )
        if self.coordinates not in COORDINATES:
            raise ValidationError(
                f"must be one of {', '.join(COORDINATES)}", "coordinates"
            )
        unknown = [o for o in self.outputs if o not in OUTPUT_KINDS]
        if unknown:
            raise ValidationError(f"unknown outputs {unknown}", "outputs")

    @property
    def tau(self) -> float:
        return self.taus[0]

    @property
    def is_sweep(self) -> bool:
        return len(self.taus) > 1

    def with_tau(self, tau: float) -> "Scenario":
        return replace(self, taus=(float(tau),))


def _line_of(text: str, key: str) -> Optional[int]:
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for number, line in enumerate(text.splitlines(), start=1):
        if pattern.match(line):
            return number
    return None


def _number(table: Dict[str, Any], key: str, text: str, default=None) -> float:
    if key not in table:
        if default is None:
            raise ParseError("missing value", _line_of(text, key), key)
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"expected a number, got {value!r}", _line_of(text, key), key)
    return float(value)


def _table(data: Dict[str, Any], key: str, text: str, required: bool = True):
    table = data.get(key)
    if table is None:
        if required:
            raise ParseError(f"missing [{key}] table", None, key)
        return {}
    if not isinstance(table, dict):
        raise ParseError(f"[{key}] must be a table", _line_of(text, key), key)
    return table


def _delays(table: Dict[str, Any], text: str) -> Tuple[float, ...]:
    if "value" in table:
        return (_number(table, "value", text),)
    start = _number(table, "start", text)
    stop = _number(table, "stop", text)
    count = table.get("count")
    if isinstance(count, bool) or not isinstance(count, int):
        raise ParseError("expected an integer", _line_of(text, "count"), "count")
    if count < 1:
        raise ValidationError(f"must be at least 1, got {count}", "count")
    if stop < start:
        raise ValidationError("stop must not be below start", "stop")
    return tuple(float(t) for t in np.linspace(start, stop, count))


def parse_scenario(text: str) -> Scenario:
    """Parse and validate scenario text.

    Raises:
        ParseError: malformed TOML, missing keys or wrong types
        ValidationError: well-formed values that violate an invariant
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        match = re.search(r"line (\d+)", str(e))
        raise ParseError(str(e), int(match.group(1)) if match else None) from e

    unknown = sorted(set(data) - TOP_LEVEL_KEYS)
    if unknown:
        raise ParseError("unknown key", _line_of(text, unknown[0]), unknown[0])

    params_table = _table(data, "params", text)
    params = SystemParams(
        **{name: _number(params_table, name, text) for name in "abcdkK"}
    )
    initial_table = _table(data, "initial", text)
    initial = State(*(_number(initial_table, name, text) for name in STATE_NAMES))
    integration = _table(data, "integration", text, required=False)

    try:
        label = Label(data.get("equilibrium", "P0"))
    except ValueError:
        raise ParseError(
            "equilibrium must be P0, P1 or P2", _line_of(text, "equilibrium"), "equilibrium"
        )
    outputs = data.get("outputs", ["timeseries"])
    if not isinstance(outputs, list):
        raise ParseError("expected a list", _line_of(text, "outputs"), "outputs")

    return Scenario(
        name=str(data.get("name", "scenario")),
        params=params,
        equilibrium=label,
        taus=_delays(_table(data, "delay", text), text),
        initial=initial,
        horizon=_number(integration, "horizon", text, DEFAULT_HORIZON),
        step=_number(integration, "step", text, DEFAULT_STEP),
        coordinates=data.get("coordinates", "original"),
        outputs=tuple(outputs),
    )


def load_scenario(path) -> Scenario:
    """Read a scenario file; OSError propagates to the caller."""
    path = Path(path)
    scenario = parse_scenario(path.read_text(encoding="utf-8"))
    logger.debug("loaded scenario %s from %s", scenario.name, path)
    return scenario


def write_timeseries(traj: Trajectory, path) -> Path:
    """Write one row per knot with 17 significant digits."""
    path = Path(path)
    table = np.column_stack([traj.times, traj.states])
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=CSV_HEADER, comments="")
    return path


def read_timeseries(path) -> np.ndarray:
    path = Path(path)
    with path.open(encoding="utf-8") as handle:
        header = handle.readline().strip()
    if header != CSV_HEADER:
        raise ParseError(f"unexpected header {header!r}", 1)
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


_PLOT_STUBS = {
    "timeseries": (
        "fig, axes = plt.subplots(4, 1, sharex=True)\n"
        "for ax, name in zip(axes, ['x', 'y', 'z', 'u']):\n"
        "    ax.plot(data['t'], data[name])\n"
        "    ax.set_ylabel(name)\n"
        "axes[-1].set_xlabel('t')\n"
    ),
    "phase2d": (
        "fig, ax = plt.subplots()\n"
        "ax.plot(data['x'], data['y'])\n"
        "ax.set_xlabel('x')\n"
        "ax.set_ylabel('y')\n"
    ),
    "phase3d": (
        "fig = plt.figure()\n"
        "ax = fig.add_subplot(projection='3d')\n"
        "ax.plot(data['x'], data['y'], data['z'])\n"
        "ax.set_xlabel('x')\n"
        "ax.set_ylabel('y')\n"
        "ax.set_zlabel('z')\n"
    ),
}


def write_plot_stub(csv_path, kind: str) -> Path:
    """Write a matplotlib script next to a CSV series."""
    if kind not in _PLOT_STUBS:
        raise ValidationError(f"no plot stub for {kind!r}", "outputs")
    csv_path = Path(csv_path)
    script = csv_path.with_name(f"{csv_path.stem}_plot.py")
    script.write_text(
        "import matplotlib.pyplot as plt\n"
        "import numpy as np\n\n"
        f"data = np.genfromtxt({csv_path.name!r}, delimiter=',', names=True)\n"
        + _PLOT_STUBS[kind]
        + "plt.show()\n",
        encoding="utf-8",
    )
    return script


def critical_delay_to_dict(report: CriticalDelayReport) -> Dict[str, Any]:
    return {
        "kind": "critical-delay",
        "label": report.label,
        "omega0": report.omega0,
        "z0": report.z0,
        "tau0": report.tau0,
        "tau1": report.tau1,
        "transversality_sign": report.transversality_sign,
        "transversality_rate": report.transversality_rate,
        "tau_ladder": [
            {
                "k": e.k,
                "j": e.j,
                "tau": e.tau,
                "omega": e.omega,
                "residual": e.residual,
                "direction": e.direction,
                "branch": e.branch,
            }
            for e in report.tau_ladder
        ],
    }


def verdict_to_dict(verdict: StabilityVerdict) -> Dict[str, Any]:
    return {
        "kind": "stability",
        "label": verdict.label.value,
        "regime": verdict.regime.value,
        "regimes": [r.value for r in verdict.regimes],
        "tau0": verdict.tau0,
        "tau1": verdict.tau1,
        "omega0": verdict.omega0,
        "transversality_sign": verdict.transversality_sign,
        "provenance": verdict.provenance,
        "gate": dict(verdict.gate),
    }


def cross_check_to_dict(report: CrossCheckReport, kind: str = "cross-check"):
    return {
        "kind": kind,
        "verdict": verdict_to_dict(report.verdict),
        "rows": [
            {
                "tau": row.tau,
                "regime": row.regime.value,
                "rhp_count": row.rhp_count,
                "trend": row.trend.value,
                "amplitude_ratio": row.amplitude_ratio,
                "blow_up_time": row.blow_up_time,
            }
            for row in report.rows
        ],
        "disagreements": [[tau, text] for tau, text in report.disagreements],
        "failures": [[tau, text] for tau, text in report.failures],
        "passed": report.passed,
    }


def equilibria_to_dict(found: List[Equilibrium], residuals: List[float]):
    return {
        "kind": "equilibria",
        "equilibria": [
            {
                "label": eq.label.value,
                "point": dict(zip(STATE_NAMES, eq.point)),
                "theta": eq.theta,
                "residual": residual,
            }
            for eq, residual in zip(found, residuals)
        ],
    }


def simulation_to_dict(
    traj: Trajectory, reports: List[OscillationReport], name: str
) -> Dict[str, Any]:
    return {
        "kind": "simulation",
        "name": name,
        "tau": traj.tau,
        "coordinates": traj.coordinates,
        "end": traj.end,
        "knots": len(traj.times),
        "blow_up_time": traj.blow_up_time,
        "components": [
            {
                "component": STATE_NAMES[r.component],
                "trend": r.envelope_trend.value,
                "amplitude_ratio": r.amplitude_ratio,
                "period": r.period_estimate,
            }
            for r in reports
        ],
    }


def write_report(report: Dict[str, Any], path) -> Path:
    """Write a report dictionary as JSON, keeping its field order."""
    validate_report(report)
    path = Path(path)
    path.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    return path


def read_report(path) -> Dict[str, Any]:
    """Read and re-validate a report written by write_report."""
    path = Path(path)
    try:
        report = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno) from e
    return validate_report(report)


def _validate_critical_delay(report: Dict[str, Any]) -> None:
    ladder = report["tau_ladder"]
    if not ladder:
        raise ValidationError("ladder is empty", "tau_ladder")
    if not report["omega0"] > 0:
        raise ValidationError("must be positive", "omega0")
    if report["tau0"] != min(entry["tau"] for entry in ladder):
        raise ValidationError("tau0 is not the ladder minimum", "tau0")
    for entry in ladder:
        if not entry["residual"] < CROSSING_TOLERANCE:
            raise ValidationError(
                f"residual {entry['residual']:.3g} at tau={entry['tau']}", "residual"
            )


def _validate_verdict(report: Dict[str, Any]) -> None:
    regimes = [Regime(r) for r in report["regimes"]]
    if report["regime"] not in (r.value for r in Regime):
        raise ValidationError(f"unknown regime {report['regime']!r}", "regime")
    if set(HOPF_TRIPLE).intersection(regimes) and report["tau0"] is None:
        raise ValidationError("regime requires tau0", "tau0")
    if Regime.STABLE_ALL_TAU in regimes and report["tau0"] is not None:
        raise ValidationError("StableAllTau has no crossing delay", "tau0")


def validate_report(report: Dict[str, Any]) -> Dict[str, Any]:
    """Check the invariants of a report dictionary and return it unchanged."""
    if not isinstance(report, dict) or "kind" not in report:
        raise ValidationError("report has no kind", "kind")
    kind = report["kind"]
    try:
        if kind == "critical-delay":
            _validate_critical_delay(report)
        elif kind == "stability":
            _validate_verdict(report)
        elif kind in ("cross-check", "sweep"):
            _validate_verdict(report["verdict"])
            if report["passed"] != (
                not report["disagreements"] and not report["failures"]
            ):
                raise ValidationError("passed flag contradicts the rows", "passed")
        elif kind == "simulation":
            for entry in report["components"]:
                Trend(entry["trend"])
        elif kind == "equilibria":
            if not report["equilibria"]:
                raise ValidationError("no equilibria listed", "equilibria")
        else:
            raise ValidationError(f"unknown report kind {kind!r}", "kind")
    except KeyError as e:
        raise ValidationError("missing field", e.args[0]) from e
    except ValueError as e:
        if isinstance(e, ValidationError):
            raise
        raise ValidationError(str(e), "regime") from e
    return report
