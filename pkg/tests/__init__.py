"""Tests for the delayhopf package."""

import numpy as np

from delayhopf.charpoly import char_spec_p1, routh_hurwitz_p1_tau0
from delayhopf.diagnostics import HOPF_TRIPLE, classify_p1
from delayhopf.errors import DelayHopfError
from delayhopf.model import Label, SystemParams, equilibria, find_equilibrium

# Parameter set with a Hopf bifurcation at P0
P0_PARAMS = SystemParams(a=5.0, b=0.4, c=1.5, d=0.2, k=0.17, K=1.0)

# Parameter set with a Hopf bifurcation at P1
P1_PARAMS = SystemParams(a=0.2, b=0.2, c=2.5, d=0.2, k=1.0, K=1.0)


def hopf_p1_sets(seed, count, spread=0.2, max_attempts=2000):
    """Sample parameter sets around P1_PARAMS whose P1 passes the tau = 0 gate
    and loses stability through a Hopf crossing.

    Returns:
        List of (params, spec, verdict) tuples of length `count`
    """
    rng = np.random.default_rng(seed)
    base = P1_PARAMS.as_dict()
    found = []
    for _ in range(max_attempts):
        scale = rng.uniform(1.0 - spread, 1.0 + spread, size=len(base))
        params = SystemParams(**{name: value * s for (name, value), s in zip(base.items(), scale)})
        try:
            if len(equilibria(params)) < 3:
                continue
            spec = char_spec_p1(params, find_equilibrium(params, Label.P1))
            if not routh_hurwitz_p1_tau0(spec).passed:
                continue
            verdict = classify_p1(params)
        except DelayHopfError:
            continue
        if verdict.regimes != HOPF_TRIPLE:
            continue
        found.append((params, spec, verdict))
        if len(found) == count:
            return found
    raise AssertionError(f"only {len(found)} of {count} sets found in {max_attempts} draws")
