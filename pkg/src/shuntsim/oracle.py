"""Fine-grained ground-truth integration used to check the measured path.

Stands in for a bench reference meter: energies come from 1 us
trapezoidal integration of the true load and supply profiles, never from
the monitor's registers, so measurement and reference stay independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .profiles import NS_PER_S, ORACLE_STEP_NS, window_nodes

_CHUNK_NS = 1_000_000_000  # integrate at most 1e6 grid nodes at a time


def _integral(profile, a_ns: int, b_ns: int, fn) -> float:
    """Chunked 1 us trapezoidal integral of fn(nodes) over [a, b] (per second)."""
    if b_ns <= a_ns:
        return 0.0
    total = 0.0
    lo = a_ns
    while lo < b_ns:
        hi = min(lo + _CHUNK_NS, b_ns)
        nodes = window_nodes(lo, hi, ORACLE_STEP_NS)
        total += float(np.trapezoid(fn(profile, nodes), nodes))
        lo = hi
    return total / NS_PER_S


def _power(profile, nodes):
    return profile.current_at(nodes) * profile.voltage_at(nodes)


def _shunt_power(r_shunt_ohm):
    def fn(profile, nodes):
        i = profile.current_at(nodes)
        return i * i * r_shunt_ohm
    return fn


def total_energy_j(profile, a_ns: int, b_ns: int) -> float:
    """True v*i energy of the load over [a, b]."""
    return _integral(profile, a_ns, b_ns, _power)


def shunt_loss_j(profile, a_ns: int, b_ns: int, r_shunt_ohm: float) -> float:
    """True i^2*R energy dissipated in the shunt over [a, b]."""
    if r_shunt_ohm <= 0:
        raise ParameterError("r_shunt_ohm must be positive")
    return _integral(profile, a_ns, b_ns, _shunt_power(r_shunt_ohm))


def thread_energies_j(profile, schedule, a_ns: int = None, b_ns: int = None) -> dict:
    """True per-thread energy: v*i integrated over each thread's CPU slices.

    Optional [a, b] clipping restricts to a report span. Idle gaps are not
    anyone's energy; their integral is the difference to `total_energy_j`
    over the same span.
    """
    out = {}
    for tid, s, e in schedule.entries:
        if a_ns is not None:
            s = max(s, a_ns)
        if b_ns is not None:
            e = min(e, b_ns)
        if e > s:
            out[tid] = out.get(tid, 0.0) + _integral(profile, s, e, _power)
    return out


@dataclass
class OracleResult:
    """Reference energies for one run, independent of monitor/bus/noise settings."""

    total_j: float
    per_thread_j: dict = field(default_factory=dict)
    charging_j: float = 0.0
    shunt_loss_j: float = 0.0

    @property
    def unattributed_j(self) -> float:
        return self.total_j - sum(self.per_thread_j.values())


def evaluate_run(result, r_shunt_ohm: float = None) -> OracleResult:
    """Oracle energies for a finished scheduler run."""
    prof = result.recorder
    r = result.monitor.r_shunt_ohm if r_shunt_ohm is None else r_shunt_ohm
    return OracleResult(
        total_j=total_energy_j(prof, 0, result.end_ns),
        per_thread_j=thread_energies_j(prof, result.schedule),
        charging_j=0.0,
        shunt_loss_j=shunt_loss_j(prof, 0, result.end_ns, r))


def linear_error_fit(levels, abs_errors):
    """Least-squares slope/intercept of absolute error vs. load level.

    Quantifies how measurement deviation grows with current; a compensation
    curve would subtract exactly this fit.
    """
    x = np.asarray(levels, dtype=np.float64)
    y = np.asarray(abs_errors, dtype=np.float64)
    if x.size < 2 or x.size != y.size:
        raise ParameterError("need at least two matching (level, error) points")
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)
