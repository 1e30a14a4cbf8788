"""Ground-truth load and supply profiles over simulation time.

Simulation time is integer nanoseconds throughout the package; that keeps
event ordering and timestamps bit-exact across runs. Profiles map time to
the true node current draw and supply voltage. They are piecewise linear;
step changes are expressed with duplicated knots, which `np.interp`
resolves right-continuously (the value after the change wins at the knot
itself).
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError

NS_PER_S = 1_000_000_000
NS_PER_US = 1_000
# Node spacing for trapezoidal integration of ground truth: 1 us.
ORACLE_STEP_NS = 1_000


def to_ns(t_s: float) -> int:
    """Convert seconds to the integer-nanosecond timebase."""
    return int(round(t_s * NS_PER_S))


def to_s(t_ns: int) -> float:
    return t_ns / NS_PER_S


class LoadProfile:
    """Piecewise-linear node current and supply voltage vs. time.

    `t_ns` must be ascending (duplicates allowed for steps). Outside the
    knot range the edge values extend, so a single knot models a constant
    profile.
    """

    def __init__(self, t_ns, current_a, voltage_v=3.3):
        self._t = np.asarray(t_ns, dtype=np.float64)
        self._i = np.asarray(current_a, dtype=np.float64)
        if self._t.ndim != 1 or self._t.shape != self._i.shape or self._t.size == 0:
            raise ParameterError("profile needs matching, non-empty t/current arrays")
        if np.any(np.diff(self._t) < 0):
            raise ParameterError("profile times must be ascending")
        if np.isscalar(voltage_v) or getattr(voltage_v, "ndim", 1) == 0:
            self._v = float(voltage_v)
        else:
            self._v = np.asarray(voltage_v, dtype=np.float64)
            if self._v.shape != self._t.shape:
                raise ParameterError("voltage array must match t array")

    @classmethod
    def constant(cls, current_a: float, voltage_v: float = 3.3) -> "LoadProfile":
        return cls([0], [current_a], voltage_v)

    @classmethod
    def steps(cls, points, voltage_v: float = 3.3) -> "LoadProfile":
        """Step profile from (t_s, current_a) change points; starts at 0 A."""
        t, i = [0.0], [0.0]
        last = 0.0
        for t_s, cur in points:
            tn = to_ns(t_s)
            t.extend([tn, tn])
            i.extend([last, cur])
            last = cur
        return cls(t, i, voltage_v)

    def current_at(self, t_ns):
        return np.interp(np.asarray(t_ns, dtype=np.float64), self._t, self._i)

    def voltage_at(self, t_ns):
        t = np.asarray(t_ns, dtype=np.float64)
        if isinstance(self._v, float):
            return np.full_like(t, self._v, dtype=np.float64)
        return np.interp(t, self._t, self._v)


class _GrowBuf:
    """Append-only float64 buffer with amortized growth."""

    def __init__(self, capacity=1024):
        self._a = np.empty(capacity, dtype=np.float64)
        self._n = 0

    def append(self, x):
        if self._n == self._a.size:
            bigger = np.empty(self._a.size * 2, dtype=np.float64)
            bigger[:self._n] = self._a[:self._n]
            self._a = bigger
        self._a[self._n] = x
        self._n += 1

    def view(self):
        return self._a[:self._n]

    def last(self):
        return self._a[self._n - 1]


class RecordedLoad:
    """Step-function load assembled incrementally by an event loop.

    The scheduler appends current changes as execution proceeds; the
    monitor then integrates over windows that are already in the past.
    Voltage may be a constant or appended as piecewise-linear knots (used
    when the supply is a draining capacitor).
    """

    def __init__(self, initial_current_a: float = 0.0, voltage_v: float = 3.3):
        self._t = _GrowBuf()
        self._i = _GrowBuf()
        self._t.append(0.0)
        self._i.append(initial_current_a)
        self._const_v = float(voltage_v)
        self._vt = None
        self._vv = None
        self._last_t = 0

    @property
    def current_now(self) -> float:
        return float(self._i.last())

    def set_current(self, t_ns: int, current_a: float):
        if t_ns < self._last_t:
            raise ParameterError("recorded load must advance in time")
        self._t.append(t_ns)
        self._i.append(self._i.last())
        self._t.append(t_ns)
        self._i.append(current_a)
        self._last_t = t_ns

    def add_current(self, t_ns: int, delta_a: float):
        self.set_current(t_ns, self.current_now + delta_a)

    def set_voltage_knot(self, t_ns: int, v: float):
        if self._vt is None:
            self._vt = _GrowBuf()
            self._vv = _GrowBuf()
        self._vt.append(t_ns)
        self._vv.append(v)

    def current_at(self, t_ns):
        return np.interp(np.asarray(t_ns, dtype=np.float64), self._t.view(), self._i.view())

    def voltage_at(self, t_ns):
        t = np.asarray(t_ns, dtype=np.float64)
        if self._vt is None:
            return np.full_like(t, self._const_v, dtype=np.float64)
        return np.interp(t, self._vt.view(), self._vv.view())


def window_nodes(a_ns: int, b_ns: int, step_ns: int = ORACLE_STEP_NS):
    """Integration nodes for [a, b]: the exact endpoints plus interior grid points."""
    if b_ns < a_ns:
        raise ParameterError("window end precedes start")
    if b_ns == a_ns:
        return np.array([float(a_ns)])
    first = (a_ns // step_ns + 1) * step_ns
    inner = np.arange(first, b_ns, step_ns, dtype=np.float64)
    return np.concatenate(([float(a_ns)], inner, [float(b_ns)]))


def trapezoid_mean(profile, a_ns: int, b_ns: int, what: str = "current") -> float:
    """Mean of a profile channel over [a, b] by trapezoidal rule on the 1 us grid."""
    if b_ns <= a_ns:
        raise ParameterError("empty integration window")
    nodes = window_nodes(a_ns, b_ns)
    vals = profile.current_at(nodes) if what == "current" else profile.voltage_at(nodes)
    return float(np.trapezoid(vals, nodes) / (b_ns - a_ns))


def trapezoid_energy(profile, a_ns: int, b_ns: int) -> float:
    """Integral of v*i over [a, b] (joules) on the 1 us grid."""
    if b_ns <= a_ns:
        return 0.0
    nodes = window_nodes(a_ns, b_ns)
    p = profile.current_at(nodes) * profile.voltage_at(nodes)
    return float(np.trapezoid(p, nodes) / NS_PER_S)
