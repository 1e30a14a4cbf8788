"""Energy-harvesting subsystem: storage, solar input, duty-cycle control.

Models a super-capacitor buffered node that keeps itself energy-neutral:
each duty cycle it measures the charging power with a single triggered
conversion while the node sleeps, runs its task once with continuous
sampling (the task's measured energy is its trace), re-estimates both
quantities with an EWMA, and stretches or shrinks the cycle interval so
expected consumption stays inside expected harvest.

Wiring model: the shunt carries the difference between node draw and
delivered solar power, so charging shows up as negative current (and the
binned day report flips it positive). The monitor's own supply is tapped
behind the shunt: it drains the storage but is invisible to the
measurement. When the buffer is full the charging circuit throttles the
panel; the throttled-away part accumulates as `unharvested`, answering
"how much more could have been charged".

Energy bookkeeping is exact by construction: every sub-step moves energy
between the ledger buckets (harvest in, node load, monitor supply, bus
transactions, shunt loss, unharvested, storage delta) with no residual
beyond float rounding.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, replace

import numpy as np

from .bus import BusLink
from .errors import BusyError, ParameterError
from .monitor import MonitorConfig, ShuntMonitor
from .profiles import NS_PER_S, to_ns, to_s
from .sched import Sample, TraceRecord

# Largest sub-step for integrating slowly varying solar/cap dynamics.
_SUBSTEP_NS = NS_PER_S  # 1 s


@dataclass(frozen=True)
class SuperCap:
    """Super-capacitor storage element; energy = C*v^2/2.

    `unharvested_j` accumulates input the full buffer had to refuse;
    `deficit_j` accumulates draw the empty buffer could not supply (a
    correctly sized scenario keeps it at zero).
    """

    capacitance_f: float = 100.0
    v_now: float = 0.0
    v_max: float = 2.7
    v_min_operating: float = 0.0
    unharvested_j: float = 0.0
    deficit_j: float = 0.0

    def __post_init__(self):
        if self.capacitance_f <= 0:
            raise ParameterError("capacitance must be positive")
        if not 0.0 <= self.v_now <= self.v_max:
            raise ParameterError(f"v_now {self.v_now} outside [0, {self.v_max}]")
        if self.v_min_operating < 0:
            raise ParameterError("v_min_operating must be non-negative")

    @property
    def energy_j(self) -> float:
        return 0.5 * self.capacitance_f * self.v_now ** 2

    @property
    def full(self) -> bool:
        return self.v_now >= self.v_max


def cap_step(cap: SuperCap, p_net_w: float, dt_s: float) -> SuperCap:
    """Apply net power for dt: v' = sqrt(max(0, v^2 + 2*p*dt/C)), clamped to v_max.

    Charge the clamp refuses is added to `unharvested_j`; draw beyond an
    empty buffer is added to `deficit_j`.
    """
    if dt_s <= 0:
        raise ParameterError("dt must be positive")
    e_target = cap.energy_j + p_net_w * dt_s
    e_max = 0.5 * cap.capacitance_f * cap.v_max ** 2
    unharvested = cap.unharvested_j
    deficit = cap.deficit_j
    if e_target > e_max:
        unharvested += e_target - e_max
        e_target = e_max
    elif e_target < 0.0:
        deficit += -e_target
        e_target = 0.0
    v_new = math.sqrt(2.0 * e_target / cap.capacitance_f)
    v_new = min(v_new, cap.v_max)
    return replace(cap, v_now=v_new, unharvested_j=unharvested, deficit_j=deficit)


def cap_extract(cap: SuperCap, energy_j: float) -> SuperCap:
    """Remove a discrete amount of energy (e.g. one bus transaction)."""
    if energy_j < 0:
        raise ParameterError("extracted energy must be non-negative")
    e = cap.energy_j - energy_j
    deficit = cap.deficit_j
    if e < 0:
        deficit += -e
        e = 0.0
    return replace(cap, v_now=math.sqrt(2.0 * e / cap.capacitance_f),
                   deficit_j=deficit)


class SolarProfile:
    """Non-negative harvest power vs. wall-clock time, piecewise linear.

    With `period_s` set the profile repeats (day cycles).
    """

    def __init__(self, t_s, p_w, period_s: float = None):
        self._t = np.asarray(t_s, dtype=np.float64)
        self._p = np.asarray(p_w, dtype=np.float64)
        if self._t.ndim != 1 or self._t.shape != self._p.shape or self._t.size == 0:
            raise ParameterError("solar profile needs matching, non-empty arrays")
        if np.any(self._p < 0):
            raise ParameterError("solar power must be non-negative everywhere")
        self.period_s = period_s
        self._tl = self._t.tolist()
        self._pl = self._p.tolist()

    @classmethod
    def constant(cls, p_w: float) -> "SolarProfile":
        return cls([0.0], [p_w])

    @classmethod
    def dark(cls) -> "SolarProfile":
        return cls([0.0], [0.0])

    @classmethod
    def sine_day(cls, peak_w: float, sunrise_s: float = 21600.0,
                 sunset_s: float = 72000.0, day_s: float = 86400.0) -> "SolarProfile":
        """Half-sine insolation between sunrise and sunset, repeating daily."""
        if not 0 <= sunrise_s < sunset_s <= day_s:
            raise ParameterError("need 0 <= sunrise < sunset <= day length")
        t = np.linspace(sunrise_s, sunset_s, 257)
        p = peak_w * np.sin(np.pi * (t - sunrise_s) / (sunset_s - sunrise_s))
        t = np.concatenate(([0.0], t, [day_s]))
        p = np.concatenate(([0.0], np.maximum(p, 0.0), [0.0]))
        return cls(t, p, period_s=day_s)

    def power_at_s(self, t_s):
        t = np.asarray(t_s, dtype=np.float64)
        if self.period_s:
            t = np.mod(t, self.period_s)
        return np.interp(t, self._t, self._p)

    def power_scalar(self, t_s: float) -> float:
        """Fast scalar lookup for tight integration loops."""
        if self.period_s:
            t_s = t_s % self.period_s
        i = bisect.bisect_right(self._tl, t_s)
        if i <= 0:
            return self._pl[0]
        if i >= len(self._tl):
            return self._pl[-1]
        t0, t1 = self._tl[i - 1], self._tl[i]
        p0, p1 = self._pl[i - 1], self._pl[i]
        if t1 == t0:
            return p1
        return p0 + (p1 - p0) * (t_s - t0) / (t1 - t0)

    def mean_power(self, a_s: float, b_s: float) -> float:
        """Trapezoidal mean over [a, b] with sub-second resolution."""
        if b_s <= a_s:
            raise ParameterError("empty solar window")
        n = max(2, int(math.ceil((b_s - a_s) / 0.25)) + 1)
        t = np.linspace(a_s, b_s, min(n, 4097))
        return float(np.trapezoid(self.power_at_s(t), t) / (b_s - a_s))


@dataclass(frozen=True)
class DutyCycleState:
    """Adaptive duty-cycle controller state.

    `interval = clamp(task_energy / (headroom * max(charging, eps)))`;
    both the task-energy and charging estimates are EWMA smoothed.
    """

    interval_s: float = 10.0
    interval_min_s: float = 10.0
    interval_max_s: float = 3600.0
    headroom: float = 0.8
    alpha: float = 0.2
    epsilon_w: float = 1e-6
    task_energy_j: float = None
    harvest_power_w: float = None

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ParameterError("alpha must be in (0, 1]")
        if self.headroom <= 0:
            raise ParameterError("headroom must be positive")
        if not 0 < self.interval_min_s <= self.interval_max_s:
            raise ParameterError("need 0 < interval_min <= interval_max")
        if not self.interval_min_s <= self.interval_s <= self.interval_max_s:
            raise ParameterError("interval outside [interval_min, interval_max]")


def adapt_interval(state: DutyCycleState, traced, charging_w: float) -> DutyCycleState:
    """Fold one traced task execution and one charging measurement into the state.

    First observations seed the estimates directly; afterwards both are
    EWMA smoothed. Charging at or below the noise floor drives the
    interval to its maximum.
    """
    task = state.task_energy_j
    if traced is not None:
        observed = traced.aggregate_j if isinstance(traced, TraceRecord) else float(traced)
        if observed > 0:
            task = observed if task is None else \
                (1 - state.alpha) * task + state.alpha * observed
    charge = max(0.0, float(charging_w))
    est = charge if state.harvest_power_w is None else \
        (1 - state.alpha) * state.harvest_power_w + state.alpha * charge
    if task is None:
        interval = state.interval_s
    else:
        interval = task / (state.headroom * max(est, state.epsilon_w))
        interval = min(max(interval, state.interval_min_s), state.interval_max_s)
    return replace(state, interval_s=interval, task_energy_j=task,
                   harvest_power_w=est)


@dataclass
class EnergyLedger:
    """Exact bookkeeping of every energy flow in a harvest run (joules)."""

    e_in_j: float = 0.0            # harvest available at the storage node
    e_node_j: float = 0.0          # node load (sleep + task)
    e_monitor_j: float = 0.0       # monitor supply
    e_bus_j: float = 0.0           # register transactions
    e_shunt_j: float = 0.0         # resistive shunt loss
    e_store_start_j: float = 0.0
    e_store_end_j: float = 0.0
    e_unharvested_j: float = 0.0
    e_deficit_j: float = 0.0

    @property
    def e_overhead_j(self) -> float:
        return self.e_monitor_j + self.e_bus_j + self.e_shunt_j

    def residual_j(self) -> float:
        return (self.e_in_j - self.e_node_j - self.e_overhead_j
                - self.e_unharvested_j + self.e_deficit_j
                - (self.e_store_end_j - self.e_store_start_j))

    def residual_rel(self) -> float:
        scale = max(abs(self.e_in_j), abs(self.e_node_j) + self.e_overhead_j,
                    abs(self.e_store_end_j - self.e_store_start_j), 1e-12)
        return self.residual_j() / scale


class _WindowTimeline:
    """Shunt current/voltage knots for one measured window, fed to the monitor."""

    def __init__(self):
        self.t = []
        self.i = []
        self.v = []

    def add(self, t_ns, i_a, v_v):
        self.t.append(t_ns)
        self.i.append(i_a)
        self.v.append(v_v)

    def current_at(self, t_ns):
        return np.interp(np.asarray(t_ns, dtype=np.float64), self.t, self.i)

    def voltage_at(self, t_ns):
        return np.interp(np.asarray(t_ns, dtype=np.float64), self.t, self.v)


@dataclass(frozen=True)
class ChargingMeasurement:
    """Outcome of one sleep-mode charging measurement."""

    power_w: float
    cap: SuperCap
    sample: Sample
    t_end_ns: int


@dataclass(frozen=True)
class CycleRecord:
    """One duty cycle: measurement, task execution, adapted interval."""

    t_start_ns: int
    meas_end_ns: int
    charging_w: float
    task_start_ns: int
    task_end_ns: int           # == task_start_ns when the task was skipped
    task_energy_j: float
    interval_s: float
    v_cap_end: float
    cycle_end_ns: int


class HarvestSim:
    """Sequential firmware-style duty-cycle loop over one harvest node.

    Single app task, no preemption: measurement processing cost is folded
    into the task draw, so the scheduler is not involved. All state is
    owned by this object; step it from one context only.
    """

    def __init__(self, cap: SuperCap, solar: SolarProfile, monitor: ShuntMonitor,
                 bus_link: BusLink, task_activities, duty: DutyCycleState,
                 meas_config: MonitorConfig, task_config: MonitorConfig,
                 sleep_current_a: float = 40e-6, efficiency: float = 1.0,
                 reads_per_sample: int = 2, keep_task_series: bool = True,
                 task_label: str = "task"):
        if not 0 < efficiency <= 1:
            raise ParameterError("efficiency must be in (0, 1]")
        if meas_config.mode != "triggered":
            raise ParameterError("charging measurement config must be triggered mode")
        if task_config.mode != "continuous":
            raise ParameterError("task sampling config must be continuous mode")
        self.cap = cap
        self.solar = solar
        self.monitor = monitor
        self.bus_link = bus_link
        self.task_activities = tuple(task_activities)
        self.duty = duty
        self.meas_config = meas_config
        self.task_config = task_config
        self.sleep_current_a = sleep_current_a
        self.efficiency = efficiency
        self.reads_per_sample = reads_per_sample
        self.keep_task_series = keep_task_series
        self.task_label = task_label
        self.charging_enabled = True

        self.now_ns = 0
        self.ledger = EnergyLedger(e_store_start_j=cap.energy_j,
                                   e_store_end_j=cap.energy_j)
        self.samples = []
        self.cycles = []
        self.trace_records = []
        self.diagnostics = []
        self.cap_knots_t = [0]
        self.cap_knots_v = [cap.v_now]

    # -- physics ---------------------------------------------------------

    def _advance_store(self, until_ns: int, node_current_fn, p_monitor_w: float,
                       timeline: _WindowTimeline = None):
        """Step the cap to `until_ns` with the node drawing `node_current_fn(t_s)`.

        Returns nothing; mutates cap, ledger and the optional shunt
        timeline. Sub-steps at 1 s or activity resolution, whichever is
        finer.
        """
        r = self.monitor.r_shunt_ohm
        t = self.now_ns
        while t < until_ns:
            step_end = min(t + _SUBSTEP_NS, until_ns)
            dt_s = (step_end - t) / NS_PER_S
            v = self.cap.v_now
            mid_s = (t + step_end) / 2 / NS_PER_S
            i_node = float(node_current_fn(mid_s))
            p_node = v * i_node
            p_avail = (self.efficiency * self.solar.power_scalar(mid_s)
                       if self.charging_enabled else 0.0)
            # shunt carries node draw minus delivered harvest; first-order
            # loss estimate from that current
            i_shunt0 = i_node - p_avail / v if v > 0 else 0.0
            p_shunt = i_shunt0 * i_shunt0 * r
            draw = p_node + p_monitor_w + p_shunt
            before_unh = self.cap.unharvested_j
            before_def = self.cap.deficit_j
            self.cap = cap_step(self.cap, p_avail - draw, dt_s)
            unh_step = self.cap.unharvested_j - before_unh
            self.ledger.e_in_j += p_avail * dt_s
            self.ledger.e_node_j += p_node * dt_s
            self.ledger.e_monitor_j += p_monitor_w * dt_s
            self.ledger.e_shunt_j += p_shunt * dt_s
            self.ledger.e_unharvested_j += unh_step
            self.ledger.e_deficit_j += self.cap.deficit_j - before_def
            if timeline is not None:
                delivered = p_avail - unh_step / dt_s
                i_shunt = (p_node - delivered) / v if v > 0 else 0.0
                timeline.add(t, i_shunt, v)
                timeline.add(step_end, i_shunt, self.cap.v_now)
            t = step_end
            self.cap_knots_t.append(t)
            self.cap_knots_v.append(self.cap.v_now)
        self.now_ns = until_ns
        self.ledger.e_store_end_j = self.cap.energy_j

    def _charge_bus_reads(self, n_samples: int):
        if n_samples <= 0:
            return
        cost = self.bus_link.charge(self.reads_per_sample * n_samples)
        before_def = self.cap.deficit_j
        self.cap = cap_extract(self.cap, cost.bus_energy_j)
        self.ledger.e_bus_j += cost.bus_energy_j
        self.ledger.e_deficit_j += self.cap.deficit_j - before_def
        self.ledger.e_store_end_j = self.cap.energy_j

    # -- operations --------------------------------------------------------

    def measure_charging(self, node_current_fn=None) -> ChargingMeasurement:
        """One triggered conversion while the node sleeps; returns charging power.

        The node's own draw during the window (sleep current plus the
        monitor's active supply) is charged to the store; the measurement
        itself sees node-minus-delivered flow, so it reports availability
        minus sleep draw.
        """
        if self.monitor.busy:
            raise BusyError("a conversion is already in flight")
        self.monitor.reconfigure(self.meas_config)
        done_ns = self.monitor.trigger_single(self.now_ns)
        timeline = _WindowTimeline()
        fn = node_current_fn or (lambda t_s: self.sleep_current_a)
        self._advance_store(done_ns, fn, self.monitor.supply.active_power_w,
                            timeline)
        events = self.monitor.advance(timeline, done_ns)
        if not events:
            raise BusyError("triggered conversion did not complete")
        ev = events[0]
        self._charge_bus_reads(1)
        sample = Sample(t_ns=ev.t_ns, window_start_ns=ev.window_start_ns,
                        v_v=ev.bus_v, i_a=ev.current_a, p_w=ev.power_w)
        self.samples.append(sample)
        return ChargingMeasurement(power_w=-ev.power_w, cap=self.cap,
                                   sample=sample, t_end_ns=done_ns)

    def measure_isolated(self, node_current_fn=None) -> float:
        """Consumption with the charging circuit disabled for one window."""
        was = self.charging_enabled
        self.charging_enabled = False
        try:
            m = self.measure_charging(node_current_fn)
        finally:
            self.charging_enabled = was
        return -m.power_w

    def run_task(self):
        """Execute the task script once under continuous sampling.

        Returns (TraceRecord, end_ns). Skipped (zero-length record) when
        the buffer is below the operating floor.
        """
        t0 = self.now_ns
        if self.cap.v_now < self.cap.v_min_operating:
            self.diagnostics.append(("brownout_skip", t0))
            rec = TraceRecord(self.task_label, t0, t0, (), 0.0)
            return rec, t0
        self.monitor.reconfigure(self.task_config)
        timeline = _WindowTimeline()
        t = t0
        for act in self.task_activities:
            dur = act.duration_ns
            i0 = act.current_a
            i1 = act.current_end_a if act.current_end_a is not None else i0
            # ramps get sub-divided so the sampled trace shows the slope
            n_sub = max(1 if i1 == i0 else 8, int(math.ceil(dur / _SUBSTEP_NS)))
            for k in range(n_sub):
                a = t + dur * k // n_sub
                b = t + dur * (k + 1) // n_sub
                frac = (k + 0.5) / n_sub
                cur = i0 + (i1 - i0) * frac
                self._advance_store(b, lambda _t, c=cur: c,
                                    self.monitor.supply.active_power_w, timeline)
            t += dur
        events = self.monitor.advance(timeline, t)
        task_samples = []
        for ev in events:
            task_samples.append(Sample(t_ns=ev.t_ns,
                                       window_start_ns=ev.window_start_ns,
                                       v_v=ev.bus_v, i_a=ev.current_a,
                                       p_w=ev.power_w))
        self._charge_bus_reads(len(events))
        self.samples.extend(task_samples)
        if len(task_samples) >= 2:
            ts = np.array([s.t_ns for s in task_samples], dtype=np.float64)
            ps = np.array([s.p_w for s in task_samples])
            aggregate = float(np.trapezoid(ps, ts) / NS_PER_S)
        else:
            aggregate = 0.0
        rec = TraceRecord(self.task_label, t0, t,
                          tuple(task_samples) if self.keep_task_series else (),
                          aggregate)
        return rec, t

    def sleep_until(self, t_ns: int):
        """Idle the node (sleep draw, monitor idle) until `t_ns`."""
        if t_ns <= self.now_ns:
            return
        sleep_mon_w = self.monitor.supply.sleep_current_a * self.cap.v_now
        self._advance_store(t_ns, lambda t_s: self.sleep_current_a, sleep_mon_w)

    def run(self, duration_s: float):
        """Run duty cycles until `duration_s`; returns self for chaining."""
        end_ns = to_ns(duration_s)
        while self.now_ns < end_ns:
            t0 = self.now_ns
            if t0 + self.meas_config.sample_period_ns > end_ns:
                self.sleep_until(end_ns)
                break
            m = self.measure_charging()
            rec, task_end = self.run_task()
            if rec.end_ns > rec.start_ns:
                self.trace_records.append(rec)
            self.duty = adapt_interval(self.duty,
                                       rec if rec.aggregate_j > 0 else None,
                                       m.power_w)
            cycle_end = max(t0 + to_ns(self.duty.interval_s), task_end)
            cycle_end = min(cycle_end, end_ns)
            self.sleep_until(cycle_end)
            self.cycles.append(CycleRecord(
                t_start_ns=t0, meas_end_ns=m.t_end_ns, charging_w=m.power_w,
                task_start_ns=m.t_end_ns, task_end_ns=task_end,
                task_energy_j=rec.aggregate_j, interval_s=self.duty.interval_s,
                v_cap_end=self.cap.v_now, cycle_end_ns=cycle_end))
        return self

    def v_cap_at(self, t_ns):
        return np.interp(np.asarray(t_ns, dtype=np.float64),
                         np.asarray(self.cap_knots_t, dtype=np.float64),
                         np.asarray(self.cap_knots_v, dtype=np.float64))


@dataclass(frozen=True)
class BinRow:
    bin_start_s: float
    bin_end_s: float
    p_use_w: float      # <= 0, consumption while active
    p_charge_w: float   # >= 0, charging while inactive
    v_cap_end_v: float


def day_bins(sim: HarvestSim, duration_s: float, bin_s: float = 7200.0) -> list:
    """Binned day-cycle report: per-bin mean use (negative) and charge (positive).

    Task energy spreads over its execution window; each cycle's measured
    charging power applies to the cycle's inactive portion.
    """
    if bin_s <= 0:
        raise ParameterError("bin width must be positive")
    n_bins = int(math.ceil(duration_s / bin_s))
    use = np.zeros(n_bins)
    charge = np.zeros(n_bins)

    def spread(a_ns, b_ns, total_j, target):
        if b_ns <= a_ns or total_j == 0.0:
            return
        a_s, b_s = to_s(a_ns), to_s(b_ns)
        rate = total_j / (b_s - a_s)
        b0 = int(a_s // bin_s)
        b1 = min(int(math.ceil(b_s / bin_s)), n_bins)
        for k in range(b0, b1):
            lo = max(a_s, k * bin_s)
            hi = min(b_s, (k + 1) * bin_s)
            if hi > lo:
                target[k] += rate * (hi - lo)

    for cyc in sim.cycles:
        spread(cyc.task_start_ns, cyc.task_end_ns, cyc.task_energy_j, use)
        if cyc.charging_w > 0:
            inactive_pre = cyc.task_start_ns - cyc.t_start_ns
            inactive_post = cyc.cycle_end_ns - cyc.task_end_ns
            spread(cyc.t_start_ns, cyc.task_start_ns,
                   cyc.charging_w * inactive_pre / NS_PER_S, charge)
            spread(cyc.task_end_ns, cyc.cycle_end_ns,
                   cyc.charging_w * inactive_post / NS_PER_S, charge)

    rows = []
    for k in range(n_bins):
        a = k * bin_s
        b = min((k + 1) * bin_s, duration_s)
        width = b - a
        rows.append(BinRow(
            bin_start_s=a, bin_end_s=b,
            p_use_w=-use[k] / width if width else 0.0,
            p_charge_w=charge[k] / width if width else 0.0,
            v_cap_end_v=float(sim.v_cap_at(to_ns(b)))))
    return rows


def _one_shot_sim(monitor, cap, solar, at_s, sleep_current_a, bus_link,
                  efficiency, meas_config):
    from .bus import BusConfig
    link = bus_link or BusLink(BusConfig("high", 2200.0))
    if monitor.busy:
        raise BusyError("a conversion is already in flight")
    if meas_config is None:
        meas_config = (monitor.config if monitor.config.mode == "triggered"
                       else MonitorConfig(mode="triggered"))
    monitor.reconfigure(meas_config)
    monitor.advance(_WindowTimeline(), to_ns(at_s))
    sim = HarvestSim(cap, solar, monitor, link, (), DutyCycleState(),
                     meas_config=meas_config,
                     task_config=MonitorConfig(mode="continuous"),
                     sleep_current_a=sleep_current_a, efficiency=efficiency)
    sim.now_ns = to_ns(at_s)
    sim.cap_knots_t = [sim.now_ns]
    sim.cap_knots_v = [cap.v_now]
    return sim


def measure_charging(monitor: ShuntMonitor, cap: SuperCap, solar: SolarProfile,
                     at_s: float, sleep_current_a: float = 40e-6,
                     bus_link: BusLink = None, efficiency: float = 1.0,
                     meas_config: MonitorConfig = None) -> ChargingMeasurement:
    """Standalone charging measurement at wall-clock `at_s`.

    Convenience wrapper building a one-shot HarvestSim around the given
    parts; see HarvestSim.measure_charging for semantics.
    """
    sim = _one_shot_sim(monitor, cap, solar, at_s, sleep_current_a, bus_link,
                        efficiency, meas_config)
    return sim.measure_charging()


def isolated_consumption(monitor: ShuntMonitor, cap: SuperCap,
                         load_current_a: float, at_s: float = 0.0,
                         solar: SolarProfile = None,
                         bus_link: BusLink = None) -> float:
    """Consumption measured with the charging circuit disabled.

    Independent of the solar profile by construction; the store drains by
    the node draw for the duration of the window.
    """
    sim = _one_shot_sim(monitor, cap, solar or SolarProfile.dark(), at_s,
                        load_current_a, bus_link, 1.0, None)
    return sim.measure_isolated()
