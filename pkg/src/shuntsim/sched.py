"""Tickless priority scheduler with a measurement thread and energy attribution.

The event loop is strictly single-threaded and deterministic: time is
integer nanoseconds, ready threads are ordered by (priority, FIFO ready
order), and the highest-priority ready thread always runs. Application
threads execute scripted activity sequences; a built-in measurement
thread wakes on each monitor alert (or on a fixed interval), occupies the
CPU for its per-sample processing time, charges the bus link for its
register reads, and emits one measured sample per wake.

Attribution follows the sampling grid: each sample's energy is split
among threads in proportion to their CPU-active time inside the sample
window, and time with no thread on the CPU accrues to `unattributed`.
Explicit task tracing brackets time spans and returns either the sample
series inside the span or just its aggregated energy.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, ParameterError
from .monitor import ShuntMonitor
from .profiles import NS_PER_S, RecordedLoad, to_ns


@dataclass(frozen=True)
class Activity:
    """One scripted interval of a thread: what it does and what it draws.

    `compute` needs the CPU and draws its current only while actually
    scheduled; `sleep` and `io` block the thread for their wall-clock
    duration and draw their current the whole time (io models peripherals
    that run without the CPU). A linear current ramp (`current_end_a`)
    is only supported by the sequential harvest runner.
    """

    kind: str
    duration_s: float
    current_a: float = 0.0
    current_end_a: float = None
    trace_start: str = None
    trace_stop: str = None

    def __post_init__(self):
        if self.kind not in ("compute", "sleep", "io"):
            raise ParameterError(f"activity kind must be compute/sleep/io, got {self.kind!r}")
        if self.duration_s <= 0:
            raise ParameterError("activity duration must be positive")
        if self.current_a < 0:
            raise ParameterError("activity current must be non-negative")

    @property
    def duration_ns(self) -> int:
        return to_ns(self.duration_s)


@dataclass(frozen=True)
class ThreadSpec:
    """A scripted thread: unique id, priority (lower is more urgent), activities."""

    id: str
    priority: int
    activities: tuple
    repeat: bool = True

    def __post_init__(self):
        object.__setattr__(self, "activities", tuple(self.activities))
        if not self.activities:
            raise ParameterError(f"thread {self.id!r} has an empty script")


@dataclass(frozen=True)
class MeasurementSpec:
    """Configuration of the built-in measurement thread.

    With `interval_s` unset the thread wakes on each monitor alert; with
    it set the thread wakes periodically and reads whatever the registers
    hold (the monitor keeps converting on its own cadence). `t_proc_s` is
    the full per-sample CPU occupancy from register read to unit
    conversion.
    """

    thread_id: str = "meas"
    priority: int = 0
    t_proc_s: float = 160e-6
    reads_per_sample: int = 2
    interval_s: float = None
    current_a: float = 0.012
    starvation_deadline_s: float = None

    def __post_init__(self):
        if self.t_proc_s <= 0:
            raise ParameterError("t_proc_s must be positive")
        if self.reads_per_sample < 1:
            raise ParameterError("reads_per_sample must be >= 1")


@dataclass(frozen=True)
class NodeSupply:
    """Supply rail seen by the node: fixed voltage plus an always-on idle draw."""

    voltage_v: float = 3.3
    idle_current_a: float = 0.0


@dataclass(frozen=True)
class Sample:
    """One measured sample covering [window_start_ns, t_ns]."""

    t_ns: int
    window_start_ns: int
    v_v: float
    i_a: float
    p_w: float

    @property
    def window_ns(self) -> int:
        return self.t_ns - self.window_start_ns


@dataclass(frozen=True)
class Diagnostic:
    t_ns: int
    kind: str
    thread_id: str
    detail: str = ""


@dataclass
class ScheduleTrace:
    """Which thread held the CPU when. Entries are non-overlapping and ordered;
    gaps between them are idle/sleep time."""

    start_ns: int
    end_ns: int
    entries: list = field(default_factory=list)  # (thread_id, start_ns, end_ns)
    context_switches: int = 0

    def active_ns(self, thread_id: str, a_ns=None, b_ns=None) -> int:
        a = self.start_ns if a_ns is None else a_ns
        b = self.end_ns if b_ns is None else b_ns
        total = 0
        for tid, s, e in self.entries:
            if tid == thread_id:
                total += max(0, min(e, b) - max(s, a))
        return total

    def switches_of(self, thread_id: str, a_ns=None, b_ns=None) -> int:
        a = self.start_ns if a_ns is None else a_ns
        b = self.end_ns if b_ns is None else b_ns
        return sum(1 for tid, s, e in self.entries
                   if tid == thread_id and min(e, b) > max(s, a))

    def thread_ids(self):
        seen = []
        for tid, _, _ in self.entries:
            if tid not in seen:
                seen.append(tid)
        return seen


@dataclass(frozen=True)
class TraceRecord:
    """Explicitly traced task span with its measured energy."""

    label: str
    start_ns: int
    end_ns: int
    samples: tuple
    aggregate_j: float


class Tracer:
    """Balanced start/stop bracketing of task spans.

    Spans are resolved against the sample stream after the run: a record
    holds the samples whose window end falls inside the span and their
    trapezoidal energy integral. In aggregate mode the samples are
    dropped and only the energy is kept.
    """

    def __init__(self, mode: str = "series"):
        if mode not in ("series", "aggregate"):
            raise ParameterError("tracer mode must be 'series' or 'aggregate'")
        self.mode = mode
        self._open = {}
        self.spans = []  # (label, start_ns, end_ns)

    def start(self, label: str, t_ns: int):
        if label in self._open:
            raise ContractError(f"trace {label!r} is already open")
        self._open[label] = t_ns

    def stop(self, label: str, t_ns: int):
        if label not in self._open:
            raise ContractError(f"trace_stop({label!r}) without matching trace_start")
        start = self._open.pop(label)
        if t_ns < start:
            raise ContractError(f"trace {label!r} stops before it starts")
        self.spans.append((label, start, t_ns))

    def close_all(self, t_ns: int):
        """Force-close any spans still open (end of run)."""
        for label in sorted(self._open):
            self.stop(label, t_ns)

    def resolve(self, samples) -> list:
        """Build TraceRecords for all closed spans from a sample stream."""
        if self._open:
            raise ContractError(f"unbalanced traces left open: {sorted(self._open)}")
        records = []
        for label, a, b in self.spans:
            inside = [s for s in samples if a < s.t_ns <= b]
            if len(inside) >= 2:
                t = np.array([s.t_ns for s in inside], dtype=np.float64)
                p = np.array([s.p_w for s in inside])
                aggregate = float(np.trapezoid(p, t) / NS_PER_S)
            else:
                aggregate = 0.0
            records.append(TraceRecord(
                label=label, start_ns=a, end_ns=b,
                samples=tuple(inside) if self.mode == "series" else (),
                aggregate_j=aggregate))
        return records


def cpu_utilization(sample_interval_s: float, t_proc_s: float) -> float:
    """Measurement-thread CPU share: t_proc / interval, saturating at 1."""
    if sample_interval_s <= 0 or t_proc_s <= 0:
        raise ParameterError("sample interval and processing time must be positive")
    return min(1.0, t_proc_s / sample_interval_s)


@dataclass(frozen=True)
class ThreadStats:
    energy_j: float
    mean_power_w: float
    cpu_utilization: float
    context_switches: int


@dataclass
class EnergyReport:
    """Per-thread attribution of sampled energy over the report span."""

    span_start_ns: int
    span_end_ns: int
    threads: dict
    unattributed_j: float
    total: ThreadStats

    @property
    def span_s(self) -> float:
        return (self.span_end_ns - self.span_start_ns) / NS_PER_S


def attribute(samples, trace: ScheduleTrace) -> EnergyReport:
    """Split each sample's energy among threads by their active time in its window.

    The report covers the overlap of the sampled span and the trace span;
    CPU-idle time inside a window sends its share to `unattributed`.
    """
    if not samples:
        raise ParameterError("no samples to attribute")
    span_a = max(samples[0].window_start_ns, trace.start_ns)
    span_b = min(samples[-1].t_ns, trace.end_ns)
    if span_b <= span_a:
        raise ParameterError("samples and schedule trace do not overlap")

    tids = trace.thread_ids()
    energy = {tid: 0.0 for tid in tids}
    unattributed = 0.0
    total_e = 0.0

    entries = trace.entries
    idx = 0
    for s in samples:
        a = max(s.window_start_ns, span_a)
        b = min(s.t_ns, span_b)
        if b <= a:
            continue
        e_win = s.p_w * (b - a) / NS_PER_S
        total_e += e_win
        while idx < len(entries) and entries[idx][2] <= a:
            idx += 1
        j = idx
        active = 0
        while j < len(entries) and entries[j][1] < b:
            tid, es, ee = entries[j]
            ov = min(ee, b) - max(es, a)
            if ov > 0:
                energy[tid] += e_win * ov / (b - a)
                active += ov
            j += 1
        unattributed += e_win * (b - a - active) / (b - a)

    span_s = (span_b - span_a) / NS_PER_S
    threads = {}
    for tid in tids:
        act = trace.active_ns(tid, span_a, span_b)
        threads[tid] = ThreadStats(
            energy_j=energy[tid],
            mean_power_w=energy[tid] / span_s,
            cpu_utilization=act / (span_b - span_a),
            context_switches=trace.switches_of(tid, span_a, span_b))
    total_active = sum(trace.active_ns(tid, span_a, span_b) for tid in tids)
    total = ThreadStats(
        energy_j=total_e,
        mean_power_w=total_e / span_s,
        cpu_utilization=total_active / (span_b - span_a),
        context_switches=sum(t.context_switches for t in threads.values()))
    return EnergyReport(span_a, span_b, threads, unattributed, total)


@dataclass
class RunResult:
    schedule: ScheduleTrace
    samples: list
    trace_records: list
    diagnostics: list
    recorder: RecordedLoad
    monitor: ShuntMonitor
    bus_link: object
    threads: tuple
    meas: MeasurementSpec
    supply: NodeSupply
    end_ns: int


class _ThreadState:
    __slots__ = ("spec", "idx", "remaining_ns", "ready", "done", "seq",
                 "started_ns", "loops")

    def __init__(self, spec):
        self.spec = spec
        self.idx = -1
        self.remaining_ns = 0
        self.ready = False
        self.done = False
        self.seq = 0
        self.started_ns = None
        self.loops = 0

    @property
    def activity(self):
        return self.spec.activities[self.idx]


class _EventLoop:
    """One deterministic run; see module docstring for the model."""

    def __init__(self, threads, monitor, bus_link, duration_s, meas, supply,
                 tracer=None):
        ids = [t.id for t in threads]
        if len(set(ids)) != len(ids):
            raise ParameterError(f"duplicate thread ids: {ids}")
        if meas.thread_id in ids:
            raise ParameterError(f"thread id {meas.thread_id!r} collides with "
                                 "the measurement thread")
        for t in threads:
            for act in t.activities:
                if act.current_end_a is not None:
                    raise ParameterError(
                        "current ramps are only supported by the sequential "
                        f"harvest runner (thread {t.id!r})")
        self.threads = {t.id: _ThreadState(t) for t in threads}
        self.monitor = monitor
        self.bus_link = bus_link
        self.meas_spec = meas
        self.supply = supply
        self.end_ns = to_ns(duration_s)
        self.now = 0
        self.recorder = RecordedLoad(supply.idle_current_a, supply.voltage_v)
        self.tracer = tracer or Tracer(mode="series")

        self.meas = _ThreadState(meas)
        self.meas_queue = deque()
        self._seq = 0
        self._ready_heap = []
        self._cur_contrib = 0.0
        self._last_tid = None

        self.trace = ScheduleTrace(0, self.end_ns)
        self.samples = []
        self.diagnostics = []
        self._evq = []  # (t_ns, seq, kind, tid)
        self._next_meas_wake = None
        self._last_meas_wake = 0

        deadline = meas.starvation_deadline_s
        self._deadline_ns = (monitor.sample_period_ns if deadline is None
                             else to_ns(deadline))

    # -- ready queue ------------------------------------------------------

    def _make_ready(self, ts, t_ns, keep_seq=False):
        if not keep_seq:
            self._seq += 1
            ts.seq = self._seq
        ts.ready = True
        prio = ts.spec.priority if ts is not self.meas else self.meas_spec.priority
        tid = ts.spec.id if ts is not self.meas else self.meas_spec.thread_id
        heapq.heappush(self._ready_heap, (prio, ts.seq, tid))

    def _pick(self):
        while self._ready_heap:
            prio, seq, tid = self._ready_heap[0]
            ts = self.meas if tid == self.meas_spec.thread_id else self.threads[tid]
            if ts.ready and ts.seq == seq:
                heapq.heappop(self._ready_heap)
                ts.ready = False
                return ts
            heapq.heappop(self._ready_heap)
        return None

    # -- bookkeeping ------------------------------------------------------

    def _tid_of(self, ts):
        return self.meas_spec.thread_id if ts is self.meas else ts.spec.id

    def _set_contrib(self, t_ns, amount):
        if amount != self._cur_contrib:
            self.recorder.add_current(t_ns, amount - self._cur_contrib)
            self._cur_contrib = amount

    def _record_slice(self, tid, a_ns, b_ns):
        ent = self.trace.entries
        if ent and ent[-1][0] == tid and ent[-1][2] == a_ns:
            ent[-1] = (tid, ent[-1][1], b_ns)
        else:
            ent.append((tid, a_ns, b_ns))
            self.trace.context_switches += 1

    # -- script handling ---------------------------------------------------

    def _push_event(self, t_ns, kind, tid):
        self._seq += 1
        heapq.heappush(self._evq, (t_ns, self._seq, kind, tid))

    def _advance_script(self, ts, t_ns):
        spec = ts.spec
        ts.idx += 1
        if ts.idx >= len(spec.activities):
            if spec.repeat:
                ts.idx = 0
                ts.loops += 1
            else:
                ts.done = True
                return
        act = ts.activity
        if act.trace_start:
            self.tracer.start(act.trace_start, t_ns)
        if act.kind == "compute":
            ts.remaining_ns = act.duration_ns
            self._make_ready(ts, t_ns)
        else:
            if act.current_a:
                self.recorder.add_current(t_ns, act.current_a)
            self._push_event(t_ns + act.duration_ns, "wake", spec.id)

    def _finish_activity(self, ts, t_ns):
        act = ts.activity
        if act.kind != "compute" and act.current_a:
            self.recorder.add_current(t_ns, -act.current_a)
        if act.trace_stop:
            self.tracer.stop(act.trace_stop, t_ns)
        self._advance_script(ts, t_ns)

    # -- measurement thread -------------------------------------------------

    def _meas_activate(self, t_ns):
        if not self.meas.ready and self.meas.remaining_ns == 0:
            self.meas.remaining_ns = to_ns(self.meas_spec.t_proc_s)
            self.meas.started_ns = None
            self._make_ready(self.meas, t_ns)

    def _on_alert(self, ev, t_ns):
        if self.meas_queue:
            # previous alert still unprocessed; newest data would be lost
            # on real hardware, so flag it but keep simulating
            self.diagnostics.append(Diagnostic(
                t_ns, "missed_alert", self.meas_spec.thread_id,
                f"{len(self.meas_queue)} sample(s) pending"))
        self.meas_queue.append(ev)
        self._meas_activate(t_ns)

    def _finish_meas(self, t_ns):
        spec = self.meas_spec
        if spec.interval_s is None:
            ev = self.meas_queue.popleft()
            started = t_ns if self.meas.started_ns is None else self.meas.started_ns
            wait_ns = started - ev.t_ns
            if wait_ns > self._deadline_ns:
                self.diagnostics.append(Diagnostic(
                    t_ns, "starvation", spec.thread_id,
                    f"sample waited {wait_ns} ns before processing"))
            self.monitor.read_register("current", self.bus_link)
            if spec.reads_per_sample > 1:
                self.monitor.read_register("bus_voltage", self.bus_link)
            if spec.reads_per_sample > 2:
                self.bus_link.charge(spec.reads_per_sample - 2)
            self.monitor.conversion_ready = False
            self.samples.append(Sample(
                t_ns=ev.t_ns, window_start_ns=ev.window_start_ns,
                v_v=ev.bus_v, i_a=ev.current_a, p_w=ev.power_w))
            if self.meas_queue:
                self._meas_activate(t_ns)
        else:
            cur, _ = self.monitor.read_register("current", self.bus_link)
            busv = self.monitor.registers["bus_voltage"]
            if spec.reads_per_sample > 1:
                busv, _ = self.monitor.read_register("bus_voltage", self.bus_link)
            if spec.reads_per_sample > 2:
                self.bus_link.charge(spec.reads_per_sample - 2)
            pw = self.monitor.registers["power"] * self.monitor.power_lsb_w
            self.samples.append(Sample(
                t_ns=self._meas_wake_t, window_start_ns=self._last_meas_wake,
                v_v=busv * self.monitor.bus_quantizer.lsb.value,
                i_a=cur * self.monitor.current_lsb_a, p_w=pw))
            self._last_meas_wake = self._meas_wake_t

    # -- main loop -----------------------------------------------------------

    def run(self):
        for ts in self.threads.values():
            self._advance_script(ts, 0)
        spec = self.meas_spec
        alert_driven = spec.interval_s is None
        if not alert_driven:
            self._next_meas_wake = to_ns(spec.interval_s)
        self._meas_wake_t = None

        while self.now < self.end_ns:
            t_alert = self.monitor.next_completion_ns() if alert_driven else None
            t_next = self.end_ns
            if self._evq:
                t_next = min(t_next, self._evq[0][0])
            if t_alert is not None:
                t_next = min(t_next, t_alert)
            if not alert_driven and self._next_meas_wake is not None:
                t_next = min(t_next, self._next_meas_wake)

            runner = self._pick()
            if runner is None:
                self._set_contrib(self.now, 0.0)
                self.now = t_next
            else:
                if runner is self.meas and runner.started_ns is None:
                    runner.started_ns = self.now
                slice_end = min(t_next, self.now + runner.remaining_ns)
                contrib = (spec.current_a if runner is self.meas
                           else runner.activity.current_a)
                self._set_contrib(self.now, contrib)
                self._record_slice(self._tid_of(runner), self.now, slice_end)
                runner.remaining_ns -= slice_end - self.now
                self.now = slice_end
                if runner.remaining_ns == 0:
                    self._set_contrib(self.now, 0.0)
                    if runner is self.meas:
                        self._finish_meas(self.now)
                    else:
                        self._finish_activity(runner, self.now)
                else:
                    self._make_ready(runner, self.now, keep_seq=True)

            # deliver everything due at the new time
            if alert_driven:
                t_alert = self.monitor.next_completion_ns()
                while t_alert is not None and t_alert <= self.now:
                    for ev in self.monitor.advance(self.recorder, t_alert):
                        if ev.alert:
                            self._on_alert(ev, t_alert)
                    t_alert = self.monitor.next_completion_ns()
            elif self._next_meas_wake is not None and self._next_meas_wake <= self.now:
                t_wake = self._next_meas_wake
                self.monitor.advance(self.recorder, t_wake)
                if self.meas.remaining_ns == 0 and not self.meas.ready:
                    self._meas_wake_t = t_wake
                    self._meas_activate(t_wake)
                else:
                    self.diagnostics.append(Diagnostic(
                        t_wake, "missed_wake", spec.thread_id,
                        "previous sample still processing"))
                nxt = t_wake + to_ns(spec.interval_s)
                self._next_meas_wake = nxt if nxt <= self.end_ns else None
            while self._evq and self._evq[0][0] <= self.now:
                _, _, kind, tid = heapq.heappop(self._evq)
                if kind == "wake":
                    self._finish_activity(self.threads[tid], self.now)

        self._set_contrib(self.end_ns, 0.0)
        self.monitor.advance(self.recorder, self.end_ns)
        self.tracer.close_all(self.end_ns)
        records = self.tracer.resolve(self.samples)
        return RunResult(
            schedule=self.trace, samples=self.samples, trace_records=records,
            diagnostics=self.diagnostics, recorder=self.recorder,
            monitor=self.monitor, bus_link=self.bus_link,
            threads=tuple(ts.spec for ts in self.threads.values()),
            meas=spec, supply=self.supply, end_ns=self.end_ns)


def run(threads, monitor: ShuntMonitor, bus_link, duration_s: float,
        meas: MeasurementSpec = MeasurementSpec(),
        supply: NodeSupply = NodeSupply(), tracer: Tracer = None) -> RunResult:
    """Execute a scripted scenario; returns the schedule trace and sample stream.

    Deterministic: the same threads, monitor seed and duration produce an
    identical RunResult, including every timestamp.
    """
    if duration_s < 0:
        raise ParameterError("duration must be non-negative")
    loop = _EventLoop(list(threads), monitor, bus_link, duration_s, meas,
                      supply, tracer)
    return loop.run()
