"""Scenario files: schema, parsing, validation.

A scenario is a TOML document (conventionally `.scn`) with a
`format_version` field. Two kinds exist:

`kind = "workload"` runs scripted threads under the preemptive scheduler
against a fixed supply; `kind = "harvest"` runs the duty-cycled
harvesting loop against a solar profile and super capacitor.

Top-level keys:

    format_version = 1
    kind = "workload" | "harvest"
    seed = 42                # master seed; monitor noise derives from it
    duration_s = 2.0

    [supply]                 # workload
    voltage_v = 3.3
    idle_current_a = 0.0005

    [monitor]
    r_shunt_ohm = 2.0
    shunt_conv_us = 332      # from the supported conversion-time set
    bus_conv_us = 332
    averaging = 16           # from the supported averaging set
    mode = "continuous"
    alert_enabled = true

    [noise]
    sigma_shunt_v = 12e-6
    gain_error = 5e-4

    [bus]
    speed_mode = "high"      # fast | fast_plus | high
    pullup_ohm = 2200.0
    c_bus_f = 158e-12
    v_dd = 3.3

    [measurement]            # workload: the measurement thread
    priority = 0
    t_proc_us = 160.0
    reads_per_sample = 2
    interval_s = 0.0         # 0 -> wake on monitor alerts
    current_a = 0.012

    [[threads]]              # workload
    id = "worker"
    priority = 2
    repeat = true
    activities = [ {kind = "compute", duration_s = 0.03, current_a = 0.02} ]

    [outputs]
    oracle = true            # write reference energies and deltas

    [harvest]                # harvest kind only
    sleep_current_a = 4e-5
    efficiency = 1.0
    keep_task_series = true
    [harvest.supercap]
    capacitance_f = 100.0
    v_start = 2.35
    v_max = 2.7
    v_min_operating = 1.0
    [harvest.solar]
    peak_w = 0.12            # half-sine day ...
    sunrise_s = 21600.0
    sunset_s = 72000.0
    day_s = 86400.0
    # ... or explicit points: points = [[t_s, p_w], ...], period_s = 0
    [harvest.duty]
    interval_s = 10.0
    interval_min_s = 10.0
    interval_max_s = 900.0
    headroom = 0.8
    alpha = 0.2
    [harvest.task_monitor]   # continuous config used while the task runs
    shunt_conv_us = 332
    bus_conv_us = 332
    averaging = 4
    [[harvest.task]]         # the duty-cycled task script
    kind = "io"
    duration_s = 0.2
    current_a = 0.02
    current_end_a = 0.015    # optional ramp
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .bus import SPEED_MODES, BusConfig
from .errors import ParameterError, ScenarioError
from .harvest import DutyCycleState, SolarProfile, SuperCap
from .monitor import (AVG_STEPS, CONV_TIMES_US, MODES, MonitorConfig,
                      NoiseModel, SupplyModel)
from .sched import Activity, MeasurementSpec, NodeSupply, ThreadSpec

FORMAT_VERSION = 1


@dataclass
class Scenario:
    """Validated scenario, ready to build simulator objects from."""

    kind: str
    seed: int
    duration_s: float
    monitor_config: MonitorConfig
    r_shunt_ohm: float
    noise: NoiseModel
    monitor_supply: SupplyModel
    bus_config: BusConfig
    supply: NodeSupply
    meas: MeasurementSpec
    threads: tuple = ()
    oracle: bool = False
    bin_s: float = 7200.0
    # harvest-only parts
    supercap: SuperCap = None
    solar: SolarProfile = None
    duty: DutyCycleState = None
    task: tuple = ()
    task_monitor_config: MonitorConfig = None
    sleep_current_a: float = 40e-6
    efficiency: float = 1.0
    keep_task_series: bool = True
    name: str = "scenario"


class _Checker:
    """Collects field-path diagnostics instead of failing on the first one."""

    def __init__(self, data):
        self.data = data
        self.problems = []

    def problem(self, path, msg):
        self.problems.append(f"{path}: {msg}")

    def get(self, table, key, path, required=False, default=None, types=None):
        if key not in table:
            if required:
                self.problem(f"{path}{key}", "missing required field")
            return default
        val = table[key]
        if types and not isinstance(val, types) or isinstance(val, bool) and types == (int, float):
            self.problem(f"{path}{key}", f"expected {types}, got {type(val).__name__}")
            return default
        return val

    def number(self, table, key, path, required=False, default=None,
               minimum=None, positive=False):
        val = self.get(table, key, path, required, default, (int, float))
        if val is None or val is default and key not in table:
            return default
        if positive and val <= 0:
            self.problem(f"{path}{key}", f"must be positive, got {val}")
            return default
        if minimum is not None and val < minimum:
            self.problem(f"{path}{key}", f"must be >= {minimum}, got {val}")
            return default
        return val

    def choice(self, table, key, path, allowed, default=None):
        val = self.get(table, key, path, default=default)
        if val is not None and val not in allowed:
            self.problem(f"{path}{key}",
                         f"{val!r} not in allowed set {tuple(allowed)}")
            return default
        return val


def _parse_activities(chk, items, path):
    acts = []
    for n, raw in enumerate(items):
        p = f"{path}[{n}]."
        kind = chk.choice(raw, "kind", p, ("compute", "sleep", "io"))
        dur = chk.number(raw, "duration_s", p, required=True, positive=True)
        cur = chk.number(raw, "current_a", p, default=0.0, minimum=0.0)
        cur_end = chk.number(raw, "current_end_a", p, default=None, minimum=0.0)
        tstart = chk.get(raw, "trace_start", p, types=str)
        tstop = chk.get(raw, "trace_stop", p, types=str)
        if kind is None or dur is None:
            continue
        try:
            acts.append(Activity(kind=kind, duration_s=dur, current_a=cur,
                                 current_end_a=cur_end, trace_start=tstart,
                                 trace_stop=tstop))
        except ParameterError as exc:
            chk.problem(p.rstrip("."), str(exc))
    return tuple(acts)


def _build(chk) -> Scenario:
    d = chk.data

    version = chk.get(d, "format_version", "", required=True, types=(int,))
    if version is not None and version != FORMAT_VERSION:
        chk.problem("format_version", f"unsupported version {version}; "
                                      f"this build reads {FORMAT_VERSION}")
    kind = chk.choice(d, "kind", "", ("workload", "harvest"), default="workload")
    seed = chk.get(d, "seed", "", default=0, types=(int,))
    duration = chk.number(d, "duration_s", "", required=True, minimum=0.0)

    mon = d.get("monitor", {})
    r_shunt = chk.number(mon, "r_shunt_ohm", "monitor.", default=2.0, positive=True)
    sct = chk.choice(mon, "shunt_conv_us", "monitor.", CONV_TIMES_US, default=332)
    bct = chk.choice(mon, "bus_conv_us", "monitor.", CONV_TIMES_US, default=332)
    avg = chk.choice(mon, "averaging", "monitor.", AVG_STEPS, default=16)
    mode = chk.choice(mon, "mode", "monitor.", MODES, default="continuous")
    alert = chk.get(mon, "alert_enabled", "monitor.", default=True, types=(bool,))

    noi = d.get("noise", {})
    sigma = chk.number(noi, "sigma_shunt_v", "noise.", default=12e-6, minimum=0.0)
    gain = chk.number(noi, "gain_error", "noise.", default=5e-4)

    msup = d.get("monitor_supply", {})
    active_p = chk.number(msup, "active_power_w", "monitor_supply.",
                          default=1.1e-3, minimum=0.0)
    sleep_i = chk.number(msup, "sleep_current_a", "monitor_supply.",
                         default=1.5e-6, minimum=0.0)

    busd = d.get("bus", {})
    speed = chk.choice(busd, "speed_mode", "bus.", SPEED_MODES, default="high")
    pullup = chk.number(busd, "pullup_ohm", "bus.", default=2200.0, positive=True)
    c_bus = chk.number(busd, "c_bus_f", "bus.", default=158e-12, positive=True)
    v_dd = chk.number(busd, "v_dd", "bus.", default=3.3, positive=True)

    supd = d.get("supply", {})
    volt = chk.number(supd, "voltage_v", "supply.", default=3.3, positive=True)
    idle = chk.number(supd, "idle_current_a", "supply.", default=0.0, minimum=0.0)

    md = d.get("measurement", {})
    m_prio = chk.get(md, "priority", "measurement.", default=0, types=(int,))
    t_proc = chk.number(md, "t_proc_us", "measurement.", default=160.0, positive=True)
    reads = chk.get(md, "reads_per_sample", "measurement.", default=2, types=(int,))
    m_int = chk.number(md, "interval_s", "measurement.", default=0.0, minimum=0.0)
    m_cur = chk.number(md, "current_a", "measurement.", default=0.012, minimum=0.0)

    threads = []
    for n, raw in enumerate(d.get("threads", [])):
        p = f"threads[{n}]."
        tid = chk.get(raw, "id", p, required=True, types=str)
        prio = chk.get(raw, "priority", p, required=True, types=(int,))
        repeat = chk.get(raw, "repeat", p, default=True, types=(bool,))
        acts = _parse_activities(chk, raw.get("activities", []), f"{p}activities")
        if tid is None or prio is None:
            continue
        if not acts:
            chk.problem(f"{p}activities", "thread needs at least one activity")
            continue
        try:
            threads.append(ThreadSpec(id=tid, priority=prio, activities=acts,
                                      repeat=repeat))
        except ParameterError as exc:
            chk.problem(p.rstrip("."), str(exc))
    ids = [t.id for t in threads]
    if len(set(ids)) != len(ids):
        chk.problem("threads", f"duplicate thread ids: {ids}")

    outputs = d.get("outputs", {})
    oracle = chk.get(outputs, "oracle", "outputs.", default=False, types=(bool,))
    bin_s = chk.number(outputs, "bin_s", "outputs.", default=7200.0, positive=True)

    sc = None
    solar = None
    duty = None
    task = ()
    task_cfg = None
    sleep_a = 40e-6
    eff = 1.0
    keep_series = True
    if kind == "harvest":
        h = d.get("harvest")
        if h is None:
            chk.problem("harvest", "harvest scenarios need a [harvest] table")
            h = {}
        sleep_a = chk.number(h, "sleep_current_a", "harvest.", default=40e-6,
                             minimum=0.0)
        eff = chk.number(h, "efficiency", "harvest.", default=1.0, positive=True)
        keep_series = chk.get(h, "keep_task_series", "harvest.", default=True,
                              types=(bool,))
        capd = h.get("supercap", {})
        try:
            sc = SuperCap(
                capacitance_f=chk.number(capd, "capacitance_f",
                                         "harvest.supercap.", default=100.0,
                                         positive=True),
                v_now=chk.number(capd, "v_start", "harvest.supercap.",
                                 default=2.0, minimum=0.0),
                v_max=chk.number(capd, "v_max", "harvest.supercap.",
                                 default=2.7, positive=True),
                v_min_operating=chk.number(capd, "v_min_operating",
                                           "harvest.supercap.", default=0.0,
                                           minimum=0.0))
        except ParameterError as exc:
            chk.problem("harvest.supercap", str(exc))
        sol = h.get("solar", {})
        try:
            if "points" in sol:
                pts = sol["points"]
                solar = SolarProfile([p[0] for p in pts], [p[1] for p in pts],
                                     period_s=sol.get("period_s") or None)
            else:
                solar = SolarProfile.sine_day(
                    peak_w=chk.number(sol, "peak_w", "harvest.solar.",
                                      default=0.1, minimum=0.0),
                    sunrise_s=chk.number(sol, "sunrise_s", "harvest.solar.",
                                         default=21600.0, minimum=0.0),
                    sunset_s=chk.number(sol, "sunset_s", "harvest.solar.",
                                        default=72000.0, positive=True),
                    day_s=chk.number(sol, "day_s", "harvest.solar.",
                                     default=86400.0, positive=True))
        except (ParameterError, IndexError, TypeError) as exc:
            chk.problem("harvest.solar", str(exc))
        dd = h.get("duty", {})
        try:
            i_min = chk.number(dd, "interval_min_s", "harvest.duty.",
                               default=10.0, positive=True)
            duty = DutyCycleState(
                interval_s=chk.number(dd, "interval_s", "harvest.duty.",
                                      default=i_min, positive=True),
                interval_min_s=i_min,
                interval_max_s=chk.number(dd, "interval_max_s", "harvest.duty.",
                                          default=3600.0, positive=True),
                headroom=chk.number(dd, "headroom", "harvest.duty.",
                                    default=0.8, positive=True),
                alpha=chk.number(dd, "alpha", "harvest.duty.",
                                 default=0.2, positive=True))
        except ParameterError as exc:
            chk.problem("harvest.duty", str(exc))
        tm = h.get("task_monitor", {})
        try:
            task_cfg = MonitorConfig(
                shunt_conv_us=chk.choice(tm, "shunt_conv_us",
                                         "harvest.task_monitor.",
                                         CONV_TIMES_US, default=332),
                bus_conv_us=chk.choice(tm, "bus_conv_us",
                                       "harvest.task_monitor.",
                                       CONV_TIMES_US, default=332),
                averaging=chk.choice(tm, "averaging", "harvest.task_monitor.",
                                     AVG_STEPS, default=4),
                mode="continuous", alert_enabled=False)
        except ParameterError as exc:
            chk.problem("harvest.task_monitor", str(exc))
        task = _parse_activities(chk, h.get("task", []), "harvest.task")
        if not task:
            chk.problem("harvest.task", "harvest scenarios need a task script")
        mode = "triggered"  # charging measurements are one-shot by design

    if chk.problems:
        raise ScenarioError(chk.problems)

    try:
        monitor_config = MonitorConfig(shunt_conv_us=sct, bus_conv_us=bct,
                                       averaging=avg, mode=mode,
                                       alert_enabled=alert)
        noise = NoiseModel(sigma_shunt_v=sigma, gain_error=gain)
        monitor_supply = SupplyModel(active_power_w=active_p,
                                     sleep_current_a=sleep_i)
        bus_config = BusConfig(speed_mode=speed, pullup_ohm=pullup,
                               c_bus_f=c_bus, v_dd=v_dd)
        supply = NodeSupply(voltage_v=volt, idle_current_a=idle)
        meas = MeasurementSpec(priority=m_prio, t_proc_s=t_proc * 1e-6,
                               reads_per_sample=reads,
                               interval_s=m_int if m_int > 0 else None,
                               current_a=m_cur)
    except ParameterError as exc:
        raise ScenarioError([str(exc)]) from exc

    return Scenario(
        kind=kind, seed=seed, duration_s=duration,
        monitor_config=monitor_config, r_shunt_ohm=r_shunt, noise=noise,
        monitor_supply=monitor_supply, bus_config=bus_config, supply=supply,
        meas=meas, threads=tuple(threads), oracle=oracle, bin_s=bin_s,
        supercap=sc, solar=solar, duty=duty, task=task,
        task_monitor_config=task_cfg, sleep_current_a=sleep_a, efficiency=eff,
        keep_task_series=keep_series)


def loads(text: str, name: str = "scenario") -> Scenario:
    """Parse and validate scenario TOML text."""
    try:
        data = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ScenarioError([f"TOML parse error: {exc}"]) from exc
    scn = _build(_Checker(data))
    scn.name = name
    return scn


def load(path) -> Scenario:
    """Parse and validate a scenario file."""
    from pathlib import Path
    p = Path(path)
    if not p.exists():
        raise ScenarioError([f"scenario file not found: {p}"])
    return loads(p.read_text(), name=p.stem)
