"""Scenario execution, artifact writing, oracle comparison, sweeps.

One run produces one directory of CSV artifacts. All numbers render with
9 significant digits in a fixed column order, so identical scenario +
seed reruns produce byte-identical files.

    samples.csv      t_s, v_v, i_a, p_w, active_thread
    es.csv           thread, priority, switches, cpu_pct, energy_j, mean_power_w
    summary.csv      key, value  (run totals, overheads, oracle deltas, balance)
    trace_<l>_<k>.csv  per traced span: t_s, v_v, i_a, p_w
    bins.csv         harvest runs: binned day-cycle report
    cycles.csv       harvest runs: one row per duty cycle
    diagnostics.csv  only when a run produced diagnostics
    compare.csv      written by `compare`: measured-vs-reference error table
"""

from __future__ import annotations

import bisect
import concurrent.futures
import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import harvest as hv
from . import oracle as orc
from . import sched
from .bus import BusLink
from .errors import ParameterError, ScenarioError
from .monitor import ShuntMonitor
from .profiles import NS_PER_S, to_s
from .scenario import Scenario, load as load_scenario


def fmt(x) -> str:
    """Canonical rendering: 9 significant digits for floats, plain ints."""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.9g}"
    return str(x)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _active_thread(schedule, a_ns, b_ns) -> str:
    """Thread with the largest share of [a, b); ties and gaps go by duration then id."""
    best_tid, best = "", -1
    totals = {}
    for tid, s, e in schedule.entries:
        ov = min(e, b_ns) - max(s, a_ns)
        if ov > 0:
            totals[tid] = totals.get(tid, 0) + ov
    for tid in sorted(totals):
        if totals[tid] > best:
            best_tid, best = tid, totals[tid]
    return best_tid


@dataclass
class RunArtifacts:
    outdir: Path
    summary: dict
    samples: list
    scenario: Scenario


def _summary_rows(summary: dict):
    return [(k, summary[k]) for k in summary]


def _run_workload(scn: Scenario, outdir: Path) -> RunArtifacts:
    monitor = ShuntMonitor(scn.monitor_config, r_shunt_ohm=scn.r_shunt_ohm,
                           noise=scn.noise, supply=scn.monitor_supply,
                           seed=scn.seed)
    link = BusLink(scn.bus_config)
    result = sched.run(scn.threads, monitor, link, scn.duration_s,
                       meas=scn.meas, supply=scn.supply)

    sample_rows = []
    for s in result.samples:
        sample_rows.append((to_s(s.t_ns), s.v_v, s.i_a, s.p_w,
                            _active_thread(result.schedule,
                                           s.window_start_ns, s.t_ns)))
    _write_csv(outdir / "samples.csv",
               ("t_s", "v_v", "i_a", "p_w", "active_thread"), sample_rows)

    report = None
    if result.samples:
        report = sched.attribute(result.samples, result.schedule)

    prios = {t.id: t.priority for t in result.threads}
    prios[scn.meas.thread_id] = scn.meas.priority
    es_rows = []
    tids = sorted(set(list(prios) + (list(report.threads) if report else [])),
                  key=lambda t: (prios.get(t, 99), t))
    span_s = report.span_s if report else 0.0
    for tid in tids:
        st = report.threads.get(tid) if report else None
        es_rows.append((tid, prios.get(tid, ""),
                        st.context_switches if st else 0,
                        100.0 * st.cpu_utilization if st else 0.0,
                        st.energy_j if st else 0.0,
                        st.mean_power_w if st else 0.0))
    es_rows.append(("(idle)", "", 0, 0.0,
                    report.unattributed_j if report else 0.0,
                    report.unattributed_j / span_s if report and span_s else 0.0))
    es_rows.append(("total", "", report.total.context_switches if report else 0,
                    100.0 * report.total.cpu_utilization if report else 0.0,
                    report.total.energy_j if report else 0.0,
                    report.total.mean_power_w if report else 0.0))
    _write_csv(outdir / "es.csv",
               ("thread", "priority", "switches", "cpu_pct", "energy_j",
                "mean_power_w"), es_rows)

    for k, rec in enumerate(result.trace_records):
        rows = [(to_s(s.t_ns), s.v_v, s.i_a, s.p_w) for s in rec.samples]
        _write_csv(outdir / f"trace_{rec.label}_{k}.csv",
                   ("t_s", "v_v", "i_a", "p_w"), rows)

    e_out = orc.total_energy_j(result.recorder, 0, result.end_ns)
    e_shunt = orc.shunt_loss_j(result.recorder, 0, result.end_ns,
                               monitor.r_shunt_ohm)
    e_monitor = monitor.supply_energy_j(scn.supply.voltage_v)
    e_bus = link.energy_j
    e_overhead = e_monitor + e_bus + e_shunt

    summary = {
        "scenario": scn.name,
        "kind": scn.kind,
        "seed": scn.seed,
        "duration_s": fmt(scn.duration_s),
        "samples": len(result.samples),
        "context_switches": result.schedule.context_switches,
        "diagnostics": len(result.diagnostics),
        "measured_total_j": fmt(report.total.energy_j if report else 0.0),
        "unattributed_j": fmt(report.unattributed_j if report else 0.0),
        "e_in_j": fmt(e_out + e_overhead),
        "e_out_j": fmt(e_out),
        "e_store_delta_j": fmt(0.0),
        "e_unharvested_j": fmt(0.0),
        "e_deficit_j": fmt(0.0),
        "overhead_monitor_j": fmt(e_monitor),
        "overhead_bus_j": fmt(e_bus),
        "overhead_shunt_j": fmt(e_shunt),
        "overhead_total_j": fmt(e_overhead),
        "bus_reads": link.reads,
        "balance_residual_rel": fmt(0.0),
    }
    for tid in tids:
        st = report.threads.get(tid) if report else None
        summary[f"thread.{tid}.measured_j"] = fmt(st.energy_j if st else 0.0)

    if scn.oracle:
        span = (report.span_start_ns, report.span_end_ns) if report else (0, 0)
        o_total = orc.total_energy_j(result.recorder, span[0], span[1])
        per_thread = orc.thread_energies_j(result.recorder, result.schedule,
                                           span[0], span[1])
        summary["oracle_total_j"] = fmt(o_total)
        summary["oracle_full_run_j"] = fmt(e_out)
        if report:
            d = report.total.energy_j - o_total
            summary["delta_total_j"] = fmt(d)
            summary["delta_total_rel"] = fmt(d / o_total if o_total else 0.0)
        for tid in tids:
            summary[f"thread.{tid}.oracle_j"] = fmt(per_thread.get(tid, 0.0))

    _write_csv(outdir / "summary.csv", ("key", "value"), _summary_rows(summary))

    if result.diagnostics:
        _write_csv(outdir / "diagnostics.csv", ("t_s", "kind", "thread", "detail"),
                   [(to_s(d.t_ns), d.kind, d.thread_id, d.detail)
                    for d in result.diagnostics])

    return RunArtifacts(outdir, summary, result.samples, scn)


def _run_harvest(scn: Scenario, outdir: Path) -> RunArtifacts:
    monitor = ShuntMonitor(scn.monitor_config, r_shunt_ohm=scn.r_shunt_ohm,
                           noise=scn.noise, supply=scn.monitor_supply,
                           seed=scn.seed)
    link = BusLink(scn.bus_config)
    sim = hv.HarvestSim(scn.supercap, scn.solar, monitor, link, scn.task,
                        scn.duty, meas_config=scn.monitor_config,
                        task_config=scn.task_monitor_config,
                        sleep_current_a=scn.sleep_current_a,
                        efficiency=scn.efficiency,
                        reads_per_sample=scn.meas.reads_per_sample,
                        keep_task_series=scn.keep_task_series)
    sim.run(scn.duration_s)

    task_spans = [(c.task_start_ns, c.task_end_ns) for c in sim.cycles
                  if c.task_end_ns > c.task_start_ns]
    span_starts = [a for a, _ in task_spans]

    def phase_of(s):
        k = bisect.bisect_right(span_starts, s.t_ns) - 1
        if k >= 0 and task_spans[k][0] < s.t_ns <= task_spans[k][1]:
            return "task"
        return "sleep"

    _write_csv(outdir / "samples.csv",
               ("t_s", "v_v", "i_a", "p_w", "active_thread"),
               [(to_s(s.t_ns), s.v_v, s.i_a, s.p_w, phase_of(s))
                for s in sim.samples])

    _write_csv(outdir / "cycles.csv",
               ("cycle_start_s", "meas_end_s", "charging_w", "task_start_s",
                "task_end_s", "task_energy_j", "interval_s", "v_cap_end_v",
                "cycle_end_s"),
               [(to_s(c.t_start_ns), to_s(c.meas_end_ns), c.charging_w,
                 to_s(c.task_start_ns), to_s(c.task_end_ns), c.task_energy_j,
                 c.interval_s, c.v_cap_end, to_s(c.cycle_end_ns))
                for c in sim.cycles])

    bins = hv.day_bins(sim, scn.duration_s, bin_s=scn.bin_s)
    _write_csv(outdir / "bins.csv",
               ("bin_start_s", "bin_end_s", "p_use_w", "p_charge_w",
                "v_cap_end_v"),
               [(b.bin_start_s, b.bin_end_s, b.p_use_w, b.p_charge_w,
                 b.v_cap_end_v) for b in bins])

    for k, rec in enumerate(r for r in sim.trace_records if r.samples):
        _write_csv(outdir / f"trace_{rec.label}_{k}.csv",
                   ("t_s", "v_v", "i_a", "p_w"),
                   [(to_s(s.t_ns), s.v_v, s.i_a, s.p_w) for s in rec.samples])

    led = sim.ledger
    charging_measured = sum(
        max(0.0, c.charging_w) * ((c.task_start_ns - c.t_start_ns)
                                  + (c.cycle_end_ns - c.task_end_ns)) / NS_PER_S
        for c in sim.cycles)
    summary = {
        "scenario": scn.name,
        "kind": scn.kind,
        "seed": scn.seed,
        "duration_s": fmt(scn.duration_s),
        "samples": len(sim.samples),
        "cycles": len(sim.cycles),
        "diagnostics": len(sim.diagnostics),
        "e_in_j": fmt(led.e_in_j),
        "e_out_j": fmt(led.e_node_j),
        "e_store_delta_j": fmt(led.e_store_end_j - led.e_store_start_j),
        "e_unharvested_j": fmt(led.e_unharvested_j),
        "e_deficit_j": fmt(led.e_deficit_j),
        "overhead_monitor_j": fmt(led.e_monitor_j),
        "overhead_bus_j": fmt(led.e_bus_j),
        "overhead_shunt_j": fmt(led.e_shunt_j),
        "overhead_total_j": fmt(led.e_overhead_j),
        "bus_reads": link.reads,
        "balance_residual_rel": fmt(led.residual_rel()),
        "v_cap_start_v": fmt(scn.supercap.v_now),
        "v_cap_end_v": fmt(sim.cap.v_now),
        "charging_measured_j": fmt(charging_measured),
        "charging_true_j": fmt(led.e_in_j - led.e_unharvested_j),
        "measured_total_j": fmt(sum(c.task_energy_j for c in sim.cycles)),
    }
    if scn.oracle:
        summary["oracle_total_j"] = fmt(led.e_node_j)
        summary["delta_total_j"] = fmt(
            sum(c.task_energy_j for c in sim.cycles) - led.e_node_j)
    _write_csv(outdir / "summary.csv", ("key", "value"), _summary_rows(summary))

    if sim.diagnostics:
        _write_csv(outdir / "diagnostics.csv", ("t_s", "kind", "thread", "detail"),
                   [(to_s(t), kind, "task", "") for kind, t in sim.diagnostics])

    return RunArtifacts(outdir, summary, sim.samples, scn)


def run_scenario(path_or_scenario, outdir) -> RunArtifacts:
    """Execute one scenario into `outdir` (created if needed)."""
    scn = (path_or_scenario if isinstance(path_or_scenario, Scenario)
           else load_scenario(path_or_scenario))
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    if scn.kind == "harvest":
        return _run_harvest(scn, out)
    return _run_workload(scn, out)


def read_summary(run_dir) -> dict:
    p = Path(run_dir) / "summary.csv"
    if not p.exists():
        raise ScenarioError([f"no summary.csv in {run_dir}"])
    out = {}
    with open(p, newline="") as fh:
        for rec in csv.DictReader(fh):
            out[rec["key"]] = rec["value"]
    return out


def compare_run(run_dir) -> list:
    """Measured-vs-reference error table for a finished run with oracle data.

    Returns rows (quantity, measured, reference, abs_err, rel_err) and
    writes compare.csv into the run directory.
    """
    summary = read_summary(run_dir)
    if "oracle_total_j" not in summary:
        raise ScenarioError([f"{run_dir}: run has no oracle data; "
                             "enable [outputs] oracle = true"])
    rows = []

    def add(name, m_key, o_key):
        if m_key in summary and o_key in summary:
            m, o = float(summary[m_key]), float(summary[o_key])
            rows.append((name, m, o, m - o, (m - o) / o if o else 0.0))

    add("total_energy", "measured_total_j", "oracle_total_j")
    for key in summary:
        if key.startswith("thread.") and key.endswith(".measured_j"):
            tid = key[len("thread."):-len(".measured_j")]
            add(f"thread.{tid}", key, f"thread.{tid}.oracle_j")
    if "charging_measured_j" in summary:
        add("charging", "charging_measured_j", "charging_true_j")
    _write_csv(Path(run_dir) / "compare.csv",
               ("quantity", "measured", "reference", "abs_err", "rel_err"), rows)
    return rows


def _sweep_worker(args):
    path, seed, outdir = args
    scn = load_scenario(path)
    scn.seed = seed
    art = run_scenario(scn, outdir)
    return seed, art.summary


def sweep(path, n_seeds: int, outdir, jobs: int = 1) -> list:
    """Run `n_seeds` seeds of one scenario; aggregate per-quantity error stats.

    Results merge deterministically in seed order regardless of `jobs`.
    Writes sweep.csv (per-seed relative total error) and sweep_stats.csv.
    """
    if n_seeds < 1:
        raise ParameterError("need at least one seed")
    base = load_scenario(path)
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(str(path), base.seed + k, out / f"seed_{base.seed + k}")
             for k in range(n_seeds)]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_worker, tasks))
    else:
        results = [_sweep_worker(t) for t in tasks]
    results.sort(key=lambda r: r[0])

    per_seed = []
    rels = []
    for seed, summary in results:
        if "delta_total_rel" in summary:
            rel = float(summary["delta_total_rel"])
            per_seed.append((seed, float(summary["measured_total_j"]),
                             float(summary["oracle_total_j"]), rel))
            rels.append(rel)
    _write_csv(out / "sweep.csv",
               ("seed", "measured_total_j", "oracle_total_j", "rel_err"),
               per_seed)
    stats_rows = []
    if rels:
        a = np.abs(np.array(rels))
        stats_rows = [
            ("n", len(rels), "", ""),
            ("median_abs_rel_err", float(np.median(a)), "", ""),
            ("p25_abs_rel_err", float(np.percentile(a, 25)), "", ""),
            ("p75_abs_rel_err", float(np.percentile(a, 75)), "", ""),
            ("max_abs_rel_err", float(np.max(a)), "", ""),
        ]
    _write_csv(out / "sweep_stats.csv", ("stat", "value", "", ""), stats_rows)
    return per_seed


def rebin(run_dir, bin_s: float) -> list:
    """Re-bin a finished run's output at a different bin width.

    Harvest runs re-bin from cycles.csv; workload runs split samples.csv
    by sign (positive power counts as use). Writes bins_<width>.csv.
    """
    if bin_s <= 0:
        raise ParameterError("bin width must be positive")
    run = Path(run_dir)
    cycles_p = run / "cycles.csv"
    rows = []
    if cycles_p.exists():
        cycles = list(csv.DictReader(open(cycles_p, newline="")))
        if cycles:
            end_s = max(float(c["cycle_end_s"]) for c in cycles)
            n_bins = int(math.ceil(end_s / bin_s)) if end_s else 0
            use = np.zeros(n_bins)
            charge = np.zeros(n_bins)

            def spread(a_s, b_s, total_j, target):
                if b_s <= a_s or total_j == 0.0 or not n_bins:
                    return
                rate = total_j / (b_s - a_s)
                for k in range(int(a_s // bin_s),
                               min(int(math.ceil(b_s / bin_s)), n_bins)):
                    lo, hi = max(a_s, k * bin_s), min(b_s, (k + 1) * bin_s)
                    if hi > lo:
                        target[k] += rate * (hi - lo)

            v_t, v_v = [], []
            for c in cycles:
                spread(float(c["task_start_s"]), float(c["task_end_s"]),
                       float(c["task_energy_j"]), use)
                ch = float(c["charging_w"])
                if ch > 0:
                    spread(float(c["cycle_start_s"]), float(c["task_start_s"]),
                           ch * (float(c["task_start_s"]) - float(c["cycle_start_s"])),
                           charge)
                    spread(float(c["task_end_s"]), float(c["cycle_end_s"]),
                           ch * (float(c["cycle_end_s"]) - float(c["task_end_s"])),
                           charge)
                v_t.append(float(c["cycle_end_s"]))
                v_v.append(float(c["v_cap_end_v"]))
            for k in range(n_bins):
                a, b = k * bin_s, min((k + 1) * bin_s, end_s)
                width = b - a
                v_end = float(np.interp(b, v_t, v_v)) if v_t else 0.0
                rows.append((a, b, -use[k] / width if width else 0.0,
                             charge[k] / width if width else 0.0, v_end))
    else:
        samples_p = run / "samples.csv"
        if not samples_p.exists():
            raise ScenarioError([f"{run_dir}: nothing to re-bin"])
        samples = list(csv.DictReader(open(samples_p, newline="")))
        if samples:
            ts = np.array([float(s["t_s"]) for s in samples])
            ps = np.array([float(s["p_w"]) for s in samples])
            end_s = float(ts.max())
            n_bins = int(math.ceil(end_s / bin_s))
            use = np.zeros(n_bins)
            charge = np.zeros(n_bins)
            widths = np.diff(np.concatenate(([0.0], ts)))
            for t, p, w in zip(ts, ps, widths):
                k = min(int(t // bin_s), n_bins - 1)
                if p >= 0:
                    use[k] += p * w
                else:
                    charge[k] += -p * w
            for k in range(n_bins):
                a, b = k * bin_s, min((k + 1) * bin_s, end_s)
                width = b - a
                rows.append((a, b, -use[k] / width if width else 0.0,
                             charge[k] / width if width else 0.0, 0.0))
    _write_csv(run / f"bins_{fmt(float(bin_s))}.csv",
               ("bin_start_s", "bin_end_s", "p_use_w", "p_charge_w",
                "v_cap_end_v"), rows)
    return rows
