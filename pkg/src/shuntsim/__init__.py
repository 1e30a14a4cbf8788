"""In-situ node power measurement simulator.

Emulates a shunt-monitor measurement pipeline end to end: register-level
monitor behavior, bus transaction costs, a tickless priority scheduler
with per-thread energy attribution and task tracing, and an
energy-harvesting duty-cycle controller, all validated against a 1 us
ground-truth integration oracle.
"""

from .bus import (BusConfig, BusLink, CalibrationTable, PAPER_GRID, ReadCost,
                  optimal_config, transaction_cost)
from .errors import (BusyError, ContractError, ParameterError, ScenarioError,
                     UnitError)
from .harvest import (DutyCycleState, HarvestSim, SolarProfile, SuperCap,
                      adapt_interval, cap_step, day_bins, isolated_consumption,
                      measure_charging)
from .monitor import (ConversionEvent, MonitorConfig, NoiseModel, ShuntMonitor,
                      SupplyModel)
from .profiles import LoadProfile, RecordedLoad
from .sched import (Activity, EnergyReport, MeasurementSpec, NodeSupply, Sample,
                    ScheduleTrace, ThreadSpec, TraceRecord, Tracer, attribute,
                    cpu_utilization, run)
from .units import (Quantity, QuantizerSpec, amps, current_lsb, farads, hertz,
                    joules, max_pullup, ohms, read_energy, seconds, shunt_loss,
                    volts, watts)

__version__ = "0.1.0"
