"""Physical quantities, ADC-style quantization, and closed-form electrical relations.

This is the shared vocabulary of the package: a small unit-checked value
type covering the eight units the simulator needs (V, A, W, J, s, ohm, F,
Hz), a quantizer modeling a fixed-LSB digitizer, and the handful of
closed-form relations used to size the measurement hardware (current
resolution from the shunt value, maximum bus pull-up, per-read energy,
and resistive shunt loss).

All arithmetic is double precision; quantizer codes are plain ints.
Values passed to the relation functions may be `Quantity` objects (units
are checked) or bare numbers (interpreted in the base unit).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError, UnitError

UNITS = ("V", "A", "W", "J", "s", "ohm", "F", "Hz")

# Units that represent inherently non-negative quantities here
# (capacitance, resistance, time durations).
_NONNEGATIVE = ("ohm", "F", "s")

# Closed multiplication table over the supported units.
_MUL = {
    ("V", "A"): "W",
    ("A", "V"): "W",
    ("W", "s"): "J",
    ("s", "W"): "J",
    ("A", "ohm"): "V",
    ("ohm", "A"): "V",
    ("ohm", "F"): "s",
    ("F", "ohm"): "s",
}

_DIV = {
    ("V", "A"): "ohm",
    ("V", "ohm"): "A",
    ("W", "A"): "V",
    ("W", "V"): "A",
    ("J", "s"): "W",
    ("J", "W"): "s",
    ("s", "F"): "ohm",
    ("s", "ohm"): "F",
    ("J", "V"): None,  # explicitly unsupported
}

# Shunt-channel LSB step of the emulated monitor (volts).
SHUNT_LSB_V = 2.5e-6
# Bus-channel LSB step (volts).
BUS_LSB_V = 1.25e-3
# Maximum burden voltage across the shunt; 32768 shunt LSB steps.
MAX_BURDEN_V = 81.92e-3
# RC rise from 30 % to 70 % of VDD: ln(0.7/0.3), per the I2C wiring rule.
RISE_FACTOR = 0.8473


@dataclass(frozen=True)
class Quantity:
    """A double-precision value tagged with one of the eight supported units."""

    value: float
    unit: str

    def __post_init__(self):
        if self.unit not in UNITS:
            raise UnitError(f"unsupported unit {self.unit!r}")
        object.__setattr__(self, "value", float(self.value))
        if self.unit in _NONNEGATIVE and self.value < 0:
            raise ParameterError(f"negative {self.unit} quantity: {self.value}")

    def __add__(self, other):
        other = self._coerce_same(other, "+")
        return Quantity(self.value + other.value, self.unit)

    def __sub__(self, other):
        other = self._coerce_same(other, "-")
        return Quantity(self.value - other.value, self.unit)

    def __mul__(self, other):
        if isinstance(other, Quantity):
            unit = _MUL.get((self.unit, other.unit))
            if unit is None:
                raise UnitError(f"cannot multiply {self.unit} by {other.unit}")
            return Quantity(self.value * other.value, unit)
        return Quantity(self.value * float(other), self.unit)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Quantity):
            if other.unit == self.unit:
                return self.value / other.value
            unit = _DIV.get((self.unit, other.unit))
            if unit is None:
                raise UnitError(f"cannot divide {self.unit} by {other.unit}")
            return Quantity(self.value / other.value, unit)
        return Quantity(self.value / float(other), self.unit)

    def __neg__(self):
        return Quantity(-self.value, self.unit)

    def _coerce_same(self, other, op):
        if not isinstance(other, Quantity) or other.unit != self.unit:
            raise UnitError(f"cannot apply {op!r} between {self.unit} and "
                            f"{other.unit if isinstance(other, Quantity) else type(other).__name__}")
        return other

    def __repr__(self):
        return f"{self.value!r} {self.unit}"


def volts(x):
    return Quantity(x, "V")


def amps(x):
    return Quantity(x, "A")


def watts(x):
    return Quantity(x, "W")


def joules(x):
    return Quantity(x, "J")


def seconds(x):
    return Quantity(x, "s")


def ohms(x):
    return Quantity(x, "ohm")


def farads(x):
    return Quantity(x, "F")


def hertz(x):
    return Quantity(x, "Hz")


def magnitude(x, unit, name="value"):
    """Unwrap a Quantity (checking its unit) or accept a bare number."""
    if isinstance(x, Quantity):
        if x.unit != unit:
            raise UnitError(f"{name} must be in {unit}, got {x.unit}")
        return x.value
    return float(x)


def current_lsb(r_shunt) -> Quantity:
    """Current resolution of the monitor for a given shunt resistor.

    The shunt channel digitizes with a fixed 2.5 uV step, so the current
    step is that voltage step divided by the shunt value.
    """
    r = magnitude(r_shunt, "ohm", "r_shunt")
    if r <= 0:
        raise ParameterError(f"r_shunt must be positive, got {r}")
    return amps(SHUNT_LSB_V / r)


def max_pullup(t_rise, c_bus) -> Quantity:
    """Largest pull-up resistance that still meets a rise-time budget.

    R = t_rise / (0.8473 * C_bus), with 0.8473 = ln(0.7/0.3) from the
    30 %-to-70 % RC charging interval used by the bus wiring rule.
    """
    t = magnitude(t_rise, "s", "t_rise")
    c = magnitude(c_bus, "F", "c_bus")
    if t <= 0 or c <= 0:
        raise ParameterError(f"t_rise and c_bus must be positive, got {t}, {c}")
    return ohms(t / (RISE_FACTOR * c))


def read_energy(p_mcu, p_read, t_read) -> Quantity:
    """Total energy of one register read: (P_mcu + P_read) * t_read.

    Counts the host MCU's own draw for the full transaction duration on
    top of the bus/monitor power, which is what makes short transactions
    win even when their line losses are higher.
    """
    pm = magnitude(p_mcu, "W", "p_mcu")
    pr = magnitude(p_read, "W", "p_read")
    t = magnitude(t_read, "s", "t_read")
    if pm < 0 or pr < 0 or t < 0:
        raise ParameterError("read_energy arguments must be non-negative")
    return joules((pm + pr) * t)


def shunt_loss(i_load, r_shunt, v_supply):
    """Resistive loss in the shunt: absolute power and fraction of supply power.

    Returns (loss_watts, loss_relative). The relative part is loss
    divided by the total supply power v*i, which reduces to i*R/v; it is
    defined as 0 at zero current.
    """
    i = magnitude(i_load, "A", "i_load")
    r = magnitude(r_shunt, "ohm", "r_shunt")
    v = magnitude(v_supply, "V", "v_supply")
    if i < 0:
        raise ParameterError(f"i_load must be non-negative, got {i}")
    if r <= 0:
        raise ParameterError(f"r_shunt must be positive, got {r}")
    if v <= 0:
        raise ParameterError(f"v_supply must be positive, got {v}")
    absolute = i * i * r
    relative = 0.0 if i == 0 else absolute / (v * i)
    return watts(absolute), relative


def round_half_away(x: float) -> int:
    """Round to the nearest integer, halves away from zero."""
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


@dataclass(frozen=True)
class QuantizedCode:
    """Result of quantizing one value: the integer code plus a saturation flag."""

    code: int
    saturated: bool


@dataclass(frozen=True)
class QuantizerSpec:
    """Fixed-LSB digitizer: code = round(x / lsb), clamped to the code range.

    Out-of-range inputs saturate instead of raising; the returned code
    carries a flag so callers can latch an overflow indicator, mirroring
    how the real converter behaves.
    """

    lsb: Quantity
    full_scale_codes: int
    signed: bool = True

    def __post_init__(self):
        if self.lsb.unit not in ("V", "A"):
            raise UnitError(f"quantizer lsb must be V or A, got {self.lsb.unit}")
        if self.lsb.value <= 0:
            raise ParameterError(f"lsb must be positive, got {self.lsb.value}")
        if self.full_scale_codes <= 0:
            raise ParameterError("full_scale_codes must be positive")

    @property
    def full_scale(self) -> Quantity:
        return self.lsb * self.full_scale_codes

    def quantize(self, x) -> QuantizedCode:
        val = magnitude(x, self.lsb.unit, "x")
        code = round_half_away(val / self.lsb.value)
        lo = -self.full_scale_codes if self.signed else 0
        hi = self.full_scale_codes
        saturated = code < lo or code > hi
        return QuantizedCode(min(max(code, lo), hi), saturated)

    def dequantize(self, code: int) -> Quantity:
        return self.lsb * code
