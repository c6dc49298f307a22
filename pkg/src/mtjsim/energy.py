"""Energy bookkeeping over transient traces.

Separates, per element, the energy a source delivers into the circuit
from the portion the circuit pushes back into it - the recovered
fraction is the whole point of power-clocked logic - alongside
resistive/channel dissipation and capacitive storage. Totals come with
an explicit balance residual rather than a hidden renormalization.

Energy (not average power) is the primary unit: at equal clock
frequency the two are proportional, and energy per operation stays
meaningful across the clock-period sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .engine import TransientResult
from .netlist import Capacitor, ISource, Mosfet, Mtj, Netlist, Resistor, VSource


@dataclass
class ElementEnergy:
    supplied: float = 0.0      # J delivered into the circuit (sources)
    recovered: float = 0.0     # J returned from the circuit to the source
    dissipated: float = 0.0    # J turned to heat (resistive, MOSFET channel)
    stored_delta: float = 0.0  # J change in capacitive storage over the window


@dataclass
class EnergyReport:
    window: tuple                      # (t_start, t_end)
    elements: dict                     # name -> ElementEnergy
    total_supplied: float = 0.0
    total_recovered: float = 0.0
    total_dissipated: float = 0.0
    total_stored_delta: float = 0.0
    residual: float = 0.0              # net supplied - dissipated - stored

    @property
    def net_supplied(self) -> float:
        return self.total_supplied - self.total_recovered

    def source_net(self, names) -> float:
        """Net energy delivered by the given source elements."""
        total = 0.0
        for n in names:
            e = self.elements[n]
            total += e.supplied - e.recovered
        return total


def _window_indices(times: np.ndarray, window: tuple) -> tuple:
    t0, t1 = window
    if t0 >= t1:
        raise ValueError(f"empty window {window!r}")
    dt = times[1] - times[0]
    if t0 < times[0] - 1e-9 * dt or t1 > times[-1] + 1e-9 * dt:
        raise ValueError(f"window {window!r} outside trace span "
                         f"[{times[0]}, {times[-1]}]")
    i0 = int(round((t0 - times[0]) / dt))
    i1 = int(round((t1 - times[0]) / dt))
    for target, i in ((t0, i0), (t1, i1)):
        if abs(times[i] - target) > 1e-6 * dt + 1e-18:
            raise ValueError(f"window edge {target} not aligned to recorded points")
    return i0, i1


def integrate_energy(result: TransientResult, netlist: Netlist, window: tuple) -> EnergyReport:
    """Trapezoidal per-element energy audit over [t_start, t_end].

    Source energy splits into supplied (flow into the circuit) and
    recovered (reverse flow); capacitor storage is evaluated exactly
    from the endpoint voltages, and MOSFETs combine channel dissipation
    with gate-capacitance storage. The balance residual (net supplied
    minus dissipated minus stored) is reported, never hidden.
    """
    times = result.times
    i0, i1 = _window_indices(times, window)
    sl = slice(i0, i1 + 1)
    t = times[sl]
    elements = {}
    vn = result.node_voltages

    def dv(n1: str, n2: str, k: int) -> float:
        a = vn[n1][k] if n1 != "0" else 0.0
        b = vn[n2][k] if n2 != "0" else 0.0
        return float(a - b)

    for e in netlist.elements:
        p = result.element_power_trace[e.name][sl]
        ee = ElementEnergy()
        if isinstance(e, (Resistor, Mtj)):
            ee.dissipated = float(np.trapezoid(p, t))
        elif isinstance(e, Capacitor):
            v0 = dv(e.n1, e.n2, i0)
            v1 = dv(e.n1, e.n2, i1)
            ee.stored_delta = 0.5 * e.farads * (v1 * v1 - v0 * v0)
        elif isinstance(e, Mosfet):
            ee.dissipated = float(np.trapezoid(p, t))
            cg = e.params.gate_cap()
            vg0 = dv(e.g, "0", i0)
            vg1 = dv(e.g, "0", i1)
            ee.stored_delta = 0.5 * cg * (vg1 * vg1 - vg0 * vg0)
        elif isinstance(e, (VSource, ISource)):
            ee.supplied = float(np.trapezoid(np.maximum(-p, 0.0), t))
            ee.recovered = float(np.trapezoid(np.maximum(p, 0.0), t))
        elements[e.name] = ee

    report = EnergyReport(window=(float(times[i0]), float(times[i1])), elements=elements)
    for ee in elements.values():
        report.total_supplied += ee.supplied
        report.total_recovered += ee.recovered
        report.total_dissipated += ee.dissipated
        report.total_stored_delta += ee.stored_delta
    report.residual = (report.net_supplied - report.total_dissipated
                       - report.total_stored_delta)
    return report


def energy_per_operation(
    report: EnergyReport,
    n_cycles: int,
    period: Optional[float] = None,
    exclude=(),
) -> float:
    """(total supplied - total recovered) / n_cycles.

    `exclude` names source elements (typically the MTJ write drivers)
    whose contribution is dropped, so the clocked datapath can be
    compared in isolation. When `period` is given, the window must span
    exactly n_cycles of it.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    t0, t1 = report.window
    if period is not None:
        if abs((t1 - t0) - n_cycles * period) > 1e-6 * period:
            raise ValueError(
                f"window {report.window!r} does not span exactly {n_cycles} "
                f"periods of {period}")
    net = report.net_supplied
    for name in exclude:
        e = report.elements[name]
        net -= e.supplied - e.recovered
    return net / n_cycles


@dataclass
class ComparisonRow:
    kind: str
    adiabatic_j_per_op: float
    baseline_j_per_op: float
    ratio: float


def compare_designs(
    adiabatic: EnergyReport,
    baseline: EnergyReport,
    n_cycles: int,
    kind: str = "",
    period: Optional[float] = None,
    exclude_adiabatic=(),
    exclude_baseline=(),
) -> ComparisonRow:
    """Energy-per-operation ratio of the conventional design over the
    power-clocked one (ratio > 1 means the adiabatic design wins).

    Both reports must cover the same cycle count at equal supply and
    load for the ratio to be meaningful.
    """
    e_a = energy_per_operation(adiabatic, n_cycles, period, exclude_adiabatic)
    e_b = energy_per_operation(baseline, n_cycles, period, exclude_baseline)
    if e_a <= 0.0:
        raise ValueError(f"degenerate adiabatic energy/op {e_a!r}")
    return ComparisonRow(
        kind=kind,
        adiabatic_j_per_op=e_a,
        baseline_j_per_op=e_b,
        ratio=e_b / e_a,
    )
