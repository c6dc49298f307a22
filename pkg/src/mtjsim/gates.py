"""Gate circuit builders, truth-table oracles, and hold-phase readout.

Three logic-in-memory gates are generated in two styles:

* ``AdiabaticMtj`` - dual-rail outputs fed from the four-phase power
  clock through a cross-coupled 2P+2N latch. The evaluation paths run
  from the clock through transmission-gate steering and the data MTJs
  to the rails, so the rail whose path carries the lower (parallel)
  junction resistance charges first and the latch regenerates that
  decision. Discharge and charge-sharing transistors driven by the
  wait-phase discharge signal clear the threshold residue the recovery
  ramp cannot remove.

* ``BaselineMtj`` - a precharge sense amplifier on a constant supply:
  both rails precharge high during the wait phase, then race to ground
  through the same steering networks when the sense enable rises. No
  energy is recovered; the comparison isolates adiabatic vs.
  conventional operation because both styles share identical MOSFET
  and MTJ parameter cards, loads, and write circuitry.

The second input (B) is the stored operand: during every wait phase a
gated current source writes it into the data junctions (one junction
holds B, its partner holds the complement), and the source sits at zero
current outside the wait phase, which disconnects the write circuit.
The figure-level schematics of the source designs are not recoverable
in full detail, so these templates are reconstructions bound to the
documented phase-by-phase behavior rather than to a transistor count.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .devices import MtjParams, PowerClock, Pulse, Pwl, Dc
from .engine import ConvergenceError, TransientResult, transient_run
from .netlist import Netlist, NetlistBuilder


class GateKind(enum.Enum):
    AND_NAND = "and"
    XOR_XNOR = "xor"
    FULL_ADDER = "fulladder"


class DesignStyle(enum.Enum):
    ADIABATIC_MTJ = "adiabatic"
    BASELINE_MTJ = "baseline"


N_INPUTS = {GateKind.AND_NAND: 2, GateKind.XOR_XNOR: 2, GateKind.FULL_ADDER: 3}


def all_patterns(kind: GateKind) -> list:
    n = N_INPUTS[kind]
    return [tuple((v >> (n - 1 - i)) & 1 for i in range(n)) for v in range(2 ** n)]


@dataclass
class TestbenchSpec:
    """Stimulus plan: one input pattern per full four-phase period."""

    patterns: Optional[list] = None      # None = exhaustive for the kind
    vdd: float = 1.0
    t_phase: float = 10e-9
    c_load: float = 1e-15
    write_current: float = 80e-6
    dt: Optional[float] = None           # None = min(t_phase, 20ns) / 1000

    def timestep(self) -> float:
        if self.dt is not None:
            return self.dt
        # Track the clock period, but cap the step: the latch snap and
        # the fixed-slew control edges do not slow down with the clock,
        # and under-resolving them at long periods inflates dissipation.
        return min(self.t_phase, 20e-9) / 1000.0


@dataclass
class GateTemplate:
    kind: GateKind
    style: DesignStyle
    netlist: Netlist
    rail_pairs: list                     # (true rail, complement rail) per output
    input_sources: list                  # driver source names
    clock: PowerClock                    # period/phase reference for both styles
    mtj_roles: dict                      # role -> (element name, "b" | "bbar")
    write_sources: list
    sequence: list                       # pattern per period, warmup first
    tb: TestbenchSpec = field(default_factory=TestbenchSpec)

    @property
    def rails(self) -> list:
        return [r for pair in self.rail_pairs for r in pair]


# --------------------------------------------------------------------------
# Oracles
# --------------------------------------------------------------------------

def full_adder_oracle(a: int, b: int, c: int):
    """Sum/carry truth values with both complement rails.

    sum is the three-way parity and cout the majority; the complement
    outputs are their exact negations for all eight inputs.
    """
    for bit in (a, b, c):
        if bit not in (0, 1):
            raise ValueError(f"bits must be 0 or 1, got {bit!r}")
    na, nb, nc = 1 - a, 1 - b, 1 - c
    s = (a & b & c) | (a & nb & nc) | (na & b & nc) | (na & nb & c)
    cout = (a & b) | (a & c) | (b & c)
    return s, 1 - s, cout, 1 - cout


def gate_oracle(kind: GateKind, inputs) -> tuple:
    """Expected (true, complement) rail bits for one input pattern."""
    inputs = tuple(inputs)
    if len(inputs) != N_INPUTS[kind]:
        raise ValueError(f"{kind.value} takes {N_INPUTS[kind]} inputs, got {len(inputs)}")
    if any(b not in (0, 1) for b in inputs):
        raise ValueError(f"bits must be 0 or 1: {inputs!r}")
    if kind is GateKind.AND_NAND:
        v = inputs[0] & inputs[1]
        return (v, 1 - v)
    if kind is GateKind.XOR_XNOR:
        v = inputs[0] ^ inputs[1]
        return (v, 1 - v)
    return full_adder_oracle(*inputs)


# --------------------------------------------------------------------------
# Waveform construction
# --------------------------------------------------------------------------

def _bit_wave(bits, vdd, t4, delta) -> Pwl:
    """Per-period logic levels with short ramps at period boundaries."""
    pts = []
    prev = None
    for j, b in enumerate(bits):
        lvl = vdd * b
        if j == 0:
            pts.append((0.0, lvl))
        elif lvl != prev:
            pts.append((j * t4, prev))
            pts.append((j * t4 + delta, lvl))
        prev = lvl
    return Pwl(tuple(pts))


def _write_wave(bits, amp, t4, tp, delta) -> Pwl:
    """Wait-phase write current: +amp toward P for a 1, -amp for a 0,
    zero outside the wait phase (the disconnect)."""
    pts = []
    for j, b in enumerate(bits):
        t0 = j * t4
        lvl = amp if b else -amp
        pts.append((t0, 0.0))
        pts.append((t0 + delta, lvl))
        pts.append((t0 + tp - delta, lvl))
        pts.append((t0 + tp, 0.0))
    return Pwl(tuple(pts))


class _GateBuilder:
    """Shared plumbing for both styles of one testbench."""

    def __init__(self, kind: GateKind, style: DesignStyle, tb: TestbenchSpec):
        self.kind = kind
        self.style = style
        self.tb = tb
        patterns = tb.patterns if tb.patterns is not None else all_patterns(kind)
        for p in patterns:
            if len(p) != N_INPUTS[kind]:
                raise ValueError(f"pattern {p!r} has wrong arity for {kind.value}")
        if abs(tb.write_current) <= MtjParams().ic:
            raise ValueError(
                f"write current {tb.write_current} cannot exceed the junction "
                f"switching threshold {MtjParams().ic}")
        # warmup period repeats the first pattern; readout skips cycle 0
        self.seq = [tuple(patterns[0])] + [tuple(p) for p in patterns]
        self.t4 = 4.0 * tb.t_phase
        # Input and control edges come from conventional drivers, so
        # their slew does not stretch with the power-clock period;
        # letting it stretch would add crossover crowbar proportional
        # to t_phase and mask the adiabatic scaling.
        self.delta = min(tb.t_phase / 50.0, 0.2e-9)
        self.clock = PowerClock(vdd=tb.vdd, t_phase=tb.t_phase, t0=0.0)
        self.nb = NetlistBuilder()
        self.input_sources = []
        self.write_sources = []
        self.mtj_roles = {}
        self.mtj_index = 0

    def bits(self, pos: int) -> list:
        return [p[pos] for p in self.seq]

    def input_rails(self, name: str, pos: int):
        """Driver pair <name>/<name>b for one live input."""
        tb, nb = self.tb, self.nb
        bits = self.bits(pos)
        nb.vsource(f"V{name.upper()}", name, "0",
                   _bit_wave(bits, tb.vdd, self.t4, self.delta))
        nb.vsource(f"V{name.upper()}B", name + "b", "0",
                   _bit_wave([1 - x for x in bits], tb.vdd, self.t4, self.delta))
        self.input_sources += [f"V{name.upper()}", f"V{name.upper()}B"]
        return name, name + "b"

    def tg(self, label: str, n1: str, n2: str, on_high: str, on_low: str):
        """Transmission gate conducting while on_high is at vdd."""
        self.nb.mosfet(f"MTN{label}", n1, on_high, n2, "N")
        self.nb.mosfet(f"MTP{label}", n1, on_low, n2, "P")

    def data_mtj(self, name: str, free: str, pinned: str, stores: str, bpos: int):
        """One stored-operand junction plus its wait-phase write driver.

        stores "b" holds the input bit directly (parallel = 1), "bbar"
        holds its complement. Initial states follow the all-zero input
        convention: a stored 0 leaves the direct junction antiparallel.
        """
        init = "AP" if stores == "b" else "P"
        self.nb.mtj(name, free, pinned, MtjParams(), init)
        bits = self.bits(bpos)
        if stores == "bbar":
            bits = [1 - x for x in bits]
        self.nb.isource(f"IW{name[1:]}", pinned, free,
                        _write_wave(bits, self.tb.write_current,
                                    self.t4, self.tb.t_phase, self.delta))
        self.mtj_index += 1
        self.mtj_roles[f"MTJ{self.mtj_index}"] = (name, stores)
        self.write_sources.append(f"IW{name[1:]}")

    # -- style-specific cores ------------------------------------------

    def adiabatic_rail_pair(self, tag: str, true_rail: str, comp_rail: str,
                            x1: str, x2: str):
        """Power-clock latch: cross PMOS from clk into the evaluation
        paths, cross NMOS holding the losing rail, and the wait-phase
        discharge/charge-share trio."""
        nb, tb = self.nb, self.tb
        nb.mosfet(f"MP1{tag}", x1, comp_rail, "clk", "P")
        nb.mosfet(f"MP2{tag}", x2, true_rail, "clk", "P")
        nb.mosfet(f"MN1{tag}", true_rail, comp_rail, "0", "N")
        nb.mosfet(f"MN2{tag}", comp_rail, true_rail, "0", "N")
        nb.mosfet(f"MD1{tag}", true_rail, "dsig", "0", "N")
        nb.mosfet(f"MD2{tag}", comp_rail, "dsig", "0", "N")
        nb.mosfet(f"MDE{tag}", true_rail, "dsig", comp_rail, "N")
        nb.capacitor(f"CL1{tag}", true_rail, "0", tb.c_load, 0.0)
        nb.capacitor(f"CL2{tag}", comp_rail, "0", tb.c_load, 0.0)

    def baseline_rail_pair(self, tag: str, true_rail: str, comp_rail: str,
                           b1: str, b2: str):
        """Precharge sense amplifier: cross-coupled inverter pair on the
        constant supply, precharge PMOS active in the wait phase, and
        per-branch evaluation switches that also isolate the junctions
        while the write current flows."""
        nb, tb = self.nb, self.tb
        q1, q2 = f"q1{tag}", f"q2{tag}"
        nb.mosfet(f"MP1{tag}", true_rail, comp_rail, "vs", "P")
        nb.mosfet(f"MP2{tag}", comp_rail, true_rail, "vs", "P")
        nb.mosfet(f"MN1{tag}", true_rail, comp_rail, q1, "N")
        nb.mosfet(f"MN2{tag}", comp_rail, true_rail, q2, "N")
        nb.mosfet(f"MC1{tag}", true_rail, "sen", "vs", "P")
        nb.mosfet(f"MC2{tag}", comp_rail, "sen", "vs", "P")
        nb.mosfet(f"MF1{tag}", q1, "sen", b1, "N")
        nb.mosfet(f"MF2{tag}", q2, "sen", b2, "N")
        nb.capacitor(f"CL1{tag}", true_rail, "0", tb.c_load, 0.0)
        nb.capacitor(f"CL2{tag}", comp_rail, "0", tb.c_load, 0.0)

    def supply_and_controls(self):
        nb, tb = self.nb, self.tb
        if self.style is DesignStyle.ADIABATIC_MTJ:
            nb.vsource("VCLK", "clk", "0", self.clock)
            nb.vsource("VDSIG", "dsig", "0",
                       Pulse(0.0, tb.vdd, 0.0, self.delta, self.delta,
                             tb.t_phase - 2.0 * self.delta, self.t4))
        else:
            nb.vsource("VSUP", "vs", "0", Dc(tb.vdd))
            nb.vsource("VSEN", "sen", "0",
                       Pulse(0.0, tb.vdd, tb.t_phase, self.delta, self.delta,
                             3.0 * tb.t_phase - 2.0 * self.delta, self.t4))

    def xor_preprocessor(self, a: str, ab: str, c: str, cb: str):
        """Static pass-gate XOR of two live inputs: p = a xor c."""
        self.tg("PP1", a, "p", cb, c)
        self.tg("PP2", ab, "p", c, cb)
        self.tg("PP3", ab, "pb", cb, c)
        self.tg("PP4", a, "pb", c, cb)
        return "p", "pb"

    def finish(self, rail_pairs, record_extra=()) -> GateTemplate:
        nb, tb = self.nb, self.tb
        nb.tran(tb.timestep(), len(self.seq) * self.t4)
        lead = "clk" if self.style is DesignStyle.ADIABATIC_MTJ else "vs"
        rails = [r for pair in rail_pairs for r in pair]
        nb.record(lead, *rails, *record_extra)
        nb.title = (f"{self.style.value} mtj/cmos {self.kind.value} testbench")
        return GateTemplate(
            kind=self.kind,
            style=self.style,
            netlist=nb.build(),
            rail_pairs=list(rail_pairs),
            input_sources=self.input_sources,
            clock=self.clock,
            mtj_roles=self.mtj_roles,
            write_sources=self.write_sources,
            sequence=self.seq,
            tb=tb,
        )


def _build_and(g: _GateBuilder) -> GateTemplate:
    g.supply_and_controls()
    a, ab = g.input_rails("a", 0)
    if g.style is DesignStyle.ADIABATIC_MTJ:
        # and-path gated by the live input; nand-path always conducts
        g.adiabatic_rail_pair("", "and", "nand", "x1", "x2")
        g.tg("S1", "x1", "f1", a, ab)
        g.data_mtj("J1", "f1", "and", "b", 1)
        g.data_mtj("J2", "x2", "nand", "bbar", 1)
    else:
        g.baseline_rail_pair("", "and", "nand", "b1", "b2")
        # and discharges when A=0 (direct leg) or when B=0 (via ~B junction)
        g.tg("S1", "b1", "0", ab, a)
        g.tg("S2", "b1", "f2", a, ab)
        g.data_mtj("J1", "f1", "0", "b", 1)
        g.data_mtj("J2", "f2", "0", "bbar", 1)
        g.tg("S3", "b2", "f1", a, ab)
    return g.finish([("and", "nand")])


def _build_xor(g: _GateBuilder) -> GateTemplate:
    g.supply_and_controls()
    a, ab = g.input_rails("a", 0)
    if g.style is DesignStyle.ADIABATIC_MTJ:
        g.adiabatic_rail_pair("", "xor", "xnor", "x1", "x2")
        # straight when A=0, crossed when A=1 - on both sides of the
        # junction pair, so each path keeps its own latch polarity
        g.tg("T1", "x1", "f1", ab, a)
        g.tg("T2", "x2", "f2", ab, a)
        g.tg("T3", "x1", "f2", a, ab)
        g.tg("T4", "x2", "f1", a, ab)
        g.data_mtj("J1", "f1", "g1", "b", 1)
        g.data_mtj("J2", "f2", "g2", "bbar", 1)
        g.tg("B1", "g1", "xor", ab, a)
        g.tg("B2", "g2", "xnor", ab, a)
        g.tg("B3", "g1", "xnor", a, ab)
        g.tg("B4", "g2", "xor", a, ab)
    else:
        g.baseline_rail_pair("", "xor", "xnor", "b1", "b2")
        g.tg("T1", "b1", "f2", ab, a)
        g.tg("T2", "b2", "f1", ab, a)
        g.tg("T3", "b1", "f1", a, ab)
        g.tg("T4", "b2", "f2", a, ab)
        g.data_mtj("J1", "f1", "0", "b", 1)
        g.data_mtj("J2", "f2", "0", "bbar", 1)
    return g.finish([("xor", "xnor")])


def _build_full_adder(g: _GateBuilder) -> GateTemplate:
    g.supply_and_controls()
    a, ab = g.input_rails("a", 0)
    c, cb = g.input_rails("c", 2)
    p, pb = g.xor_preprocessor(a, ab, c, cb)
    if g.style is DesignStyle.ADIABATIC_MTJ:
        # sum pair: xor core steered by p = a xor c over the B junctions
        g.adiabatic_rail_pair("S", "sum", "sumb", "x1", "x2")
        g.tg("T1", "x1", "f1", pb, p)
        g.tg("T2", "x2", "f2", pb, p)
        g.tg("T3", "x1", "f2", p, pb)
        g.tg("T4", "x2", "f1", p, pb)
        g.data_mtj("J1", "f1", "g1", "b", 1)
        g.data_mtj("J2", "f2", "g2", "bbar", 1)
        g.tg("B1", "g1", "sum", pb, p)
        g.tg("B2", "g2", "sumb", pb, p)
        g.tg("B3", "g1", "sumb", p, pb)
        g.tg("B4", "g2", "sum", p, pb)
        # carry pair: majority = A when p=0 (pure legs), B when p=1
        g.adiabatic_rail_pair("C", "cout", "coutb", "x3", "x4")
        g.tg("C1", "x3", "w1", pb, p)
        g.tg("C2", "w1", "cout", a, ab)
        g.tg("C3", "x4", "w2", pb, p)
        g.tg("C4", "w2", "coutb", ab, a)
        g.tg("C5", "x3", "f3", p, pb)
        g.data_mtj("J3", "f3", "cout", "b", 1)
        g.tg("C6", "x4", "f4", p, pb)
        g.data_mtj("J4", "f4", "coutb", "bbar", 1)
    else:
        g.baseline_rail_pair("S", "sum", "sumb", "b1", "b2")
        g.tg("T1", "b1", "f2", pb, p)
        g.tg("T2", "b2", "f1", pb, p)
        g.tg("T3", "b1", "f1", p, pb)
        g.tg("T4", "b2", "f2", p, pb)
        g.data_mtj("J1", "f1", "0", "b", 1)
        g.data_mtj("J2", "f2", "0", "bbar", 1)
        g.baseline_rail_pair("C", "cout", "coutb", "b3", "b4")
        g.tg("C1", "b3", "w3", pb, p)
        g.tg("C2", "w3", "0", ab, a)
        g.tg("C3", "b4", "w4", pb, p)
        g.tg("C4", "w4", "0", a, ab)
        g.tg("C5", "b3", "f4", p, pb)
        g.data_mtj("J3", "f3", "0", "b", 1)
        g.tg("C6", "b4", "f3", p, pb)
        g.data_mtj("J4", "f4", "0", "bbar", 1)
    return g.finish([("sum", "sumb"), ("cout", "coutb")])


_BUILDERS = {
    GateKind.AND_NAND: _build_and,
    GateKind.XOR_XNOR: _build_xor,
    GateKind.FULL_ADDER: _build_full_adder,
}


def build_gate(kind: GateKind, style: DesignStyle, tb: Optional[TestbenchSpec] = None) -> GateTemplate:
    """Assemble a complete, simulable testbench netlist for one gate."""
    if kind not in _BUILDERS:
        raise ValueError(f"unsupported gate kind {kind!r}")
    if style not in (DesignStyle.ADIABATIC_MTJ, DesignStyle.BASELINE_MTJ):
        raise ValueError(f"unsupported design style {style!r}")
    return _BUILDERS[kind](_GateBuilder(kind, style, tb or TestbenchSpec()))


# --------------------------------------------------------------------------
# Readout and verification
# --------------------------------------------------------------------------

@dataclass
class Readout:
    bits: tuple      # per rail: 1, 0, or None (indeterminate)
    volts: tuple     # measured rail voltages at the sample instant
    t_sample: float


@dataclass
class PatternVerdict:
    cycle: int
    pattern: tuple
    expected: tuple
    observed: tuple
    volts: tuple
    passed: bool


def logic_readout(result: TransientResult, template: GateTemplate, cycle: int) -> Readout:
    """Sample every output rail at the temporal midpoint of the hold
    phase of the given cycle: >= 0.9 vdd reads 1, <= 0.1 vdd reads 0,
    anything between is indeterminate (reported with its voltage)."""
    tp = template.clock.t_phase
    t_sample = cycle * 4.0 * tp + 2.5 * tp
    times = result.times
    k = int(round(t_sample / (times[1] - times[0])))
    if k < 0 or k >= len(times):
        raise ValueError(f"cycle {cycle} outside the simulated span")
    vdd = template.tb.vdd
    bits = []
    volts = []
    for rail in template.rails:
        v = float(result.node_voltages[rail][k])
        volts.append(v)
        bits.append(1 if v >= 0.9 * vdd else 0 if v <= 0.1 * vdd else None)
    return Readout(bits=tuple(bits), volts=tuple(volts), t_sample=t_sample)


def verify_truth_table(
    kind: GateKind,
    style: DesignStyle,
    tb: Optional[TestbenchSpec] = None,
    result: Optional[TransientResult] = None,
    template: Optional[GateTemplate] = None,
):
    """Simulate the testbench and compare every cycle after the warmup
    against the oracle. Returns (verdicts, template, result)."""
    if template is None:
        template = build_gate(kind, style, tb)
    if result is None:
        try:
            result = transient_run(template.netlist)
        except ConvergenceError as exc:
            period = 4.0 * template.clock.t_phase
            cycle = min(int((exc.t or 0.0) // period), len(template.sequence) - 1)
            raise ConvergenceError(
                f"{kind.value}/{style.value} simulation failed during cycle "
                f"{cycle} (pattern {template.sequence[cycle]}): {exc}",
                t=exc.t) from exc
    verdicts = []
    for cycle in range(1, len(template.sequence)):
        pattern = template.sequence[cycle]
        expected = gate_oracle(kind, pattern)
        ro = logic_readout(result, template, cycle)
        verdicts.append(PatternVerdict(
            cycle=cycle,
            pattern=pattern,
            expected=tuple(expected),
            observed=ro.bits,
            volts=ro.volts,
            passed=ro.bits == tuple(expected),
        ))
    return verdicts, template, result


def rails_recovered(result: TransientResult, template: GateTemplate) -> float:
    """Worst rail voltage observed at the end of any wait phase after
    the first period (the recovery+wait criterion's sample points)."""
    tp = template.clock.t_phase
    dt = result.times[1] - result.times[0]
    worst = 0.0
    for cycle in range(1, len(template.sequence)):
        k = int(round((cycle * 4.0 * tp + tp) / dt)) - 2
        for rail in template.rails:
            worst = max(worst, abs(float(result.node_voltages[rail][k])))
    return worst


def mtj_write_errors(result: TransientResult, template: GateTemplate) -> list:
    """Compare each junction's configuration at the end of every wait
    phase against the state implied by the written bit."""
    tp = template.clock.t_phase
    dt = result.times[1] - result.times[0]
    bpos = 1
    errors = []
    for cycle, pattern in enumerate(template.sequence):
        k = int(round((cycle * 4.0 * tp + tp) / dt))
        bit = pattern[bpos]
        for role, (name, stores) in template.mtj_roles.items():
            stored = bit if stores == "b" else 1 - bit
            want = "P" if stored else "AP"
            got = str(result.mtj_state_trace[name][k])
            if got != want:
                errors.append((cycle, role, name, want, got))
    return errors
