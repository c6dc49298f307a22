"""Circuit data model and a small SPICE-dialect netlist parser.

One element per line, kind selected by the first letter:

    R<name> n1 n2 <ohms>
    C<name> n1 n2 <farads> [IC=<volts>]
    V<name> n+ n- DC <v> | PWL(t1 v1 t2 v2 ...) | PULSE(v1 v2 td tr tf pw per)
                 | PCLK(vdd t_phase [t0])
    I<name> n+ n- <same source specs, amps>
    M<name> d g s N|P [VT=] [KP=] [W=] [L=] [LAMBDA=]
    J<name> nf np [RP=] [TMR=] [IC=] [TSW=] [STATE=P|AP]
    .tran <dt> <tstop>
    .record <name> ...
    * comment (a leading comment line is kept as the title)

No subcircuits, no .model cards; device parameters ride inline as
KEY=VALUE. Unit suffixes f/p/n/u/m/k/meg/g are accepted anywhere a
number is (case-insensitive; "meg" is the only multi-letter suffix).

Node names are arbitrary identifiers; "0" is ground. Internal dense
indexing is assigned in first-appearance order with ground fixed at
index 0, so the matrix layout of a parsed circuit is deterministic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from .devices import (
    DEFAULT_NMOS,
    DEFAULT_PMOS,
    Dc,
    MosfetParams,
    MtjParams,
    PowerClock,
    Pulse,
    Pwl,
)


class NetlistError(Exception):
    """Malformed netlist text or an invalid circuit description."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


_SUFFIXES = {
    "f": -15,
    "p": -12,
    "n": -9,
    "u": -6,
    "m": -3,
    "k": 3,
    "meg": 6,
    "g": 9,
}

_VALUE_RE = re.compile(
    r"^([+-]?(?:\d+\.?\d*|\.\d+))(?:[eE]([+-]?\d+))?(meg|[fpnumkg])?$",
    re.IGNORECASE,
)


def parse_value(text: str) -> float:
    """Parse a number with an optional engineering suffix ("2k" -> 2000).

    Suffixes scale by exact powers of ten: the scaling happens in the
    decimal exponent, so "4.5n" parses to the same float as "4.5e-9".
    """
    m = _VALUE_RE.match(text.strip())
    if not m:
        raise ValueError(f"bad numeric value {text!r}")
    mantissa, exp, suffix = m.groups()
    e = int(exp) if exp else 0
    if suffix:
        e += _SUFFIXES[suffix.lower()]
    return float(f"{mantissa}e{e}")


def format_value(x: float) -> str:
    """Shortest exact decimal form; parse_value(format_value(x)) == x."""
    return repr(float(x))


@dataclass(frozen=True)
class Resistor:
    name: str
    n1: str
    n2: str
    ohms: float


@dataclass(frozen=True)
class Capacitor:
    name: str
    n1: str
    n2: str
    farads: float
    ic: Optional[float] = None  # explicit initial voltage, None = from DC


@dataclass(frozen=True)
class VSource:
    name: str
    np: str
    nn: str
    spec: object


@dataclass(frozen=True)
class ISource:
    name: str
    np: str
    nn: str
    spec: object


@dataclass(frozen=True)
class Mosfet:
    name: str
    d: str
    g: str
    s: str
    kind: str  # "N" | "P"
    params: MosfetParams


@dataclass(frozen=True)
class Mtj:
    name: str
    n_free: str
    n_pinned: str
    params: MtjParams
    initial_state: str = "P"  # "P" | "AP"


Element = Union[Resistor, Capacitor, VSource, ISource, Mosfet, Mtj]


@dataclass
class SimDirectives:
    tstop: float = 0.0
    dt: float = 0.0
    record: list = field(default_factory=list)


@dataclass
class Netlist:
    title: str = ""
    nodes: list = field(default_factory=lambda: ["0"])
    elements: list = field(default_factory=list)
    directives: SimDirectives = field(default_factory=SimDirectives)

    def element(self, name: str) -> Element:
        low = name.lower()
        for e in self.elements:
            if e.name.lower() == low:
                return e
        raise KeyError(name)

    def vsources(self) -> list:
        return [e for e in self.elements if isinstance(e, VSource)]

    def mtjs(self) -> list:
        return [e for e in self.elements if isinstance(e, Mtj)]

    def mosfets(self) -> list:
        return [e for e in self.elements if isinstance(e, Mosfet)]


def _terminals(e: Element) -> tuple:
    if isinstance(e, (Resistor, Capacitor)):
        return (e.n1, e.n2)
    if isinstance(e, (VSource, ISource)):
        return (e.np, e.nn)
    if isinstance(e, Mosfet):
        return (e.d, e.g, e.s)
    if isinstance(e, Mtj):
        return (e.n_free, e.n_pinned)
    raise TypeError(f"unknown element {e!r}")


class NetlistBuilder:
    """Programmatic construction with the same node-ordering rules as
    the parser (ground first, then first appearance)."""

    def __init__(self, title: str = ""):
        self.title = title
        self._nodes = ["0"]
        self._seen = {"0"}
        self._elements = []
        self._names = set()
        self._directives = SimDirectives()

    def _touch(self, *nodes: str):
        for n in nodes:
            if n not in self._seen:
                self._seen.add(n)
                self._nodes.append(n)

    def add(self, element: Element) -> Element:
        low = element.name.lower()
        if low in self._names:
            raise NetlistError(f"duplicate element name {element.name!r}")
        self._names.add(low)
        self._touch(*_terminals(element))
        self._elements.append(element)
        return element

    def resistor(self, name, n1, n2, ohms):
        return self.add(Resistor(name, n1, n2, ohms))

    def capacitor(self, name, n1, n2, farads, ic=None):
        return self.add(Capacitor(name, n1, n2, farads, ic))

    def vsource(self, name, np, nn, spec):
        return self.add(VSource(name, np, nn, spec))

    def isource(self, name, np, nn, spec):
        return self.add(ISource(name, np, nn, spec))

    def mosfet(self, name, d, g, s, kind, params=None):
        if params is None:
            params = DEFAULT_NMOS if kind == "N" else DEFAULT_PMOS
        return self.add(Mosfet(name, d, g, s, kind, params))

    def mtj(self, name, n_free, n_pinned, params=None, initial_state="P"):
        return self.add(Mtj(name, n_free, n_pinned, params or MtjParams(), initial_state))

    def tran(self, dt, tstop):
        self._directives.tstop = tstop
        self._directives.dt = dt

    def record(self, *names):
        self._directives.record.extend(names)

    def build(self) -> Netlist:
        return Netlist(
            title=self.title,
            nodes=list(self._nodes),
            elements=list(self._elements),
            directives=self._directives,
        )


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------

_PAREN_RE = re.compile(r"^(\w+)\s*\((.*)\)\s*$", re.DOTALL)


def _parse_source_spec(rest: str, lineno: int):
    """Parse the source spec portion of a V/I line."""
    text = rest.strip()
    m = _PAREN_RE.match(text)
    if m:
        kind = m.group(1).upper()
        try:
            args = [parse_value(tok) for tok in m.group(2).split()]
        except ValueError as exc:
            raise NetlistError(str(exc), lineno) from None
        if kind == "PWL":
            if len(args) < 2 or len(args) % 2:
                raise NetlistError("PWL needs an even number of t/v values", lineno)
            pts = tuple((args[i], args[i + 1]) for i in range(0, len(args), 2))
            for a, b in zip(pts, pts[1:]):
                if b[0] <= a[0]:
                    raise NetlistError("PWL breakpoints must strictly increase", lineno)
            return Pwl(pts)
        if kind == "PULSE":
            if len(args) != 7:
                raise NetlistError("PULSE needs 7 values (v1 v2 td tr tf pw per)", lineno)
            return Pulse(*args)
        if kind == "PCLK":
            if len(args) not in (2, 3):
                raise NetlistError("PCLK needs vdd t_phase [t0]", lineno)
            t0 = args[2] if len(args) == 3 else 0.0
            return PowerClock(vdd=args[0], t_phase=args[1], t0=t0)
        raise NetlistError(f"unknown source kind {kind!r}", lineno)
    toks = text.split()
    if len(toks) == 2 and toks[0].upper() == "DC":
        toks = toks[1:]
    if len(toks) == 1:
        try:
            return Dc(parse_value(toks[0]))
        except ValueError as exc:
            raise NetlistError(str(exc), lineno) from None
    raise NetlistError(f"bad source spec {rest!r}", lineno)


def _split_params(tokens: list, allowed: set, lineno: int) -> dict:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise NetlistError(f"expected KEY=VALUE, got {tok!r}", lineno)
        key, val = tok.split("=", 1)
        key = key.upper()
        if key not in allowed:
            raise NetlistError(f"unknown parameter key {key!r}", lineno)
        out[key] = val
    return out


def parse_netlist(text: str) -> Netlist:
    """Parse netlist source text into a validated Netlist.

    Raises NetlistError (with a line number) on syntax errors, duplicate
    element names, unknown parameter keys, or a missing ground node.
    """
    builder: Optional[NetlistBuilder] = None
    title = ""
    saw_tran = False
    records: list = []
    pending: list = []   # (lineno, line) element/directive lines

    lines = text.splitlines()
    first_content = True
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("*"):
            if first_content:
                title = line[1:].strip()
                first_content = False
            continue
        first_content = False
        pending.append((lineno, line))

    builder = NetlistBuilder(title)

    for lineno, line in pending:
        lead = line[0]
        toks = line.split()
        try:
            if lead == ".":
                dot = toks[0].lower()
                if dot == ".tran":
                    if len(toks) != 3:
                        raise NetlistError(".tran needs <dt> <tstop>", lineno)
                    if saw_tran:
                        raise NetlistError("duplicate .tran directive", lineno)
                    saw_tran = True
                    builder.tran(parse_value(toks[1]), parse_value(toks[2]))
                elif dot == ".record":
                    records.extend(toks[1:])
                else:
                    raise NetlistError(f"unknown directive {toks[0]!r}", lineno)
                continue

            kind = lead.upper()
            if kind == "R":
                if len(toks) != 4:
                    raise NetlistError("resistor needs: R<name> n1 n2 <ohms>", lineno)
                builder.resistor(toks[0], toks[1], toks[2], parse_value(toks[3]))
            elif kind == "C":
                if len(toks) < 4:
                    raise NetlistError("capacitor needs: C<name> n1 n2 <farads> [IC=v]", lineno)
                params = _split_params(toks[4:], {"IC"}, lineno)
                ic = parse_value(params["IC"]) if "IC" in params else None
                builder.capacitor(toks[0], toks[1], toks[2], parse_value(toks[3]), ic)
            elif kind in ("V", "I"):
                if len(toks) < 4:
                    raise NetlistError("source needs: name n+ n- <spec>", lineno)
                spec = _parse_source_spec(line.split(None, 3)[3], lineno)
                if kind == "V":
                    builder.vsource(toks[0], toks[1], toks[2], spec)
                else:
                    builder.isource(toks[0], toks[1], toks[2], spec)
            elif kind == "M":
                if len(toks) < 5:
                    raise NetlistError("mosfet needs: M<name> d g s N|P [params]", lineno)
                pol = toks[4].upper()
                if pol not in ("N", "P"):
                    raise NetlistError(f"mosfet polarity must be N or P, got {toks[4]!r}", lineno)
                params = _split_params(toks[5:], {"VT", "KP", "W", "L", "LAMBDA"}, lineno)
                base = DEFAULT_NMOS if pol == "N" else DEFAULT_PMOS
                kw = {}
                if "VT" in params:
                    kw["vt0"] = parse_value(params["VT"])
                if "KP" in params:
                    kw["kp"] = parse_value(params["KP"])
                if "W" in params:
                    kw["w"] = parse_value(params["W"])
                if "L" in params:
                    kw["l"] = parse_value(params["L"])
                if "LAMBDA" in params:
                    kw["lam"] = parse_value(params["LAMBDA"])
                builder.mosfet(toks[0], toks[1], toks[2], toks[3], pol,
                               replace(base, **kw) if kw else base)
            elif kind == "J":
                if len(toks) < 3:
                    raise NetlistError("mtj needs: J<name> nf np [params]", lineno)
                params = _split_params(toks[3:], {"RP", "TMR", "IC", "TSW", "STATE"}, lineno)
                state = params.pop("STATE", "P").upper()
                if state not in ("P", "AP"):
                    raise NetlistError(f"STATE must be P or AP, got {state!r}", lineno)
                kw = {}
                if "RP" in params:
                    kw["rp"] = parse_value(params["RP"])
                if "TMR" in params:
                    kw["tmr"] = parse_value(params["TMR"])
                if "IC" in params:
                    kw["ic"] = parse_value(params["IC"])
                if "TSW" in params:
                    kw["tsw"] = parse_value(params["TSW"])
                builder.mtj(toks[0], toks[1], toks[2], MtjParams(**kw), state)
            else:
                raise NetlistError(f"unknown element kind {lead!r}", lineno)
        except NetlistError:
            raise
        except ValueError as exc:
            raise NetlistError(str(exc), lineno) from None

    builder.record(*records)
    netlist = builder.build()
    if "0" not in {n for e in netlist.elements for n in _terminals(e)}:
        raise NetlistError("missing ground node '0'")
    return netlist


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

def _spec_text(spec) -> str:
    if isinstance(spec, Dc):
        return f"DC {format_value(spec.value)}"
    if isinstance(spec, Pwl):
        inner = " ".join(f"{format_value(t)} {format_value(v)}" for t, v in spec.breakpoints)
        return f"PWL({inner})"
    if isinstance(spec, Pulse):
        vals = (spec.v1, spec.v2, spec.delay, spec.rise, spec.fall, spec.width, spec.period)
        return "PULSE(" + " ".join(format_value(v) for v in vals) + ")"
    if isinstance(spec, PowerClock):
        return (f"PCLK({format_value(spec.vdd)} {format_value(spec.t_phase)} "
                f"{format_value(spec.t0)})")
    raise TypeError(f"unknown source spec {spec!r}")


def _mosfet_params_text(e: Mosfet) -> str:
    base = DEFAULT_NMOS if e.kind == "N" else DEFAULT_PMOS
    parts = []
    p = e.params
    if p.vt0 != base.vt0:
        parts.append(f"VT={format_value(p.vt0)}")
    if p.kp != base.kp:
        parts.append(f"KP={format_value(p.kp)}")
    if p.w != base.w:
        parts.append(f"W={format_value(p.w)}")
    if p.l != base.l:
        parts.append(f"L={format_value(p.l)}")
    if p.lam != base.lam:
        parts.append(f"LAMBDA={format_value(p.lam)}")
    return (" " + " ".join(parts)) if parts else ""


def serialize_netlist(n: Netlist) -> str:
    """Render a Netlist back to dialect text.

    parse_netlist(serialize_netlist(n)) is structurally equal to n for
    any netlist this module can represent.
    """
    out = []
    if n.title:
        out.append(f"* {n.title}")
    for e in n.elements:
        if isinstance(e, Resistor):
            out.append(f"{e.name} {e.n1} {e.n2} {format_value(e.ohms)}")
        elif isinstance(e, Capacitor):
            ic = f" IC={format_value(e.ic)}" if e.ic is not None else ""
            out.append(f"{e.name} {e.n1} {e.n2} {format_value(e.farads)}{ic}")
        elif isinstance(e, VSource):
            out.append(f"{e.name} {e.np} {e.nn} {_spec_text(e.spec)}")
        elif isinstance(e, ISource):
            out.append(f"{e.name} {e.np} {e.nn} {_spec_text(e.spec)}")
        elif isinstance(e, Mosfet):
            out.append(f"{e.name} {e.d} {e.g} {e.s} {e.kind}{_mosfet_params_text(e)}")
        elif isinstance(e, Mtj):
            p = e.params
            out.append(
                f"{e.name} {e.n_free} {e.n_pinned} RP={format_value(p.rp)} "
                f"TMR={format_value(p.tmr)} IC={format_value(p.ic)} "
                f"TSW={format_value(p.tsw)} STATE={e.initial_state}"
            )
        else:
            raise TypeError(f"unknown element {e!r}")
    if n.directives.dt or n.directives.tstop:
        out.append(f".tran {format_value(n.directives.dt)} "
                   f"{format_value(n.directives.tstop)}")
    if n.directives.record:
        out.append(".record " + " ".join(n.directives.record))
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# Validation
# --------------------------------------------------------------------------

def validate_netlist(n: Netlist) -> list:
    """Check all structural invariants; returns a list of diagnostics
    (empty when the netlist is simulable). Never raises."""
    diags = []
    known = set(n.nodes)
    referenced = set()
    seen_names = set()

    for e in n.elements:
        low = e.name.lower()
        if low in seen_names:
            diags.append(f"{e.name}: duplicate element name")
        seen_names.add(low)
        for t in _terminals(e):
            referenced.add(t)
            if t not in known:
                diags.append(f"{e.name}: terminal references undeclared node {t!r}")

        if isinstance(e, Resistor):
            if not e.ohms > 0:
                diags.append(f"{e.name}: resistance must be > 0 (got {e.ohms})")
        elif isinstance(e, Capacitor):
            if not e.farads > 0:
                diags.append(f"{e.name}: capacitance must be > 0 (got {e.farads})")
        elif isinstance(e, (VSource, ISource)):
            diags.extend(f"{e.name}: {msg}" for msg in _check_spec(e.spec))
        elif isinstance(e, Mosfet):
            p = e.params
            if not (p.kp > 0 and p.w > 0 and p.l > 0):
                diags.append(f"{e.name}: kp, w, l must be > 0")
            if p.lam < 0:
                diags.append(f"{e.name}: lambda must be >= 0")
            if p.gate_cap() < 0:
                diags.append(f"{e.name}: gate capacitance must be >= 0")
            if e.kind not in ("N", "P"):
                diags.append(f"{e.name}: polarity must be N or P")
        elif isinstance(e, Mtj):
            p = e.params
            if e.n_free == e.n_pinned:
                diags.append(f"{e.name}: free and pinned terminals must differ")
            if not (p.rp > 0 and p.tmr > 0 and p.ic > 0 and p.tsw > 0):
                diags.append(f"{e.name}: rp, tmr, ic, tsw must be > 0")
            if e.initial_state not in ("P", "AP"):
                diags.append(f"{e.name}: initial state must be P or AP")

    if "0" not in referenced:
        diags.append("no ground node")

    d = n.directives
    if d.tstop or d.dt:
        if not d.tstop > 0:
            diags.append(f".tran: tstop must be > 0 (got {d.tstop})")
        elif not 0 < d.dt < d.tstop:
            diags.append(f".tran: need 0 < dt < tstop (got dt={d.dt}, tstop={d.tstop})")
    vsource_names = {e.name.lower() for e in n.elements if isinstance(e, VSource)}
    for name in d.record:
        if name not in known and name.lower() not in vsource_names:
            diags.append(f".record: {name!r} is neither a node nor a voltage source")
    return diags


def _check_spec(spec) -> list:
    msgs = []
    if isinstance(spec, Pwl):
        pts = spec.breakpoints
        for a, b in zip(pts, pts[1:]):
            if b[0] <= a[0]:
                msgs.append("PWL breakpoints must strictly increase in time")
                break
    elif isinstance(spec, Pulse):
        if min(spec.rise, spec.fall, spec.width, spec.delay) < 0 or spec.period < 0:
            msgs.append("PULSE timing values must be >= 0")
    elif isinstance(spec, PowerClock):
        if not spec.vdd > 0:
            msgs.append("PCLK vdd must be > 0")
        if not spec.t_phase > 0:
            msgs.append("PCLK t_phase must be > 0")
    elif not isinstance(spec, Dc):
        msgs.append(f"unknown source spec {spec!r}")
    return msgs
