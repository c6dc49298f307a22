"""Behavioral device models and their small-signal linearizations.

Everything the transient engine needs to stamp a device lives here:

* a level-1 square-law MOSFET (``mosfet_ids``) with exact analytic
  derivatives, used as a documented stand-in for foundry model cards,
* a two-state magnetic tunnel junction with threshold-plus-dwell
  switching (``mtj_resistance`` / ``mtj_update``), a deterministic
  substitute for physics-based LLG models,
* the discrete companion model for capacitors,
* time-dependent source evaluation, including the four-phase trapezoid
  power clock that both supplies and sequences adiabatic gates.

All functions are pure; MtjState is an immutable value that the engine
replaces after each accepted timestep.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

# Effective oxide capacitance per area, calibrated so the default NMOS
# card (w=64nm, l=32nm) carries cg = 0.05 fF.
COX_EFF = 0.05e-15 / (64e-9 * 32e-9)


def _default_cg(w: float, l: float) -> float:
    return COX_EFF * w * l


@dataclass(frozen=True)
class MosfetParams:
    """Square-law card. vt0 is a positive magnitude for both polarities;
    the P-type mirroring happens in the evaluation, not in the card."""

    vt0: float = 0.4        # V
    kp: float = 4e-4        # A/V^2
    w: float = 64e-9        # m
    l: float = 32e-9        # m
    lam: float = 0.1        # 1/V channel-length modulation
    cg: Optional[float] = None  # F, lumped gate cap; None -> COX_EFF*w*l

    def gate_cap(self) -> float:
        return self.cg if self.cg is not None else _default_cg(self.w, self.l)

    @property
    def beta(self) -> float:
        return self.kp * self.w / self.l


# Default cards: N has twice the mobility of P, P is drawn twice as wide.
DEFAULT_NMOS = MosfetParams(vt0=0.4, kp=4e-4, w=64e-9, l=32e-9, lam=0.1)
DEFAULT_PMOS = MosfetParams(vt0=0.4, kp=2e-4, w=128e-9, l=32e-9, lam=0.1)


@dataclass(frozen=True)
class MtjParams:
    """Behavioral MTJ: two resistances plus a current-threshold switch.

    rp/tmr/ic/tsw defaults are artifact choices standing in for a real
    compact model; they are not measured device data.
    """

    rp: float = 2e3        # ohm, parallel state
    tmr: float = 1.5       # (rap - rp)/rp
    ic: float = 50e-6      # A, critical switching current magnitude
    tsw: float = 5e-9      # s, required over-threshold dwell

    @property
    def rap(self) -> float:
        return self.rp * (1.0 + self.tmr)


@dataclass(frozen=True)
class MtjState:
    """P/AP configuration plus accumulated over-threshold dwell time.

    At most one dwell accumulator is nonzero; current of the opposite
    sign (or any sub-threshold current) resets the accumulation.
    """

    config: str = "P"      # "P" | "AP"
    dwell_pos: float = 0.0
    dwell_neg: float = 0.0


@dataclass(frozen=True)
class DeviceStamp:
    """Norton companion contribution of one device at one operating point.

    conductances: (row node, col node, siemens)
    currents: (node, amps) injected into the node
    Nodes are terminal names; ground-row entries are dropped at
    assembly time, not here.
    """

    conductances: tuple = ()
    currents: tuple = ()


def mosfet_ids(vgs: float, vds: float, p: MosfetParams) -> tuple[float, float, float]:
    """Square-law drain current and its exact partial derivatives.

    N-type convention with vds >= 0; the caller mirrors signs for P-type
    devices and swaps terminals when vds < 0.

    Returns (id, gm, gds) with gm = d(id)/d(vgs), gds = d(id)/d(vds).
    """
    vov = vgs - p.vt0
    if vov <= 0.0:
        return 0.0, 0.0, 0.0
    beta = p.beta
    clm = 1.0 + p.lam * vds
    if vds < vov:
        # triode
        core = vov * vds - 0.5 * vds * vds
        ids = beta * core * clm
        gm = beta * vds * clm
        gds = beta * ((vov - vds) * clm + core * p.lam)
    else:
        # saturation
        half = 0.5 * beta * vov * vov
        ids = half * clm
        gm = beta * vov * clm
        gds = half * p.lam
    return ids, gm, gds


def mosfet_stamp(vd: float, vg: float, vs: float, kind: str,
                 p: MosfetParams, d: str, g: str, s: str) -> DeviceStamp:
    """Scalar Norton linearization of one MOSFET at a trial point.

    This is the per-device reference the engine's vectorized assembly
    is checked against: P-type devices mirror into the N frame, and a
    reversed channel swaps the drain/source roles before stamping.
    """
    sgn = 1.0 if kind == "N" else -1.0
    ud, ug, us = sgn * vd, sgn * vg, sgn * vs
    if ud >= us:
        dn, sn = d, s
        v_dn, v_sn = vd, vs
        vgs_c, vds_c = ug - us, ud - us
    else:
        dn, sn = s, d
        v_dn, v_sn = vs, vd
        vgs_c, vds_c = ug - ud, us - ud
    ids, gm, gds = mosfet_ids(vgs_c, vds_c, p)
    ireal = sgn * ids
    ieq = ireal - gm * (vg - v_sn) - gds * (v_dn - v_sn)
    return DeviceStamp(
        conductances=(
            (dn, g, gm), (dn, dn, gds), (dn, sn, -(gm + gds)),
            (sn, g, -gm), (sn, dn, -gds), (sn, sn, gm + gds),
        ),
        currents=((dn, -ieq), (sn, ieq)),
    )


def mtj_resistance(state: MtjState, p: MtjParams) -> float:
    """rp when parallel, rp*(1+tmr) when antiparallel."""
    return p.rp if state.config == "P" else p.rap


def mtj_update(state: MtjState, i_branch: float, dt: float, p: MtjParams) -> MtjState:
    """Advance the threshold-plus-dwell switching state by one step.

    i_branch is the accepted-step current flowing free -> pinned;
    positive current drives toward P, negative toward AP. Re-writing the
    current configuration is a no-op (dwell accumulates but the flip is
    idempotent).
    """
    if i_branch > p.ic:
        dwell_pos = state.dwell_pos + dt
        if dwell_pos >= p.tsw:
            return MtjState(config="P")
        return MtjState(config=state.config, dwell_pos=dwell_pos, dwell_neg=0.0)
    if i_branch < -p.ic:
        dwell_neg = state.dwell_neg + dt
        if dwell_neg >= p.tsw:
            return MtjState(config="AP")
        return MtjState(config=state.config, dwell_pos=0.0, dwell_neg=dwell_neg)
    if state.dwell_pos or state.dwell_neg:
        return MtjState(config=state.config)
    return state


def capacitor_companion(
    c: float, v_prev: float, i_prev: float, dt: float, method: str = "TRAP"
) -> tuple[float, float]:
    """Discrete Norton equivalent of a capacitor over one step.

    TRAP: geq = 2C/dt, ieq = -(2C/dt) v_prev - i_prev
    BE:   geq = C/dt,  ieq = -(C/dt) v_prev

    The branch current at the new time is geq*v_new + ieq.
    """
    if method == "TRAP":
        geq = 2.0 * c / dt
        return geq, -geq * v_prev - i_prev
    if method == "BE":
        geq = c / dt
        return geq, -geq * v_prev
    raise ValueError(f"unknown integration method {method!r}")


# --------------------------------------------------------------------------
# Source specifications and evaluation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Dc:
    value: float = 0.0


@dataclass(frozen=True)
class Pwl:
    """Piecewise-linear waveform, clamped at both ends.

    breakpoints must be strictly increasing in time.
    """

    breakpoints: tuple = ()  # of (seconds, value)


@dataclass(frozen=True)
class Pulse:
    """Standard SPICE pulse: v1 until delay, then periodic
    rise(tr) / high(pw) / fall(tf) / low-for-the-rest cycles."""

    v1: float = 0.0
    v2: float = 0.0
    delay: float = 0.0
    rise: float = 0.0
    fall: float = 0.0
    width: float = 0.0
    period: float = 0.0


@dataclass(frozen=True)
class PowerClock:
    """Four-phase trapezoid supply: wait at 0, ramp to vdd (evaluate),
    hold at vdd, ramp back to 0 (recovery). Period is 4*t_phase."""

    vdd: float = 1.0
    t_phase: float = 10e-9
    t0: float = 0.0

    @property
    def period(self) -> float:
        return 4.0 * self.t_phase


SourceSpec = object  # union of Dc | Pwl | Pulse | PowerClock


def source_value(spec, t: float) -> float:
    """Evaluate a source specification at time t (volts or amps)."""
    if isinstance(spec, Dc):
        return spec.value
    if isinstance(spec, Pwl):
        pts = spec.breakpoints
        if not pts:
            return 0.0
        if t <= pts[0][0]:
            return pts[0][1]
        if t >= pts[-1][0]:
            return pts[-1][1]
        for k in range(len(pts) - 1):
            t0, v0 = pts[k]
            t1, v1 = pts[k + 1]
            if t <= t1:
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        return pts[-1][1]
    if isinstance(spec, Pulse):
        if t < spec.delay:
            return spec.v1
        tc = t - spec.delay
        if spec.period > 0.0:
            tc = tc % spec.period
        if tc < spec.rise:
            if spec.rise <= 0.0:
                return spec.v2
            return spec.v1 + (spec.v2 - spec.v1) * tc / spec.rise
        tc -= spec.rise
        if tc < spec.width:
            return spec.v2
        tc -= spec.width
        if tc < spec.fall:
            if spec.fall <= 0.0:
                return spec.v1
            return spec.v2 + (spec.v1 - spec.v2) * tc / spec.fall
        return spec.v1
    if isinstance(spec, PowerClock):
        tau = (t - spec.t0) % spec.period
        tp = spec.t_phase
        if tau < tp:                      # wait
            return 0.0
        if tau < 2.0 * tp:                # evaluate
            return spec.vdd * (tau - tp) / tp
        if tau < 3.0 * tp:                # hold
            return spec.vdd
        return spec.vdd * (4.0 * tp - tau) / tp  # recovery
    raise TypeError(f"unknown source spec {spec!r}")


def power_clock_phase(spec: PowerClock, t: float) -> str:
    """Which of wait/evaluate/hold/recovery the clock is in at time t."""
    tau = (t - spec.t0) % spec.period
    k = int(tau // spec.t_phase)
    return ("wait", "evaluate", "hold", "recovery")[min(k, 3)]


def discharge_signal(t: float, clk: PowerClock) -> float:
    """Control signal for the output charge-sharing transistors:
    vdd during the clock's wait phase, 0 in the other three phases."""
    return clk.vdd if power_clock_phase(clk, t) == "wait" else 0.0
