"""Modified nodal analysis and the fixed-step transient engine.

Unknown ordering is node voltages (ground excluded) followed by one
branch current per voltage source. The matrix is dense: the circuits
this package targets stay under a hundred unknowns, where dense LU is
both simpler and exactly testable.

Integration is trapezoidal with a backward-Euler first step; a Newton
failure halves the local step (up to a limit) and restarts the substep
with backward Euler. MTJ resistance is frozen inside each step and the
switching state advances only after step acceptance, so Newton never
sees a resistance discontinuity. A gmin shunt from every node to ground
keeps the matrix nonsingular when transistors cut entire subnets off.

Identical inputs produce bit-identical traces: there is no randomness,
no wall clock, and a fixed iteration order throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .devices import (
    MtjState,
    capacitor_companion,
    mtj_resistance,
    mtj_update,
    source_value,
)
from .netlist import (
    Capacitor,
    ISource,
    Mosfet,
    Mtj,
    Netlist,
    Resistor,
    VSource,
    validate_netlist,
)

GMIN = 1e-12
_PIVOT_MIN = 1e-30


class SingularMatrixError(Exception):
    """LU pivot collapsed; the circuit matrix is (numerically) singular."""


class ConvergenceError(Exception):
    """Newton failed to converge, even after all timestep halvings."""

    def __init__(self, message: str, t: Optional[float] = None):
        super().__init__(message)
        self.t = t


@dataclass
class TransientConfig:
    dt: float
    tstop: float
    newton_abstol: float = 1e-6   # volts
    newton_reltol: float = 1e-3
    newton_itmax: int = 100
    max_dt_halvings: int = 10
    check_kcl: bool = False       # recompute nonlinear KCL residual per step
    use_lapack: bool = True       # numpy solve in the hot loop; False = own LU


@dataclass
class LinearSystem:
    a: np.ndarray
    b: np.ndarray
    unknowns: list  # unknown names: node names, then "i(<vsource>)"


def solve_linear(sys: LinearSystem) -> np.ndarray:
    """Dense LU with partial pivoting.

    Raises SingularMatrixError when a pivot magnitude falls below 1e-30.
    """
    a = np.array(sys.a, dtype=float)
    b = np.array(sys.b, dtype=float)
    n = len(b)
    if a.shape != (n, n):
        raise ValueError("matrix/vector size mismatch")
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[p, k]) < _PIVOT_MIN:
            raise SingularMatrixError(f"pivot {a[p, k]!r} at column {k}")
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
        a[k + 1:, k] /= a[k, k]
        if k + 1 < n:
            a[k + 1:, k + 1:] -= np.outer(a[k + 1:, k], a[k, k + 1:])
            b[k + 1:] -= a[k + 1:, k] * b[k]
    x = np.empty(n)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x


def _mosfet_core(vd, vg, vs, sgn, beta, vt0, lam):
    """Vectorized square-law evaluation in the canonical (N-type,
    vds >= 0) frame. Shapes broadcast; params come pre-broadcast.

    Returns (ireal, gm, gds, swap): ireal is the current flowing from
    the canonical drain node to the canonical source node in the real
    frame; swap marks devices whose d/s roles are exchanged.
    """
    ud = sgn * vd
    ug = sgn * vg
    us = sgn * vs
    swap = ud < us
    u_dd = np.where(swap, us, ud)
    u_ss = np.where(swap, ud, us)
    vgs = ug - u_ss
    vds = u_dd - u_ss
    vov = vgs - vt0
    clm = 1.0 + lam * vds
    on = vov > 0.0
    tri = on & (vds < vov)
    # saturation values everywhere on, then overwrite triode
    half = 0.5 * beta * vov * vov
    ids = np.where(on, half * clm, 0.0)
    gm = np.where(on, beta * vov * clm, 0.0)
    gds = np.where(on, half * lam, 0.0)
    core = vov * vds - 0.5 * vds * vds
    ids = np.where(tri, beta * core * clm, ids)
    gm = np.where(tri, beta * vds * clm, gm)
    gds = np.where(tri, beta * ((vov - vds) * clm + core * lam), gds)
    ireal = sgn * ids
    return ireal, gm, gds, swap


class _Circuit:
    """Netlist compiled to index arrays and cached matrix layers."""

    def __init__(self, netlist: Netlist):
        self.netlist = netlist
        self.node_names = [n for n in netlist.nodes if n != "0"]
        self.idx = {"0": -1}
        for i, name in enumerate(self.node_names):
            self.idx[name] = i
        self.nn = len(self.node_names)

        self.resistors = []   # (i, j, g, name)
        self.caps = []        # (name, i, j, C, ic, owner) owner None = explicit cap
        self.mtjs = []        # (name, i_free, i_pinned, params, initial_state)
        self.vsrc = []        # (name, ip, iq, spec)
        self.isrc = []        # (name, ip, iq, spec)
        mos = []

        for e in netlist.elements:
            if isinstance(e, Resistor):
                self.resistors.append((self.idx[e.n1], self.idx[e.n2], 1.0 / e.ohms, e.name))
            elif isinstance(e, Capacitor):
                self.caps.append((e.name, self.idx[e.n1], self.idx[e.n2], e.farads, e.ic, None))
            elif isinstance(e, Mtj):
                self.mtjs.append((e.name, self.idx[e.n_free], self.idx[e.n_pinned],
                                  e.params, e.initial_state))
            elif isinstance(e, VSource):
                self.vsrc.append((e.name, self.idx[e.np], self.idx[e.nn], e.spec))
            elif isinstance(e, ISource):
                self.isrc.append((e.name, self.idx[e.np], self.idx[e.nn], e.spec))
            elif isinstance(e, Mosfet):
                mos.append(e)
                cg = e.params.gate_cap()
                if cg > 0.0:
                    self.caps.append((e.name, self.idx[e.g], -1, cg, None, e.name))

        self.n_unknowns = self.nn + len(self.vsrc)
        self.unknown_names = list(self.node_names) + [f"i({v[0]})" for v in self.vsrc]

        self.m_names = [e.name for e in mos]
        m = len(mos)
        self.m_d = np.array([self.idx[e.d] for e in mos], dtype=int)
        self.m_g = np.array([self.idx[e.g] for e in mos], dtype=int)
        self.m_s = np.array([self.idx[e.s] for e in mos], dtype=int)
        self.m_sgn = np.array([1.0 if e.kind == "N" else -1.0 for e in mos])
        self.m_beta = np.array([e.params.beta for e in mos])
        self.m_vt = np.array([e.params.vt0 for e in mos])
        self.m_lam = np.array([e.params.lam for e in mos])
        self.n_mos = m

        self.cap_c = np.array([c[3] for c in self.caps]) if self.caps else np.zeros(0)
        self.cap_i1 = np.array([c[1] for c in self.caps], dtype=int) if self.caps else np.zeros(0, int)
        self.cap_i2 = np.array([c[2] for c in self.caps], dtype=int) if self.caps else np.zeros(0, int)

    # -- matrix layers ------------------------------------------------

    def static_matrix(self, mtj_g: np.ndarray) -> np.ndarray:
        """Resistors, MTJs (at given per-device conductance), gmin and
        voltage-source incidence. Everything that survives a whole step."""
        n = self.n_unknowns
        a = np.zeros((n, n))
        diag = np.arange(self.nn)
        a[diag, diag] += GMIN
        for (i, j, g, _name) in self.resistors:
            _stamp_g(a, i, j, g)
        for k, (_n, i, j, _p, _s) in enumerate(self.mtjs):
            _stamp_g(a, i, j, mtj_g[k])
        for k, (_n, ip, iq, _spec) in enumerate(self.vsrc):
            br = self.nn + k
            if ip >= 0:
                a[ip, br] += 1.0
                a[br, ip] += 1.0
            if iq >= 0:
                a[iq, br] -= 1.0
                a[br, iq] -= 1.0
        return a

    def cap_geq(self, dt: float, method: str) -> np.ndarray:
        scale = 2.0 if method == "TRAP" else 1.0
        return scale * self.cap_c / dt

    def add_cap_layer(self, a: np.ndarray, geq: np.ndarray):
        for k in range(len(self.caps)):
            _stamp_g(a, self.cap_i1[k], self.cap_i2[k], geq[k])

    def source_rhs(self, t: float) -> np.ndarray:
        b = np.zeros(self.n_unknowns)
        for k, (_n, _ip, _iq, spec) in enumerate(self.vsrc):
            b[self.nn + k] = source_value(spec, t)
        for (_n, ip, iq, spec) in self.isrc:
            j = source_value(spec, t)
            if ip >= 0:
                b[ip] -= j
            if iq >= 0:
                b[iq] += j
        return b

    def cap_incidence(self) -> np.ndarray:
        """Columns scatter each companion current into its node rows."""
        inj = np.zeros((self.n_unknowns, len(self.caps)))
        for k in range(len(self.caps)):
            if self.cap_i1[k] >= 0:
                inj[self.cap_i1[k], k] -= 1.0
            if self.cap_i2[k] >= 0:
                inj[self.cap_i2[k], k] += 1.0
        return inj

    def rhs(self, t: float, cap_ieq: Optional[np.ndarray]) -> np.ndarray:
        b = self.source_rhs(t)
        if cap_ieq is not None and len(self.caps):
            i1, i2 = self.cap_i1, self.cap_i2
            m = i1 >= 0
            np.subtract.at(b, i1[m], cap_ieq[m])
            m = i2 >= 0
            np.add.at(b, i2[m], cap_ieq[m])
        return b

    # -- nonlinear devices --------------------------------------------

    def _vfull(self, v: np.ndarray) -> np.ndarray:
        buf = np.empty(self.nn + 1)
        buf[: self.nn] = v[: self.nn]
        buf[self.nn] = 0.0  # ground, addressed as index -1
        return buf

    def mosfet_point(self, v: np.ndarray):
        """Evaluate all MOSFETs at an unknown vector; returns canonical
        drain/source node indices plus (ireal, gm, gds)."""
        vfull = self._vfull(v)
        ireal, gm, gds, swap = _mosfet_core(
            vfull[self.m_d], vfull[self.m_g], vfull[self.m_s],
            self.m_sgn, self.m_beta, self.m_vt, self.m_lam)
        dn = np.where(swap, self.m_s, self.m_d)
        sn = np.where(swap, self.m_d, self.m_s)
        return dn, sn, ireal, gm, gds, vfull

    def stamp_mosfets(self, a: np.ndarray, b: np.ndarray, v: np.ndarray):
        if not self.n_mos:
            return
        dn, sn, ireal, gm, gds, vfull = self.mosfet_point(v)
        vgs_r = vfull[self.m_g] - vfull[sn]
        vds_r = vfull[dn] - vfull[sn]
        ieq = ireal - gm * vgs_r - gds * vds_r
        gsum = gm + gds
        rows = np.concatenate([dn, dn, dn, sn, sn, sn])
        cols = np.concatenate([self.m_g, dn, sn, self.m_g, dn, sn])
        vals = np.concatenate([gm, gds, -gsum, -gm, -gds, gsum])
        mask = (rows >= 0) & (cols >= 0)
        np.add.at(a, (rows[mask], cols[mask]), vals[mask])
        m = dn >= 0
        np.subtract.at(b, dn[m], ieq[m])
        m = sn >= 0
        np.add.at(b, sn[m], ieq[m])

    def mtj_conductances(self, states: list) -> np.ndarray:
        return np.array([1.0 / mtj_resistance(st, self.mtjs[k][3])
                         for k, st in enumerate(states)]) if self.mtjs else np.zeros(0)


def _stamp_g(a: np.ndarray, i: int, j: int, g: float):
    if i >= 0:
        a[i, i] += g
        if j >= 0:
            a[i, j] -= g
            a[j, i] -= g
    if j >= 0:
        a[j, j] += g


def assemble(
    netlist: Netlist,
    v_trial: Optional[np.ndarray] = None,
    mtj_states: Optional[list] = None,
    t: float = 0.0,
    dt: Optional[float] = None,
    prev: Optional[dict] = None,
    method: str = "TRAP",
) -> LinearSystem:
    """Build the MNA system for one Newton iteration.

    With dt=None capacitors are left open (DC assembly); otherwise each
    capacitor is replaced by its companion model using `prev`, a mapping
    of element name to (v_prev, i_prev). MOSFETs are linearized around
    v_trial (zeros by default); gmin sits on every node diagonal.
    """
    circ = _Circuit(netlist)
    states = mtj_states if mtj_states is not None else [
        MtjState(config=m[4]) for m in circ.mtjs]
    a = circ.static_matrix(circ.mtj_conductances(states))
    cap_ieq = None
    if dt is not None and len(circ.caps):
        geq = circ.cap_geq(dt, method)
        circ.add_cap_layer(a, geq)
        prev = prev or {}
        cap_ieq = np.zeros(len(circ.caps))
        for k, (name, _i, _j, c, _ic, owner) in enumerate(circ.caps):
            v_p, i_p = prev.get(owner or name, (0.0, 0.0))
            _, cap_ieq[k] = capacitor_companion(c, v_p, i_p, dt, method)
    b = circ.rhs(t, cap_ieq)
    v = v_trial if v_trial is not None else np.zeros(circ.n_unknowns)
    circ.stamp_mosfets(a, b, np.asarray(v, dtype=float))
    return LinearSystem(a, b, list(circ.unknown_names))


# --------------------------------------------------------------------------
# Newton iteration
# --------------------------------------------------------------------------

def _np_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from None


def _newton(circ, a_base, b_base, v0, cfg: TransientConfig):
    """Iterate linearize/solve until max |dv| <= abstol + reltol*|v|.

    Returns (v, iterations). A circuit with no MOSFETs is linear and
    solved in a single iteration.
    """
    solve = _np_solve if cfg.use_lapack else (
        lambda a, b: solve_linear(LinearSystem(a, b, [])))
    if not circ.n_mos:
        v = solve(a_base, b_base)
        if not np.all(np.isfinite(v)):
            raise ConvergenceError("non-finite solution")
        return v, 1
    v = np.asarray(v0, dtype=float)
    for it in range(1, cfg.newton_itmax + 1):
        a = a_base.copy()
        b = b_base.copy()
        circ.stamp_mosfets(a, b, v)
        v_new = solve(a, b)
        if not np.all(np.isfinite(v_new)):
            raise ConvergenceError("non-finite Newton iterate")
        delta = np.abs(v_new - v)
        v = v_new
        if np.all(delta <= cfg.newton_abstol + cfg.newton_reltol * np.abs(v_new)):
            return v, it
    raise ConvergenceError(f"no convergence after {cfg.newton_itmax} iterations")


def newton_solve(
    netlist: Netlist,
    v0: Optional[np.ndarray] = None,
    t: float = 0.0,
    dt: Optional[float] = None,
    prev: Optional[dict] = None,
    method: str = "TRAP",
    config: Optional[TransientConfig] = None,
):
    """One nonlinear solve of the circuit at time t (DC when dt=None).

    Returns (v, iterations) with v over the node-then-branch unknown map.
    """
    cfg = config or TransientConfig(dt=1.0, tstop=2.0)
    circ = _Circuit(netlist)
    states = [MtjState(config=m[4]) for m in circ.mtjs]
    a = circ.static_matrix(circ.mtj_conductances(states))
    cap_ieq = None
    if dt is not None and len(circ.caps):
        geq = circ.cap_geq(dt, method)
        circ.add_cap_layer(a, geq)
        prev = prev or {}
        cap_ieq = np.zeros(len(circ.caps))
        for k, (name, _i, _j, c, _ic, owner) in enumerate(circ.caps):
            v_p, i_p = prev.get(owner or name, (0.0, 0.0))
            _, cap_ieq[k] = capacitor_companion(c, v_p, i_p, dt, method)
    b = circ.rhs(t, cap_ieq)
    guess = v0 if v0 is not None else np.zeros(circ.n_unknowns)
    return _newton(circ, a, b, np.asarray(guess, dtype=float), cfg)


def kcl_residual(circ: _Circuit, a_linear, b_linear, v) -> tuple[float, float]:
    """Nonlinear KCL residual at a solution: linear-layer currents from
    the assembled system plus the true (not linearized) MOSFET currents.

    Returns (max abs node residual, max abs branch current seen).
    """
    r = a_linear[: circ.nn] @ v - b_linear[: circ.nn]
    imax = 0.0
    if circ.n_mos:
        dn, sn, ireal, _gm, _gds, _vf = circ.mosfet_point(v)
        m = dn >= 0
        np.add.at(r, dn[m], ireal[m])
        m = sn >= 0
        np.subtract.at(r, sn[m], ireal[m])
        if len(ireal):
            imax = float(np.max(np.abs(ireal)))
    if len(circ.vsrc):
        imax = max(imax, float(np.max(np.abs(v[circ.nn:]))))
    vfull = circ._vfull(v)
    for (i, j, g, _n) in circ.resistors:
        imax = max(imax, abs((vfull[i] - vfull[j]) * g))
    return float(np.max(np.abs(r))) if circ.nn else 0.0, imax


# --------------------------------------------------------------------------
# DC operating point
# --------------------------------------------------------------------------

def _dc_operating_point(circ: _Circuit, cfg: TransientConfig):
    """DC solve at t=0: capacitors open, except that capacitors carrying
    an explicit IC become voltage constraints (extra branch unknowns), so
    their initial voltage and current are part of the solution.

    Returns (v over the transient unknown map, cap_v0, cap_i0).
    """
    ic_caps = [k for k, c in enumerate(circ.caps) if c[4] is not None and c[5] is None]
    n = circ.n_unknowns
    n_ext = n + len(ic_caps)
    mtj_g = circ.mtj_conductances([MtjState(config=m[4]) for m in circ.mtjs])
    a = np.zeros((n_ext, n_ext))
    a[:n, :n] = circ.static_matrix(mtj_g)
    b = np.zeros(n_ext)
    b[:n] = circ.rhs(0.0, None)
    for row, k in enumerate(ic_caps):
        br = n + row
        i, j = circ.cap_i1[k], circ.cap_i2[k]
        if i >= 0:
            a[i, br] += 1.0
            a[br, i] += 1.0
        if j >= 0:
            a[j, br] -= 1.0
            a[br, j] -= 1.0
        b[br] = circ.caps[k][4]

    # MOSFET stamps only touch node rows/cols, so the wider DC matrix
    # can reuse the compiled circuit's stamping directly.
    v_ext, _its = _newton(circ, a, b, np.zeros(n_ext), cfg)
    v = v_ext[:n]

    vfull = circ._vfull(v)
    cap_v0 = vfull[circ.cap_i1] - vfull[circ.cap_i2] if len(circ.caps) else np.zeros(0)
    cap_i0 = np.zeros(len(circ.caps))
    for row, k in enumerate(ic_caps):
        cap_v0[k] = circ.caps[k][4]
        cap_i0[k] = v_ext[n + row]
    return v, cap_v0, cap_i0


# --------------------------------------------------------------------------
# Transient loop
# --------------------------------------------------------------------------

@dataclass
class TransientResult:
    times: np.ndarray
    node_voltages: dict
    vsource_currents: dict
    mtj_state_trace: dict        # name -> array of "P"/"AP" per time point
    element_power_trace: dict    # name -> watts absorbed (sources signed)
    stats: dict = field(default_factory=dict)

    def voltage(self, node: str) -> np.ndarray:
        return self.node_voltages[node]


def transient_run(netlist: Netlist, cfg: Optional[TransientConfig] = None) -> TransientResult:
    """Fixed-step transient analysis of a validated netlist.

    The base grid is tstop/dt points; a non-convergent step is retried
    at half the local step (backward Euler restart) up to
    max_dt_halvings times before giving up. MTJ states advance after
    each accepted substep from the accepted free->pinned current.
    """
    diags = validate_netlist(netlist)
    if diags:
        raise ValueError("invalid netlist: " + "; ".join(diags))
    if cfg is None:
        d = netlist.directives
        if not d.dt or not d.tstop:
            raise ValueError("netlist has no .tran directive and no config was given")
        cfg = TransientConfig(dt=d.dt, tstop=d.tstop)

    circ = _Circuit(netlist)
    n_steps = int(round(cfg.tstop / cfg.dt))
    if n_steps < 1:
        raise ValueError("tstop shorter than one timestep")

    v, cap_v, cap_i = _dc_operating_point(circ, cfg)
    mtj_states = [MtjState(config=m[4]) for m in circ.mtjs]
    mtj_cfg = np.zeros((len(circ.mtjs), n_steps + 1), dtype=np.int8)
    for k, st in enumerate(mtj_states):
        mtj_cfg[k, 0] = 0 if st.config == "P" else 1

    volt = np.zeros((circ.n_unknowns, n_steps + 1))
    volt[:, 0] = v
    cap_itrace = np.zeros((len(circ.caps), n_steps + 1))
    cap_itrace[:, 0] = cap_i

    mtj_nodes = [(m[1], m[2]) for m in circ.mtjs]
    mtj_params = [m[3] for m in circ.mtjs]

    a_cache = {}

    def base_matrix(dt_local, method):
        key = (dt_local, method, tuple(s.config for s in mtj_states))
        if key not in a_cache:
            a = circ.static_matrix(circ.mtj_conductances(mtj_states))
            if len(circ.caps):
                circ.add_cap_layer(a, circ.cap_geq(dt_local, method))
            a_cache[key] = a
        return a_cache[key]

    # Sources are analytic, so their RHS contribution over the whole base
    # grid is precomputed once; only halved substeps fall back to direct
    # evaluation.
    times = np.arange(n_steps + 1) * cfg.dt
    b_src_grid = np.empty((circ.n_unknowns, n_steps + 1))
    for k in range(n_steps + 1):
        b_src_grid[:, k] = circ.source_rhs(times[k])
    cap_inj = circ.cap_incidence() if len(circ.caps) else None

    total_iters = 0
    total_halvings = 0
    first_step = True
    check_tol_hits = []

    for step in range(1, n_steps + 1):
        t_goal = step * cfg.dt
        t_now = (step - 1) * cfg.dt
        remaining = cfg.dt
        dt_local = cfg.dt
        halvings = 0
        method = "BE" if first_step else "TRAP"

        while remaining > 0.0:
            dt_sub = min(dt_local, remaining)
            geq = circ.cap_geq(dt_sub, method) if len(circ.caps) else None
            if len(circ.caps):
                if method == "TRAP":
                    cap_ieq = -geq * cap_v - cap_i
                else:
                    cap_ieq = -geq * cap_v
            else:
                cap_ieq = None
            on_grid = dt_sub == remaining
            t_sub = t_goal if on_grid else t_now + dt_sub
            a_base = base_matrix(dt_sub, method)
            b_base = b_src_grid[:, step].copy() if on_grid else circ.source_rhs(t_sub)
            if cap_ieq is not None:
                b_base += cap_inj @ cap_ieq
            try:
                v_new, iters = _newton(circ, a_base, b_base, v, cfg)
            except ConvergenceError:
                halvings += 1
                total_halvings += 1
                if halvings > cfg.max_dt_halvings:
                    raise ConvergenceError(
                        f"no convergence at t={t_sub:.6e} after "
                        f"{cfg.max_dt_halvings} timestep halvings", t=t_sub)
                dt_local = dt_sub / 2.0
                method = "BE"
                continue

            total_iters += iters
            if cfg.check_kcl:
                res, imax = kcl_residual(circ, a_base, b_base, v_new)
                check_tol_hits.append((t_sub, res, imax))

            # accept: advance companion + switching state
            if len(circ.caps):
                vfull = circ._vfull(v_new)
                cap_v_new = vfull[circ.cap_i1] - vfull[circ.cap_i2]
                cap_i = geq * cap_v_new + cap_ieq
                cap_v = cap_v_new
            for k, (i_f, i_p) in enumerate(mtj_nodes):
                vfull_f = v_new[i_f] if i_f >= 0 else 0.0
                vfull_p = v_new[i_p] if i_p >= 0 else 0.0
                g = 1.0 / mtj_resistance(mtj_states[k], mtj_params[k])
                mtj_states[k] = mtj_update(
                    mtj_states[k], (vfull_f - vfull_p) * g, dt_sub, mtj_params[k])
            v = v_new
            t_now += dt_sub
            remaining -= dt_sub
            method = "TRAP"
            first_step = False

        volt[:, step] = v
        if len(circ.caps):
            cap_itrace[:, step] = cap_i
        for k, st in enumerate(mtj_states):
            mtj_cfg[k, step] = 0 if st.config == "P" else 1

    result = _package_result(circ, times, volt, cap_itrace, mtj_cfg)
    result.stats = {
        "newton_iterations": total_iters,
        "dt_halvings": total_halvings,
        "kcl_checks": check_tol_hits,
    }
    return result


def _package_result(circ: _Circuit, times, volt, cap_itrace, mtj_cfg) -> TransientResult:
    node_voltages = {name: volt[i] for i, name in enumerate(circ.node_names)}
    vsource_currents = {
        name: volt[circ.nn + k] for k, (name, _i, _q, _s) in enumerate(circ.vsrc)}
    mtj_state_trace = {
        circ.mtjs[k][0]: np.where(mtj_cfg[k] == 0, "P", "AP")
        for k in range(len(circ.mtjs))}
    powers = _element_powers(circ, times, volt, cap_itrace, mtj_cfg)
    return TransientResult(
        times=times,
        node_voltages=node_voltages,
        vsource_currents=vsource_currents,
        mtj_state_trace=mtj_state_trace,
        element_power_trace=powers,
    )


def _element_powers(circ: _Circuit, times, volt, cap_itrace, mtj_cfg) -> dict:
    """Instantaneous power absorbed by each element at the base grid.

    Sources come out signed (negative = delivering into the circuit);
    MOSFET traces are channel dissipation only, with the lumped gate
    capacitor accounted as stored energy by the audit layer.
    """
    n_t = volt.shape[1]
    vfull = np.vstack([volt[: circ.nn], np.zeros((1, n_t))])
    powers = {}
    for (i, j, g, name) in circ.resistors:
        dv = vfull[i] - vfull[j]
        powers[name] = dv * dv * g
    for k, (name, i, j, params, _st) in enumerate(circ.mtjs):
        r = np.where(mtj_cfg[k] == 0, params.rp, params.rap)
        dv = vfull[i] - vfull[j]
        powers[name] = dv * dv / r
    for k, (name, i, j, _c, _ic, owner) in enumerate(circ.caps):
        if owner is not None:
            continue  # gate caps fold into the owning MOSFET's storage
        dv = vfull[i] - vfull[j]
        powers[name] = dv * cap_itrace[k]
    if circ.n_mos:
        chan = np.zeros((circ.n_mos, n_t))
        block = 4096
        for lo in range(0, n_t, block):
            hi = min(lo + block, n_t)
            vd = vfull[circ.m_d, lo:hi]
            vg = vfull[circ.m_g, lo:hi]
            vs = vfull[circ.m_s, lo:hi]
            ireal, _gm, _gds, swap = _mosfet_core(
                vd, vg, vs,
                circ.m_sgn[:, None], circ.m_beta[:, None],
                circ.m_vt[:, None], circ.m_lam[:, None])
            vdn = np.where(swap, vs, vd)
            vsn = np.where(swap, vd, vs)
            chan[:, lo:hi] = ireal * (vdn - vsn)
        for k, name in enumerate(circ.m_names):
            powers[name] = chan[k]
    for k, (name, ip, iq, _spec) in enumerate(circ.vsrc):
        vp = vfull[ip] if ip >= 0 else 0.0
        vq = vfull[iq] if iq >= 0 else 0.0
        powers[name] = (vp - vq) * volt[circ.nn + k]
    for (name, ip, iq, spec) in circ.isrc:
        vp = vfull[ip] if ip >= 0 else np.zeros(n_t)
        vq = vfull[iq] if iq >= 0 else np.zeros(n_t)
        j = np.array([source_value(spec, t) for t in times])
        powers[name] = (vp - vq) * j
    return powers
