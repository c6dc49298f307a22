"""mtjsim: transient simulation and energy benchmarking of hybrid
MTJ/CMOS logic, with builders for adiabatic (power-clocked) gates and a
non-adiabatic precharge-sense baseline."""

from .devices import (
    Dc,
    MosfetParams,
    MtjParams,
    MtjState,
    PowerClock,
    Pulse,
    Pwl,
    capacitor_companion,
    discharge_signal,
    mosfet_ids,
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
    NetlistBuilder,
    NetlistError,
    Resistor,
    SimDirectives,
    VSource,
    parse_netlist,
    parse_value,
    serialize_netlist,
    validate_netlist,
)
from .engine import (
    ConvergenceError,
    GMIN,
    LinearSystem,
    SingularMatrixError,
    TransientConfig,
    TransientResult,
    assemble,
    newton_solve,
    solve_linear,
    transient_run,
)

__version__ = "0.1.0"
