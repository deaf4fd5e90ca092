"""Security-analysis toolkit for entanglement-based QKD with threshold detectors.

The protocol modeled here distributes polarization-entangled photons to two
parties who measure in randomly chosen bases with threshold detector pairs
and discard events where both detectors of one party click.  The toolkit
builds the joint measurement operators for arbitrary photon-number pairs,
certifies the double-click/error trade-off region, evaluates the
privacy-amplification fraction and final key rate, constructs the explicit
bit-copying attack that saturates the trade-off, and Monte Carlo-simulates
the sift-and-discard protocol.
"""

from .attack import (
    AttackResult,
    JointState,
    SweepPoint,
    UnitaryMap,
    attack_density,
    attack_state,
    boundary_state,
    boundary_sweep,
    build_v,
    run_attack,
)
from .errors import InfeasibleError, NumericalError
from .fock import (
    MAX_PHOTONS,
    Basis,
    Bit,
    ModePartition,
    PolarizedFockState,
    basis_state,
    inner_product,
    multimode_inner_product,
)
from .povm import (
    DIM_CAP,
    HermitianOperator,
    PhotonPair,
    TradeoffPoint,
    f_cor,
    f_dbl,
    f_err,
    min_double_click,
    outcome_projectors,
    region_membership,
    trace_boundary,
)
from .rates import (
    HiddenParams,
    KeyRateResult,
    ObservedStats,
    binary_entropy,
    conjectured_random_assignment_rate,
    eps1_star,
    feasible_eps_limit,
    g,
    key_rate,
    multiphoton_envelope,
    region_of,
    tau_closed_form,
    tau_low,
    tau_numeric,
)
from .sim import (
    EventRecord,
    EventStream,
    Outcome,
    SiftedTally,
    SimulationReport,
    SourceBranch,
    SourceModel,
    analytic_fractions,
    end_to_end,
    event_uniforms,
    run_protocol,
    sample_event,
)

__version__ = "0.1.0"

__all__ = [
    "AttackResult",
    "Basis",
    "Bit",
    "DIM_CAP",
    "EventRecord",
    "EventStream",
    "HermitianOperator",
    "HiddenParams",
    "InfeasibleError",
    "JointState",
    "KeyRateResult",
    "MAX_PHOTONS",
    "ModePartition",
    "NumericalError",
    "ObservedStats",
    "Outcome",
    "PhotonPair",
    "PolarizedFockState",
    "SiftedTally",
    "SimulationReport",
    "SourceBranch",
    "SourceModel",
    "SweepPoint",
    "TradeoffPoint",
    "UnitaryMap",
    "analytic_fractions",
    "attack_density",
    "attack_state",
    "basis_state",
    "binary_entropy",
    "boundary_state",
    "boundary_sweep",
    "build_v",
    "conjectured_random_assignment_rate",
    "end_to_end",
    "eps1_star",
    "event_uniforms",
    "f_cor",
    "f_dbl",
    "f_err",
    "feasible_eps_limit",
    "g",
    "inner_product",
    "key_rate",
    "min_double_click",
    "multimode_inner_product",
    "multiphoton_envelope",
    "outcome_projectors",
    "region_membership",
    "region_of",
    "run_attack",
    "run_protocol",
    "sample_event",
    "tau_closed_form",
    "tau_low",
    "tau_numeric",
    "trace_boundary",
]
