"""Monogamy of squared entanglement of formation for multiqubit and qudit states."""

__version__ = "0.1.0"

from .errors import ArgumentError, CapacityError, ContractError, MonoqtError, NotPSDError, UnsupportedError
from .states import (
    CavityParams,
    DensityMatrix,
    PartitionSpec,
    PureState,
    cavity_state,
    cluster4,
    ghz_state,
    group_parties,
    named_state,
    ou333,
    partial_trace,
    s224,
    s422,
    w_state,
)
from .measures import (
    binary_entropy,
    concurrence_two_qubit,
    eof_curve,
    eof_curve_inverse,
    eof_derivatives,
    eof_pure,
    eof_two_qubit,
    von_neumann_entropy,
)
from .roof import roof_minimize
from .discord import cavity_closed_forms, discord, koashi_winter, koashi_winter_eof
from .monogamy import (
    analysis_422,
    cavity_indicator_decomposition,
    counterexample_report,
    hierarchy_chain,
    sc_score,
    sef_score_from_c_sq,
    tau_sef_k_mixed,
    tau_sef_k_pure,
    tau_w_state_closed_form,
    theorem4_ledger,
)
from .fuzz import CampaignConfig, run_campaign
from .statefile import load_state, save_state
