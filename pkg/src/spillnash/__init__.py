"""Exact Nash flows over time with spillback, quickest flows, and their price of anarchy."""
from .analysis import (LemmaReport, PoAReport, PoASweep, PreconditionError, braess_ratio, compare_models,
                       poa_sweep, price_of_anarchy, spillback_factor_bound, verify_lemma)
from .engine import (KOCH_SKUTELLA, SPILLBACK, EquilibriumTrace, PhaseBudgetExceeded, PhaseRecord,
                     compute_equilibrium)
from .instances import builtin_instance, fig1, fig2, saturate, unit_family
from .network import (UNBOUNDED, Edge, GameInstance, InstanceError, Network, emit_network, load_instance,
                      parse_instance, validate)
from .oracle import simulate_oracle
from .quickest import QuickestFlowResult, opt_completion, temporally_repeated
from .thinflow import ThinFlow, solve_thin_flow
from .verifier import FlowOverTime, Violation, verify_feasible, verify_nash

__all__ = [
    "UNBOUNDED", "Edge", "Network", "GameInstance", "InstanceError", "parse_instance", "emit_network",
    "load_instance", "validate", "ThinFlow", "solve_thin_flow", "SPILLBACK", "KOCH_SKUTELLA",
    "EquilibriumTrace", "PhaseRecord", "PhaseBudgetExceeded", "compute_equilibrium", "QuickestFlowResult",
    "opt_completion", "temporally_repeated", "simulate_oracle", "FlowOverTime", "Violation",
    "verify_feasible", "verify_nash", "PoAReport", "PoASweep", "LemmaReport", "PreconditionError",
    "price_of_anarchy", "braess_ratio", "compare_models", "spillback_factor_bound", "verify_lemma",
    "poa_sweep", "builtin_instance", "fig1", "fig2", "unit_family", "saturate",
]
