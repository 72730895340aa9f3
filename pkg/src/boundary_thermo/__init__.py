"""Thermodynamics of boundary-driven spin chains.

Dense-matrix Lindblad dynamics with local boundary dissipators, the
repeated-interaction model that underlies them, and consistent heat, work and
entropy-production bookkeeping.
"""

from .collision import RIConfig, ri_lindblad_convergence, ri_step, ri_trajectory
from .exceptions import ContractError, PositivityError, StructureError
from .lindblad import (
    LindbladModel,
    evolve,
    liouvillian_matrix,
    lindblad_rhs,
    ness,
    spin_chain_model,
)
from .spin import BathSpec, ChainSpec, product_thermal_state, thermal_spin
from .thermo import (
    ThermoRecord,
    boundary_rates,
    classify_regime,
    entropy_production_rate,
    spin_current,
    thermo_record,
)
from .twosite import TwoSiteParams, ness_closed_form, oracle_vs_engine

__version__ = "0.1.0"

__all__ = [
    "BathSpec",
    "ChainSpec",
    "ContractError",
    "LindbladModel",
    "PositivityError",
    "RIConfig",
    "StructureError",
    "ThermoRecord",
    "TwoSiteParams",
    "boundary_rates",
    "classify_regime",
    "entropy_production_rate",
    "evolve",
    "lindblad_rhs",
    "liouvillian_matrix",
    "ness",
    "ness_closed_form",
    "oracle_vs_engine",
    "product_thermal_state",
    "ri_lindblad_convergence",
    "ri_step",
    "ri_trajectory",
    "spin_chain_model",
    "spin_current",
    "thermal_spin",
    "thermo_record",
]
