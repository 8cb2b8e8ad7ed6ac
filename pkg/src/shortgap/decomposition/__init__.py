"""Buchstab identity, exponent conditions, regions A-F and the decomposition ledger."""

from .buchstab import (
    buchstab_identity_check, buchstab_omega, buchstab_rhs, identity_failures, omega_table, psi_closed,
)
from .exponents import ExponentPoint, check_conditions, conditions_hold, exponent_formulas, nu_cap
from .ledger import DecompositionLedger, LedgerReport, build_ledger, ledger_build_and_check
from .regions import region_loss, region_membership, region_specs, regions_table, symmetry_map

__all__ = [
    "DecompositionLedger", "ExponentPoint", "LedgerReport", "buchstab_identity_check", "buchstab_omega",
    "buchstab_rhs", "build_ledger", "check_conditions", "conditions_hold", "exponent_formulas",
    "identity_failures", "ledger_build_and_check", "nu_cap", "omega_table", "psi_closed", "region_loss",
    "region_membership", "region_specs", "regions_table", "symmetry_map",
]
