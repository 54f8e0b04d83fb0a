"""Explicit-state model checking for organization-aware BDI agents."""

from .checker import (
    SATISFIED, VIOLATED, Counterexample, StateSpaceModel, Verdict, check_on_model,
    check_on_the_fly, explore_full, validate_counterexample,
)
from .psl import PslContext, parse_properties, parse_psl
from .runtime import initial_state, load_config, mas_step, run

__all__ = [
    "SATISFIED", "VIOLATED", "Counterexample", "StateSpaceModel", "Verdict",
    "check_on_model", "check_on_the_fly", "explore_full", "validate_counterexample",
    "PslContext", "parse_properties", "parse_psl",
    "initial_state", "load_config", "mas_step", "run",
]
