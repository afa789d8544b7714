"""Under-approximate program logics over a finite integer universe."""

from .assertions import (
    FALSE, TRUE, describe, equivalent, extension, implies, is_empty, parse_assertion, show,
    show_states, sp_atom, wp_atom,
)
from .axioms import (
    combined_axiom, combined_axiom_custom, verify_schema_completeness, verify_schema_validity,
    xpp_transformers,
)
from .il import Heuristics, check_il_derivation, il_valid, synthesize_forward
from .lang import ParseError, parse_program, parse_source, pretty_print
from .proof import Derivation, DerivationError, Triple
from .semantics import bwsem, fwsem
from .sil import check_sil_derivation, sil_valid, synthesize_backward
from .state import BudgetExceeded, Flag, FlaggedState, StateSet, Universe
from .uturn import (
    AlgorithmPreconditionError, Judgment, ReplayNode, check_judgment_validity,
    check_turnu_derivation, check_turnu_validity, check_uturn_derivation, run_turnu, run_uturn,
)

__all__ = [name for name in dir() if not name.startswith("_")]
