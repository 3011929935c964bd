"""Disjunctive Datalog engine with dynamic magic-set query rewriting."""

__version__ = "0.1.0"

from .errors import (
    AnswersDisagree,
    ArityMismatch,
    CapacityExceeded,
    Interrupted,
    MagistralError,
    MixedClassification,
    ParseError,
    PreconditionFailed,
    SourceSpan,
    UnsafeRule,
    UnstratifiedProgram,
    ValidationError,
)
from .syntax import (
    Atom,
    Constant,
    Literal,
    PredicateKind,
    Program,
    Query,
    Rule,
    Substitution,
    Variable,
    classify_predicates,
    check_safety,
    check_stratification,
)
from .parser import format_interpretation, format_program, parse_program, parse_query
from .oracle import (
    AnswerSet,
    GroundProgram,
    Interpretation,
    PartialInterpretation,
    answer_query,
    enumerate_stable_models,
    full_ground,
    is_model,
    is_unfounded_set,
    reduct,
)
from .sips import Sips, compute_adornment, default_sips
from .rewriter import (
    AdornedPredicate,
    RewriteOutput,
    build_query_seed,
    dms,
    killed_set,
    magic_variant,
)
from .optimizer import prune_redundant, subsumes_exact, subsumes_greedy
from .solver import (
    AnswerOutcome,
    GroundRuleDB,
    SearchStats,
    answer,
    enumerate_models,
    intelligent_ground,
    solve,
)
from .integration import build_repair_program, parse_mapping, parse_schema
from .bench import BenchCase, BenchRow, run_suite
