"""Scalar reverse-mode automatic differentiation on a self-simplifying
expression hypergraph.

Derivatives are emitted as ordinary graph nodes, so they can be
differentiated again; graphs compile to immutable tapes for repeated
evaluation (compiled kernel with a pure-Python fallback); on top sit a
Taylor-coefficient generator (float or exact rational) and a PCFG
inside-outside/EM trainer whose outside quantities and sufficient
statistics come purely from differentiation.
"""

from .autodiff import AdjointMap, backward, deriv, forward_first_order
from .errors import (
    DuplicateInputName,
    ExactModeUnsupported,
    ExprSyntaxError,
    ForeignNodeId,
    GradGraphError,
    GrammarError,
    GrammarSyntaxError,
    LogDomainError,
    MissingInput,
    NonIntegerExponent,
    NotCNF,
    NotNormalized,
    UnknownToken,
    UnparseableSentence,
    ZeroLhsMass,
    ZeroToNegativePower,
)
from .expr import eval_ast, lower, parse_expr
from .graph import (
    Add,
    Const,
    Exp,
    Graph,
    Input,
    Log,
    Mul,
    NodeId,
    Pow,
    operands,
)
from .pcfg import (
    Grammar,
    InsideChart,
    Rule,
    TrainReport,
    build_inside,
    corpus_loglik,
    em_step,
    expected_counts,
    oracle_enumerate,
    oracle_expected_counts,
    oracle_inside,
    oracle_outside,
    parse_grammar,
    train,
)
from .tape import Tape, compile_tape, kernel_name
from .taylor import TaylorResult, derivative_tower, taylor
from .values import FLOAT, RATIONAL, Value

__version__ = "0.1.0"

__all__ = [
    "AdjointMap",
    "Add",
    "Const",
    "DuplicateInputName",
    "ExactModeUnsupported",
    "Exp",
    "ExprSyntaxError",
    "FLOAT",
    "ForeignNodeId",
    "GradGraphError",
    "Grammar",
    "GrammarError",
    "GrammarSyntaxError",
    "Graph",
    "Input",
    "InsideChart",
    "Log",
    "LogDomainError",
    "MissingInput",
    "Mul",
    "NodeId",
    "NonIntegerExponent",
    "NotCNF",
    "NotNormalized",
    "Pow",
    "RATIONAL",
    "Rule",
    "Tape",
    "TaylorResult",
    "TrainReport",
    "UnknownToken",
    "UnparseableSentence",
    "Value",
    "ZeroLhsMass",
    "ZeroToNegativePower",
    "backward",
    "build_inside",
    "compile_tape",
    "corpus_loglik",
    "deriv",
    "derivative_tower",
    "em_step",
    "eval_ast",
    "expected_counts",
    "forward_first_order",
    "kernel_name",
    "lower",
    "operands",
    "oracle_enumerate",
    "oracle_expected_counts",
    "oracle_inside",
    "oracle_outside",
    "parse_expr",
    "parse_grammar",
    "taylor",
    "train",
]
