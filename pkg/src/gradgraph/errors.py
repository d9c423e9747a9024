"""Exception types shared across the package."""


class GradGraphError(Exception):
    """Base class for every error this package raises deliberately."""


class DuplicateInputName(GradGraphError):
    """An input with this name already exists in the graph."""


class ForeignNodeId(GradGraphError):
    """A node id was used with a graph that did not create it."""


class LogDomainError(GradGraphError):
    """Logarithm of a non-positive value."""


class ZeroToNegativePower(GradGraphError):
    """Zero raised to a negative exponent."""


class ExactModeUnsupported(GradGraphError):
    """The requested operation has no exact rational result."""


class MissingInput(GradGraphError):
    """Evaluation bindings do not cover a required input."""

    def __init__(self, name: str):
        super().__init__(f"no binding for input {name!r}")
        self.name = name


class ExprSyntaxError(GradGraphError):
    """Malformed expression text."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class NonIntegerExponent(GradGraphError):
    """'^' requires an integer literal exponent."""

    def __init__(self, position: int):
        super().__init__(f"exponent must be an integer literal (at position {position})")
        self.position = position


class GrammarError(GradGraphError):
    """Base class for grammar and corpus errors."""


class GrammarSyntaxError(GrammarError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class NotCNF(GrammarError):
    """A rule is neither binary over nonterminals nor a single terminal."""

    def __init__(self, rule_text: str, line_no: int | None = None):
        where = f"line {line_no}: " if line_no is not None else ""
        super().__init__(f"{where}rule is not in Chomsky normal form: {rule_text}")
        self.rule_text = rule_text


class NotNormalized(GrammarError):
    """Probabilities for one left-hand side do not sum to 1."""

    def __init__(self, lhs: str, total: float):
        super().__init__(f"probabilities for {lhs} sum to {total!r}, expected 1")
        self.lhs = lhs
        self.total = total


class UnknownToken(GrammarError):
    """A sentence token has no terminal rule."""

    def __init__(self, word: str):
        super().__init__(f"no terminal rule produces {word!r}")
        self.word = word


class UnparseableSentence(GrammarError):
    """A corpus sentence has zero probability under the grammar."""

    def __init__(self, index: int):
        super().__init__(f"sentence {index} has no parse under the grammar")
        self.index = index


class ZeroLhsMass(GrammarError):
    """All expected counts for one left-hand side are zero."""

    def __init__(self, lhs: str):
        super().__init__(f"expected counts for {lhs} sum to zero")
        self.lhs = lhs
