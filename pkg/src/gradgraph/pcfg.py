"""Inside-outside training of CNF grammars by differentiation.

The inside (CKY) recurrence is built symbolically: rule probabilities are
graph inputs, chart cells are graph nodes, and the corpus log-likelihood
is a single node. Differentiating that node then does the work the
classical outside pass normally does: the adjoint of a chart cell is its
outside probability, and ``theta * d(loglik)/d(theta)`` is exactly the
expected rule count needed by the EM update.

Training therefore has one expensive setup phase (build the graph,
differentiate, compile one tape) and a cheap iterated phase (re-evaluate
the tape at the current parameters, renormalize). Brute-force numeric
oracles (tree enumeration and the direct outside recursion) are included
for verification.

Grammar files have one rule per line, ``A -> B C : 0.5`` or
``A -> 'word' : 0.5``, with ``#`` comments; the first rule's left-hand
side is the start symbol. Corpus files have one whitespace-tokenized
sentence per line.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from time import perf_counter
from typing import Mapping, Sequence

from .autodiff import backward
from .errors import (
    GrammarSyntaxError,
    NotCNF,
    NotNormalized,
    UnknownToken,
    UnparseableSentence,
    ZeroLhsMass,
)
from .graph import Const, Graph, NodeId
from .tape import compile_tape

NORMALIZATION_TOL = 1e-9

Cell = tuple[int, int, str]


@dataclass(frozen=True)
class Rule:
    """One grammar rule; ``rhs`` is ``(B, C)`` or a single-word tuple."""

    lhs: str
    rhs: tuple[str, ...]
    terminal: bool
    prob: float
    param_id: int

    def label(self) -> str:
        if self.terminal:
            return f"{self.lhs} -> '{self.rhs[0]}'"
        return f"{self.lhs} -> {self.rhs[0]} {self.rhs[1]}"


class Grammar:
    """CNF grammar with one probability parameter per rule.

    Per left-hand side the probabilities must sum to one (within
    ``NORMALIZATION_TOL``). EM updates may drive individual rules to
    exactly zero, so zero is tolerated here; the file parser is stricter
    and requires probabilities in (0, 1].
    """

    def __init__(self, rules: Sequence[Rule], start: str | None = None):
        rules = tuple(rules)
        if not rules:
            raise ValueError("a grammar needs at least one rule")
        for i, rule in enumerate(rules):
            if rule.param_id != i:
                raise ValueError("rule param_id must equal its position")
            if not 0.0 <= rule.prob <= 1.0:
                raise ValueError(f"probability out of range in {rule.label()}")
        self.rules = rules
        self.start = start if start is not None else rules[0].lhs

        nonterminals: list[str] = []
        by_lhs: dict[str, list[Rule]] = {}
        terminal_rules: dict[str, list[Rule]] = {}
        binary_rules: list[Rule] = []
        for rule in rules:
            if rule.lhs not in by_lhs:
                by_lhs[rule.lhs] = []
                nonterminals.append(rule.lhs)
            by_lhs[rule.lhs].append(rule)
            if rule.terminal:
                terminal_rules.setdefault(rule.rhs[0], []).append(rule)
            else:
                binary_rules.append(rule)
        self.nonterminals = tuple(nonterminals)
        self.rules_by_lhs = {lhs: tuple(rs) for lhs, rs in by_lhs.items()}
        self.terminal_rules = {w: tuple(rs) for w, rs in terminal_rules.items()}
        self.binary_rules = tuple(binary_rules)
        if self.start not in self.rules_by_lhs:
            raise ValueError(f"start symbol {self.start!r} has no rules")

        for lhs, lhs_rules in self.rules_by_lhs.items():
            total = sum(r.prob for r in lhs_rules)
            if abs(total - 1.0) > NORMALIZATION_TOL:
                raise NotNormalized(lhs, total)

    @property
    def probs(self) -> tuple[float, ...]:
        return tuple(r.prob for r in self.rules)

    def with_probs(self, probs: Sequence[float]) -> "Grammar":
        if len(probs) != len(self.rules):
            raise ValueError("need one probability per rule")
        return Grammar(
            [
                Rule(r.lhs, r.rhs, r.terminal, float(p), r.param_id)
                for r, p in zip(self.rules, probs)
            ],
            start=self.start,
        )


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")
_QUOTED = re.compile(r"'([^'\s]+)'\Z")


def parse_grammar(text: str) -> Grammar:
    """Parse and validate the grammar file format."""
    rules: list[Rule] = []
    seen: set[tuple] = set()
    start: str | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" not in line:
            raise GrammarSyntaxError(line_no, "expected 'LHS -> RHS : PROB'")
        lhs_text, rest = line.split("->", 1)
        if ":" not in rest:
            raise GrammarSyntaxError(line_no, "missing ': PROB'")
        rhs_text, prob_text = rest.rsplit(":", 1)
        lhs = lhs_text.strip()
        if not _IDENT.match(lhs):
            raise GrammarSyntaxError(line_no, f"bad nonterminal {lhs!r}")
        try:
            prob = float(prob_text.strip())
        except ValueError:
            raise GrammarSyntaxError(
                line_no, f"bad probability {prob_text.strip()!r}"
            ) from None
        if not 0.0 < prob <= 1.0:
            raise GrammarSyntaxError(line_no, f"probability {prob!r} not in (0, 1]")

        tokens = rhs_text.split()
        if len(tokens) == 1 and (m := _QUOTED.match(tokens[0])):
            rhs: tuple[str, ...] = (m.group(1),)
            terminal = True
        elif len(tokens) == 2 and all(_IDENT.match(t) for t in tokens):
            rhs = (tokens[0], tokens[1])
            terminal = False
        else:
            raise NotCNF(line.strip(), line_no)

        key = (lhs, rhs, terminal)
        if key in seen:
            raise GrammarSyntaxError(line_no, f"duplicate rule {line.strip()!r}")
        seen.add(key)
        if start is None:
            start = lhs
        rules.append(Rule(lhs, rhs, terminal, prob, len(rules)))
    if not rules:
        raise GrammarSyntaxError(0, "no rules found")
    return Grammar(rules, start=start)


# -- symbolic inside computation --------------------------------------------


def param_name(param_id: int) -> str:
    """Name of the graph input holding one rule's probability."""
    return f"theta_{param_id}"


def ensure_params(graph: Graph, grammar: Grammar) -> list[NodeId]:
    """Input node per rule, created on first use and shared afterwards."""
    out = []
    for rule in grammar.rules:
        name = param_name(rule.param_id)
        nid = graph.lookup_input(name)
        if nid is None:
            nid = graph.input(name)
        out.append(nid)
    return out


def parameter_bindings(grammar: Grammar) -> dict[str, float]:
    return {param_name(r.param_id): r.prob for r in grammar.rules}


@dataclass
class InsideChart:
    """Symbolic CKY chart. ``cells`` holds only spans with nonzero inside
    probability; the root is the constant zero node when the sentence has
    no parse."""

    sentence: tuple[str, ...]
    cells: dict[Cell, NodeId]
    root: NodeId
    params: list[NodeId]


def build_inside(
    graph: Graph,
    grammar: Grammar,
    sentence: Sequence[str],
    params: list[NodeId] | None = None,
    cell_overrides: Mapping[Cell, NodeId] | None = None,
) -> InsideChart:
    """Build the inside recurrence symbolically over ``sentence``.

    ``cell_overrides`` substitutes a caller-supplied node for selected
    cells (what-if analysis: replacing a cell by a fresh input makes
    d(root)/d(cell) a well-posed single-cell derivative).
    """
    sentence = tuple(sentence)
    if not sentence:
        raise ValueError("sentence must be nonempty")
    if params is None:
        params = ensure_params(graph, grammar)
    for token in sentence:
        if token not in grammar.terminal_rules:
            raise UnknownToken(token)
    overrides = dict(cell_overrides or {})
    n = len(sentence)
    zero = graph.constant(0)
    cells: dict[Cell, NodeId] = {}

    def finish(key: Cell, total: NodeId) -> None:
        if key in overrides:
            cells[key] = overrides[key]
        elif total != zero:
            cells[key] = total

    for i, token in enumerate(sentence):
        for lhs in grammar.nonterminals:
            total = zero
            for rule in grammar.terminal_rules[token]:
                if rule.lhs == lhs:
                    total = graph.add(total, params[rule.param_id])
            finish((i, i + 1, lhs), total)

    for width in range(2, n + 1):
        for i in range(0, n - width + 1):
            j = i + width
            for lhs in grammar.nonterminals:
                total = zero
                for rule in grammar.binary_rules:
                    if rule.lhs != lhs:
                        continue
                    left_sym, right_sym = rule.rhs
                    theta = params[rule.param_id]
                    for k in range(i + 1, j):
                        left = cells.get((i, k, left_sym))
                        right = cells.get((k, j, right_sym))
                        if left is None or right is None:
                            continue
                        total = graph.add(
                            total, graph.mul(theta, graph.mul(left, right))
                        )
                finish((i, j, lhs), total)

    root = cells.get((0, n, grammar.start), zero)
    return InsideChart(sentence, cells, root, params)


def corpus_loglik(
    graph: Graph, grammar: Grammar, corpus: Sequence[Sequence[str]]
) -> NodeId:
    """Node holding the summed log inside probability of every sentence."""
    params = ensure_params(graph, grammar)
    total = graph.constant(0)
    for index, sentence in enumerate(corpus):
        chart = build_inside(graph, grammar, sentence, params=params)
        if isinstance(graph.kind(chart.root), Const):
            raise UnparseableSentence(index)
        total = graph.add(total, graph.log(chart.root))
    return total


def expected_counts(graph: Graph, grammar: Grammar, ll: NodeId) -> list[NodeId]:
    """Per rule, the node for ``theta_r * d(ll)/d(theta_r)``.

    By the chain rule this equals the derivative with respect to
    ``log(theta_r)``, which is the expected usage count of the rule; a rule
    that cannot occur in the corpus folds to the constant zero node.
    """
    params = ensure_params(graph, grammar)
    amap = backward(graph, ll)
    return [graph.mul(t, amap.adjoint(t)) for t in params]


def em_step(grammar: Grammar, counts: Sequence[float]) -> Grammar:
    """Renormalize expected counts per left-hand side into new parameters."""
    if len(counts) != len(grammar.rules):
        raise ValueError("need one count per rule")
    counts = [float(c) for c in counts]
    if any(c < 0.0 for c in counts):
        raise ValueError("expected counts must be non-negative")
    totals: dict[str, float] = {}
    for rule, c in zip(grammar.rules, counts):
        totals[rule.lhs] = totals.get(rule.lhs, 0.0) + c
    for lhs in grammar.rules_by_lhs:
        if totals.get(lhs, 0.0) <= 0.0:
            raise ZeroLhsMass(lhs)
    return grammar.with_probs(
        [c / totals[r.lhs] for r, c in zip(grammar.rules, counts)]
    )


@dataclass
class TrainReport:
    """Outcome of one training run. ``log_likelihood`` starts at the initial
    parameters and gains one entry per iteration."""

    iterations: int
    log_likelihood: list[float]
    rules: list[str]
    theta: list[float]
    setup_seconds: float
    eval_seconds_per_iteration: float
    graph_nodes_after_setup: int
    graph_nodes_final: int
    tape_instructions: int
    compile_count: int
    grammar: Grammar = field(repr=False)

    def to_json(self) -> str:
        payload = {
            "iterations": self.iterations,
            "log_likelihood": self.log_likelihood,
            "rules": self.rules,
            "theta": self.theta,
            "setup_seconds": self.setup_seconds,
            "eval_seconds_per_iteration": self.eval_seconds_per_iteration,
            "graph_nodes_after_setup": self.graph_nodes_after_setup,
            "graph_nodes_final": self.graph_nodes_final,
            "tape_instructions": self.tape_instructions,
            "compile_count": self.compile_count,
        }
        return json.dumps(payload, indent=2)


def train(
    grammar: Grammar,
    corpus: Sequence[Sequence[str]],
    max_iters: int = 50,
    tol: float = 1e-9,
) -> TrainReport:
    """EM fit: one setup phase (graph, derivatives, single tape compile),
    then per iteration one tape evaluation and one renormalization.

    Each iteration updates the parameters and evaluates the likelihood at
    the update; training stops when the likelihood moves by less than
    ``tol``, so an already-converged grammar stops after one iteration.
    """
    corpus = [tuple(s) for s in corpus]
    t0 = perf_counter()
    graph = Graph()
    ll_node = corpus_loglik(graph, grammar, corpus)
    count_nodes = expected_counts(graph, grammar, ll_node)
    outputs = [("log_likelihood", ll_node)]
    outputs += [(f"count_{i}", nid) for i, nid in enumerate(count_nodes)]
    tape = compile_tape(graph, outputs)
    setup_seconds = perf_counter() - t0
    nodes_after_setup = len(graph)

    current = grammar
    eval_seconds = 0.0

    def evaluate_at_current():
        nonlocal eval_seconds
        bindings = parameter_bindings(current)
        t = perf_counter()
        vals = tape.evaluate(bindings)
        eval_seconds += perf_counter() - t
        return vals

    vals = evaluate_at_current()
    trace = [vals["log_likelihood"]]
    iterations = 0
    while iterations < max_iters:
        counts = [vals[f"count_{i}"] for i in range(len(current.rules))]
        current = em_step(current, counts)
        vals = evaluate_at_current()
        iterations += 1
        trace.append(vals["log_likelihood"])
        if abs(trace[-1] - trace[-2]) < tol:
            break

    return TrainReport(
        iterations=iterations,
        log_likelihood=trace,
        rules=[r.label() for r in current.rules],
        theta=list(current.probs),
        setup_seconds=setup_seconds,
        eval_seconds_per_iteration=eval_seconds / (iterations + 1),
        graph_nodes_after_setup=nodes_after_setup,
        graph_nodes_final=len(graph),
        tape_instructions=len(tape.instrs),
        compile_count=1,
        grammar=current,
    )


# -- numeric oracles ---------------------------------------------------------


def oracle_inside(grammar: Grammar, sentence: Sequence[str]) -> dict[Cell, float]:
    """Plain numeric CKY; entries only for cells with nonzero probability."""
    sentence = tuple(sentence)
    n = len(sentence)
    inside: dict[Cell, float] = {}
    for i, token in enumerate(sentence):
        for rule in grammar.terminal_rules.get(token, ()):
            key = (i, i + 1, rule.lhs)
            inside[key] = inside.get(key, 0.0) + rule.prob
    for width in range(2, n + 1):
        for i in range(0, n - width + 1):
            j = i + width
            for rule in grammar.binary_rules:
                left_sym, right_sym = rule.rhs
                for k in range(i + 1, j):
                    left = inside.get((i, k, left_sym), 0.0)
                    right = inside.get((k, j, right_sym), 0.0)
                    if left and right:
                        key = (i, j, rule.lhs)
                        inside[key] = inside.get(key, 0.0) + rule.prob * left * right
    return inside


def oracle_outside(grammar: Grammar, sentence: Sequence[str]) -> dict[Cell, float]:
    """Classical outside recursion on numeric inside values.

    Independent of the derivative machinery; used to verify that chart
    adjoints reproduce outside probabilities.
    """
    sentence = tuple(sentence)
    n = len(sentence)
    inside = oracle_inside(grammar, sentence)
    outside: dict[Cell, float] = {(0, n, grammar.start): 1.0}
    for width in range(n, 1, -1):
        for i in range(0, n - width + 1):
            j = i + width
            for rule in grammar.binary_rules:
                parent = outside.get((i, j, rule.lhs), 0.0)
                if parent == 0.0:
                    continue
                left_sym, right_sym = rule.rhs
                for k in range(i + 1, j):
                    left = inside.get((i, k, left_sym), 0.0)
                    right = inside.get((k, j, right_sym), 0.0)
                    if right:
                        key = (i, k, left_sym)
                        outside[key] = outside.get(key, 0.0) + rule.prob * parent * right
                    if left:
                        key = (k, j, right_sym)
                        outside[key] = outside.get(key, 0.0) + rule.prob * parent * left
    return outside


def oracle_enumerate(
    grammar: Grammar, sentence: Sequence[str]
) -> list[tuple[tuple, float]]:
    """All parse trees with probabilities, by exhaustive recursion.

    Trees are nested tuples: ``(param_id,)`` for a terminal rule use and
    ``(param_id, left, right)`` for a binary one. Exponential; sentences
    are capped at 8 tokens.
    """
    sentence = tuple(sentence)
    if len(sentence) > 8:
        raise ValueError("enumeration is exponential; sentence longer than 8 tokens")
    memo: dict[Cell, list[tuple[tuple, float]]] = {}

    def trees(i: int, j: int, sym: str) -> list[tuple[tuple, float]]:
        key = (i, j, sym)
        if key in memo:
            return memo[key]
        found: list[tuple[tuple, float]] = []
        if j - i == 1:
            for rule in grammar.terminal_rules.get(sentence[i], ()):
                if rule.lhs == sym:
                    found.append(((rule.param_id,), rule.prob))
        else:
            for rule in grammar.binary_rules:
                if rule.lhs != sym:
                    continue
                left_sym, right_sym = rule.rhs
                for k in range(i + 1, j):
                    for lt, lp in trees(i, k, left_sym):
                        for rt, rp in trees(k, j, right_sym):
                            found.append(((rule.param_id, lt, rt), rule.prob * lp * rp))
        memo[key] = found
        return found

    return trees(0, len(sentence), grammar.start)


def oracle_expected_counts(grammar: Grammar, sentence: Sequence[str]) -> list[float]:
    """Expected rule-usage counts from full tree enumeration."""
    parses = oracle_enumerate(grammar, sentence)
    total = sum(p for _, p in parses)
    if total <= 0.0:
        raise ValueError("sentence has no parse")
    counts = [0.0] * len(grammar.rules)

    def walk(tree: tuple, weight: float) -> None:
        counts[tree[0]] += weight
        if len(tree) == 3:
            walk(tree[1], weight)
            walk(tree[2], weight)

    for tree, p in parses:
        walk(tree, p / total)
    return counts


# -- sampling and the bundled demo grammar -----------------------------------


def sample_sentence(
    grammar: Grammar,
    rng: random.Random,
    max_len: int = 10,
    max_expansions: int = 400,
) -> list[str] | None:
    """One sample from the grammar, or None if it exceeds the caps."""
    words: list[str] = []
    stack = [grammar.start]
    expansions = 0
    while stack:
        sym = stack.pop()
        rules = grammar.rules_by_lhs.get(sym)
        if not rules:
            raise ValueError(f"nonterminal {sym!r} has no rules")
        expansions += 1
        if expansions > max_expansions:
            return None
        rule = _pick(rng, rules)
        if rule.terminal:
            words.append(rule.rhs[0])
            if len(words) > max_len:
                return None
        else:
            stack.append(rule.rhs[1])
            stack.append(rule.rhs[0])
    return words


def _pick(rng: random.Random, rules: Sequence[Rule]) -> Rule:
    r = rng.random() * sum(rule.prob for rule in rules)
    acc = 0.0
    for rule in rules:
        acc += rule.prob
        if r <= acc:
            return rule
    return rules[-1]


def sample_corpus(
    grammar: Grammar, n: int, seed: int, max_len: int = 10, min_len: int = 1
) -> list[list[str]]:
    """Deterministic corpus of ``n`` sentences sampled from the grammar."""
    rng = random.Random(seed)
    out: list[list[str]] = []
    attempts = 0
    while len(out) < n:
        attempts += 1
        if attempts > 1000 * max(n, 1):
            raise RuntimeError("sampling keeps exceeding the length caps")
        sentence = sample_sentence(grammar, rng, max_len=max_len)
        if sentence and len(sentence) >= min_len:
            out.append(sentence)
    return out


# Ambiguous English fragment: prepositional attachment, compound nouns, and
# words in several categories keep the charts dense, which is what makes the
# benchmark graph interesting.
DEMO_GRAMMAR = """\
# Small English fragment, Chomsky normal form.
S -> NP VP : 1.0
NP -> Det Nom : 0.34
NP -> NP PP : 0.18
NP -> 'john' : 0.26
NP -> 'mary' : 0.22
Nom -> Adj Nom : 0.14
Nom -> Nom PP : 0.1
Nom -> Nom Nom : 0.12
Nom -> 'dog' : 0.1
Nom -> 'cat' : 0.09
Nom -> 'telescope' : 0.09
Nom -> 'park' : 0.08
Nom -> 'walk' : 0.07
Nom -> 'watch' : 0.07
Nom -> 'man' : 0.07
Nom -> 'bird' : 0.07
VP -> V NP : 0.44
VP -> VP PP : 0.2
VP -> 'sleeps' : 0.08
VP -> 'runs' : 0.08
VP -> 'walk' : 0.07
VP -> 'watch' : 0.07
VP -> 'bird' : 0.06
PP -> P NP : 1.0
Det -> 'the' : 0.6
Det -> 'a' : 0.4
Adj -> 'big' : 0.3
Adj -> 'small' : 0.3
Adj -> 'old' : 0.2
Adj -> 'near' : 0.2
V -> 'sees' : 0.25
V -> 'likes' : 0.2
V -> 'chases' : 0.2
V -> 'walk' : 0.18
V -> 'watch' : 0.17
P -> 'with' : 0.4
P -> 'in' : 0.35
P -> 'near' : 0.25
"""


def demo_grammar() -> Grammar:
    return parse_grammar(DEMO_GRAMMAR)


def demo_corpus(
    n: int = 30, seed: int = 20260810, max_len: int = 13, min_len: int = 6
) -> list[list[str]]:
    return sample_corpus(demo_grammar(), n, seed, max_len=max_len, min_len=min_len)
