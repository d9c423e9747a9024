"""Shared test generators: random well-conditioned expression graphs and
random CNF grammars with sampled (hence parseable) sentences."""

import math
import random

from gradgraph import Graph
from gradgraph.graph import Const, Input, Pow, operands
from gradgraph.pcfg import Grammar, Rule, sample_sentence
from gradgraph.values import powi

OPS = ("add", "mul", "pow", "exp", "log")


def random_graph(seed, max_ops=14, n_inputs=2, prefer_neg_pow=False):
    """Random DAG over all five operations.

    Inputs are bound in [0.5, 2] and every intermediate value is kept in a
    well-conditioned range so finite differences behave. Returns
    ``(graph, root, bindings, values)`` where ``values`` records each
    node's value computed with plain arithmetic while generating (an
    independent record of the unsimplified computation).
    """
    rng = random.Random(seed)
    g = Graph()
    bindings = {}
    vals = {}
    pool = []
    for i in range(n_inputs):
        name = f"x{i}"
        value = rng.uniform(0.5, 2.0)
        nid = g.input(name)
        bindings[name] = value
        vals[nid] = value
        pool.append(nid)
    for _ in range(2):
        c = round(rng.uniform(0.5, 2.0), 3)
        nid = g.constant(c)
        vals[nid] = float(c)
        pool.append(nid)

    def pick():
        # bias toward recent nodes so graphs get deep rather than bushy
        i = max(rng.randrange(len(pool)), rng.randrange(len(pool)))
        return pool[i]

    def chain():
        # usually continue from the newest non-constant node, so the final
        # root's cone covers most of what was built (a chain anchored on a
        # constant would just keep folding)
        if rng.random() < 0.7:
            for nid in reversed(pool):
                if not isinstance(g.kind(nid), Const):
                    return nid
        return pick()

    def push(nid, value):
        vals[nid] = value
        pool.append(nid)

    def in_range(v):
        return 1e-6 < abs(v) < 1e4

    budget = rng.randint(max(3, max_ops // 2), max_ops)
    made = attempts = 0
    made_neg_pow = False
    while made < budget and attempts < 60 * max_ops:
        attempts += 1
        op = rng.choice(OPS)
        if prefer_neg_pow and not made_neg_pow and attempts % 3 == 0:
            op = "pow"
        if op == "add":
            a, b = chain(), pick()
            v = vals[a] + vals[b]
            if not in_range(v):
                continue
            push(g.add(a, b), v)
        elif op == "mul":
            a, b = chain(), pick()
            v = vals[a] * vals[b]
            if not in_range(v):
                continue
            push(g.mul(a, b), v)
        elif op == "pow":
            a = chain()
            choices = (-3, -2, -1, 2, 3)
            if prefer_neg_pow and not made_neg_pow:
                choices = (-3, -2, -1)
            k = rng.choice(choices)
            if k < 0 and abs(vals[a]) < 5e-2:
                continue
            v = powi(vals[a], k)
            if not in_range(v):
                continue
            push(g.pow(k, a), v)
            made_neg_pow = made_neg_pow or k < 0
        elif op == "exp":
            a = chain()
            if not -8.0 < vals[a] < 8.0:
                continue
            push(g.exp(a), math.exp(vals[a]))
        else:
            a = chain()
            if vals[a] < 1e-2:
                continue
            push(g.log(a), math.log(vals[a]))
        made += 1

    root = _choose_root(g, pool)
    if root is None:
        return random_graph(seed + 1_000_003, max_ops, n_inputs, prefer_neg_pow)
    return g, root, bindings, vals


def _choose_root(g, pool):
    """Latest pool node that is not a constant and depends on an input."""
    for nid in reversed(pool):
        if isinstance(g.kind(nid), Const):
            continue
        if any(isinstance(g.kind(n), Input) for n in g.topo_order([nid])):
            return nid
    return None


def cone_has_negative_pow(g, root):
    return any(
        isinstance(kind, Pow) and kind.k < 0
        for kind in (g.kind(n) for n in g.topo_order([root]))
    )


def graph_with_negative_pow(seed):
    """Random graph whose root cone contains a negative integer power."""
    while True:
        g, root, bindings, vals = random_graph(seed, prefer_neg_pow=True)
        if cone_has_negative_pow(g, root):
            return g, root, bindings, vals
        seed += 2_000_003


def relative_close(a, b, tol, floor=1e-3):
    return abs(a - b) <= tol * max(abs(a), abs(b), floor)


# -- random CNF grammars ------------------------------------------------------


def random_grammar(seed, max_nonterminals=4, max_binary=6):
    """Random CNF grammar; every nonterminal has at least one terminal rule
    and binary rules carry modest mass, so sampling terminates."""
    rng = random.Random(seed)
    n = rng.randint(1, max_nonterminals)
    nts = [f"N{i}" for i in range(n)]
    words = ["a", "b", "c", "d"][: rng.randint(1, 4)]
    specs = []
    for nt in nts:
        for w in rng.sample(words, rng.randint(1, len(words))):
            specs.append((nt, (w,), True))
    for _ in range(rng.randint(1, max_binary)):
        spec = (rng.choice(nts), (rng.choice(nts), rng.choice(nts)), False)
        if spec not in specs:
            specs.append(spec)
    specs.sort(key=lambda s: (s[0] != "N0", s[0], not s[2]))

    weights = []
    for lhs, rhs, terminal in specs:
        weights.append(rng.uniform(0.5, 1.5) if terminal else rng.uniform(0.1, 0.5))
    totals = {}
    for (lhs, _, _), w in zip(specs, weights):
        totals[lhs] = totals.get(lhs, 0.0) + w
    rules = [
        Rule(lhs, rhs, terminal, w / totals[lhs], i)
        for i, ((lhs, rhs, terminal), w) in enumerate(zip(specs, weights))
    ]
    return Grammar(rules, start="N0")


def random_pcfg_instance(seed, n_sentences=2, max_len=6, min_len=2):
    """Random grammar plus sentences sampled from it (hence parseable).

    Grammars without binary rules cannot produce ``min_len >= 2``
    sentences, so drawing keeps bumping the grammar seed until sampling
    succeeds; single-token sentences would make the chart tests trivial.
    """
    for bump in range(200):
        grammar = random_grammar(seed * 977 + bump)
        rng = random.Random(seed * 313 + bump)
        sentences = []
        for _ in range(400):
            s = sample_sentence(grammar, rng, max_len=max_len)
            if s and len(s) >= min_len:
                sentences.append(s)
                if len(sentences) == n_sentences:
                    return grammar, sentences
    raise RuntimeError("could not draw a usable grammar/corpus pair")
