"""Timing harness: setup versus repeated-evaluation phases, and a
compiled-versus-Python comparison of the float tape kernel."""

from __future__ import annotations

from time import perf_counter

from . import _pykernel
from .graph import Add, Graph, Mul
from .pcfg import (
    corpus_loglik,
    demo_corpus,
    demo_grammar,
    expected_counts,
    parameter_bindings,
)
from .tape import compile_tape, kernel_name
from .taylor import derivative_tower

try:
    from . import _ckernel
except ImportError:
    _ckernel = None


def _time_best(fn, repeats: int):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = perf_counter()
        result = fn()
        best = min(best, perf_counter() - t0)
    return best, result


def _time_per_call(fn, calls: int) -> float:
    t0 = perf_counter()
    for _ in range(calls):
        fn()
    return (perf_counter() - t0) / calls


def bench_taylor(quick: bool = False) -> str:
    """Series-coefficient build (setup) versus tape re-evaluation (eval)."""
    sizes = (10, 20) if quick else (20, 40, 80)
    lines = [
        "suite: taylor   f(x) = 1/(1+x) around 0",
        f"{'terms':>6}  {'setup_s':>12}  {'eval_s/call':>12}",
    ]
    for terms in sizes:

        def setup(terms=terms):
            g = Graph()
            x = g.input("x")
            f = g.pow(-1, g.add(g.constant(1), x))
            tower = derivative_tower(g, f, x, terms - 1)
            return compile_tape(g, [(f"d{k}", nid) for k, nid in enumerate(tower)])

        setup_s, tape = _time_best(setup, 3)
        eval_s = _time_per_call(lambda: tape.evaluate({"x": 0.0}), 50)
        lines.append(f"{terms:>6}  {setup_s:>12.6f}  {eval_s:>12.9f}")
    lines.append(f"kernel: {kernel_name()}")
    return "\n".join(lines)


def _pcfg_problem(quick: bool):
    grammar = demo_grammar()
    corpus = demo_corpus(8 if quick else 30)
    return grammar, corpus


def _pcfg_setup(grammar, corpus):
    graph = Graph()
    ll = corpus_loglik(graph, grammar, corpus)
    inside_muls = sum(1 for _, kind in graph.nodes() if isinstance(kind, Mul))
    inside_adds = sum(1 for _, kind in graph.nodes() if isinstance(kind, Add))
    counts = expected_counts(graph, grammar, ll)
    tape = compile_tape(
        graph,
        [("ll", ll)] + [(f"c{i}", nid) for i, nid in enumerate(counts)],
    )
    return graph, tape, inside_muls, inside_adds


def bench_pcfg(quick: bool = False) -> str:
    """One-time graph+derivative+compile setup versus per-iteration tape
    evaluation, and the cost of rebuilding from scratch every iteration."""
    grammar, corpus = _pcfg_problem(quick)
    setup_s, built = _time_best(lambda: _pcfg_setup(grammar, corpus), 3)
    graph, tape, inside_muls, inside_adds = built
    bindings = parameter_bindings(grammar)
    eval_s = _time_per_call(lambda: tape.evaluate(bindings), 20 if quick else 50)
    rebuild_s, _ = _time_best(
        lambda: _pcfg_setup(grammar, corpus)[1].evaluate(bindings), 3
    )
    lines = [
        f"suite: pcfg   {len(corpus)} sentences, {len(grammar.rules)} parameters",
        f"{'setup_s':>24}  {setup_s:.6f}",
        f"{'eval_s/iteration':>24}  {eval_s:.6f}",
        f"{'rebuild+eval_s/iter':>24}  {rebuild_s:.6f}",
        f"{'cached/rebuild speedup':>24}  {rebuild_s / eval_s:.1f}x",
        f"inside graph: {inside_muls} mul, {inside_adds} add; "
        f"{len(graph)} nodes total after derivatives; "
        f"{len(tape.instrs)} tape instructions",
        f"kernel: {kernel_name()}",
    ]
    return "\n".join(lines)


def bench_kernel(quick: bool = False) -> str:
    """Compiled extension versus pure-Python fallback on one float tape."""
    grammar, corpus = _pcfg_problem(quick)
    _, tape, _, _ = _pcfg_setup(grammar, corpus)
    bindings = parameter_bindings(grammar)
    calls = 50 if quick else 200
    py_s = _time_per_call(lambda: tape._evaluate_float(bindings, _pykernel), calls)
    lines = [
        f"suite: kernel   {len(tape.instrs)} tape instructions",
        f"{'python_s/eval':>24}  {py_s:.6f}",
    ]
    if _ckernel is not None:
        c_s = _time_per_call(lambda: tape._evaluate_float(bindings, _ckernel), calls)
        same = tape._evaluate_float(bindings, _ckernel) == tape._evaluate_float(
            bindings, _pykernel
        )
        lines.append(f"{'compiled_s/eval':>24}  {c_s:.6f}")
        lines.append(f"{'compiled speedup':>24}  {py_s / c_s:.1f}x")
        lines.append(f"identical outputs: {same}")
    else:
        lines.append("compiled kernel not built; python fallback only")
    lines.append(f"active kernel: {kernel_name()}")
    return "\n".join(lines)
