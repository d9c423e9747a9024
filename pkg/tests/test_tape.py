import math
import pickle
from fractions import Fraction

import pytest

from gradgraph import (
    ExactModeUnsupported,
    Graph,
    LogDomainError,
    MissingInput,
    ZeroToNegativePower,
    deriv,
)
from gradgraph import _pykernel
from gradgraph.graph import Add, Const, Exp, Input, Log, Mul, Pow
from gradgraph.tape import compile_tape
from gradgraph.values import exp_value, log_value, powi

from conftest import random_graph

try:
    from gradgraph import _ckernel
except ImportError:
    _ckernel = None


def _transcript_graph():
    g = Graph()
    x = g.input("x")
    top = g.add(g.mul(g.constant(2.0), x), g.log(x))
    dx = deriv(g, top, x)
    return g, top, dx


def test_constant_tape():
    g = Graph()
    tape = compile_tape(g, [("c", g.constant(5.0))])
    assert len(tape.instrs) == 1
    assert tape.input_names == ()
    assert tape.evaluate({}) == {"c": 5.0}


def test_transcript_tape_shape_and_values():
    g, top, dx = _transcript_graph()
    tape = compile_tape(g, [("L", top), ("DX", dx)])
    assert tape.required_inputs == {"x"}
    assert len(tape.instrs) <= 7
    vals = tape.evaluate({"x": 2.0})
    assert vals["L"] == 4.693147180559945
    assert vals["DX"] == 2.5
    sweep = [tape.evaluate({"x": float(v)})["DX"] for v in range(1, 7)]
    assert sweep == [3.0, 2.5, 2.3333333333333335, 2.25, 2.2, 2.1666666666666665]


def test_compile_is_deterministic():
    g, top, dx = _transcript_graph()
    a = compile_tape(g, [("L", top), ("DX", dx)])
    b = compile_tape(g, [("L", top), ("DX", dx)])
    assert a == b


def test_missing_input():
    g, top, dx = _transcript_graph()
    tape = compile_tape(g, [("L", top)])
    with pytest.raises(MissingInput):
        tape.evaluate({})


def test_duplicate_labels_rejected():
    g = Graph()
    c = g.constant(1.0)
    with pytest.raises(ValueError):
        compile_tape(g, [("a", c), ("a", c)])


def test_purity_and_reuse():
    g, top, dx = _transcript_graph()
    tape = compile_tape(g, [("L", top), ("DX", dx)])
    before = pickle.dumps(tape)
    results = [tape.evaluate({"x": 0.5 + i}) for i in range(5)]
    assert pickle.dumps(tape) == before
    fresh = [
        compile_tape(g, [("L", top), ("DX", dx)]).evaluate({"x": 0.5 + i})
        for i in range(5)
    ]
    assert results == fresh


def test_tape_matches_recursive_interpretation():
    def interpret(g, nid, bindings, memo):
        if nid in memo:
            return memo[nid]
        kind = g.kind(nid)
        if isinstance(kind, Input):
            v = bindings[kind.name]
        elif isinstance(kind, Const):
            v = kind.value
        elif isinstance(kind, Add):
            v = interpret(g, kind.lhs, bindings, memo) + interpret(
                g, kind.rhs, bindings, memo
            )
        elif isinstance(kind, Mul):
            v = interpret(g, kind.lhs, bindings, memo) * interpret(
                g, kind.rhs, bindings, memo
            )
        elif isinstance(kind, Pow):
            v = powi(interpret(g, kind.base, bindings, memo), kind.k)
        elif isinstance(kind, Exp):
            v = exp_value(interpret(g, kind.arg, bindings, memo))
        else:
            v = log_value(interpret(g, kind.arg, bindings, memo))
        memo[nid] = v
        return v

    for seed in range(25):
        g, root, bindings, _ = random_graph(seed + 900)
        tape = compile_tape(g, [("f", root)])
        got = tape.evaluate(bindings)["f"]
        want = interpret(g, root, bindings, {})
        assert got == want or math.isclose(got, want, rel_tol=1e-15)


def test_domain_errors():
    g = Graph()
    x = g.input("x")
    tape = compile_tape(g, [("l", g.log(x))])
    with pytest.raises(LogDomainError):
        tape.evaluate({"x": -1.0})
    with pytest.raises(LogDomainError):
        tape.evaluate({"x": 0.0})

    g2 = Graph()
    y = g2.input("y")
    tape2 = compile_tape(g2, [("p", g2.pow(-2, y))])
    with pytest.raises(ZeroToNegativePower):
        tape2.evaluate({"y": 0.0})


def test_nonfinite_propagates():
    g = Graph()
    x = g.input("x")
    tape = compile_tape(g, [("e", g.exp(x)), ("le", g.log(g.exp(x)))])
    vals = tape.evaluate({"x": 1e4})
    assert vals["e"] == math.inf
    assert vals["le"] == math.inf


def test_finite_difference():
    g, top, dx = _transcript_graph()
    tape = compile_tape(g, [("L", top)])
    fd = tape.finite_difference({"x": 2.0}, "L", "x", h=1e-5)
    assert abs(fd - 2.5) < 1e-6

    gc = Graph()
    const_tape = compile_tape(gc, [("c", gc.constant(7.0))])
    # finite_difference needs the input bound even for a constant output
    gx = Graph()
    x = gx.input("x")
    tape_id = compile_tape(gx, [("x", x), ("c", gx.constant(7.0))])
    assert tape_id.finite_difference({"x": 1.0}, "c", "x") == 0.0
    assert abs(tape_id.finite_difference({"x": 1.0}, "x", "x") - 1.0) < 1e-10


def test_rational_tape_exactness():
    g = Graph("rational")
    x = g.input("x")
    expr = g.pow(-1, g.add(g.constant(1), x))
    tape = compile_tape(g, [("f", expr)])
    assert tape.evaluate({"x": Fraction(1, 2)})["f"] == Fraction(2, 3)
    assert tape.evaluate({"x": 3})["f"] == Fraction(1, 4)


def test_rational_log_exp_evaluation_rules():
    g = Graph("rational")
    x = g.input("x")
    tape = compile_tape(g, [("l", g.log(x)), ("e", g.exp(g.add(x, g.constant(-1))))])
    vals = tape.evaluate({"x": Fraction(1)})
    assert vals == {"l": Fraction(0), "e": Fraction(1)}
    with pytest.raises(ExactModeUnsupported):
        tape.evaluate({"x": Fraction(2)})


def test_rational_tape_rejects_float_bindings():
    g = Graph("rational")
    x = g.input("x")
    tape = compile_tape(g, [("f", x)])
    with pytest.raises(TypeError):
        tape.evaluate({"x": 0.5})


@pytest.mark.skipif(_ckernel is None, reason="compiled kernel not built")
def test_kernels_agree_bit_for_bit():
    for seed in range(25):
        g, root, bindings, _ = random_graph(seed + 1500)
        tape = compile_tape(g, [("f", root)])
        a = tape._evaluate_float(bindings, _ckernel)
        b = tape._evaluate_float(bindings, _pykernel)
        assert a == b


@pytest.mark.skipif(_ckernel is None, reason="compiled kernel not built")
def test_kernels_agree_on_errors():
    g = Graph()
    x = g.input("x")
    tape = compile_tape(g, [("l", g.log(x))])
    for impl in (_ckernel, _pykernel):
        with pytest.raises(LogDomainError):
            tape._evaluate_float({"x": -2.0}, impl)
