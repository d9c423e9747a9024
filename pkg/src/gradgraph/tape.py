"""Compilation of graphs to immutable instruction tapes.

A tape covers exactly the nodes feeding its outputs, in dependency order,
as single-assignment instructions (slot ``i`` is written by instruction
``i``). Compiling never mutates the graph, so a graph stays
differentiable after any number of compiles. Tapes are pure: evaluation
allocates its own slot storage, so one tape may be evaluated repeatedly,
concurrently, and at different bindings, always with identical results
for identical bindings.

Float tapes run on a packed kernel. The compiled extension is preferred
and the pure Python twin is the fallback, chosen once at import; exact
(rational) tapes always use the generic interpreter below.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import _pykernel
from .errors import LogDomainError, MissingInput, ZeroToNegativePower
from .graph import Add, Const, Exp, Graph, Input, Log, Mul, NodeId, Pow
from .values import FLOAT, Value, coerce, exp_value, log_value, powi

try:
    from . import _ckernel as _kernel

    KERNEL = "compiled"
except ImportError:  # extension not built; fall back to the Python twin
    _kernel = _pykernel
    KERNEL = "python"


def kernel_name() -> str:
    """Which float kernel evaluation uses: ``"compiled"`` or ``"python"``."""
    return KERNEL


@dataclass(frozen=True)
class Instr:
    """One tape instruction; the destination slot is its position."""

    op: int
    a: int
    b: int = 0


@dataclass(frozen=True)
class Tape:
    domain: str
    instrs: tuple[Instr, ...]
    consts: tuple[Value, ...]
    input_names: tuple[str, ...]
    outputs: tuple[tuple[str, int], ...]
    _packed: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def required_inputs(self) -> frozenset[str]:
        return frozenset(self.input_names)

    def evaluate(self, bindings: Mapping[str, Value]) -> dict[str, Value]:
        """Compute all outputs at the given input bindings."""
        for name in self.input_names:
            if name not in bindings:
                raise MissingInput(name)
        if self.domain == FLOAT:
            return self._evaluate_float(bindings, _kernel)
        return self._evaluate_exact(bindings)

    def _evaluate_float(self, bindings, impl) -> dict[str, float]:
        ops, aa, bb, consts = self._packed  # type: ignore[misc]
        inputs = array("d", [coerce(FLOAT, bindings[n]) for n in self.input_names])
        slots = array("d", bytes(8 * len(self.instrs)))
        err = impl.run(ops, aa, bb, consts, inputs, slots)
        if err:
            code, i = err
            instr = self.instrs[i]
            if code == _pykernel.ERR_LOG_DOMAIN:
                raise LogDomainError(
                    f"log of non-positive value {slots[instr.a]!r}"
                )
            raise ZeroToNegativePower(f"0.0 raised to {instr.b}")
        return {label: slots[slot] for label, slot in self.outputs}

    def _evaluate_exact(self, bindings) -> dict[str, Value]:
        inputs = [coerce(self.domain, bindings[n]) for n in self.input_names]
        slots: list[Value] = [0] * len(self.instrs)
        for i, instr in enumerate(self.instrs):
            op = instr.op
            if op == _pykernel.ADD:
                slots[i] = slots[instr.a] + slots[instr.b]
            elif op == _pykernel.MUL:
                slots[i] = slots[instr.a] * slots[instr.b]
            elif op == _pykernel.LOAD_INPUT:
                slots[i] = inputs[instr.a]
            elif op == _pykernel.LOAD_CONST:
                slots[i] = self.consts[instr.a]
            elif op == _pykernel.POW:
                slots[i] = powi(slots[instr.a], instr.b)
            elif op == _pykernel.EXP:
                slots[i] = exp_value(slots[instr.a])
            else:
                slots[i] = log_value(slots[instr.a])
        return {label: slots[slot] for label, slot in self.outputs}

    def finite_difference(
        self,
        bindings: Mapping[str, float],
        output: str,
        input_name: str,
        h: float = 1e-5,
    ) -> float:
        """Central difference of ``output`` with respect to ``input_name``."""
        if self.domain != FLOAT:
            raise TypeError("finite differences require a float tape")
        if output not in {label for label, _ in self.outputs}:
            raise ValueError(f"no output labelled {output!r}")
        if input_name not in bindings:
            raise MissingInput(input_name)
        x = coerce(FLOAT, bindings[input_name])
        base = dict(bindings)
        base[input_name] = x + h
        hi = self.evaluate(base)[output]
        base[input_name] = x - h
        lo = self.evaluate(base)[output]
        return (hi - lo) / (2.0 * h)


def compile_tape(graph: Graph, outputs: Sequence[tuple[str, NodeId]]) -> Tape:
    """Lower the subgraph feeding ``outputs`` to a tape.

    Output order and node creation order fully determine the result, so
    compiling the same outputs twice yields structurally identical tapes.
    """
    labels = [label for label, _ in outputs]
    if len(set(labels)) != len(labels):
        raise ValueError("output labels must be unique")
    order = graph.topo_order([nid for _, nid in outputs])
    slot = {nid.index: i for i, nid in enumerate(order)}

    instrs: list[Instr] = []
    consts: list[Value] = []
    names: list[str] = []
    name_index: dict[str, int] = {}
    for nid in order:
        kind = graph.kind(nid)
        match kind:
            case Input(name):
                idx = name_index.get(name)
                if idx is None:
                    idx = len(names)
                    name_index[name] = idx
                    names.append(name)
                instrs.append(Instr(_pykernel.LOAD_INPUT, idx))
            case Const(value):
                consts.append(value)
                instrs.append(Instr(_pykernel.LOAD_CONST, len(consts) - 1))
            case Add(lhs, rhs):
                instrs.append(Instr(_pykernel.ADD, slot[lhs.index], slot[rhs.index]))
            case Mul(lhs, rhs):
                instrs.append(Instr(_pykernel.MUL, slot[lhs.index], slot[rhs.index]))
            case Pow(k, base):
                instrs.append(Instr(_pykernel.POW, slot[base.index], k))
            case Exp(arg):
                instrs.append(Instr(_pykernel.EXP, slot[arg.index]))
            case Log(arg):
                instrs.append(Instr(_pykernel.LOG, slot[arg.index]))

    packed = None
    if graph.domain == FLOAT:
        packed = (
            array("i", [ins.op for ins in instrs]),
            array("q", [ins.a for ins in instrs]),
            array("q", [ins.b for ins in instrs]),
            array("d", consts),
        )
    return Tape(
        domain=graph.domain,
        instrs=tuple(instrs),
        consts=tuple(consts),
        input_names=tuple(names),
        outputs=tuple((label, slot[nid.index]) for label, nid in outputs),
        _packed=packed,
    )
