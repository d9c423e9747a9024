"""Reverse-mode differentiation as a graph-to-graph transformation.

``backward`` sweeps the subgraph feeding a target in reverse creation
order and emits each node's derivative through the ordinary graph
constructors. The results are therefore regular nodes: simplified,
shared, and differentiable again, which is what makes second and higher
derivatives work for every operation, including negative integer powers.

``forward_first_order`` is the deliberately weaker counterpart: it walks
the same structure but combines local slopes as plain machine numbers.
Its result agrees with ``deriv`` but is not a graph node and cannot be
differentiated further; it serves as an independent first-order check.

Local derivative rules, for output ``y`` with derivative ``dy``:

* ``add(a, b)``: ``a`` and ``b`` each receive ``dy``
* ``mul(a, b)``: ``a`` receives ``b * dy``; ``b`` receives ``a * dy``
* ``pow(k, a)``: ``a`` receives ``dy * (k * a^(k-1))``
* ``exp(a)``: ``a`` receives ``y * dy``
* ``log(a)``: ``a`` receives ``a^(-1) * dy``

Contributions to one node are summed in emission order, each new term
becoming the left operand of the running sum, so results are
deterministic (float addition is order sensitive).
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

from .errors import MissingInput
from .graph import Add, Const, Exp, Graph, Input, Log, Mul, NodeId, Pow
from .values import FLOAT, exp_value, log_value, powi


@dataclass
class AdjointMap:
    """Derivatives of one target with respect to every node feeding it.

    Nodes outside the target's cone (and all constants) map to the
    constant-zero node. The target itself maps to constant one.
    """

    graph: Graph
    target: NodeId
    _table: dict[NodeId, NodeId]
    _zero: NodeId

    def adjoint(self, node: NodeId) -> NodeId:
        self.graph._check(node)
        return self._table.get(node, self._zero)

    @property
    def adjoints(self) -> Mapping[NodeId, NodeId]:
        return MappingProxyType(self._table)


def backward(graph: Graph, target: NodeId) -> AdjointMap:
    """Compute (and cache) the adjoints of every node that feeds ``target``.

    Repeated calls for the same target return the identical map, so all
    derivative node ids are stable. Differentiating a constant yields the
    all-zero map.
    """
    graph._check(target)
    cached = graph._adjoint_cache.get(target)
    if cached is not None:
        return cached  # type: ignore[return-value]

    zero = graph.constant(0)
    table: dict[NodeId, NodeId] = {}
    if isinstance(graph.kind(target), Const):
        amap = AdjointMap(graph, target, table, zero)
        graph._adjoint_cache[target] = amap
        return amap

    pending: dict[NodeId, list[NodeId]] = {}
    for nid in reversed(graph.topo_order([target])):
        kind = graph.kind(nid)
        if isinstance(kind, Const):
            table[nid] = zero
            continue
        if nid == target:
            dy = graph.constant(1)
        else:
            dy = zero
            for term in pending.pop(nid, ()):
                dy = graph.add(term, dy)
        table[nid] = dy
        _emit(graph, nid, kind, dy, pending)

    amap = AdjointMap(graph, target, table, zero)
    graph._adjoint_cache[target] = amap
    return amap


def _emit(
    graph: Graph,
    nid: NodeId,
    kind,
    dy: NodeId,
    pending: dict[NodeId, list[NodeId]],
) -> None:
    """Append this edge's contributions to its non-constant operands."""

    def is_const(n: NodeId) -> bool:
        return isinstance(graph.kind(n), Const)

    match kind:
        case Add(lhs, rhs):
            if not is_const(lhs):
                pending.setdefault(lhs, []).append(dy)
            if not is_const(rhs):
                pending.setdefault(rhs, []).append(dy)
        case Mul(lhs, rhs):
            if not is_const(lhs):
                pending.setdefault(lhs, []).append(graph.mul(rhs, dy))
            if not is_const(rhs):
                pending.setdefault(rhs, []).append(graph.mul(lhs, dy))
        case Pow(k, base):
            if not is_const(base):
                slope = graph.mul(graph.constant(k), graph.pow(k - 1, base))
                pending.setdefault(base, []).append(graph.mul(dy, slope))
        case Exp(arg):
            if not is_const(arg):
                pending.setdefault(arg, []).append(graph.mul(nid, dy))
        case Log(arg):
            if not is_const(arg):
                pending.setdefault(arg, []).append(
                    graph.mul(graph.pow(-1, arg), dy)
                )
        case Input():
            pass


def deriv(graph: Graph, target: NodeId, wrt: NodeId) -> NodeId:
    """Node holding d(target)/d(wrt). Constants differentiate to zero."""
    return backward(graph, target).adjoint(wrt)


class FirstOrderPlan:
    """Evaluable first-order derivative that never touches the graph.

    Primal values are interpreted over the target's cone, then local
    slopes are pushed back through it as floats. The value equals
    ``deriv(target, wrt)`` evaluated at the same bindings; the difference
    is that nothing here is a node, so the plan supports exactly one order
    of differentiation.
    """

    def __init__(self, graph: Graph, target: NodeId, wrt: NodeId):
        graph._check(target)
        graph._check(wrt)
        if graph.domain != FLOAT:
            raise TypeError("first-order plans evaluate in float mode only")
        if isinstance(graph.kind(wrt), Const):
            raise ValueError("cannot differentiate with respect to a constant")
        self._graph = graph
        self._target = target
        self._wrt = wrt
        self._order = graph.topo_order([target])

    def evaluate(self, bindings: Mapping[str, float]) -> float:
        g = self._graph
        vals: dict[int, float] = {}
        for nid in self._order:
            kind = g.kind(nid)
            match kind:
                case Input(name):
                    if name not in bindings:
                        raise MissingInput(name)
                    vals[nid.index] = float(bindings[name])
                case Const(value):
                    vals[nid.index] = value  # type: ignore[assignment]
                case Add(lhs, rhs):
                    vals[nid.index] = vals[lhs.index] + vals[rhs.index]
                case Mul(lhs, rhs):
                    vals[nid.index] = vals[lhs.index] * vals[rhs.index]
                case Pow(k, base):
                    vals[nid.index] = powi(vals[base.index], k)
                case Exp(arg):
                    vals[nid.index] = exp_value(vals[arg.index])
                case Log(arg):
                    vals[nid.index] = log_value(vals[arg.index])

        dvals: dict[int, float] = {self._target.index: 1.0}
        for nid in reversed(self._order):
            dy = dvals.get(nid.index)
            if dy is None:
                continue
            kind = g.kind(nid)
            match kind:
                case Add(lhs, rhs):
                    _bump(dvals, lhs.index, dy)
                    _bump(dvals, rhs.index, dy)
                case Mul(lhs, rhs):
                    _bump(dvals, lhs.index, vals[rhs.index] * dy)
                    _bump(dvals, rhs.index, vals[lhs.index] * dy)
                case Pow(k, base):
                    slope = k * powi(vals[base.index], k - 1)
                    _bump(dvals, base.index, slope * dy)
                case Exp(arg):
                    _bump(dvals, arg.index, vals[nid.index] * dy)
                case Log(arg):
                    _bump(dvals, arg.index, dy / vals[arg.index])
        return dvals.get(self._wrt.index, 0.0)


def _bump(dvals: dict[int, float], index: int, amount: float) -> None:
    dvals[index] = dvals.get(index, 0.0) + amount


def forward_first_order(graph: Graph, target: NodeId, wrt: NodeId) -> FirstOrderPlan:
    """First-order derivative plan; see :class:`FirstOrderPlan`."""
    return FirstOrderPlan(graph, target, wrt)
