"""Expression hypergraph with hash-consed nodes and eager rewriting.

Nodes are inputs, constants, or the outputs of one of five operations
(add, mul, integer pow, exp, log). Construction applies algebraic
identities before interning, so the stored graph is always simplified:

* ``0 + x -> x``, ``x + 0 -> x``
* ``0 * x -> 0``, ``1 * x -> x`` (and mirrored)
* ``x^1 -> x``, ``x^0 -> 1``
* any operation whose operands are all constants folds to a constant

Structurally identical nodes are shared: re-inserting an edge returns the
id it produced the first time. Operand order is significant, so
``mul(x, y)`` and ``mul(y, x)`` stay distinct. Graphs are append-only and
single-writer; a graph that is no longer being mutated may be read from
any number of threads.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

from .errors import DuplicateInputName, ForeignNodeId
from .values import (
    DOMAINS,
    FLOAT,
    Value,
    coerce,
    exp_value,
    format_value,
    is_one,
    is_zero,
    log_value,
    powi,
    to_jsonable,
)

_graph_ids = itertools.count()


@dataclass(frozen=True, slots=True)
class NodeId:
    """Opaque handle into one graph. Ids are dense and never invalidated."""

    graph_id: int
    index: int

    def __repr__(self) -> str:
        return f"n{self.index}"


@dataclass(frozen=True, slots=True)
class Input:
    name: str


@dataclass(frozen=True, slots=True)
class Const:
    value: Value


@dataclass(frozen=True, slots=True)
class Add:
    lhs: NodeId
    rhs: NodeId


@dataclass(frozen=True, slots=True)
class Mul:
    lhs: NodeId
    rhs: NodeId


@dataclass(frozen=True, slots=True)
class Pow:
    """Fixed integer power; the exponent is part of the operation."""

    k: int
    base: NodeId


@dataclass(frozen=True, slots=True)
class Exp:
    arg: NodeId


@dataclass(frozen=True, slots=True)
class Log:
    arg: NodeId


NodeKind = Input | Const | Add | Mul | Pow | Exp | Log


def operands(kind: NodeKind) -> tuple[NodeId, ...]:
    """Operand node ids of a node kind, left to right."""
    match kind:
        case Add(lhs, rhs) | Mul(lhs, rhs):
            return (lhs, rhs)
        case Pow(_, base):
            return (base,)
        case Exp(arg) | Log(arg):
            return (arg,)
        case _:
            return ()


def op_label(kind: NodeKind) -> str:
    match kind:
        case Add():
            return "add"
        case Mul():
            return "mul"
        case Pow(k, _):
            return f"pow({k})"
        case Exp():
            return "exp"
        case Log():
            return "log"
        case _:
            raise TypeError(f"{kind!r} is not an operation node")


class Graph:
    """Append-only, deduplicating expression store."""

    def __init__(self, domain: str = FLOAT):
        if domain not in DOMAINS:
            raise ValueError(f"domain must be one of {DOMAINS}, got {domain!r}")
        self._domain = domain
        self._id = next(_graph_ids)
        self._nodes: list[NodeKind] = []
        self._interned: dict[NodeKind, NodeId] = {}
        self._inputs: dict[str, NodeId] = {}
        # target node id -> AdjointMap, populated by autodiff.backward
        self._adjoint_cache: dict[NodeId, object] = {}

    @property
    def domain(self) -> str:
        return self._domain

    def __len__(self) -> int:
        return len(self._nodes)

    def nodes(self) -> Iterator[tuple[NodeId, NodeKind]]:
        """All nodes in creation order."""
        for i, kind in enumerate(self._nodes):
            yield NodeId(self._id, i), kind

    def _check(self, nid: NodeId) -> None:
        if (
            not isinstance(nid, NodeId)
            or nid.graph_id != self._id
            or not 0 <= nid.index < len(self._nodes)
        ):
            raise ForeignNodeId(f"{nid!r} does not belong to this graph")

    def kind(self, nid: NodeId) -> NodeKind:
        self._check(nid)
        return self._nodes[nid.index]

    def _new_node(self, kind: NodeKind) -> NodeId:
        nid = NodeId(self._id, len(self._nodes))
        self._nodes.append(kind)
        return nid

    def _intern(self, kind: NodeKind) -> NodeId:
        nid = self._interned.get(kind)
        if nid is None:
            nid = self._new_node(kind)
            self._interned[kind] = nid
        return nid

    def _const_value(self, nid: NodeId) -> Value | None:
        kind = self._nodes[nid.index]
        return kind.value if isinstance(kind, Const) else None

    # -- constructors ------------------------------------------------------

    def input(self, name: str) -> NodeId:
        """Fresh named input. Names identify inputs at evaluation time, so
        reusing one is an error."""
        if not isinstance(name, str) or not name:
            raise ValueError("input name must be a nonempty string")
        if name in self._inputs:
            raise DuplicateInputName(f"input {name!r} already exists")
        nid = self._new_node(Input(name))
        self._inputs[name] = nid
        return nid

    def lookup_input(self, name: str) -> NodeId | None:
        return self._inputs.get(name)

    def input_names(self) -> tuple[str, ...]:
        return tuple(self._inputs)

    def constant(self, value) -> NodeId:
        """The unique constant node for this value (coerced to the graph's
        domain)."""
        return self._intern(Const(coerce(self._domain, value)))

    def add(self, a: NodeId, b: NodeId) -> NodeId:
        self._check(a)
        self._check(b)
        va = self._const_value(a)
        vb = self._const_value(b)
        if va is not None and is_zero(va):
            return b
        if vb is not None and is_zero(vb):
            return a
        if va is not None and vb is not None:
            return self.constant(va + vb)
        return self._intern(Add(a, b))

    def mul(self, a: NodeId, b: NodeId) -> NodeId:
        self._check(a)
        self._check(b)
        va = self._const_value(a)
        vb = self._const_value(b)
        if va is not None:
            if is_zero(va):
                return a
            if is_one(va):
                return b
        if vb is not None:
            if is_zero(vb):
                return b
            if is_one(vb):
                return a
        if va is not None and vb is not None:
            return self.constant(va * vb)
        return self._intern(Mul(a, b))

    def pow(self, k: int, a: NodeId) -> NodeId:
        """``a`` raised to the fixed integer ``k``."""
        if not isinstance(k, int) or isinstance(k, bool):
            raise TypeError("exponent must be a plain integer")
        self._check(a)
        if k == 1:
            return a
        if k == 0:
            return self.constant(1)
        va = self._const_value(a)
        if va is not None:
            return self.constant(powi(va, k))
        return self._intern(Pow(k, a))

    def exp(self, a: NodeId) -> NodeId:
        self._check(a)
        va = self._const_value(a)
        if va is not None:
            return self.constant(exp_value(va))
        return self._intern(Exp(a))

    def log(self, a: NodeId) -> NodeId:
        self._check(a)
        va = self._const_value(a)
        if va is not None:
            return self.constant(log_value(va))
        return self._intern(Log(a))

    # -- traversal and export ----------------------------------------------

    def topo_order(self, roots: Sequence[NodeId]) -> list[NodeId]:
        """Every node reachable through operands from ``roots``, exactly
        once, each after all of its operands.

        Operands always have smaller creation indices than their consumers,
        so creation order restricted to the reachable set is returned.
        """
        seen: set[int] = set()
        stack: list[NodeId] = []
        for r in roots:
            self._check(r)
            stack.append(r)
        while stack:
            nid = stack.pop()
            if nid.index in seen:
                continue
            seen.add(nid.index)
            stack.extend(operands(self._nodes[nid.index]))
        return [NodeId(self._id, i) for i in sorted(seen)]

    def to_dot(
        self,
        roots: Sequence[NodeId],
        labels: Mapping[NodeId, str] | None = None,
    ) -> str:
        """DOT text for the subgraph reachable from ``roots``.

        Operations are drawn as bold operator nodes with arcs from each
        operand and an arc to the value they define. Node order is creation
        order, so output is deterministic.
        """
        labels = dict(labels or {})
        lines = ["digraph expression {", "  rankdir=LR;"]
        for nid in self.topo_order(roots):
            kind = self._nodes[nid.index]
            given = labels.get(nid)
            if isinstance(kind, Input):
                text = given if given is not None else kind.name
                lines.append(f'  n{nid.index} [shape=ellipse, label="{_esc(text)}"];')
            elif isinstance(kind, Const):
                text = given if given is not None else format_value(kind.value)
                lines.append(f'  n{nid.index} [shape=ellipse, label="{_esc(text)}"];')
            else:
                text = given if given is not None else ""
                lines.append(f'  n{nid.index} [shape=ellipse, label="{_esc(text)}"];')
                lines.append(
                    f"  e{nid.index} [shape=plain, label=<<b>{op_label(kind)}</b>>];"
                )
                for src in operands(kind):
                    lines.append(f"  n{src.index} -> e{nid.index};")
                lines.append(f"  e{nid.index} -> n{nid.index};")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        """All nodes in creation order as a JSON array."""
        out = []
        for i, kind in enumerate(self._nodes):
            entry: dict = {"id": i}
            if isinstance(kind, Input):
                entry["kind"] = "input"
                entry["name"] = kind.name
            elif isinstance(kind, Const):
                entry["kind"] = "const"
                entry["value"] = to_jsonable(kind.value)
            else:
                entry["kind"] = "op"
                match kind:
                    case Add():
                        entry["op"] = "add"
                    case Mul():
                        entry["op"] = "mul"
                    case Pow(k, _):
                        entry["op"] = "pow"
                        entry["k"] = k
                    case Exp():
                        entry["op"] = "exp"
                    case Log():
                        entry["op"] = "log"
                entry["args"] = [op.index for op in operands(kind)]
            out.append(entry)
        return json.dumps(out)


def _esc(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')
