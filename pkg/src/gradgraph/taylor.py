"""Series coefficients around a point by iterated differentiation.

Each derivative is itself a graph node, so the tower ``[y, y', y'', ...]``
is produced simply by differentiating the previous element again. All
tower nodes are compiled into one tape (their subgraphs overlap heavily),
evaluated at the expansion point, and divided by a running factorial.

In an exact graph the whole computation stays rational, provided
evaluation never needs an irrational log or exp value; expanding
``log(x)`` around 1 works because only ``log(1) = 0`` is ever evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass

from .autodiff import deriv
from .graph import Graph, Input, NodeId
from .tape import compile_tape
from .values import Value, coerce, one


@dataclass(frozen=True)
class TaylorResult:
    """Coefficients ``c[k] = f^(k)(center) / k!``; ``c[0]`` is ``f(center)``."""

    center: Value
    coefficients: tuple[Value, ...]

    def partial_sum(self, x: Value) -> Value:
        """Evaluate the truncated series at ``x``."""
        dx = x - self.center
        total = self.coefficients[0] * (dx**0)
        step = dx**0
        for c in self.coefficients[1:]:
            step = step * dx
            total = total + c * step
        return total


def derivative_tower(graph: Graph, y: NodeId, x: NodeId, n: int) -> list[NodeId]:
    """``[y, dy/dx, ..., d^n y/dx^n]`` as graph nodes."""
    if n < 0:
        raise ValueError("derivative count must be non-negative")
    if not isinstance(graph.kind(x), Input):
        raise ValueError("differentiation variable must be an input node")
    tower = [y]
    for _ in range(n):
        tower.append(deriv(graph, tower[-1], x))
    return tower


def taylor(graph: Graph, y: NodeId, x: NodeId, center, n: int) -> TaylorResult:
    """Coefficients of ``y`` around ``x = center`` up to derivative order
    ``n`` (so ``n + 1`` values).

    The running factorial lives in the graph's value domain; float mode
    overflows to inf beyond 170!, which caps usable orders well above
    anything the quadratic build cost allows in practice.
    """
    tower = derivative_tower(graph, y, x, n)
    name = graph.kind(x).name  # type: ignore[union-attr]
    tape = compile_tape(graph, [(f"d{k}", nid) for k, nid in enumerate(tower)])
    values = tape.evaluate({name: center})
    factorial = one(graph.domain)
    coefficients = []
    for k in range(n + 1):
        coefficients.append(values[f"d{k}"] / factorial)
        factorial = factorial * coerce(graph.domain, k + 1)
    return TaylorResult(coerce(graph.domain, center), tuple(coefficients))
