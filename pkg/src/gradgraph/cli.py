"""Command-line front end.

Exit codes: 0 success, 2 usage (flag validation), 3 expression or grammar
parse errors, 4 numeric domain errors, 5 file errors.
"""

from __future__ import annotations

import functools
import sys
from fractions import Fraction

import click

from . import expr as expr_mod
from .bench import bench_kernel, bench_pcfg, bench_taylor
from .errors import (
    DuplicateInputName,
    ExactModeUnsupported,
    ExprSyntaxError,
    ForeignNodeId,
    GrammarError,
    LogDomainError,
    MissingInput,
    NonIntegerExponent,
    ZeroToNegativePower,
)
from .graph import Graph
from .pcfg import parse_grammar, train
from .tape import compile_tape
from .taylor import derivative_tower, taylor
from .values import FLOAT, RATIONAL, format_value

EXIT_PARSE = 3
EXIT_DOMAIN = 4
EXIT_FILE = 5

_PARSE_ERRORS = (ExprSyntaxError, NonIntegerExponent)
_DOMAIN_ERRORS = (
    LogDomainError,
    ZeroToNegativePower,
    ExactModeUnsupported,
    MissingInput,
    DuplicateInputName,
    ForeignNodeId,
)


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _PARSE_ERRORS as err:
            click.echo(f"error: {err}", err=True)
            sys.exit(EXIT_PARSE)
        except GrammarError as err:
            # Grammar file defects are parse errors; corpus/runtime defects
            # (unknown token, unparseable sentence, zero mass) are domain ones.
            from .errors import GrammarSyntaxError, NotCNF, NotNormalized

            if isinstance(err, (GrammarSyntaxError, NotCNF, NotNormalized)):
                click.echo(f"error: {err}", err=True)
                sys.exit(EXIT_PARSE)
            click.echo(f"error: {err}", err=True)
            sys.exit(EXIT_DOMAIN)
        except _DOMAIN_ERRORS as err:
            click.echo(f"error: {err}", err=True)
            sys.exit(EXIT_DOMAIN)
        except OSError as err:
            click.echo(f"error: {err}", err=True)
            sys.exit(EXIT_FILE)

    return wrapper


def _parse_bindings(pairs) -> dict[str, float]:
    out: dict[str, float] = {}
    for pair in pairs:
        name, sep, value = pair.partition("=")
        if not sep or not name:
            raise click.BadParameter(f"expected NAME=VALUE, got {pair!r}")
        try:
            out[name] = float(value)
        except ValueError:
            raise click.BadParameter(f"bad number in {pair!r}") from None
    return out


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as handle:
            handle.write(text if text.endswith("\n") else text + "\n")
    else:
        click.echo(text[:-1] if text.endswith("\n") else text)


@click.group()
def main() -> None:
    """Differentiable expression graphs: evaluation, derivatives, series
    coefficients, and grammar training."""


@main.command("eval")
@click.option("--expr", "expr_text", required=True, help="Expression text.")
@click.option("--at", "at", multiple=True, help="Input binding NAME=VALUE.")
@_handle_errors
def eval_cmd(expr_text: str, at) -> None:
    """Evaluate an expression at the given bindings."""
    graph = Graph(FLOAT)
    root = expr_mod.lower(expr_mod.parse_expr(expr_text), graph)
    tape = compile_tape(graph, [("value", root)])
    click.echo(format_value(tape.evaluate(_parse_bindings(at))["value"]))


@main.command("diff")
@click.option("--expr", "expr_text", required=True, help="Expression text.")
@click.option("--wrt", required=True, help="Variable to differentiate by.")
@click.option("--order", default=1, type=click.IntRange(min=0), show_default=True)
@click.option("--at", "at", multiple=True, help="Evaluate instead of exporting.")
@click.option("--dot", "fmt", flag_value="dot", default=True, help="DOT export.")
@click.option("--json", "fmt", flag_value="json", help="JSON export.")
@click.option("--out", default=None, help="Write output to a file.")
@_handle_errors
def diff_cmd(expr_text: str, wrt: str, order: int, at, fmt: str, out) -> None:
    """Differentiate an expression; export the graph or evaluate it."""
    graph = Graph(FLOAT)
    root = expr_mod.lower(expr_mod.parse_expr(expr_text), graph)
    x = graph.lookup_input(wrt)
    if x is None:
        raise click.BadParameter(f"variable {wrt!r} does not appear in the expression")
    target = derivative_tower(graph, root, x, order)[-1]
    if at:
        tape = compile_tape(graph, [("value", target)])
        click.echo(format_value(tape.evaluate(_parse_bindings(at))["value"]))
        return
    if fmt == "json":
        _emit(graph.to_json(), out)
    else:
        labels = {root: "y", target: f"d{order}y"} if order else {root: "y"}
        _emit(graph.to_dot([root, target], labels), out)


@main.command("taylor")
@click.option("--expr", "expr_text", required=True, help="Expression text.")
@click.option("--var", required=True, help="Expansion variable.")
@click.option("--center", required=True, help="Expansion point.")
@click.option("--terms", type=click.IntRange(min=1), required=True)
@click.option("--exact", is_flag=True, help="Exact rational arithmetic.")
@_handle_errors
def taylor_cmd(expr_text: str, var: str, center: str, terms: int, exact: bool) -> None:
    """Series coefficients around a point, one comma-separated line."""
    graph = Graph(RATIONAL if exact else FLOAT)
    root = expr_mod.lower(expr_mod.parse_expr(expr_text), graph)
    x = graph.lookup_input(var)
    if x is None:
        x = graph.input(var)
    try:
        point = Fraction(center) if exact else float(center)
    except (ValueError, ZeroDivisionError):
        raise click.BadParameter(f"bad --center value {center!r}") from None
    result = taylor(graph, root, x, point, terms - 1)
    click.echo(", ".join(format_value(c) for c in result.coefficients))


@main.command("pcfg-train")
@click.option("--grammar", "grammar_path", required=True, help="Grammar file.")
@click.option("--corpus", "corpus_path", required=True, help="Corpus file.")
@click.option("--iters", default=50, type=click.IntRange(min=0), show_default=True)
@click.option("--tol", default=1e-9, type=float, show_default=True)
@click.option("--out", default=None, help="Write the JSON report to a file.")
@_handle_errors
def pcfg_train_cmd(grammar_path, corpus_path, iters, tol, out) -> None:
    """Fit grammar parameters to a corpus; print the training report."""
    with open(grammar_path) as handle:
        grammar = parse_grammar(handle.read())
    corpus = []
    with open(corpus_path) as handle:
        for line in handle:
            tokens = line.split()
            if tokens:
                corpus.append(tokens)
    report = train(grammar, corpus, max_iters=iters, tol=tol)
    _emit(report.to_json(), out)


@main.command("bench")
@click.option(
    "--suite",
    type=click.Choice(["taylor", "pcfg", "kernel"]),
    required=True,
)
@click.option("--quick", is_flag=True, help="Smaller sizes for smoke runs.")
@_handle_errors
def bench_cmd(suite: str, quick: bool) -> None:
    """Setup/eval timing tables."""
    runner = {"taylor": bench_taylor, "pcfg": bench_pcfg, "kernel": bench_kernel}
    click.echo(runner[suite](quick=quick))


if __name__ == "__main__":
    main()
