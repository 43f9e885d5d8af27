"""Line-oriented file formats.

All formats are whitespace-separated with ``#`` comments.  Emission is
canonical: ``emit(parse(text))`` is byte-identical for canonical input.
Parsers raise :class:`FileFormatError` carrying file and line context.

Formats:

* explanation graph: ``switch <id> <v1> <v2> ...``, ``goal <idx> <label>``,
  ``body <head-idx> : <subgoal-idx>* | (<switch>=<value>[*mult])*``,
  ``root <idx>``
* parameters: ``msw <switch> <value> <prob>``
* pseudo counts: ``delta <switch> <value> <count>`` (unlisted pairs are 0)
* grammar: ``start <A>`` then ``<A> -> <s1> <s2> ... [: <prob>]``
* corpus: one whitespace-tokenised sentence per line
* treebank: one bracketed tree per line, ``(S (S a) (S b))``
* NBH spec: ``class <labels...>``, ``hidden <k>``, ``attr <name> <values...>``
* NBH data: comma-separated rows, first field the class, ``?`` for missing
* edge graph: ``edge <u> <v> <p>`` plus ``query <from> <to>`` lines
"""

from __future__ import annotations

import os
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import FileFormatError
from .graph import (
    ExplanationGraph,
    GraphBuilder,
    SwitchInstance,
)
from .grammar import CFGRule, Grammar, ParseTree
from .learning import LearnReport
from .models import DataRow, EdgeGraph, NBHSpec
from .tables import ParameterTable, PseudoCountTable, SwitchTable
from .terms import parse_term, render_term

__all__ = [
    "load_expl_graph",
    "emit_expl_graph",
    "load_params",
    "emit_params",
    "load_pseudo_counts",
    "emit_pseudo_counts",
    "load_grammar",
    "emit_grammar",
    "load_corpus",
    "emit_corpus",
    "load_treebank",
    "emit_treebank",
    "load_nbh_spec",
    "emit_nbh_spec",
    "load_nbh_data",
    "emit_nbh_data",
    "load_edge_graph",
    "emit_edge_graph",
    "emit_learn_report",
]

Source = Union[str, os.PathLike]


def _read_lines(source: Source) -> tuple[Optional[str], list[tuple[int, str]]]:
    """Returns (path or None, [(line number, stripped content)]) without
    comments or blank lines."""
    if isinstance(source, os.PathLike) or (
        isinstance(source, str) and "\n" not in source and os.path.exists(source)
    ):
        path = os.fspath(source)
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        path = None
        text = str(source)
    out = []
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((i, line))
    return path, out


def _fail(path, line, message):
    raise FileFormatError(message, path=path, line=line)


def _parse_float(tok: str, path, line, lo=None, hi=None) -> float:
    try:
        x = float(tok)
    except ValueError:
        _fail(path, line, f"expected a number, got {tok!r}")
    if lo is not None and (x < lo or (hi is not None and x > hi)):
        _fail(path, line, f"value {x} outside [{lo},{hi}]")
    return x


def _parse_int(tok: str, path, line) -> int:
    try:
        return int(tok)
    except ValueError:
        _fail(path, line, f"expected an integer, got {tok!r}")


def _parse_term_tok(tok: str, path, line):
    try:
        return parse_term(tok)
    except Exception as e:
        _fail(path, line, f"bad term {tok!r}: {e}")


def _fmt(x: float) -> str:
    return repr(float(x))


# -- explanation graphs -------------------------------------------------


def load_expl_graph(source: Source) -> ExplanationGraph:
    path, lines = _read_lines(source)
    builder = GraphBuilder()
    goal_ids: dict[int, int] = {}
    pending_bodies = []
    roots = []
    for ln, line in lines:
        toks = line.split()
        kind = toks[0]
        if kind == "switch":
            if len(toks) < 3:
                _fail(path, ln, "switch needs a name and at least one value")
            builder.declare_switch(
                _parse_term_tok(toks[1], path, ln),
                tuple(_parse_term_tok(t, path, ln) for t in toks[2:]),
            )
        elif kind == "goal":
            if len(toks) != 3:
                _fail(path, ln, "goal needs an index and a label")
            idx = _parse_int(toks[1], path, ln)
            if idx in goal_ids:
                _fail(path, ln, f"duplicate goal index {idx}")
            if idx != len(goal_ids):
                _fail(path, ln, f"goal indices must be dense, got {idx}")
            goal_ids[idx] = builder.goal(toks[2])
        elif kind == "body":
            if len(toks) < 3 or toks[2] != ":":
                _fail(path, ln, "body syntax: body <head> : <subgoals> | <instances>")
            pending_bodies.append((ln, toks))
        elif kind == "root":
            if len(toks) != 2:
                _fail(path, ln, "root needs one index")
            roots.append((ln, _parse_int(toks[1], path, ln)))
        else:
            _fail(path, ln, f"unknown directive {kind!r}")

    for ln, toks in pending_bodies:
        head = _parse_int(toks[1], path, ln)
        if head not in goal_ids:
            _fail(path, ln, f"body head {head} is not a declared goal")
        rest = toks[3:]
        if "|" not in rest:
            _fail(path, ln, "body needs a '|' separating subgoals from instances")
        bar = rest.index("|")
        subs = []
        for t in rest[:bar]:
            idx = _parse_int(t, path, ln)
            if idx not in goal_ids:
                _fail(path, ln, f"subgoal {idx} is not a declared goal")
            subs.append(goal_ids[idx])
        insts = []
        for t in rest[bar + 1 :]:
            if "=" not in t:
                _fail(path, ln, f"instance {t!r} needs <switch>=<value>")
            sw_text, val_text = t.split("=", 1)
            mult = 1
            if "*" in val_text:
                val_text, mult_text = val_text.rsplit("*", 1)
                mult = _parse_int(mult_text, path, ln)
                if mult < 1:
                    _fail(path, ln, "multiplicity must be >= 1")
            insts.append(
                SwitchInstance(
                    _parse_term_tok(sw_text, path, ln),
                    _parse_term_tok(val_text, path, ln),
                    mult,
                )
            )
        builder.add_body(goal_ids[head], subs, insts)
    for ln, r in roots:
        if r not in goal_ids:
            _fail(path, ln, f"root {r} is not a declared goal")
        builder.add_root(goal_ids[r])
    try:
        return builder.build()
    except Exception as e:
        raise FileFormatError(str(e), path=path) from e


def emit_expl_graph(graph: ExplanationGraph) -> str:
    out = []
    for decl in graph.switches.values():
        out.append(
            "switch "
            + render_term(decl.id)
            + " "
            + " ".join(render_term(v) for v in decl.values)
        )
    for i, label in enumerate(graph.labels):
        out.append(f"goal {i} {label}")
    for f in graph.formulas:
        for body in f.bodies:
            toks = ["body", str(f.head), ":"]
            toks.extend(str(s) for s in body.subgoals)
            toks.append("|")
            for inst in body.instances:
                star = f"*{inst.mult}" if inst.mult > 1 else ""
                toks.append(f"{render_term(inst.switch)}={render_term(inst.value)}{star}")
            out.append(" ".join(toks))
    for r in graph.roots:
        out.append(f"root {r}")
    return "\n".join(out) + "\n"


# -- parameter and pseudo-count tables ----------------------------------


def _load_table(source: Source, graph: ExplanationGraph, keyword: str, default: float):
    path, lines = _read_lines(source)
    values: dict[str, np.ndarray] = {
        k: np.full(len(d.values), default) for k, d in graph.switches.items()
    }
    for ln, line in lines:
        toks = line.split()
        if toks[0] != keyword or len(toks) != 4:
            _fail(path, ln, f"expected: {keyword} <switch> <value> <number>")
        sw = _parse_term_tok(toks[1], path, ln)
        key = render_term(sw)
        if key not in values:
            _fail(path, ln, f"switch {key} not declared in graph")
        decl = graph.switches[key]
        val = _parse_term_tok(toks[2], path, ln)
        try:
            vi = decl.value_index(val)
        except Exception:
            _fail(path, ln, f"value {toks[2]} not declared for switch {key}")
        lo, hi = (0.0, 1.0) if keyword == "msw" else (0.0, None)
        values[key][vi] = _parse_float(toks[3], path, ln, lo, hi)
    return path, values


def load_params(source: Source, graph: ExplanationGraph) -> ParameterTable:
    """Parameters for every switch of ``graph`` (entries default to 0)."""
    path, values = _load_table(source, graph, "msw", 0.0)
    try:
        return ParameterTable(graph.switches, values)
    except Exception as e:
        raise FileFormatError(str(e), path=path) from e


def emit_params(theta: SwitchTable) -> str:
    out = []
    for sw, v, x in theta.items():
        out.append(f"msw {render_term(sw)} {render_term(v)} {_fmt(x)}")
    return "\n".join(out) + "\n"


def load_pseudo_counts(source: Source, graph: ExplanationGraph) -> PseudoCountTable:
    path, values = _load_table(source, graph, "delta", 0.0)
    try:
        return PseudoCountTable(graph.switches, values)
    except Exception as e:
        raise FileFormatError(str(e), path=path) from e


def emit_pseudo_counts(delta: PseudoCountTable) -> str:
    out = []
    for sw, v, x in delta.items():
        out.append(f"delta {render_term(sw)} {render_term(v)} {_fmt(x)}")
    return "\n".join(out) + "\n"


# -- grammars, corpora, treebanks ----------------------------------------


def load_grammar(source: Source) -> Grammar:
    path, lines = _read_lines(source)
    start = None
    rules: list[CFGRule] = []
    probs: list[Optional[float]] = []
    for ln, line in lines:
        toks = line.split()
        if toks[0] == "start":
            if len(toks) != 2:
                _fail(path, ln, "start needs one symbol")
            start = toks[1]
            continue
        if len(toks) < 3 or toks[1] != "->":
            _fail(path, ln, "rule syntax: <A> -> <s1> <s2> ... [: <prob>]")
        rhs = toks[2:]
        prob = None
        if ":" in rhs:
            ci = rhs.index(":")
            if ci != len(rhs) - 2:
                _fail(path, ln, "probability must be the final token after ':'")
            prob = _parse_float(rhs[ci + 1], path, ln, 0.0, 1.0)
            rhs = rhs[:ci]
        if not rhs:
            _fail(path, ln, "empty right-hand side")
        try:
            rules.append(CFGRule(toks[0], tuple(rhs)))
        except Exception as e:
            _fail(path, ln, str(e))
        probs.append(prob)
    if start is None:
        raise FileFormatError("missing 'start' line", path=path)
    try:
        return Grammar(start, rules, probs)
    except Exception as e:
        raise FileFormatError(str(e), path=path) from e


def emit_grammar(grammar: Grammar) -> str:
    out = [f"start {grammar.start}"]
    for rule, p in zip(grammar.rules, grammar.probs):
        line = f"{rule.lhs} -> " + " ".join(rule.rhs)
        if p is not None:
            line += f" : {_fmt(p)}"
        out.append(line)
    return "\n".join(out) + "\n"


def load_corpus(source: Source) -> list[list[str]]:
    _, lines = _read_lines(source)
    return [line.split() for _, line in lines]


def emit_corpus(sentences: Iterable[Sequence[str]]) -> str:
    return "\n".join(" ".join(s) for s in sentences) + "\n"


def load_treebank(source: Source) -> list[ParseTree]:
    path, lines = _read_lines(source)
    out = []
    for ln, line in lines:
        try:
            out.append(ParseTree.parse(line))
        except Exception as e:
            _fail(path, ln, str(e))
    return out


def emit_treebank(trees: Iterable[ParseTree]) -> str:
    return "\n".join(t.render() for t in trees) + "\n"


# -- NBH ------------------------------------------------------------------


def load_nbh_spec(source: Source) -> NBHSpec:
    path, lines = _read_lines(source)
    classes = None
    hidden = 1
    attrs: list[tuple[str, tuple[str, ...]]] = []
    for ln, line in lines:
        toks = line.split()
        if toks[0] == "class":
            if len(toks) < 2:
                _fail(path, ln, "class needs at least one label")
            classes = tuple(toks[1:])
        elif toks[0] == "hidden":
            if len(toks) != 2:
                _fail(path, ln, "hidden needs one integer")
            hidden = _parse_int(toks[1], path, ln)
        elif toks[0] == "attr":
            if len(toks) < 3:
                _fail(path, ln, "attr needs a name and at least one value")
            attrs.append((toks[1], tuple(toks[2:])))
        else:
            _fail(path, ln, f"unknown directive {toks[0]!r}")
    if classes is None:
        raise FileFormatError("missing 'class' line", path=path)
    try:
        return NBHSpec(classes, hidden, tuple(attrs))
    except Exception as e:
        raise FileFormatError(str(e), path=path) from e


def emit_nbh_spec(spec: NBHSpec) -> str:
    out = ["class " + " ".join(spec.classes), f"hidden {spec.n_hidden}"]
    for name, domain in spec.attributes:
        out.append(f"attr {name} " + " ".join(domain))
    return "\n".join(out) + "\n"


def load_nbh_data(source: Source, spec: Optional[NBHSpec] = None) -> list[DataRow]:
    path, lines = _read_lines(source)
    rows = []
    for ln, line in lines:
        try:
            row = DataRow.parse(line)
            if spec is not None:
                spec.check_row(row, need_class=False)
        except Exception as e:
            _fail(path, ln, str(e))
        rows.append(row)
    return rows


def emit_nbh_data(rows: Iterable[DataRow]) -> str:
    return "\n".join(r.render() for r in rows) + "\n"


# -- edge graphs -----------------------------------------------------------


def load_edge_graph(source: Source) -> tuple[EdgeGraph, list[tuple[int, int]]]:
    path, lines = _read_lines(source)
    edges = []
    queries = []
    for ln, line in lines:
        toks = line.split()
        if toks[0] == "edge":
            if len(toks) != 4:
                _fail(path, ln, "edge syntax: edge <u> <v> <p>")
            edges.append(
                (
                    _parse_int(toks[1], path, ln),
                    _parse_int(toks[2], path, ln),
                    _parse_float(toks[3], path, ln, 0.0, 1.0),
                )
            )
        elif toks[0] == "query":
            if len(toks) != 3:
                _fail(path, ln, "query syntax: query <from> <to>")
            queries.append((_parse_int(toks[1], path, ln), _parse_int(toks[2], path, ln)))
        else:
            _fail(path, ln, f"unknown directive {toks[0]!r}")
    try:
        return EdgeGraph(edges), queries
    except Exception as e:
        raise FileFormatError(str(e), path=path) from e


def emit_edge_graph(graph: EdgeGraph, queries: Sequence[tuple[int, int]] = ()) -> str:
    out = [f"edge {u} {v} {_fmt(p)}" for u, v, p in graph.edges]
    out.extend(f"query {a} {b}" for a, b in queries)
    return "\n".join(out) + "\n"


# -- reports ---------------------------------------------------------------


def emit_learn_report(report: LearnReport) -> str:
    out = [
        f"method {report.method}",
        f"iterations {report.iterations}",
        f"converged {str(report.converged).lower()}",
        f"termination {report.termination}",
        f"best_restart {report.best_restart_index}",
    ]
    for i, v in enumerate(report.objective_trace):
        out.append(f"objective {i} {_fmt(v)}")
    if report.degenerate_switches:
        out.append("degenerate " + " ".join(report.degenerate_switches))
    return "\n".join(out) + "\n"
