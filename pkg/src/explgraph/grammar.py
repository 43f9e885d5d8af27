"""Grammar frontends: top-down (rule-expansion) and left-corner parsing.

Both frontends compile one sentence into an explanation graph whose root
explanations correspond to derivations:

* ``compile_pcfg`` builds a chart over spans.  A goal ``A(i,j)`` means
  "nonterminal A derives tokens i..j"; each body applies one rule through
  a switch named after the nonterminal whose values are the possible
  right-hand sides.  Rules longer than two symbols go through dotted
  prefix goals so the graph stays linear in rule length.
* ``compile_plcg`` builds the bottom-up left-corner chart with three
  switch families: ``first(G)`` picks the word shifted for goal G,
  ``lc(G,B)`` picks the rule ``A -> B beta`` that grows a finished
  B-constituent, and ``att(A)`` decides attach versus project where A can
  be its own left corner.

The module also recovers parse trees from explanations, learns parameters
from treebanks by counting, samples corpora, and scores predictions with
exact-labelled / unlabelled-bracketing / zero-crossing metrics.
"""

from __future__ import annotations

import sys
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    ExplGraphError,
    ExplGraphWarning,
    InconsistentExplanation,
    LengthMismatch,
    Unparseable,
    VanishingAcceptance,
)
from .graph import (
    Explanation,
    ExplanationGraph,
    GoalId,
    GraphBuilder,
    SwitchDecl,
    SwitchInstance,
)
from .tables import ParameterTable, PseudoCountTable
from .terms import Term, check_symbol, render_term

__all__ = [
    "CFGRule",
    "Grammar",
    "ParseTree",
    "MetricsReport",
    "compile_pcfg",
    "compile_pcfg_corpus",
    "compile_plcg",
    "compile_plcg_corpus",
    "tree_from_explanation",
    "count_ml",
    "metrics",
    "gen_corpus",
    "CorpusSample",
    "tree_goals_graph",
]


@dataclass(frozen=True)
class CFGRule:
    lhs: str
    rhs: tuple[str, ...]

    def __post_init__(self):
        check_symbol(self.lhs)
        if not self.rhs:
            raise ExplGraphError(f"empty right-hand side for {self.lhs} (no epsilon rules)")
        for s in self.rhs:
            check_symbol(s)

    def __str__(self) -> str:
        return f"{self.lhs} -> {' '.join(self.rhs)}"


class Grammar:
    """A CFG with derived tables for both parsing styles.

    ``probs``, when given, assigns one probability per rule (aligned with
    ``rules``); absent probabilities mean the grammar is to be learned.
    Unit-rule cycles are rejected because they would make chart goals
    mutually recursive.
    """

    def __init__(
        self,
        start: str,
        rules: Sequence[CFGRule],
        probs: Optional[Sequence[Optional[float]]] = None,
    ):
        self.start = start
        self.rules = list(rules)
        self.probs = list(probs) if probs is not None else [None] * len(self.rules)
        if len(self.probs) != len(self.rules):
            raise ExplGraphError("probs must align with rules")
        self.nonterminals = {r.lhs for r in self.rules}
        if start not in self.nonterminals:
            raise ExplGraphError(f"start symbol {start} has no rules")
        self.terminals = {
            s for r in self.rules for s in r.rhs if s not in self.nonterminals
        }
        self.rules_for: dict[str, list[int]] = {}
        for i, r in enumerate(self.rules):
            self.rules_for.setdefault(r.lhs, []).append(i)
        self._check_unit_cycles()
        self.left_corner = self._left_corner_closure()
        self.first = {
            a: [s for s in self._lc_order(a) if s in self.terminals]
            for a in self.nonterminals
        }
        self._rule_set = {(r.lhs, r.rhs) for r in self.rules}

    def _check_unit_cycles(self) -> None:
        unit = {a: set() for a in self.nonterminals}
        for r in self.rules:
            if len(r.rhs) == 1 and r.rhs[0] in self.nonterminals:
                unit[r.lhs].add(r.rhs[0])
        seen: dict[str, int] = {}
        for a in self.nonterminals:
            if a in seen:
                continue
            stack, path = [a], []
            state = {}
            while stack:
                x = stack[-1]
                if state.get(x, 0) == 0:
                    state[x] = 1
                    path.append(x)
                    for y in unit[x]:
                        if state.get(y, 0) == 1:
                            cyc = path[path.index(y):] + [y]
                            raise ExplGraphError(
                                "unit-rule cycle: " + " -> ".join(cyc)
                            )
                        if state.get(y, 0) == 0:
                            stack.append(y)
                else:
                    if state[x] == 1:
                        state[x] = 2
                        path.pop()
                    stack.pop()
            seen.update(state)

    def _lc_order(self, a: str) -> list[str]:
        """Left-corner closure of one nonterminal, in discovery order."""
        out = [a]
        seen = {a}
        i = 0
        while i < len(out):
            x = out[i]
            i += 1
            for ridx in self.rules_for.get(x, ()):
                head = self.rules[ridx].rhs[0]
                if head not in seen:
                    seen.add(head)
                    out.append(head)
        return out

    def _left_corner_closure(self) -> dict[str, list[str]]:
        return {a: self._lc_order(a) for a in self.nonterminals}

    # -- switch naming ----------------------------------------------------

    def pcfg_switches(self) -> dict[str, tuple]:
        """Per nonterminal, the ordered tuple of right-hand sides."""
        return {
            a: tuple(self.rules[i].rhs for i in self.rules_for[a])
            for a in sorted(self.rules_for)
        }

    def pcfg_parameter_table(self) -> ParameterTable:
        """ParameterTable from the per-rule probabilities, if complete."""
        if any(p is None for p in self.probs):
            raise ExplGraphError("grammar has unassigned rule probabilities")
        decls = {a: SwitchDecl(a, rhss) for a, rhss in self.pcfg_switches().items()}
        data = {a: [self.probs[i] for i in self.rules_for[a]] for a in decls}
        return ParameterTable(decls, data)

    def lc_rule_values(self, g: str, b: str) -> list[int]:
        """Rule indices usable when a finished B grows toward goal G.

        Rules ``A -> B beta`` where A is in the left-corner closure of G,
        so no declared value is doomed by the reachability guard.
        """
        lc = set(self.left_corner[g])
        return [
            i
            for i, r in enumerate(self.rules)
            if r.rhs[0] == b and r.lhs in lc
        ]

    def validate_tree(self, tree: "ParseTree") -> None:
        for node in tree.walk():
            key = (node.label, tuple(c if isinstance(c, str) else c.label for c in node.children))
            if key not in self._rule_set:
                raise ExplGraphError(
                    f"tree node {node.label} -> {key[1]} matches no grammar rule"
                )


@dataclass(frozen=True)
class ParseTree:
    """Labelled tree; children are subtrees or terminal strings."""

    label: str
    children: tuple

    def __post_init__(self):
        if not isinstance(self.children, tuple):
            object.__setattr__(self, "children", tuple(self.children))

    def tokens(self) -> list[str]:
        out = []
        for c in self.children:
            if isinstance(c, str):
                out.append(c)
            else:
                out.extend(c.tokens())
        return out

    def walk(self):
        yield self
        for c in self.children:
            if isinstance(c, ParseTree):
                yield from c.walk()

    def shape(self):
        """Unlabelled copy: nested tuples of terminals."""
        return tuple(
            c if isinstance(c, str) else c.shape() for c in self.children
        )

    def brackets(self, start: int = 0) -> list[tuple[int, int]]:
        """Token spans (i, j), half-open, of every internal node."""
        spans = []
        pos = start
        for c in self.children:
            if isinstance(c, str):
                pos += 1
            else:
                spans.extend(c.brackets(pos))
                pos += len(c.tokens())
        spans.append((start, pos))
        return spans

    def rule_counts(self) -> dict[tuple[str, tuple], int]:
        counts: dict[tuple[str, tuple], int] = {}
        for node in self.walk():
            key = (
                node.label,
                tuple(c if isinstance(c, str) else c.label for c in node.children),
            )
            counts[key] = counts.get(key, 0) + 1
        return counts

    def render(self) -> str:
        inner = " ".join(
            c if isinstance(c, str) else c.render() for c in self.children
        )
        return f"({self.label} {inner})"

    def __str__(self) -> str:
        return self.render()

    @staticmethod
    def parse(text: str) -> "ParseTree":
        tokens = text.replace("(", " ( ").replace(")", " ) ").split()
        pos = 0

        def walk():
            nonlocal pos
            if tokens[pos] != "(":
                raise ExplGraphError(f"expected '(' in tree text {text!r}")
            pos += 1
            label = tokens[pos]
            pos += 1
            children = []
            while pos < len(tokens) and tokens[pos] != ")":
                if tokens[pos] == "(":
                    children.append(walk())
                else:
                    children.append(tokens[pos])
                    pos += 1
            if pos >= len(tokens):
                raise ExplGraphError(f"unbalanced tree text {text!r}")
            pos += 1
            return ParseTree(label, tuple(children))

        tree = walk()
        if pos != len(tokens):
            raise ExplGraphError(f"trailing tree text in {text!r}")
        return tree


# ---------------------------------------------------------------------------
# top-down chart compilation
# ---------------------------------------------------------------------------


def _check_sentence(grammar: Grammar, sentence: Sequence[str]) -> tuple[str, ...]:
    tokens = tuple(sentence)
    if not tokens:
        raise Unparseable("empty sentence")
    for t in tokens:
        if t not in grammar.terminals:
            raise Unparseable(f"token {t!r} is not a terminal of the grammar")
    return tokens


def _declare_pcfg_switches(builder: GraphBuilder, grammar: Grammar) -> None:
    for a, rhss in grammar.pcfg_switches().items():
        builder.declare_switch(a, rhss)


def _compile_pcfg_into(
    builder: GraphBuilder, grammar: Grammar, tokens: tuple[str, ...], ns: str
) -> GoalId:
    n = len(tokens)
    nts = grammar.nonterminals

    span_ok: set[tuple[str, int, int]] = set()
    dot_ok: set[tuple[int, int, int, int]] = set()

    def sym_ok(s: str, i: int, j: int) -> bool:
        if s in nts:
            return (s, i, j) in span_ok
        return j == i + 1 and tokens[i] == s

    for w in range(1, n + 1):
        for i in range(0, n - w + 1):
            j = i + w
            # dotted prefixes only touch strictly narrower spans
            for ridx, rule in enumerate(grammar.rules):
                for t in range(2, len(rule.rhs)):
                    if j - i < t:
                        continue
                    for k in range(i + t - 1, j):
                        prev = (
                            sym_ok(rule.rhs[0], i, k)
                            if t == 2
                            else (ridx, t - 1, i, k) in dot_ok
                        )
                        if prev and sym_ok(rule.rhs[t - 1], k, j):
                            dot_ok.add((ridx, t, i, j))
                            break
            # spans may chain through unit rules inside one width
            changed = True
            while changed:
                changed = False
                for a in nts:
                    if (a, i, j) in span_ok:
                        continue
                    for ridx in grammar.rules_for[a]:
                        rhs = grammar.rules[ridx].rhs
                        m = len(rhs)
                        if m == 1:
                            ok = sym_ok(rhs[0], i, j)
                        elif m == 2:
                            ok = any(
                                sym_ok(rhs[0], i, k) and sym_ok(rhs[1], k, j)
                                for k in range(i + 1, j)
                            )
                        else:
                            ok = any(
                                (ridx, m - 1, i, k) in dot_ok and sym_ok(rhs[m - 1], k, j)
                                for k in range(i + m - 1, j)
                            )
                        if ok:
                            span_ok.add((a, i, j))
                            changed = True
                            break

    if (grammar.start, 0, n) not in span_ok:
        raise Unparseable(f"no derivation of: {' '.join(tokens)}")

    _declare_pcfg_switches(builder, grammar)

    def span_goal(a: str, i: int, j: int) -> GoalId:
        return builder.goal(f"{ns}{a}({i},{j})")

    def dot_goal(ridx: int, t: int, i: int, j: int) -> GoalId:
        return builder.goal(f"{ns}dot({ridx},{t},{i},{j})")

    def sym_subgoals(s: str, i: int, j: int) -> Optional[list[GoalId]]:
        """Subgoal list covering one symbol, or None when it cannot."""
        if s in nts:
            return [span_goal(s, i, j)] if (s, i, j) in span_ok else None
        return [] if (j == i + 1 and tokens[i] == s) else None

    built_dots: set[tuple[int, int, int, int]] = set()

    def build_dot(ridx: int, t: int, i: int, j: int) -> GoalId:
        gid = dot_goal(ridx, t, i, j)
        key = (ridx, t, i, j)
        if key in built_dots:
            return gid
        built_dots.add(key)
        rhs = grammar.rules[ridx].rhs
        for k in range(i + t - 1, j):
            last = sym_subgoals(rhs[t - 1], k, j)
            if last is None:
                continue
            if t == 2:
                first = sym_subgoals(rhs[0], i, k)
                if first is not None:
                    builder.add_body(gid, first + last)
            elif (ridx, t - 1, i, k) in dot_ok:
                builder.add_body(gid, [build_dot(ridx, t - 1, i, k)] + last)
        return gid

    # goals bottom-up by width so subgoals exist before references
    for w in range(1, n + 1):
        for i in range(0, n - w + 1):
            j = i + w
            for a in sorted(nts):
                if (a, i, j) not in span_ok:
                    continue
                gid = span_goal(a, i, j)
                for ridx in grammar.rules_for[a]:
                    rhs = grammar.rules[ridx].rhs
                    m = len(rhs)
                    inst = [SwitchInstance(a, rhs)]
                    if m == 1:
                        subs = sym_subgoals(rhs[0], i, j)
                        if subs is not None:
                            builder.add_body(gid, subs, inst)
                    elif m == 2:
                        for k in range(i + 1, j):
                            left = sym_subgoals(rhs[0], i, k)
                            right = sym_subgoals(rhs[1], k, j)
                            if left is not None and right is not None:
                                builder.add_body(gid, left + right, inst)
                    else:
                        for k in range(i + m - 1, j):
                            if (ridx, m - 1, i, k) not in dot_ok:
                                continue
                            last = sym_subgoals(rhs[m - 1], k, j)
                            if last is not None:
                                builder.add_body(
                                    gid, [build_dot(ridx, m - 1, i, k)] + last, inst
                                )
    return span_goal(grammar.start, 0, n)


def compile_pcfg(grammar: Grammar, sentence: Sequence[str]) -> ExplanationGraph:
    """Chart-style explanation graph for one sentence, root = full span."""
    tokens = _check_sentence(grammar, sentence)
    builder = GraphBuilder()
    root = _compile_pcfg_into(builder, grammar, tokens, "")
    builder.add_root(root)
    return builder.build()


def _compile_corpus(compile_into, grammar, sentences) -> tuple[ExplanationGraph, list[GoalId]]:
    builder = GraphBuilder()
    uid: dict[tuple[str, ...], int] = {}
    root_of: dict[int, GoalId] = {}
    goals: list[GoalId] = []
    for sent in sentences:
        tokens = _check_sentence(grammar, sent)
        u = uid.setdefault(tokens, len(uid))
        if u not in root_of:
            root_of[u] = compile_into(builder, grammar, tokens, f"s{u}:")
            builder.add_root(root_of[u])
        goals.append(root_of[u])
    return builder.build(), goals


def compile_pcfg_corpus(
    grammar: Grammar, sentences: Iterable[Sequence[str]]
) -> tuple[ExplanationGraph, list[GoalId]]:
    """One shared graph for a corpus; repeated sentences share their chart."""
    return _compile_corpus(_compile_pcfg_into, grammar, sentences)


# ---------------------------------------------------------------------------
# left-corner compilation
# ---------------------------------------------------------------------------


def _first_switch(g: str) -> Term:
    return Term("first", (g,))


def _lc_switch(g: str, b: str) -> Term:
    return Term("lc", (g, b))


def _att_switch(a: str) -> Term:
    return Term("att", (a,))


def _rule_value(rule: CFGRule) -> Term:
    return Term("rule", (rule.lhs, tuple(rule.rhs)))


def _declare_plcg_switches(builder: GraphBuilder, grammar: Grammar) -> None:
    for g in sorted(grammar.nonterminals):
        if grammar.first[g]:
            builder.declare_switch(_first_switch(g), tuple(grammar.first[g]))
        for b in grammar.left_corner[g]:
            ridxs = grammar.lc_rule_values(g, b)
            if ridxs:
                builder.declare_switch(
                    _lc_switch(g, b), tuple(_rule_value(grammar.rules[i]) for i in ridxs)
                )
    for a in sorted(grammar.nonterminals):
        if grammar.lc_rule_values(a, a):
            builder.declare_switch(_att_switch(a), ("att", "pro"))


def _compile_plcg_into(
    builder: GraphBuilder, grammar: Grammar, tokens: tuple[str, ...], ns: str
) -> GoalId:
    n = len(tokens)
    nts = grammar.nonterminals
    _declare_plcg_switches(builder, grammar)
    memo: dict[tuple, Optional[GoalId]] = {}

    def syms_label(syms: tuple[str, ...]) -> str:
        return render_term(tuple(syms))

    def build_g(syms: tuple[str, ...], i: int, j: int) -> Optional[GoalId]:
        key = ("g", syms, i, j)
        if key in memo:
            return memo[key]
        memo[key] = None  # cycle guard; construction below must not re-enter
        bodies: list[tuple[list[GoalId], list[SwitchInstance]]] = []
        if not syms:
            if i == j:
                bodies.append(([], []))
        else:
            g0, rest = syms[0], syms[1:]
            if g0 not in nts:
                if i < j and tokens[i] == g0:
                    sub = build_g(rest, i + 1, j)
                    if sub is not None:
                        bodies.append(([sub], []))
            elif i < j:
                w = tokens[i]
                if w in grammar.first.get(g0, ()):
                    for k in range(i + 1, j + 1):
                        lc_goal = build_lc(g0, w, i + 1, k)
                        if lc_goal is None:
                            continue
                        g_goal = build_g(rest, k, j)
                        if g_goal is not None:
                            bodies.append(
                                (
                                    [lc_goal, g_goal],
                                    [SwitchInstance(_first_switch(g0), w)],
                                )
                            )
        if not bodies:
            return None
        gid = builder.goal(f"{ns}g({syms_label(syms)},{i},{j})")
        for subs, inst in bodies:
            builder.add_body(gid, subs, inst)
        memo[key] = gid
        return gid

    def build_lc(g0: str, b: str, k: int, j: int) -> Optional[GoalId]:
        key = ("lc", g0, b, k, j)
        if key in memo:
            return memo[key]
        memo[key] = None
        bodies: list[tuple[list[GoalId], list[SwitchInstance]]] = []
        for ridx in grammar.lc_rule_values(g0, b):
            rule = grammar.rules[ridx]
            beta = tuple(rule.rhs[1:])
            choose = SwitchInstance(_lc_switch(g0, b), _rule_value(rule))
            if rule.lhs == g0:
                self_lc = bool(grammar.lc_rule_values(g0, g0))
                done = build_g(beta, k, j)
                if done is not None:
                    inst = [choose]
                    if self_lc:
                        inst.append(SwitchInstance(_att_switch(g0), "att"))
                    bodies.append(([done], inst))
                if self_lc:
                    for m in range(k, j + 1):
                        mid = build_g(beta, k, m)
                        if mid is None:
                            continue
                        nxt = build_lc(g0, g0, m, j)
                        if nxt is not None:
                            bodies.append(
                                (
                                    [mid, nxt],
                                    [choose, SwitchInstance(_att_switch(g0), "pro")],
                                )
                            )
            else:
                for m in range(k, j + 1):
                    mid = build_g(beta, k, m)
                    if mid is None:
                        continue
                    nxt = build_lc(g0, rule.lhs, m, j)
                    if nxt is not None:
                        bodies.append(([mid, nxt], [choose]))
        if not bodies:
            return None
        gid = builder.goal(f"{ns}lc({g0},{b},{k},{j})")
        for subs, inst in bodies:
            builder.add_body(gid, subs, inst)
        memo[key] = gid
        return gid

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 10_000))
    try:
        root = build_g((grammar.start,), 0, n)
    finally:
        sys.setrecursionlimit(old_limit)
    if root is None:
        raise Unparseable(f"no left-corner derivation of: {' '.join(tokens)}")
    return root


def compile_plcg(grammar: Grammar, sentence: Sequence[str]) -> ExplanationGraph:
    """Left-corner explanation graph for one sentence."""
    tokens = _check_sentence(grammar, sentence)
    builder = GraphBuilder()
    root = _compile_plcg_into(builder, grammar, tokens, "")
    builder.add_root(root)
    return builder.build()


def compile_plcg_corpus(
    grammar: Grammar, sentences: Iterable[Sequence[str]]
) -> tuple[ExplanationGraph, list[GoalId]]:
    return _compile_corpus(_compile_plcg_into, grammar, sentences)


# ---------------------------------------------------------------------------
# trees from explanations
# ---------------------------------------------------------------------------


def tree_from_explanation(
    grammar: Grammar,
    sentence: Sequence[str],
    explanation: Explanation,
    mode: str = "pcfg",
) -> ParseTree:
    """Parse tree whose switch usage reproduces the explanation exactly.

    The tree is found by replaying the derivation process under the
    constraint that every switch instance is consumed exactly as often as
    the explanation records; the first derivation in canonical order
    (rule order, leftmost split first) is returned.  When distinct
    derivations share one multiset their trees tie on probability, and
    the canonical one is the deterministic choice.
    """
    tokens = tuple(sentence)
    if mode == "pcfg":
        tree = _pcfg_tree_search(grammar, tokens, explanation)
    elif mode == "plcg":
        tree = _plcg_tree_search(grammar, tokens, explanation)
    else:
        raise ExplGraphError(f"unknown mode {mode!r}")
    if tree is None:
        raise InconsistentExplanation(
            "explanation does not match any derivation of the sentence"
        )
    return tree


def _pcfg_tree_search(grammar, tokens, explanation) -> Optional[ParseTree]:
    remaining = {i: 0 for i in range(len(grammar.rules))}
    rule_of = {
        (r.lhs, render_term(tuple(r.rhs))): i for i, r in enumerate(grammar.rules)
    }
    total = 0
    for (s, v), m in explanation.items():
        key = (render_term(s), render_term(v))
        if key not in rule_of:
            return None
        remaining[rule_of[key]] += m
        total += m
    state = {"left": total}

    def seq(syms, i, j):
        if not syms:
            if i == j:
                yield []
            return
        s, rest = syms[0], syms[1:]
        if s not in grammar.nonterminals:
            if i < j and tokens[i] == s:
                for tail in seq(rest, i + 1, j):
                    yield [s] + tail
            return
        for k in range(i + 1, j - len(rest) + 1):
            for t in nt(s, i, k):
                for tail in seq(rest, k, j):
                    yield [t] + tail

    def nt(a, i, j):
        for ridx in grammar.rules_for.get(a, ()):
            if remaining[ridx] <= 0:
                continue
            remaining[ridx] -= 1
            state["left"] -= 1
            for kids in seq(grammar.rules[ridx].rhs, i, j):
                yield ParseTree(a, tuple(kids))
            remaining[ridx] += 1
            state["left"] += 1

    for tree in nt(grammar.start, 0, len(tokens)):
        if state["left"] == 0:
            return tree
        # a derivation that leaves instances unconsumed is a different
        # explanation; keep searching
    return None


def _plcg_tree_search(grammar, tokens, explanation) -> Optional[ParseTree]:
    counts: dict[str, int] = {}
    for (s, v), m in explanation.items():
        counts[f"{render_term(s)}={render_term(v)}"] = m
    state = {"left": sum(counts.values())}

    def take(switch, value) -> bool:
        key = f"{render_term(switch)}={render_term(value)}"
        if counts.get(key, 0) <= 0:
            return False
        counts[key] -= 1
        state["left"] -= 1
        return True

    def put(switch, value) -> None:
        key = f"{render_term(switch)}={render_term(value)}"
        counts[key] += 1
        state["left"] += 1

    def g_seq(syms, i, j):
        """Yields (list of child trees/terminals, ) consuming i..j."""
        if not syms:
            if i == j:
                yield []
            return
        s, rest = syms[0], syms[1:]
        if s not in grammar.nonterminals:
            if i < j and tokens[i] == s:
                for tail in g_seq(rest, i + 1, j):
                    yield [s] + tail
            return
        if i >= j:
            return
        w = tokens[i]
        if w not in grammar.first.get(s, ()):
            return
        if not take(_first_switch(s), w):
            return
        for k in range(i + 1, j + 1):
            for stree in lc(s, w, w, i + 1, k):
                for tail in g_seq(rest, k, j):
                    yield [stree] + tail
        put(_first_switch(s), w)

    def lc(g0, b, btree, k, j):
        """Grow a finished b-constituent (tree ``btree``) into a g0 ending at j."""
        for ridx in grammar.lc_rule_values(g0, b):
            rule = grammar.rules[ridx]
            if not take(_lc_switch(g0, b), _rule_value(rule)):
                continue
            beta = tuple(rule.rhs[1:])
            if rule.lhs == g0:
                self_lc = bool(grammar.lc_rule_values(g0, g0))
                if self_lc:
                    if take(_att_switch(g0), "att"):
                        for kids in g_seq(beta, k, j):
                            yield ParseTree(g0, tuple([btree] + kids))
                        put(_att_switch(g0), "att")
                    if take(_att_switch(g0), "pro"):
                        for m in range(k, j + 1):
                            for kids in g_seq(beta, k, m):
                                atree = ParseTree(g0, tuple([btree] + kids))
                                yield from lc(g0, g0, atree, m, j)
                        put(_att_switch(g0), "pro")
                else:
                    for kids in g_seq(beta, k, j):
                        yield ParseTree(g0, tuple([btree] + kids))
            else:
                for m in range(k, j + 1):
                    for kids in g_seq(beta, k, m):
                        atree = ParseTree(rule.lhs, tuple([btree] + kids))
                        yield from lc(g0, rule.lhs, atree, m, j)
            put(_lc_switch(g0, b), _rule_value(rule))

    for trees in g_seq((grammar.start,), 0, len(tokens)):
        if state["left"] == 0 and len(trees) == 1 and isinstance(trees[0], ParseTree):
            return trees[0]
    return None


# ---------------------------------------------------------------------------
# counting, metrics, sampling
# ---------------------------------------------------------------------------


def count_ml(
    grammar: Grammar,
    treebank: Sequence[ParseTree],
    delta: Optional[PseudoCountTable] = None,
) -> ParameterTable:
    """Rule-expansion probabilities by (pseudo-)counting over a treebank."""
    from .graph import SwitchDecl

    switches = grammar.pcfg_switches()
    decls = {a: SwitchDecl(a, rhss) for a, rhss in switches.items()}
    counts = {a: np.zeros(len(rhss)) for a, rhss in switches.items()}
    for tree in treebank:
        grammar.validate_tree(tree)
        for (lhs, rhs), c in tree.rule_counts().items():
            counts[lhs][decls[lhs].value_index(tuple(rhs))] += c
    if delta is not None:
        for a in counts:
            counts[a] = counts[a] + delta.vector(a, len(decls[a].values))
    data = {}
    flagged = []
    for a, vec in counts.items():
        s = vec.sum()
        if s <= 0:
            flagged.append(a)
            data[a] = np.full(len(vec), 1.0 / len(vec))
        else:
            data[a] = vec / s
    if flagged:
        warnings.warn(
            "nonterminals unseen in the treebank got uniform probabilities: "
            + ", ".join(flagged),
            ExplGraphWarning,
            stacklevel=2,
        )
    return ParameterTable(decls, data)


@dataclass
class MetricsReport:
    """Exact labelled match, unlabelled bracketing match, zero crossing."""

    lt: float
    bt: float
    zero_cb: float
    n: int


def _crossing(pred_spans, ref_spans) -> bool:
    for (i, j) in pred_spans:
        for (s, t) in ref_spans:
            # half-open spans; proper overlap without containment
            if s < i < t < j or i < s < j < t:
                return True
    return False


def metrics(predicted: Sequence[ParseTree], reference: Sequence[ParseTree]) -> MetricsReport:
    """Score aligned tree lists; all three metrics are percentages."""
    if len(predicted) != len(reference):
        raise LengthMismatch(
            f"{len(predicted)} predictions vs {len(reference)} references"
        )
    n = len(predicted)
    if n == 0:
        raise LengthMismatch("empty tree lists")
    lt = bt = cb = 0
    for p, r in zip(predicted, reference):
        if p == r:
            lt += 1
        if p.shape() == r.shape():
            bt += 1
        if not _crossing(p.brackets(), r.brackets()):
            cb += 1
    return MetricsReport(100.0 * lt / n, 100.0 * bt / n, 100.0 * cb / n, n)


@dataclass
class CorpusSample:
    """Accepted samples plus rejection bookkeeping."""

    samples: list[tuple[list[str], ParseTree]]
    rejected: int
    attempted: int

    def sentences(self) -> list[list[str]]:
        return [s for s, _ in self.samples]

    def trees(self) -> list[ParseTree]:
        return [t for _, t in self.samples]


def gen_corpus(
    grammar: Grammar,
    theta: ParameterTable,
    n: int,
    seed: int = 0,
    max_depth: int = 20,
) -> CorpusSample:
    """Sample sentence/tree pairs from the rule-expansion process.

    Derivations nesting rules deeper than ``max_depth`` are rejected and
    resampled, which conditions the distribution on bounded depth rather
    than renormalising it.  Raises :class:`VanishingAcceptance` when the
    rejection rate exceeds 99%.
    """
    rng = np.random.default_rng(seed)
    cum = {
        a: np.cumsum(theta.vector(a, len(grammar.rules_for[a])))
        for a in grammar.rules_for
    }

    class TooDeep(Exception):
        pass

    def sample(a: str, depth: int) -> ParseTree:
        if depth >= max_depth:
            raise TooDeep()
        pick = min(int(np.searchsorted(cum[a], rng.random(), side="right")), len(cum[a]) - 1)
        ridx = grammar.rules_for[a][pick]
        kids = []
        for s in grammar.rules[ridx].rhs:
            if s in grammar.nonterminals:
                kids.append(sample(s, depth + 1))
            else:
                kids.append(s)
        return ParseTree(a, tuple(kids))

    samples: list[tuple[list[str], ParseTree]] = []
    rejected = attempted = 0
    while len(samples) < n:
        attempted += 1
        try:
            tree = sample(grammar.start, 0)
        except TooDeep:
            rejected += 1
            if attempted >= 100 and rejected / attempted > 0.99:
                raise VanishingAcceptance(
                    f"rejected {rejected} of {attempted} draws at max_depth={max_depth}"
                ) from None
            continue
        samples.append((tree.tokens(), tree))
    return CorpusSample(samples, rejected, attempted)


def tree_goals_graph(
    grammar: Grammar, treebank: Sequence[ParseTree]
) -> tuple[ExplanationGraph, list[GoalId]]:
    """Complete-data goals: one single-explanation goal per distinct tree.

    The goal's only explanation is the tree's rule multiset, so learning
    on these goals must agree with direct counting.
    """
    builder = GraphBuilder()
    _declare_pcfg_switches(builder, grammar)
    goals: list[GoalId] = []
    seen: dict[str, GoalId] = {}
    for tree in treebank:
        grammar.validate_tree(tree)
        label = f"tree:{tree.render().replace(' ', '.')}"
        gid = seen.get(label)
        if gid is None:
            gid = builder.goal(label)
            inst = [
                SwitchInstance(lhs, tuple(rhs), c)
                for (lhs, rhs), c in sorted(
                    tree.rule_counts().items(),
                    key=lambda kv: (kv[0][0], render_term(tuple(kv[0][1]))),
                )
            ]
            builder.add_body(gid, [], inst)
            builder.add_root(gid)
            seen[label] = gid
        goals.append(gid)
    return builder.build(), goals
