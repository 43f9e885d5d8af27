"""Non-grammar model frontends.

``compile_nbh`` encodes a naive-Bayes model with a hidden per-class
cluster variable: the class draw, a per-class hidden-cluster draw, and one
attribute draw per attribute conditioned on (class, cluster).  Missing
attribute values branch over the whole attribute domain, i.e. they are
marginalised.

``compile_path_graph`` encodes probabilistic reachability in an edge-
labelled graph: each goal is a (current node, target, visited set) state,
bodies follow an incident edge in either direction, and the visited set
keeps paths simple (and the goal relation acyclic).  Distinct simple
paths can share edges without conflicting on any switch, so the root's
explanations overlap: sum-product values over this frontend are scores,
while Viterbi inference and Viterbi training remain exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import AllZero, ExplGraphError, InvalidRow, NoPath
from .graph import ExplanationGraph, GoalId, GraphBuilder, SwitchDecl, SwitchInstance
from .inference import inside_prob
from .tables import ParameterTable
from .terms import Term

__all__ = [
    "NBHSpec",
    "DataRow",
    "EdgeGraph",
    "compile_nbh",
    "compile_nbh_corpus",
    "nbh_classify",
    "compile_path_graph",
    "compile_path_queries",
    "six_node_demo_graph",
]

MISSING = "?"


@dataclass(frozen=True)
class NBHSpec:
    """Classes, number of hidden clusters per class, attribute domains."""

    classes: tuple[str, ...]
    n_hidden: int
    attributes: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self):
        if not self.classes:
            raise ExplGraphError("need at least one class")
        if self.n_hidden < 1:
            raise ExplGraphError("n_hidden must be >= 1")
        for name, domain in self.attributes:
            if not domain:
                raise ExplGraphError(f"attribute {name} has an empty domain")

    @property
    def hidden_values(self) -> tuple[int, ...]:
        return tuple(range(1, self.n_hidden + 1))

    def class_switch(self):
        return "class"

    def hclass_switch(self, c: str) -> Term:
        return Term("hclass", (c,))

    def attr_switch(self, j: int, c: str, h: int) -> Term:
        """Switch for attribute ``j`` (1-based) in cluster (c, h)."""
        return Term("attr", (j, c, h))

    def declare(self, builder: GraphBuilder) -> None:
        builder.declare_switch(self.class_switch(), self.classes)
        for c in self.classes:
            builder.declare_switch(self.hclass_switch(c), self.hidden_values)
            for j, (_, domain) in enumerate(self.attributes, start=1):
                for h in self.hidden_values:
                    builder.declare_switch(self.attr_switch(j, c, h), domain)

    def check_row(self, row: "DataRow", need_class: bool) -> None:
        if need_class and (row.cls is None or row.cls not in self.classes):
            raise InvalidRow(f"row class {row.cls!r} not in {self.classes}")
        if row.cls is not None and row.cls not in self.classes:
            raise InvalidRow(f"row class {row.cls!r} not in {self.classes}")
        if len(row.values) != len(self.attributes):
            raise InvalidRow(
                f"row has {len(row.values)} attributes, expected {len(self.attributes)}"
            )
        for v, (name, domain) in zip(row.values, self.attributes):
            if v is not None and v not in domain:
                raise InvalidRow(f"value {v!r} not in domain of attribute {name}")


@dataclass(frozen=True)
class DataRow:
    """One observation; ``None`` marks a missing value ('?' on disk)."""

    cls: Optional[str]
    values: tuple[Optional[str], ...]

    @staticmethod
    def parse(text: str) -> "DataRow":
        fields = [f.strip() for f in text.split(",")]
        if not fields:
            raise InvalidRow("empty row")
        cls = None if fields[0] == MISSING else fields[0]
        vals = tuple(None if f == MISSING else f for f in fields[1:])
        return DataRow(cls, vals)

    def render(self) -> str:
        first = MISSING if self.cls is None else self.cls
        return ",".join([first] + [MISSING if v is None else v for v in self.values])

    def without_class(self) -> "DataRow":
        return DataRow(None, self.values)


def _row_label(row: DataRow, observed_class: bool) -> str:
    cls = row.cls if observed_class else MISSING
    vals = ",".join(MISSING if v is None else v for v in row.values)
    return f"nbh({cls}|{vals})"


def _compile_nbh_into(
    builder: GraphBuilder, spec: NBHSpec, row: DataRow, observed_class: bool
) -> GoalId:
    spec.check_row(row, need_class=observed_class)
    root = builder.goal(_row_label(row, observed_class))
    classes = (row.cls,) if observed_class else spec.classes
    for c in classes:
        for h in spec.hidden_values:
            instances = [
                SwitchInstance(spec.class_switch(), c),
                SwitchInstance(spec.hclass_switch(c), h),
            ]
            subgoals: list[GoalId] = []
            for j, (name, domain) in enumerate(spec.attributes, start=1):
                v = row.values[j - 1]
                if v is None:
                    any_goal = builder.goal(f"any({j},{c},{h})")
                    if not builder.has_bodies(any_goal):
                        for dv in domain:
                            builder.add_body(
                                any_goal, [], [SwitchInstance(spec.attr_switch(j, c, h), dv)]
                            )
                    subgoals.append(any_goal)
                else:
                    instances.append(SwitchInstance(spec.attr_switch(j, c, h), v))
            builder.add_body(root, subgoals, instances)
    return root


def compile_nbh(spec: NBHSpec, row: DataRow, observed_class: bool = True) -> ExplanationGraph:
    """Explanation graph of one row; branches over hidden cluster, any
    missing attributes, and (when the class is unobserved) the class."""
    builder = GraphBuilder()
    spec.declare(builder)
    root = _compile_nbh_into(builder, spec, row, observed_class)
    builder.add_root(root)
    return builder.build()


def compile_nbh_corpus(
    spec: NBHSpec, rows: Sequence[DataRow], observed_class: bool = True
) -> tuple[ExplanationGraph, list[GoalId]]:
    """Shared graph over many rows; identical rows share one goal."""
    builder = GraphBuilder()
    spec.declare(builder)
    goals: list[GoalId] = []
    seen: dict[str, GoalId] = {}
    for row in rows:
        label = _row_label(row, observed_class)
        gid = seen.get(label)
        if gid is None:
            gid = _compile_nbh_into(builder, spec, row, observed_class)
            builder.add_root(gid)
            seen[label] = gid
        goals.append(gid)
    return builder.build(), goals


def nbh_classify(
    spec: NBHSpec, theta: ParameterTable, row: DataRow
) -> tuple[str, np.ndarray]:
    """Most probable class and the posterior vector over classes.

    The hidden cluster (and any missing attribute) is summed out by the
    inside computation; posteriors are the per-class joint scores
    normalised across classes.  Ties break toward the earlier entry of
    the declared class list.
    """
    builder = GraphBuilder()
    spec.declare(builder)
    roots = [
        _compile_nbh_into(builder, spec, DataRow(c, row.values), observed_class=True)
        for c in spec.classes
    ]
    for r in roots:
        builder.add_root(r)
    graph = builder.build()
    table = inside_prob(graph, theta)
    logs = np.array([table.log_value(r) for r in roots])
    if np.all(np.isneginf(logs)):
        raise AllZero("all class scores are zero for this row")
    shift = logs - logs.max()
    post = np.exp(shift)
    post /= post.sum()
    return spec.classes[int(np.argmax(post))], post


# ---------------------------------------------------------------------------
# probabilistic graph reachability
# ---------------------------------------------------------------------------


@dataclass
class EdgeGraph:
    """Directed probabilistic edges; traversal may use either direction."""

    edges: list[tuple[int, int, float]] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for u, v, p in self.edges:
            if u == v:
                raise ExplGraphError(f"self-loop on node {u}")
            if not (0.0 <= p <= 1.0):
                raise ExplGraphError(f"edge ({u},{v}) probability {p} outside [0,1]")
            if (u, v) in seen:
                raise ExplGraphError(f"duplicate edge ({u},{v})")
            seen.add((u, v))

    @property
    def nodes(self) -> list[int]:
        out = []
        for u, v, _ in self.edges:
            for x in (u, v):
                if x not in out:
                    out.append(x)
        return sorted(out)

    def switch(self, u: int, v: int) -> Term:
        return Term("d_e", (u, v))

    def declare(self, builder: GraphBuilder) -> None:
        for u, v, _ in self.edges:
            builder.declare_switch(self.switch(u, v), ("on", "off"))

    def parameter_table(self) -> ParameterTable:
        decls = {
            str(self.switch(u, v)): SwitchDecl(self.switch(u, v), ("on", "off"))
            for u, v, _ in self.edges
        }
        data = {str(self.switch(u, v)): [p, 1.0 - p] for u, v, p in self.edges}
        return ParameterTable(decls, data)

    def moves(self, u: int) -> list[tuple[int, Term]]:
        """Edge moves leaving ``u`` in either direction.

        Ordered by descending neighbour node, out-edge before in-edge
        between the same pair.  The order fixes the body order of compiled
        path goals and hence which path wins argmax ties.
        """
        out = [(v, self.switch(u, v)) for (x, v, _) in self.edges if x == u]
        inc = [(x, self.switch(x, u)) for (x, v, _) in self.edges if v == u]
        keyed = [(z, 0, sw) for z, sw in out] + [(z, 1, sw) for z, sw in inc]
        keyed.sort(key=lambda t: (-t[0], t[1]))
        return [(z, sw) for z, _, sw in keyed]


def _path_label(u: int, target: int, visited: frozenset) -> str:
    inner = ",".join(str(x) for x in sorted(visited))
    return f"path({u},{target},[{inner}])"


def _compile_path_into(
    builder: GraphBuilder,
    graph: EdgeGraph,
    frm: int,
    target: int,
    memo: Optional[dict] = None,
) -> Optional[GoalId]:
    # states are shared across queries: (u, target, visited) determines the
    # goal completely, so the memo must outlive a single query
    if memo is None:
        memo = {}

    def build(u: int, visited: frozenset) -> Optional[GoalId]:
        key = (u, target, visited)
        if key in memo:
            return memo[key]
        memo[key] = None
        if u == target:
            gid = builder.goal(_path_label(u, target, visited))
            builder.add_body(gid, [], [])
            memo[key] = gid
            return gid
        bodies = []
        for z, sw in graph.moves(u):
            if z in visited:
                continue
            child = build(z, visited | {z})
            if child is not None:
                bodies.append(([child], [SwitchInstance(sw, "on")]))
        if not bodies:
            return None
        gid = builder.goal(_path_label(u, target, visited))
        for subs, inst in bodies:
            builder.add_body(gid, subs, inst)
        memo[key] = gid
        return gid

    return build(frm, frozenset({frm}))


def compile_path_graph(graph: EdgeGraph, frm: int, to: int) -> ExplanationGraph:
    """Explanation graph whose root explanations are the simple paths
    between two nodes (edges usable in either direction)."""
    nodes = graph.nodes
    if frm not in nodes or to not in nodes:
        raise ExplGraphError(f"unknown node in query ({frm},{to})")
    builder = GraphBuilder()
    graph.declare(builder)
    root = _compile_path_into(builder, graph, frm, to)
    if root is None:
        raise NoPath(f"no path from {frm} to {to}")
    builder.add_root(root)
    return builder.build()


def compile_path_queries(
    graph: EdgeGraph, queries: Sequence[tuple[int, int]]
) -> tuple[ExplanationGraph, list[GoalId]]:
    """One shared graph for several reachability queries."""
    nodes = graph.nodes
    builder = GraphBuilder()
    graph.declare(builder)
    goals = []
    memo: dict = {}
    for frm, to in queries:
        if frm not in nodes or to not in nodes:
            raise ExplGraphError(f"unknown node in query ({frm},{to})")
        root = _compile_path_into(builder, graph, frm, to, memo)
        if root is None:
            raise NoPath(f"no path from {frm} to {to}")
        builder.add_root(root)
        goals.append(root)
    return builder.build(), goals


def six_node_demo_graph() -> EdgeGraph:
    """The bundled six-node demo graph used by the CLI session command."""
    return EdgeGraph(
        [
            (1, 2, 0.9),
            (2, 3, 0.8),
            (3, 4, 0.6),
            (1, 6, 0.7),
            (2, 6, 0.5),
            (6, 5, 0.4),
            (5, 3, 0.7),
            (5, 4, 0.2),
        ]
    )
