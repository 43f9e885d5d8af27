"""Core explanation-graph data model.

An explanation graph is an acyclic AND/OR structure: every *defined goal*
has a defining formula ``H <-> B_1 v ... v B_h`` whose bodies conjoin
references to other defined goals with instances of *random switches*
(named discrete choices over declared finite value sets).  An
*explanation* of a goal is a multiset of switch instances obtained by
picking one body per goal encountered; the graph shares substructure so
that sum-product and argmax dynamic programming run in time linear in its
size (see :mod:`explgraph.inference`).

This module owns the data model, structural validation, a desk-scale
brute-force enumerator used as an oracle in tests, and the exclusiveness
diagnostic.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import (
    CyclicGraph,
    DanglingReference,
    ExplGraphError,
    ExplosionLimit,
    ExplGraphWarning,
    MissingParameter,
    UndeclaredValue,
)
from .terms import TermLike, render_term

__all__ = [
    "SwitchDecl",
    "SwitchInstance",
    "Explanation",
    "Body",
    "DefiningFormula",
    "ExplanationGraph",
    "GraphBuilder",
    "validate_graph",
    "enumerate_explanations",
    "check_exclusiveness",
    "explanation_prob",
    "merge_graphs",
]

GoalId = int


@dataclass(frozen=True)
class SwitchDecl:
    """A switch name together with its ordered, distinct outcome values."""

    id: TermLike
    values: tuple

    def __post_init__(self):
        if not isinstance(self.values, tuple):
            object.__setattr__(self, "values", tuple(self.values))
        if len(self.values) < 1:
            raise ExplGraphError(f"switch {render_term(self.id)} declares no values")
        rendered = [render_term(v) for v in self.values]
        if len(set(rendered)) != len(rendered):
            raise ExplGraphError(
                f"switch {render_term(self.id)} declares duplicate values"
            )

    def value_index(self, value: TermLike) -> int:
        try:
            return self.values.index(value)
        except ValueError:
            raise UndeclaredValue(
                f"value {render_term(value)} not declared for switch "
                f"{render_term(self.id)}"
            ) from None


@dataclass(frozen=True)
class SwitchInstance:
    """One switch outcome occurring ``mult`` times in a conjunction."""

    switch: TermLike
    value: TermLike
    mult: int = 1

    def __post_init__(self):
        if self.mult < 1:
            raise ExplGraphError("switch instance multiplicity must be >= 1")


class Explanation:
    """An immutable multiset of switch instances keyed by (switch, value)."""

    __slots__ = ("_items", "_hash")

    def __init__(self, instances: Iterable[SwitchInstance] = ()):
        counts: dict = {}
        for inst in instances:
            key = (inst.switch, inst.value)
            counts[key] = counts.get(key, 0) + inst.mult
        self._items = tuple(
            sorted(
                counts.items(),
                key=lambda kv: (render_term(kv[0][0]), render_term(kv[0][1])),
            )
        )
        self._hash = hash(self._items)

    @property
    def instances(self) -> tuple[SwitchInstance, ...]:
        return tuple(SwitchInstance(s, v, m) for (s, v), m in self._items)

    def items(self) -> tuple:
        """Sorted ((switch, value), mult) pairs."""
        return self._items

    def count(self, switch: TermLike, value: TermLike) -> int:
        for (s, v), m in self._items:
            if s == switch and v == value:
                return m
        return 0

    def merge(self, other: "Explanation") -> "Explanation":
        return Explanation(self.instances + other.instances)

    def total_size(self) -> int:
        return sum(m for _, m in self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __eq__(self, other) -> bool:
        return isinstance(other, Explanation) and self._items == other._items

    def __hash__(self) -> int:
        return self._hash

    def __iter__(self):
        return iter(self.instances)

    def render(self) -> str:
        if not self._items:
            return "{}"
        parts = []
        for (s, v), m in self._items:
            star = f"*{m}" if m > 1 else ""
            parts.append(f"{render_term(s)}={render_term(v)}{star}")
        return "{" + ", ".join(parts) + "}"

    def __repr__(self) -> str:
        return f"Explanation({self.render()})"


@dataclass(frozen=True)
class Body:
    """One disjunct of a defining formula: subgoal refs plus switch instances."""

    subgoals: tuple[GoalId, ...] = ()
    instances: tuple[SwitchInstance, ...] = ()

    def __post_init__(self):
        if not isinstance(self.subgoals, tuple):
            object.__setattr__(self, "subgoals", tuple(self.subgoals))
        if not isinstance(self.instances, tuple):
            object.__setattr__(self, "instances", tuple(self.instances))


@dataclass(frozen=True)
class DefiningFormula:
    """A defined goal with its ordered, nonempty list of bodies."""

    head: GoalId
    bodies: tuple[Body, ...]

    def __post_init__(self):
        if not isinstance(self.bodies, tuple):
            object.__setattr__(self, "bodies", tuple(self.bodies))
        if not self.bodies:
            raise ExplGraphError(f"goal {self.head} has no bodies")


class ExplanationGraph:
    """Switch declarations plus one defining formula per defined goal.

    Instances are built through :class:`GraphBuilder` or the file loader
    and are immutable once validated; all inference and learning routines
    treat them as shared read-only inputs.
    """

    def __init__(
        self,
        switches: dict,
        labels: Sequence[str],
        formulas: Sequence[DefiningFormula],
        roots: Sequence[GoalId],
    ):
        self.switches = dict(switches)  # rendered switch name -> SwitchDecl
        self.labels = list(labels)
        self.formulas = list(formulas)
        self.roots = list(roots)
        self.topo_order: Optional[list[GoalId]] = None
        self.exclusiveness: Optional[str] = None  # cached diagnostic verdict
        self._compiled = None
        self._slots = None

    # -- basic accessors ------------------------------------------------

    @property
    def n_goals(self) -> int:
        return len(self.formulas)

    def switch_decl(self, switch: TermLike) -> SwitchDecl:
        key = render_term(switch)
        try:
            return self.switches[key]
        except KeyError:
            raise MissingParameter(f"switch {key} not declared in graph") from None

    def goal_index(self, label: str) -> GoalId:
        matches = [i for i, lab in enumerate(self.labels) if lab == label]
        if not matches:
            raise KeyError(f"no goal labelled {label!r}")
        if len(matches) > 1:
            raise KeyError(f"goal label {label!r} is ambiguous")
        return matches[0]

    @property
    def validated(self) -> bool:
        return self.topo_order is not None

    def require_validated(self) -> None:
        if not self.validated:
            validate_graph(self)

    def body_size(self) -> int:
        """Total number of atoms across all bodies (graph size)."""
        return sum(
            len(b.subgoals) + len(b.instances)
            for f in self.formulas
            for b in f.bodies
        )

    # -- slot layout shared by inference/learning -----------------------

    def slots(self):
        """Flat (switch, value) slot layout; see :mod:`explgraph.tables`."""
        if self._slots is None:
            from .tables import SlotLayout

            self._slots = SlotLayout(self.switches)
        return self._slots

    def compiled(self):
        """Array form of the graph for vectorised passes (cached)."""
        self.require_validated()
        if self._compiled is None:
            from .compiled import CompiledGraph

            self._compiled = CompiledGraph(self)
        return self._compiled


class GraphBuilder:
    """Incremental construction of an :class:`ExplanationGraph`."""

    def __init__(self):
        self._switches: dict = {}
        self._labels: list[str] = []
        self._bodies: list[list[Body]] = []
        self._roots: list[GoalId] = []
        self._index: dict = {}

    def declare_switch(self, switch: TermLike, values: Iterable[TermLike]) -> None:
        decl = SwitchDecl(switch, tuple(values))
        key = render_term(switch)
        old = self._switches.get(key)
        if old is not None and old.values != decl.values:
            raise ExplGraphError(f"conflicting declarations for switch {key}")
        self._switches.setdefault(key, decl)

    def goal(self, label: str) -> GoalId:
        """Return the goal id for ``label``, creating the goal if new."""
        gid = self._index.get(label)
        if gid is None:
            gid = len(self._labels)
            self._index[label] = gid
            self._labels.append(label)
            self._bodies.append([])
        return gid

    def add_body(
        self,
        head: GoalId,
        subgoals: Iterable[GoalId] = (),
        instances: Iterable[SwitchInstance] = (),
    ) -> None:
        self._bodies[head].append(Body(tuple(subgoals), tuple(instances)))

    def has_bodies(self, goal: GoalId) -> bool:
        return bool(self._bodies[goal])

    def add_root(self, goal: GoalId) -> None:
        if goal not in self._roots:
            self._roots.append(goal)

    def build(self, validate: bool = True) -> ExplanationGraph:
        formulas = [
            DefiningFormula(i, tuple(bodies)) for i, bodies in enumerate(self._bodies)
        ]
        graph = ExplanationGraph(self._switches, self._labels, formulas, self._roots)
        if validate:
            validate_graph(graph)
        return graph


def validate_graph(graph: ExplanationGraph) -> list[GoalId]:
    """Check structural invariants and compute a bottom-up topological order.

    Every referenced subgoal must exist, every switch instance must use a
    declared value, and the head-calls-body relation must be acyclic.  The
    returned order lists each goal after all goals it references.
    Idempotent: a validated graph returns its cached order.
    """
    if graph.topo_order is not None:
        return graph.topo_order

    n = graph.n_goals
    for f in graph.formulas:
        for body in f.bodies:
            for sub in body.subgoals:
                if not (0 <= sub < n):
                    raise DanglingReference(
                        f"goal {graph.labels[f.head]} references missing goal id {sub}"
                    )
            for inst in body.instances:
                decl = graph.switch_decl(inst.switch)
                decl.value_index(inst.value)

    # Iterative DFS with cycle witness.
    WHITE, GRAY, BLACK = 0, 1, 2
    color = [WHITE] * n
    order: list[GoalId] = []
    for start in range(n):
        if color[start] != WHITE:
            continue
        stack: list[tuple[GoalId, int]] = [(start, 0)]
        path = [start]
        color[start] = GRAY
        while stack:
            goal, child_pos = stack[-1]
            children = [
                s for b in graph.formulas[goal].bodies for s in b.subgoals
            ]
            if child_pos < len(children):
                stack[-1] = (goal, child_pos + 1)
                child = children[child_pos]
                if color[child] == GRAY:
                    cycle_start = path.index(child)
                    cycle = [graph.labels[g] for g in path[cycle_start:]] + [
                        graph.labels[child]
                    ]
                    raise CyclicGraph(cycle)
                if color[child] == WHITE:
                    color[child] = GRAY
                    stack.append((child, 0))
                    path.append(child)
            else:
                color[goal] = BLACK
                order.append(goal)
                stack.pop()
                path.pop()

    graph.topo_order = order
    return order


def enumerate_explanations(
    graph: ExplanationGraph, goal: GoalId, limit: int = 100_000
) -> list[Explanation]:
    """All explanations of ``goal`` by brute-force expansion, bottom-up.

    Disjunctions are distributed over conjunctions and switch-instance
    multiplicities merged.  The result is duplicate-free and sorted by
    canonical rendering; a warning is emitted if distinct derivations
    collapsed onto the same multiset (the sum of their probabilities then
    exceeds the probability of the merged set).  Desk-scale only: raises
    :class:`ExplosionLimit` when any goal accumulates more than ``limit``
    explanations.
    """
    graph.require_validated()
    memo: dict[GoalId, list[Explanation]] = {}
    merged_duplicates = False

    for g in graph.topo_order:
        out: set[Explanation] = set()
        n_raw = 0
        for body in graph.formulas[g].bodies:
            base = Explanation(body.instances)
            parts = [memo[s] for s in body.subgoals]
            for combo in itertools.product(*parts):
                e = base
                for sub in combo:
                    e = e.merge(sub)
                n_raw += 1
                out.add(e)
                if len(out) > limit:
                    raise ExplosionLimit(
                        f"goal {graph.labels[g]} exceeds {limit} explanations"
                    )
        if n_raw > len(out):
            merged_duplicates = True
        memo[g] = sorted(out, key=lambda e: e.render())

    if merged_duplicates:
        warnings.warn(
            "distinct derivations produced identical explanations; "
            "duplicates were merged",
            ExplGraphWarning,
            stacklevel=2,
        )
    return memo[goal]


def diagnose_exclusiveness(graph: ExplanationGraph, limit: int = 100_000) -> str:
    """Check every root's explanation set and cache a verdict on the graph.

    Exclusiveness is a per-goal condition, so roots are checked
    separately: one overlapping root makes the graph overlapping, an
    undecidable root leaves it unknown, otherwise it is exclusive.
    Inference then flags inside tables computed on overlapping graphs.
    Desk-scale only (delegates to enumeration).
    """
    verdicts = {
        check_exclusiveness(enumerate_explanations(graph, root, limit))
        for root in graph.roots
    }
    if "overlapping" in verdicts:
        graph.exclusiveness = "overlapping"
    elif "unknown" in verdicts:
        graph.exclusiveness = "unknown"
    else:
        graph.exclusiveness = "exclusive"
    return graph.exclusiveness


def check_exclusiveness(explanations: Iterable[Explanation]) -> str:
    """Sound-but-incomplete pairwise exclusiveness diagnostic.

    Returns ``"exclusive"`` when every pair of explanations assigns
    conflicting values to some shared switch, ``"overlapping"`` when some
    pair does not (both conjunctions are then satisfiable at once), and
    ``"unknown"`` when any explanation uses a switch more than once in
    total, in which case the hidden trial structure is not recoverable
    from multisets alone.
    """
    expls = list(explanations)
    per_expl = []
    for e in expls:
        totals: dict = {}
        values: dict = {}
        for (s, v), m in e.items():
            key = render_term(s)
            totals[key] = totals.get(key, 0) + m
            values[key] = v
        if any(t > 1 for t in totals.values()):
            return "unknown"
        per_expl.append(values)
    for a, b in itertools.combinations(per_expl, 2):
        shared = a.keys() & b.keys()
        if not any(a[s] != b[s] for s in shared):
            return "overlapping"
    return "exclusive"


def explanation_prob(e: Explanation, theta) -> float:
    """Probability of an explanation: product of theta factors with counts."""
    p = 1.0
    for (s, v), m in e.items():
        p *= theta.get(s, v) ** m
    return p


def merge_graphs(graphs: Sequence[ExplanationGraph]) -> tuple[ExplanationGraph, list[list[GoalId]]]:
    """Union of graphs with disjoint goal tables and shared switch space.

    Switch declarations must agree where names coincide.  Returns the
    merged graph and, per input graph, the remapped ids of its roots.
    """
    builder = GraphBuilder()
    root_maps: list[list[GoalId]] = []
    for k, g in enumerate(graphs):
        for decl in g.switches.values():
            builder.declare_switch(decl.id, decl.values)
        offsetted: dict[GoalId, GoalId] = {}
        for gid, label in enumerate(g.labels):
            offsetted[gid] = builder.goal(f"g{k}:{label}")
        for f in g.formulas:
            for body in f.bodies:
                builder.add_body(
                    offsetted[f.head],
                    [offsetted[s] for s in body.subgoals],
                    body.instances,
                )
        root_maps.append([offsetted[r] for r in g.roots])
        for r in g.roots:
            builder.add_root(offsetted[r])
    return builder.build(), root_maps
