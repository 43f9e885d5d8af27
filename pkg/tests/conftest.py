"""Shared fixtures and random-structure generators for the test suite."""

import numpy as np
import pytest

from explgraph.graph import GraphBuilder, SwitchInstance
from explgraph.grammar import CFGRule, Grammar
from explgraph.tables import ParameterTable


def toy_grammar() -> Grammar:
    """Three-rule binary grammar over tokens a, b with fixed probabilities."""
    return Grammar(
        "S",
        [CFGRule("S", ("S", "S")), CFGRule("S", ("a",)), CFGRule("S", ("b",))],
        [0.4, 0.3, 0.3],
    )


@pytest.fixture
def grammar():
    return toy_grammar()


def random_exclusive_graph(rng, max_switches=8, max_root_expl=20):
    """Tree-structured generative graph, exclusive by construction.

    Every goal owns a fresh switch with one value per body, so any two
    distinct explanations disagree on the choice switch of the topmost
    goal where they diverge.  Explanation counts are tracked during
    construction and capped.
    """
    builder = GraphBuilder()
    counter = {"sw": 0, "goal": 0}

    def fresh_goal(depth):
        gid = builder.goal(f"n{counter['goal']}")
        counter["goal"] += 1
        n_bodies = int(rng.integers(1, 4))
        sw = f"c{counter['sw']}"
        counter["sw"] += 1
        builder.declare_switch(sw, tuple(f"v{i}" for i in range(n_bodies)))
        total = 0
        for bi in range(n_bodies):
            subs = []
            count = 1
            if depth < 3 and counter["sw"] < max_switches:
                for _ in range(int(rng.integers(0, 3))):
                    if counter["sw"] >= max_switches:
                        break
                    child, child_count = fresh_goal(depth + 1)
                    subs.append(child)
                    count *= child_count
            builder.add_body(gid, subs, [SwitchInstance(sw, f"v{bi}")])
            total += count
        return gid, total

    while True:
        root, count = fresh_goal(0)
        if count <= max_root_expl:
            builder.add_root(root)
            graph = builder.build()
            return graph, root
        builder = GraphBuilder()
        counter = {"sw": 0, "goal": 0}


def random_general_graph(rng, max_switches=8, max_goals=9):
    """Random DAG with shared subgoals, repeated children, multiplicities.

    Exclusiveness is not guaranteed (and usually fails); explanation sets
    stay enumerable at desk scale.
    """
    builder = GraphBuilder()
    n_sw = int(rng.integers(1, max_switches + 1))
    switches = []
    for s in range(n_sw):
        name = f"s{s}"
        builder.declare_switch(name, tuple(f"v{i}" for i in range(int(rng.integers(2, 4)))))
        switches.append(name)
    n_goals = int(rng.integers(1, max_goals + 1))
    goals = []
    for gi in range(n_goals):
        g = builder.goal(f"g{gi}")
        for _ in range(int(rng.integers(1, 4))):
            subs = []
            if goals and rng.random() < 0.55:
                subs = [int(x) for x in rng.choice(goals, size=int(rng.integers(1, 3)))]
            insts = []
            for _ in range(int(rng.integers(0, 3))):
                name = switches[int(rng.integers(0, n_sw))]
                values = builder._switches[name].values
                insts.append(
                    SwitchInstance(
                        name,
                        values[int(rng.integers(0, len(values)))],
                        int(rng.integers(1, 3)),
                    )
                )
            if not subs and not insts:
                insts = [SwitchInstance(switches[0], builder._switches[switches[0]].values[0])]
            builder.add_body(g, subs, insts)
        goals.append(g)
    root = goals[-1]
    builder.add_root(root)
    return builder.build(), root


def random_theta(rng, graph) -> ParameterTable:
    data = {}
    for key, decl in graph.switches.items():
        w = rng.uniform(0.05, 1.0, len(decl.values))
        data[key] = w / w.sum()
    return ParameterTable(graph.switches, data)
