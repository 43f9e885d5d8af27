"""Heavier oracle cross-checks: bag semantics and long rules."""

import itertools
import warnings

import numpy as np
import pytest

from explgraph.grammar import CFGRule, Grammar, compile_pcfg
from explgraph.graph import Explanation
from explgraph.inference import goal_prob
from explgraph.learning import expected_counts
from explgraph.tables import ParameterTable

from conftest import random_general_graph, random_theta


def enumerate_derivations(graph, goal, limit=20000):
    """All derivations of ``goal`` as explanation multisets, WITHOUT
    deduplication: one entry per way of choosing bodies, which is the
    measure the dynamic-programming passes sum over."""
    memo = {}
    for g in graph.topo_order:
        out = []
        for body in graph.formulas[g].bodies:
            base = Explanation(body.instances)
            for combo in itertools.product(*[memo[s] for s in body.subgoals]):
                e = base
                for sub in combo:
                    e = e.merge(sub)
                out.append(e)
                if len(out) > limit:
                    raise RuntimeError("too many derivations for the oracle")
        memo[g] = out
    return memo[goal]


def test_inside_equals_bag_sum_on_general_graphs():
    from explgraph.graph import explanation_prob

    rng = np.random.default_rng(70)
    checked = 0
    for _ in range(60):
        graph, root = random_general_graph(rng, max_goals=6)
        theta = random_theta(rng, graph)
        try:
            ders = enumerate_derivations(graph, root)
        except RuntimeError:
            continue
        want = sum(explanation_prob(d, theta) for d in ders)
        assert goal_prob(graph, root, theta) == pytest.approx(want, rel=1e-9)
        checked += 1
    assert checked >= 40


def test_expected_counts_match_bag_posterior_on_general_graphs():
    from explgraph.graph import explanation_prob

    rng = np.random.default_rng(71)
    checked = 0
    for _ in range(60):
        graph, root = random_general_graph(rng, max_goals=6)
        theta = random_theta(rng, graph)
        try:
            ders = enumerate_derivations(graph, root)
        except RuntimeError:
            continue
        probs = np.array([explanation_prob(d, theta) for d in ders])
        z = probs.sum()
        if z <= 0:
            continue
        eta = expected_counts(graph, [root, root], theta)  # multiplicity 2
        for key, decl in graph.switches.items():
            for v in decl.values:
                want = 2 * sum(p * d.count(decl.id, v) for p, d in zip(probs, ders)) / z
                assert eta.get(key, v) == pytest.approx(want, abs=1e-8)
        checked += 1
    assert checked >= 40


def test_long_rules_via_dotted_goals_match_exhaustive_parser():
    rules = [
        CFGRule("S", ("A", "B", "A", "B")),
        CFGRule("S", ("S", "S")),
        CFGRule("S", ("A", "B")),
        CFGRule("A", ("a",)),
        CFGRule("A", ("a", "A")),
        CFGRule("B", ("b",)),
        CFGRule("B", ("B", "b", "B")),
    ]
    grammar = Grammar("S", rules)
    rng = np.random.default_rng(72)

    from test_grammar import all_parses

    for tokens in (
        ["a", "b", "a", "b"],
        ["a", "a", "b", "a", "b"],
        ["a", "b", "b", "b", "a", "b"],
        ["a", "b", "a", "b", "a", "b"],
    ):
        trees = all_parses(grammar, tokens)
        if not trees:
            continue
        g = compile_pcfg(grammar, tokens)
        data = {}
        for key, decl in g.switches.items():
            w = rng.uniform(0.1, 1.0, len(decl.values))
            data[key] = w / w.sum()
        theta = ParameterTable(g.switches, data)
        want = 0.0
        for t in trees:
            p = 1.0
            for (lhs, rhs), c in t.rule_counts().items():
                p *= theta.get(lhs, tuple(rhs)) ** c
            want += p
        assert goal_prob(g, g.roots[0], theta) == pytest.approx(want, rel=1e-9)
