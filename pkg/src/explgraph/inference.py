"""Sum-product and argmax inference over validated explanation graphs.

``inside_prob`` computes, for every defined goal, the sum over its
explanations of their probabilities, sharing work through the graph so the
whole table costs one linear pass.  ``viterbi`` extracts a most probable
explanation with a deterministic tie-break (lowest body index, applied
bottom-up in topological order).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import AllZero, ExplGraphWarning
from .graph import Explanation, ExplanationGraph, GoalId, SwitchInstance
from .tables import ParameterTable

__all__ = ["InsideTable", "ViterbiResult", "inside_prob", "viterbi", "goal_prob", "log_theta_vector"]


def log_theta_vector(graph: ExplanationGraph, theta: ParameterTable) -> np.ndarray:
    """Flat log-parameter vector over the graph's slots; 0 maps to -inf."""
    theta.covers(graph.switches)
    flat = graph.slots().flatten(theta)
    with np.errstate(divide="ignore"):
        return np.log(flat)


@dataclass
class InsideTable:
    """Per-goal inside values, kept in log scale with a linear view.

    ``note`` is set when the graph is known to violate exclusiveness, in
    which case the values are scores over derivations rather than
    probabilities of the goals.
    """

    graph: ExplanationGraph
    log: np.ndarray
    note: Optional[str] = None

    @property
    def linear(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log)

    def __getitem__(self, goal: GoalId) -> float:
        return float(np.exp(self.log[goal]))

    def log_value(self, goal: GoalId) -> float:
        return float(self.log[goal])


@dataclass
class ViterbiResult:
    """A most probable explanation of one goal.

    ``choice_trace`` records, for every goal reachable through the
    selected bodies, the index of the body it selected.
    """

    goal: GoalId
    log_prob: float
    explanation: Explanation
    choice_trace: dict[GoalId, int] = field(default_factory=dict)

    @property
    def prob(self) -> float:
        return float(np.exp(self.log_prob))


def inside_prob(graph: ExplanationGraph, theta: ParameterTable) -> InsideTable:
    """Sum-product inside values for every goal, in topological order."""
    graph.require_validated()
    comp = graph.compiled()
    log, _ = comp.inside_pass(log_theta_vector(graph, theta))
    note = None
    if graph.exclusiveness == "overlapping":
        note = "score, not probability: explanations overlap"
        warnings.warn(
            "graph explanations overlap; inside values are derivation scores, "
            "not goal probabilities",
            ExplGraphWarning,
            stacklevel=2,
        )
    return InsideTable(graph, log, note)


def goal_prob(graph: ExplanationGraph, goal: GoalId, theta: ParameterTable) -> float:
    """Inside probability of a single goal."""
    if not (0 <= goal < graph.n_goals):
        raise KeyError(f"no goal with id {goal}")
    return inside_prob(graph, theta)[goal]


def viterbi(graph: ExplanationGraph, goal: GoalId, theta: ParameterTable) -> ViterbiResult:
    """A most probable explanation for ``goal`` under ``theta``.

    Zero-probability parameters are handled in log space; if every
    explanation of the goal has probability zero the result would be
    meaningless and :class:`AllZero` is raised instead.
    """
    graph.require_validated()
    if not (0 <= goal < graph.n_goals):
        raise KeyError(f"no goal with id {goal}")
    comp = graph.compiled()
    best, sel = comp.viterbi_pass(log_theta_vector(graph, theta))
    if np.isneginf(best[goal]):
        raise AllZero(
            f"every explanation of goal {graph.labels[goal]} has probability 0"
        )
    return extract_viterbi(graph, sel, best, goal)


def extract_viterbi(
    graph: ExplanationGraph, sel: np.ndarray, best: np.ndarray, goal: GoalId
) -> ViterbiResult:
    """Materialise the explanation selected by a Viterbi pass."""
    comp = graph.compiled()
    seeds = np.zeros(graph.n_goals, dtype=np.int64)
    seeds[goal] = 1
    eta, use = comp.selected_counts_pass(sel, seeds)
    layout = comp.layout
    instances = []
    for slot in np.nonzero(eta)[0]:
        decl, value = layout.slot_pairs[slot]
        instances.append(SwitchInstance(decl.id, value, int(eta[slot])))
    trace = {
        int(g): int(comp.body_local[sel[g]]) for g in np.nonzero(use > 0)[0]
    }
    return ViterbiResult(goal, float(best[goal]), Explanation(instances), trace)
