"""Fit parameters three ways on one dataset and compare the traces.

The model: a word generator that first picks a length class (short or
long) and then draws each character from a per-class letter switch.  We
observe words but not the class, learn with EM, MAP and Viterbi training,
and print the objective trace of each.
"""

import numpy as np

from explgraph import (
    GraphBuilder,
    LearnConfig,
    ParameterTable,
    SwitchInstance,
    em_map_learn,
    expected_counts,
    objective,
    vt_learn,
)

rng = np.random.default_rng(0)

letters = ("x", "y")
b = GraphBuilder()
b.declare_switch("class", ("short", "long"))
for c in ("short", "long"):
    b.declare_switch(f"letter@{c}", letters)

# goal per observed word: [class hidden] word of length 1 (short) or 3 (long)
words = ["x", "xxy", "y", "yxx", "x", "xyy", "x", "y", "xxx", "x"]
goals = []
for w in sorted(set(words)):
    g = b.goal(f"word:{w}")
    for c, length in (("short", 1), ("long", 3)):
        if len(w) != length:
            continue
        insts = [SwitchInstance("class", c)]
        for ch in w:
            insts.append(SwitchInstance(f"letter@{c}", ch))
        b.add_body(g, [], insts)
    goals.append((w, g))
graph = b.build()
goal_of = dict(goals)
observed = [goal_of[w] for w in words]

print("expected counts at uniform parameters:")
eta = expected_counts(graph, observed, ParameterTable.uniform(graph))
for sw, v, x in eta.items():
    print(f"  {sw} = {v}: {x:.3f}")

for method, kwargs in (
    ("em", {}),
    ("map", {"delta": 1.0}),
    ("vt", {"delta": 1.0}),
):
    config = LearnConfig(method=method, seed=1, restarts=5, **kwargs)
    run = vt_learn if method == "vt" else em_map_learn
    report = run(graph, observed, config)
    trace = ", ".join(f"{v:.3f}" for v in report.objective_trace[:6])
    more = " ..." if len(report.objective_trace) > 6 else ""
    print(f"\n{method}: {report.iterations} passes, {report.termination}")
    print(f"  trace: {trace}{more}")
    print(f"  class probabilities: {np.round(report.final_theta.vector('class'), 3)}")
    print(
        "  objective at the fit:",
        round(objective(method, graph, observed, report.final_theta,
                        config.pseudo_counts), 4)
        if method == "em"
        else round(report.objective, 4),
    )
    if method == "vt":
        shown = {e.render() for e in report.per_goal_viterbi}
        print("  final per-goal explanations:", len(shown), "distinct")
