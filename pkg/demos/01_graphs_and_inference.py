"""Build an explanation graph by hand and query it.

A goal is proven by one of several bodies; each body conjoins references
to other goals with outcomes of named random switches.  Inside values sum
over all explanations, Viterbi picks the most probable one.
"""

from explgraph import (
    GraphBuilder,
    ParameterTable,
    SwitchInstance,
    check_exclusiveness,
    enumerate_explanations,
    goal_prob,
    inside_prob,
    viterbi,
)

# A tiny weather story: the lawn is wet if it rained, or if the sprinkler
# ran and the water pressure was up.
b = GraphBuilder()
b.declare_switch("rain", ("yes", "no"))
b.declare_switch("sprinkler", ("on", "off"))
b.declare_switch("pressure", ("up", "down"))

pressure_ok = b.goal("pressure_ok")
b.add_body(pressure_ok, [], [SwitchInstance("pressure", "up")])

wet = b.goal("lawn_wet")
b.add_body(wet, [], [SwitchInstance("rain", "yes")])
b.add_body(wet, [pressure_ok], [SwitchInstance("sprinkler", "on")])
b.add_root(wet)
graph = b.build()

theta = ParameterTable(
    graph.switches,
    {"rain": [0.2, 0.8], "sprinkler": [0.6, 0.4], "pressure": [0.9, 0.1]},
)

print("explanations of lawn_wet:")
expls = enumerate_explanations(graph, wet)
for e in expls:
    print("  ", e.render())
print("exclusiveness verdict:", check_exclusiveness(expls))

# The two explanations overlap (rain and sprinkler can both happen), so
# the sum-product value is a derivation score, not P(lawn_wet).
print("sum over explanations:", goal_prob(graph, wet, theta))

best = viterbi(graph, wet, theta)
print("most probable explanation:", best.explanation.render(), "p =", best.prob)

table = inside_prob(graph, theta)
for g in range(graph.n_goals):
    print(f"inside[{graph.labels[g]}] = {table[g]:.4f}  (log {table.log[g]:+.4f})")
