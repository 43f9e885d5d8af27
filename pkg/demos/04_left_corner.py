"""Left-corner parsing of the same CFG, with its own switch families.

The bottom-up frontend parameterises shift (which word starts a
constituent), project (which rule grows a finished constituent) and
attach-versus-project decisions, rather than rule expansions.  Same
grammar, different distribution family.
"""

from explgraph import (
    LearnConfig,
    compile_plcg,
    compile_plcg_corpus,
    enumerate_explanations,
    gen_corpus,
    learn,
    tree_from_explanation,
    viterbi,
)
from explgraph.io import emit_params, load_grammar

grammar = load_grammar("data/toy.grammar")

g = compile_plcg(grammar, ["a", "b"])
print("switch families declared for the left-corner model:")
for key, decl in g.switches.items():
    values = ", ".join(str(v) for v in decl.values)
    print(f"  {key}: {values}")

(e,) = enumerate_explanations(g, g.roots[0])
print('\nthe unique left-corner derivation of "a b":')
print("  ", e.render())

corpus = gen_corpus(grammar, grammar.pcfg_parameter_table(), 150, seed=9, max_depth=10)
graph, observed = compile_plcg_corpus(grammar, corpus.sentences())
report = learn(graph, observed, LearnConfig(method="vt", delta=1.0, seed=0))
print(f"\nViterbi training on {len(observed)} sentences: "
      f"{report.iterations} passes, {report.termination}")
print("learned parameter file:")
print(emit_params(report.final_theta))

tokens = ["a", "b", "a"]
sg = compile_plcg(grammar, tokens)
res = viterbi(sg, sg.roots[0], report.final_theta)
tree = tree_from_explanation(grammar, tokens, res.explanation, "plcg")
print(f"best parse of {' '.join(tokens)!r}: {tree.render()}  (p = {res.prob:.4g})")
