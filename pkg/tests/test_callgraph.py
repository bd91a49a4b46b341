from __future__ import annotations

import pytest

from polytrs.blind import blind_program
from polytrs.callgraph import (
    State,
    call_dag,
    call_tree,
    check_edge_class_descent,
    ppo_descendant_bound,
    rank_stats,
    reachable_states,
    same_class_descendant_counts,
    successors,
)
from polytrs.ordering import EPPO, PPO, infer_precedence
from polytrs.parser import parse_program, parse_term
from polytrs.qi import parse_assignment, value_qi
from polytrs.terms import App, term_size

from .conftest import CORPUS, checked_cbv, checked_memo, symbols_of


def t(text, program):
    return parse_term(text, symbols_of(program))


def word(prog, n, letter="s", end="0"):
    return t(letter + " " + (letter + " ") * (n - 1) + end if n else end, prog)


def test_call_tree_running_example(corpus):
    prog = corpus["running.trs"]
    proof = checked_cbv(prog, t("f(s0 s1 nil)", prog))
    tree = call_tree(proof)
    assert len(tree.roots) == 1
    root = tree.roots[0]
    assert repr(root.state) == "<f, s0(s1(nil))>"
    kids = [repr(c.state) for _, c in root.children]
    assert kids == ["<f, s1(nil)>", "<f, s1(nil)>", "<append, nil, nil>"]
    assert tree.node_count() == 4


def test_call_tree_of_value_is_empty(corpus):
    prog = corpus["running.trs"]
    proof = checked_cbv(prog, t("s0 s1 nil", prog))
    assert call_tree(proof).node_count() == 0


def test_call_tree_node_count_is_active_occurrences(corpus):
    prog = corpus["fib.trs"]
    proof = checked_cbv(prog, t("f(s s s s s s 0)", prog))
    assert call_tree(proof).node_count() == proof.stats.active_occurrences


def test_call_tree_arity_bound(corpus):
    from polytrs.callgraph import call_tree_arity

    for name in ("fib.trs", "running.trs", "grid3.trs", "mult.trs"):
        prog = corpus[name]
        k = call_tree_arity(prog)
        arity = prog.main.arity
        args = ", ".join(["s s s 0" if name != "running.trs" else "s0 s1 s0 nil"] * arity)
        proof = checked_cbv(prog, t(f"{prog.main.name}({args})", prog))
        assert call_tree(proof).max_children() <= k, name


def test_call_dag_running_example(corpus):
    prog = corpus["running.trs"]
    proof = checked_memo(prog, t("f(s0 s1 nil)", prog))
    dag = call_dag(proof)
    assert dag.node_count() == 3  # update count
    assert sum(len(n.read_links) for n in dag.nodes()) == 1
    keys = {(n.state.function.name, n.state.arguments) for n in dag.nodes()}
    assert len(keys) == 3  # pairwise distinct states


def test_call_dag_of_value_is_empty(corpus):
    prog = corpus["running.trs"]
    proof = checked_memo(prog, t("nil", prog))
    assert call_dag(proof).node_count() == 0


def test_call_dag_doublerec_linear(corpus):
    prog = corpus["doublerec.trs"]
    proof = checked_memo(prog, t("dup(" + "s " * 10 + "0)", prog))
    dag = call_dag(proof)
    # dup states for sizes 0..10 plus the two xorb value combinations
    assert dag.node_count() == 13
    assert dag.node_count() == len(proof.cache_trace)


def test_successors_running_example(corpus):
    prog = corpus["running.trs"]
    edges = successors(prog, State(prog.symbol("f"), (t("s0 s1 nil", prog),)))
    targets = sorted((repr(e.target), e.occurrence) for e in edges)
    assert targets == [
        ("<append, nil, nil>", 0),
        ("<f, s1(nil)>", 1),
        ("<f, s1(nil)>", 2),
    ]


def test_successors_constructor_rhs_empty(corpus):
    prog = corpus["identity.trs"]
    assert successors(prog, State(prog.symbol("id"), (t("s 0", prog),))) == []


def test_successors_blind_overlap(corpus):
    bl = blind_program(corpus["running.trs"])
    prog = bl.program
    edges = successors(prog, State(prog.symbol("bl_f"), (t("s s 0", prog),)))
    # both duplicating instances contribute their three call sites
    eq_ids = {e.equation.index for e in edges}
    assert eq_ids == {0, 1}
    assert len(edges) == 6


def test_edges_agree_with_proof_structure(corpus):
    prog = corpus["fib.trs"]
    proof = checked_cbv(prog, t("f(s s s s 0)", prog))
    tree = call_tree(proof)
    for node in tree.nodes():
        realizable = {
            (repr(e.target), e.equation.index, e.occurrence)
            for e in successors(prog, node.state)
        }
        for e, child in node.children:
            assert (repr(child.state), e.equation.index, e.occurrence) in realizable


def test_reachable_states_matches_tree_states(corpus):
    prog = corpus["fib.trs"]
    proof = checked_cbv(prog, t("f(s s s s s 0)", prog))
    tree_states = {n.state for n in call_tree(proof).nodes()}
    reach = reachable_states(prog, State(prog.main, (word(prog, 5),)))
    assert tree_states <= reach


def test_edge_class_descent_everywhere(corpus):
    for name in ("running.trs", "fib.trs", "mult.trs", "twoclass.trs"):
        prog = corpus[name]
        prec = infer_precedence(prog, EPPO)
        assert prec is not None, name
        arity = prog.main.arity
        args = ", ".join(["s s s 0" if name != "running.trs" else "s0 s1 s0 nil"] * arity)
        proof = checked_cbv(prog, t(f"{prog.main.name}({args})", prog))
        check_edge_class_descent(call_tree(proof), prec)


def test_rank_stats_running_example(corpus):
    prog = corpus["running.trs"]
    prec = infer_precedence(prog, EPPO)
    proof = checked_cbv(prog, t("f(s0 s1 nil)", prog))
    report = rank_stats(call_tree(proof), prec, prog)
    by_symbols = {c.class_symbols: c for c in report.per_class}
    assert by_symbols[("append",)].node_count == 1
    assert by_symbols[("f",)].node_count == 3
    assert by_symbols[("f",)].max_same_class_descendants == 2
    assert report.holds


def test_rank_stats_linear_chain():
    prog = parse_program(
        "constructors: s/1 0/0\nfunctions: f/1\nf(s x) -> f(x)\nf(0) -> 0\nmain: f\n"
    )
    prec = infer_precedence(prog, EPPO)
    proof = checked_cbv(prog, t("f(s s s s 0)", prog))
    tree = call_tree(proof)
    counts = same_class_descendant_counts(tree, prec)
    # A chain with n edges has A = n
    assert max(counts.values()) == 4
    assert tree.node_count() == 5
    assert rank_stats(tree, prec, prog).holds


def test_ppo_descendant_bound_on_dags(corpus):
    for name in ("fib.trs", "doublerec.trs", "grid2.trs"):
        prog = corpus[name]
        prec = infer_precedence(prog, PPO) or infer_precedence(prog, EPPO)
        arity = prog.main.arity
        args = ", ".join(["s s s s 0"] * arity)
        proof = checked_memo(prog, t(f"{prog.main.name}({args})", prog))
        for row in ppo_descendant_bound(call_dag(proof), prec):
            assert row["holds"], (name, row)


def test_qi_monotone_along_reachability(corpus):
    prog = corpus["mult.trs"]
    asg = parse_assignment((CORPUS / "mult.qi").read_text(), prog)
    start = State(prog.main, (word(prog, 3), word(prog, 2)))
    for st in reachable_states(prog, start):
        assert value_qi(asg, st.term) <= value_qi(asg, App(start.function, start.arguments))


def test_dot_and_json_export(corpus):
    prog = corpus["running.trs"]
    proof = checked_cbv(prog, t("f(s0 s1 nil)", prog))
    tree = call_tree(proof)
    dot = tree.to_dot()
    assert dot.startswith("digraph") and "<f, s1(nil)>" in dot
    data = tree.to_json()
    assert data["kind"] == "forest"
    assert len(data["nodes"]) == 4
    assert len(data["edges"]) == 3
