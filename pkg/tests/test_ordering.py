from __future__ import annotations

import pytest
from hypothesis import given, settings

from polytrs.base import PrecedenceError
from polytrs.blind import blind_program
from polytrs.ordering import (
    EPPO,
    PPO,
    PathOrder,
    check_program,
    compare,
    infer_precedence,
    make_precedence,
    parse_precedence,
    static_call_graph,
)
from polytrs.parser import parse_program, parse_term
from polytrs.terms import subterms

from .conftest import symbols_of
from .strategies import terms


def t(text, program):
    return parse_term(text, symbols_of(program))


@pytest.fixture(scope="module")
def running(corpus):
    return corpus["running.trs"]


@pytest.fixture(scope="module")
def strict_prec(running):
    return make_precedence(running, [["append"], ["f"]], [("append", "f")], PPO)


@pytest.fixture(scope="module")
def fair_prec(running):
    return make_precedence(running, [["append"], ["f"]], [("append", "f")], EPPO)


def test_strict_subterm_rule(running, strict_prec):
    assert compare(strict_prec, t("s1 x", running), t("s0 s1 x", running))
    assert not compare(strict_prec, t("s1 x", running), t("s0 s0 x", running))


def test_fair_equivalent_heads(running, fair_prec):
    assert compare(fair_prec, t("s1 x", running), t("s0 s0 x", running))


def test_irreflexive(running, fair_prec, strict_prec):
    for text in ("nil", "s0 x", "f(s1 x)", "append(x, y)"):
        u = t(text, running)
        assert not compare(fair_prec, u, u)
        assert not compare(strict_prec, u, u)


def test_running_fails_ppo_passes_eppo(running, strict_prec, fair_prec):
    ppo = check_program(running, strict_prec, PPO)
    assert not ppo.overall
    failing = [v for v in ppo.per_equation if not v.decreasing]
    assert [v.equation.index for v in failing] == [0]  # the i=0 instance
    assert "s1(x)" in failing[0].failing_subgoal
    assert "s0(s0(x))" in failing[0].failing_subgoal
    eppo = check_program(running, fair_prec, EPPO)
    assert eppo.overall


def test_append_alone_passes_ppo(corpus):
    prog = corpus["append.trs"]
    prec = infer_precedence(prog, PPO)
    assert prec is not None
    assert check_program(prog, prec, PPO).overall


def test_blind_running_passes_ppo(running):
    bl = blind_program(running).program
    prec = infer_precedence(bl, PPO)
    assert prec is not None
    assert check_program(bl, prec, PPO).overall


def test_reverse_not_orderable(corpus):
    prog = corpus["reverse.trs"]
    assert infer_precedence(prog, PPO) is None
    assert infer_precedence(prog, EPPO) is None


def test_infer_precedence_classes(running):
    prec = infer_precedence(running, EPPO)
    assert prec is not None
    assert prec.class_of("append") != prec.class_of("f")
    assert prec.compare_symbols(running.symbol("append"), running.symbol("f")) == "less"
    assert prec.class_of("s0") == prec.class_of("s1")  # fair
    assert prec.class_of("s0") != prec.class_of("nil")  # different arity
    assert prec.is_separating()
    assert prec.is_compatible(running)
    assert prec.is_fair()


def test_infer_precedence_flat_program(corpus):
    prog = corpus["identity.trs"]
    prec = infer_precedence(prog, PPO)
    assert prec is not None
    assert check_program(prog, prec, PPO).overall


def test_infer_precedence_mutual_recursion(corpus):
    prog = corpus["even_odd.trs"]
    prec = infer_precedence(prog, EPPO)
    assert prec is not None
    assert prec.class_of("even") == prec.class_of("odd")


def test_static_call_graph(running):
    graph = static_call_graph(running)
    assert graph == {"f": {"f", "append"}, "append": {"append"}}


def test_parse_precedence(running):
    prec = parse_precedence("append < f ; s0 ~ s1", running, EPPO)
    assert prec.compare_symbols(running.symbol("append"), running.symbol("f")) == "less"
    assert prec.class_of("s0") == prec.class_of("s1")
    with pytest.raises(PrecedenceError):
        parse_precedence("s0 ~ s1", running, PPO)
    with pytest.raises(PrecedenceError):
        parse_precedence("s0 ~ f", running, EPPO)


def test_order_line_in_program_file(tmp_path):
    text = (
        "constructors: s/1 0/0\n"
        "functions: add/2\n"
        "add(s x, y) -> s add(x, y)\n"
        "add(0, y) -> y\n"
        "order: add < add\n"
        "main: add\n"
    )
    prog = parse_program(text.replace("order: add < add\n", ""))
    assert prog.declared_order is None
    withorder = parse_program(
        text.replace("order: add < add\n", "order: 0 ~ 0\n")
    )
    assert withorder.declared_order == "0 ~ 0"
    # a usable declaration drives check_program through parse_precedence
    prog2 = parse_program(
        "constructors: s0/1 s1/1 nil/0\nfunctions: f/1 append/2\n"
        "f(s1 x) -> append(x, x)\nappend(s0 x, y) -> s0 append(x, y)\n"
        "append(nil, y) -> y\norder: append < f ; s0 ~ s1\nmain: f\n"
    )
    prec = parse_precedence(prog2.declared_order, prog2, EPPO)
    assert check_program(prog2, prec, EPPO).overall


def test_mixed_classes_rejected(running):
    with pytest.raises(PrecedenceError):
        make_precedence(running, [["f", "s0"]], [], EPPO)


def test_cyclic_order_rejected(running):
    with pytest.raises(PrecedenceError):
        make_precedence(running, [["append"], ["f"]], [("append", "f"), ("f", "append")], PPO)


def test_nonseparating_rejected(running, strict_prec):
    # A precedence with a constructor not below functions cannot drive the order.
    from polytrs.ordering import Precedence

    broken = Precedence(
        dict(strict_prec.class_ids),
        frozenset(
            p
            for p in strict_prec.below
            if p[0] != strict_prec.class_of("nil")
        ),
        strict_prec.signature,
    )
    with pytest.raises(PrecedenceError):
        compare(broken, t("nil", running), t("f(nil)", running))


_SAMPLED = parse_program(
    "constructors: s0/1 s1/1 nil/0\n"
    "functions: f/1 g/2\n"
    "f(x) -> x\n"
    "g(x, y) -> x\n"
    "main: f\n"
)
_SAMPLED_STRICT = make_precedence(_SAMPLED, [["g"], ["f"]], [("g", "f")], PPO)
_SAMPLED_FAIR = make_precedence(_SAMPLED, [["g"], ["f"]], [("g", "f")], EPPO)


@settings(max_examples=60, deadline=None)
@given(u=terms(max_size=6))
def test_subterm_implies_less(u):
    for prec in (_SAMPLED_STRICT, _SAMPLED_FAIR):
        order = PathOrder(prec)
        for sub in subterms(u):
            if sub != u:
                assert order.less(sub, u)


@settings(max_examples=60, deadline=None)
@given(s=terms(max_size=5), u=terms(max_size=5), w=terms(max_size=5))
def test_transitivity_sampled(s, u, w):
    order = PathOrder(_SAMPLED_FAIR)
    if order.less(s, u) and order.less(u, w):
        assert order.less(s, w)


@settings(max_examples=80, deadline=None)
@given(s=terms(max_size=5), u=terms(max_size=5))
def test_eppo_extends_ppo(s, u):
    if PathOrder(_SAMPLED_STRICT).less(s, u):
        assert PathOrder(_SAMPLED_FAIR).less(s, u)


def test_ppo_transfer_to_blind_whole_corpus(corpus):
    for name, prog in corpus.items():
        prec = infer_precedence(prog, PPO)
        if prec is None:
            continue
        bl = blind_program(prog).program
        bl_prec = infer_precedence(bl, PPO)
        assert bl_prec is not None, name
        assert check_program(bl, bl_prec, PPO).overall, name


def test_eppo_three_way_equivalence_corpus(corpus):
    mismatches = []
    for name, prog in corpus.items():
        orig = infer_precedence(prog, EPPO) is not None
        bl = blind_program(prog).program
        bl_eppo = infer_precedence(bl, EPPO) is not None
        bl_ppo = infer_precedence(bl, PPO) is not None
        if not (orig == bl_eppo == bl_ppo):
            mismatches.append((name, orig, bl_eppo, bl_ppo))
    assert mismatches == []
