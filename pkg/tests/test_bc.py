from __future__ import annotations

import itertools

import pytest

from polytrs.base import ParseError, SignatureError
from polytrs.bc import (
    BcCond,
    BcPred,
    BcProj,
    BcSafeComp,
    BcSafeRec,
    BcSucc,
    BcZero,
    auto_qi,
    bc_arity,
    bc_eval,
    bits_to_word,
    compile_bc,
    format_bc,
    parse_bc,
    random_bc,
    word_to_bits,
)
from polytrs.blind import blind_program, program_is_linear, transfer_uniform_qi
from polytrs.ordering import PPO, infer_precedence
from polytrs.parser import format_program
from polytrs.qi import check_conditions, check_qi, eval_expr, is_uniform
from polytrs.terms import App

from .conftest import CORPUS, checked_cbv


def run_compiled(comp, normals, safes):
    args = tuple(bits_to_word(b) for b in normals + safes)
    proof = checked_cbv(comp.program, App(comp.main, args))
    return word_to_bits(proof.result)


def all_words(max_len):
    for n in range(max_len + 1):
        yield from itertools.product((0, 1), repeat=n)


def test_arities():
    assert bc_arity(BcZero()) == (0, 0)
    assert bc_arity(BcSucc(1)) == (0, 1)
    assert bc_arity(BcPred()) == (0, 1)
    assert bc_arity(BcCond()) == (0, 3)
    assert bc_arity(BcProj(2, 1, 3)) == (2, 1)
    rec = BcSafeRec(
        BcProj(0, 1, 1),
        BcSafeComp(1, 2, BcSucc(0), (), (BcProj(1, 2, 3),)),
        BcSafeComp(1, 2, BcSucc(1), (), (BcProj(1, 2, 3),)),
    )
    assert bc_arity(rec) == (1, 1)


def test_arity_inconsistency_rejected():
    with pytest.raises(SignatureError):
        bc_arity(BcSafeRec(BcProj(0, 1, 1), BcPred(), BcPred()))
    with pytest.raises(SignatureError):
        bc_arity(BcSafeComp(1, 1, BcZero(), (BcPred(),), ()))
    with pytest.raises(SignatureError):
        BcProj(1, 1, 3)


def test_compile_pred_rules():
    comp = compile_bc(BcPred())
    text = format_program(comp.program)
    assert "bc_pred_0(0) -> 0" in text
    assert "bc_pred_0(s0(y1)) -> y1" in text
    assert "bc_pred_0(s1(y1)) -> y1" in text


def test_compile_cond_rules():
    comp = compile_bc(BcCond())
    text = format_program(comp.program)
    assert "bc_cond_0(0, y1, y2) -> y1" in text
    assert "bc_cond_0(s0(w), y1, y2) -> y1" in text
    assert "bc_cond_0(s1(w), y1, y2) -> y2" in text


def test_initial_functions_agree_with_reference():
    cases = [
        (BcPred(), 0, 1),
        (BcCond(), 0, 3),
        (BcProj(1, 1, 1), 1, 1),
        (BcProj(1, 1, 2), 1, 1),
        (BcProj(0, 2, 2), 0, 2),
    ]
    for bc, n, m in cases:
        comp = compile_bc(bc)
        pools = [w for w in all_words(2)]
        for args in itertools.product(pools, repeat=n + m):
            normals, safes = args[:n], args[n:]
            assert run_compiled(comp, normals, safes) == bc_eval(bc, normals, safes)


def test_pred_exhaustive_words():
    comp = compile_bc(BcPred())
    for w in all_words(6):
        assert run_compiled(comp, (), (w,)) == w[1:]


def test_addition_example():
    add = parse_bc((CORPUS / "add.bc").read_text())
    comp = compile_bc(add)
    for a in all_words(3):
        for b in all_words(3):
            got = run_compiled(comp, (a,), (b,))
            assert len(got) == len(a) + len(b)
            assert got == bc_eval(add, (a,), (b,))


def test_auto_qi_pinned_entries():
    comp = compile_bc(BcPred())
    pred = next(n for n in comp.qi.entries if n.startswith("bc_pred"))
    for x in (0, 1, 5):
        assert eval_expr(comp.qi.entries[pred], [x]) == x  # floor(p)(X) = X
    comp = compile_bc(BcCond())
    cond = next(n for n in comp.qi.entries if n.startswith("bc_cond"))
    for p in ((0, 1, 2), (5, 3, 1), (2, 2, 7)):
        assert eval_expr(comp.qi.entries[cond], list(p)) == max(p)
    assert eval_expr(comp.qi.entries["s0"], [4]) == 5
    assert eval_expr(comp.qi.entries["0"], []) == 1


def test_auto_qi_recursion_recurrence():
    add = parse_bc((CORPUS / "add.bc").read_text())
    comp = compile_bc(add)
    # q_f(A) = A*(q_h0 + q_h1)(A) + q_g, padded with the normal argument;
    # each step q_h = 1 + 2A (successor constant, projection sum, padding)
    # and q_g = 0.
    q_h = lambda a: 1 + 2 * a
    q_f = lambda a: a * (q_h(a) + q_h(a)) + 0 + a
    entry = comp.qi.entries[comp.main.name]
    for a, y in ((3, 2), (0, 0), (2, 5)):
        assert eval_expr(entry, [a, y]) == q_f(a) + y


def test_compiled_pipeline_addition():
    add = parse_bc((CORPUS / "add.bc").read_text())
    comp = compile_bc(add)
    prec = infer_precedence(comp.program, PPO)
    assert prec is not None
    assert program_is_linear(comp.program, prec)
    assert is_uniform(comp.qi, comp.program)
    assert check_conditions(comp.qi, comp.program).ok
    assert check_qi(comp.program, comp.qi).overall == "valid"


def test_recursion_symbol_above_components():
    add = parse_bc((CORPUS / "add.bc").read_text())
    comp = compile_bc(add)
    prec = infer_precedence(comp.program, PPO)
    rec = comp.main
    for f in comp.program.functions:
        if f != rec:
            assert prec.compare_symbols(f, rec) == "less"


def test_random_bc_reproducible():
    assert random_bc(7, 3) == random_bc(7, 3)
    assert bc_arity(random_bc(7, 3))  # arity-consistent
    shallow = random_bc(1, 0)
    assert isinstance(
        shallow, (BcZero, BcSucc, BcPred, BcCond, BcProj)
    )


def test_sexpr_roundtrip():
    for seed in range(25):
        bc = random_bc(seed, 3)
        assert parse_bc(format_bc(bc)) == bc


def test_sexpr_errors():
    with pytest.raises(ParseError):
        parse_bc("(rec (proj 1 0 1))")
    with pytest.raises(ParseError):
        parse_bc("(frobnicate)")
    with pytest.raises(ParseError):
        parse_bc("(proj 0 0 1)")


def test_bc_property_suite_sample():
    # The full 200-seed sweep lives in the acceptance suite.
    for seed in range(40):
        bc = random_bc(seed, 4)
        comp = compile_bc(bc)
        prec = infer_precedence(comp.program, PPO)
        assert prec is not None, seed
        assert program_is_linear(comp.program, prec), seed
        assert is_uniform(comp.qi, comp.program), seed
        assert check_qi(comp.program, comp.qi).overall == "valid", seed
        image = blind_program(comp.program)
        assert infer_precedence(image.program, PPO) is not None, seed
        moved = transfer_uniform_qi(comp.qi, comp.program, image)
        assert check_qi(image.program, moved).overall == "valid", seed


def test_compiled_semantics_matches_reference_randomly():
    import random as rnd

    rng = rnd.Random(5)
    for seed in range(12):
        bc = random_bc(seed, 3)
        n, m = bc_arity(bc)
        comp = compile_bc(bc)
        for _ in range(4):
            normals = tuple(
                tuple(rng.randint(0, 1) for _ in range(rng.randint(0, 3)))
                for _ in range(n)
            )
            safes = tuple(
                tuple(rng.randint(0, 1) for _ in range(rng.randint(0, 3)))
                for _ in range(m)
            )
            assert run_compiled(comp, normals, safes) == bc_eval(bc, normals, safes)


def test_auto_qi_is_compile_qi():
    add = parse_bc((CORPUS / "add.bc").read_text())
    assert auto_qi(add) == compile_bc(add).qi


def test_blind_image_growth_within_assembled_bound():
    from polytrs.blind import measure_strong_poly, strong_poly_bound

    add = parse_bc((CORPUS / "add.bc").read_text())
    comp = compile_bc(add)
    image = blind_program(comp.program)
    prec = infer_precedence(image.program, PPO)
    moved = transfer_uniform_qi(comp.qi, comp.program, image)
    assert check_qi(image.program, moved).overall == "valid"
    table = measure_strong_poly(image.program, sizes=range(1, 6))
    for row in table.rows:
        assert row.worst_rules <= strong_poly_bound(image.program, moved, prec, row.size)
