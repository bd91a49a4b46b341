"""Command-line front end.

Exit codes: 0 certified/pass, 1 refuted, 2 unknown, 3 usage or input error.
All commands emit JSON (CSV/DOT where noted) on stdout or to ``--out``.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .base import Budget, TrsError
from .bc import compile_bc, parse_bc
from .blind import blind_program, is_linear, measure_strong_poly
from .callgraph import call_dag, call_tree
from .ordering import EPPO, PPO, check_program, infer_precedence, parse_precedence
from .parser import format_program, parse_program, parse_term
from .qi import check_qi, is_uniform, parse_assignment, _parse_expr
from .report import build_report, program_digest
from .semantics import (
    Exhaustive,
    FirstMatch,
    Seeded,
    eval_cbv,
    eval_memo,
    proof_to_json,
)
from .terms import Program, format_term
from .wordnorm import (
    is_normal,
    measure_bounded_values,
    normalization_diff,
    normalize,
)


def _load_program(path: str) -> Program:
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read())


def _budget(args) -> Budget:
    return Budget(
        max_rules=args.budget_rules,
        max_depth=args.budget_depth,
        max_derivations=args.budget_derivations,
    )


def _sizes(text: str) -> range:
    lo, _, hi = text.partition("..")
    return range(int(lo), int(hi or lo) + 1)


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, data) -> None:
    _emit(args, json.dumps(data, indent=2, sort_keys=True) + "\n")


def _precedence(args, program: Program, mode: str):
    text = args.order or program.declared_order
    if text:
        return parse_precedence(text, program, mode)
    return infer_precedence(program, mode)


def _policy(args):
    if args.policy == "exhaustive":
        return Exhaustive()
    if args.policy == "seeded":
        return Seeded(args.seed)
    return FirstMatch()


def main(argv: Optional[list] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="polytrs",
        description="Rewrite-program complexity certification toolkit",
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--budget-rules", type=int, default=200_000)
    parser.add_argument("--budget-depth", type=int, default=2_000)
    parser.add_argument("--budget-derivations", type=int, default=5_000)
    parser.add_argument("--sizes", type=_sizes, default=range(1, 9))
    parser.add_argument("--qi", metavar="FILE", help="assignment file")
    parser.add_argument("--order", metavar="STRING", help="precedence, e.g. 'append < f'")
    parser.add_argument("--mode", choices=[PPO, EPPO], default=EPPO)
    parser.add_argument("--allow-nonconfluent-memo", action="store_true")
    parser.add_argument("--out", metavar="FILE")
    parser.add_argument("--format", choices=["json", "csv", "dot"], default="json")
    parser.add_argument(
        "--policy", choices=["first", "seeded", "exhaustive"], default="first"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("parse", help="parse and reprint a program")
    sp.add_argument("program")
    sp = sub.add_parser("eval", help="call-by-value evaluation")
    sp.add_argument("program")
    sp.add_argument("term")
    sp = sub.add_parser("memo", help="evaluation with cache")
    sp.add_argument("program")
    sp.add_argument("term")
    sp = sub.add_parser("tree", help="call tree of a cbv proof")
    sp.add_argument("program")
    sp.add_argument("term")
    sp = sub.add_parser("dag", help="call dag of a memo proof")
    sp.add_argument("program")
    sp.add_argument("term")
    sp = sub.add_parser("check-order", help="path-ordering termination check")
    sp.add_argument("program")
    sp = sub.add_parser("check-qi", help="verify a quasi-interpretation")
    sp.add_argument("program")
    sp = sub.add_parser("blind", help="blind image of a program")
    sp.add_argument("program")
    sp = sub.add_parser("linearity", help="per-function linearity report")
    sp.add_argument("program")
    sp = sub.add_parser("normalize", help="word-program normalization")
    sp.add_argument("program")
    sp = sub.add_parser("bc-compile", help="compile a safe-recursion term")
    sp.add_argument("bcfile")
    sp = sub.add_parser("measure", help="worst-case growth measurement")
    sp.add_argument("program")
    sp.add_argument("--poly", help="polynomial in n to check against the rows")
    sp.add_argument(
        "--kind", choices=["growth", "values"], default="growth",
        help="growth: derivation size table; values: reachable state sizes",
    )
    sp = sub.add_parser("certify", help="full criteria pipeline and report")
    sp.add_argument("program")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except TrsError as exc:
        _emit_json(args, {"error": exc.code, "message": str(exc)})
        return 3
    except OSError as exc:
        _emit_json(args, {"error": "io-error", "message": str(exc)})
        return 3


def _dispatch(args) -> int:
    budget = _budget(args)

    if args.command == "parse":
        program = _load_program(args.program)
        if args.format == "json":
            _emit_json(
                args,
                {
                    "digest": program_digest(program),
                    "program": format_program(program),
                    "repeated_lhs_variables": program.has_repeated_lhs_variables(),
                },
            )
        else:
            _emit(args, format_program(program))
        return 0

    if args.command in ("eval", "memo", "tree", "dag"):
        program = _load_program(args.program)
        symbols = {s.name: s for s in program.signature}
        term = parse_term(args.term, symbols)
        if args.command in ("memo", "dag"):
            proof = eval_memo(
                program, term, budget, allow_nonconfluent=args.allow_nonconfluent_memo
            )
        else:
            proof = next(iter(eval_cbv(program, term, _policy(args), budget)))
        if args.command in ("eval", "memo"):
            payload = {
                "result": format_term(proof.result),
                "stats": proof.stats.as_dict(),
                "proof": proof_to_json(proof),
            }
            if args.command == "memo" and args.allow_nonconfluent_memo:
                from .semantics import is_orthogonal

                payload["nonconfluent_override"] = not is_orthogonal(program)
            _emit_json(args, payload)
        else:
            structure = call_tree(proof) if args.command == "tree" else call_dag(proof)
            if args.format == "dot":
                _emit(args, structure.to_dot() + "\n")
            else:
                _emit_json(args, structure.to_json())
        return 0

    if args.command == "check-order":
        program = _load_program(args.program)
        prec = _precedence(args, program, args.mode)
        if prec is None:
            _emit_json(args, {"mode": args.mode, "overall": False, "note": "no precedence found"})
            return 1
        verdict = check_program(program, prec, args.mode)
        _emit_json(args, verdict.as_dict())
        return 0 if verdict.overall else 1

    if args.command == "check-qi":
        program = _load_program(args.program)
        if not args.qi:
            _emit_json(args, {"error": "usage", "message": "--qi FILE is required"})
            return 3
        with open(args.qi, encoding="utf-8") as fh:
            assignment = parse_assignment(fh.read(), program)
        verdict = check_qi(program, assignment, seed=args.seed)
        out = verdict.as_dict()
        out["uniform"] = is_uniform(assignment, program)
        _emit_json(args, out)
        return {"valid": 0, "invalid": 1, "unknown": 2}[verdict.overall]

    if args.command == "blind":
        program = _load_program(args.program)
        image = blind_program(program)
        _emit_json(
            args,
            {
                "program": format_program(image.program),
                "provenance": dict(sorted(image.provenance.items())),
                "duplicate_equations": [list(g) for g in image.duplicate_groups],
            },
        )
        return 0

    if args.command == "linearity":
        program = _load_program(args.program)
        prec = _precedence(args, program, args.mode)
        if prec is None:
            _emit_json(args, {"overall": None, "note": "no precedence found"})
            return 2
        per = is_linear(program, prec)
        _emit_json(args, {"per_function": per, "overall": all(per.values())})
        return 0 if all(per.values()) else 1

    if args.command == "normalize":
        program = _load_program(args.program)
        prec = _precedence(args, program, EPPO)
        normalized = normalize(program, prec)
        result = {
            "program": format_program(normalized),
            "diff": normalization_diff(program, normalized),
            "normal": is_normal(normalized, prec or infer_precedence(normalized, EPPO)).normal
            if prec is not None
            else None,
        }
        _emit_json(args, result)
        return 0

    if args.command == "bc-compile":
        with open(args.bcfile, encoding="utf-8") as fh:
            bc = parse_bc(fh.read())
        comp = compile_bc(bc)
        from .qi import format_assignment

        if args.format == "json":
            _emit_json(
                args,
                {
                    "program": format_program(comp.program),
                    "qi": format_assignment(comp.qi, comp.program),
                    "provenance": dict(sorted(comp.provenance.items())),
                    "argument_split": {
                        k: {"normal": v[0], "safe": v[1]}
                        for k, v in sorted(comp.boundaries.items())
                    },
                },
            )
        else:
            _emit(args, format_program(comp.program))
        return 0

    if args.command == "measure":
        program = _load_program(args.program)
        poly = (
            _parse_expr(args.poly, ["n"], 1) if getattr(args, "poly", None) else None
        )
        if args.kind == "growth":
            table = measure_strong_poly(
                program, sizes=args.sizes, budget=budget, seed=args.seed
            )
            if args.format == "csv":
                _emit(args, table.as_csv())
            else:
                _emit_json(args, table.as_dict())
        else:
            rows = measure_bounded_values(
                program, sizes=args.sizes, budget=budget, user_poly=poly, seed=args.seed
            )
            _emit_json(args, {"rows": [r.as_dict() for r in rows]})
        return 0

    if args.command == "certify":
        program = _load_program(args.program)
        assignment = None
        if args.qi:
            with open(args.qi, encoding="utf-8") as fh:
                assignment = parse_assignment(fh.read(), program)
        report = build_report(
            program,
            assignment,
            order_text=args.order,
            seed=args.seed,
            budget=budget,
            sizes=args.sizes,
        )
        _emit(args, report.to_json())
        return report.exit_code()

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
