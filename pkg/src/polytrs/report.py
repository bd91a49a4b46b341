"""Certification report assembly.

One report gathers every analysis stage over a program and derives the
three overall verdicts:

* P-criterion: strict path order pass plus a valid quasi-interpretation.
* Blind-P: P-criterion plus uniformity and linearity (so the bound
  survives blinding).
* Extended-P: fair path order pass plus certified bounded values.

Reports are deterministic given inputs, seed and budget, and every overall
verdict is recomputable from the per-stage fields.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Optional

from .base import Budget, DEFAULT_BUDGET, NotWordProgram, TrsError
from .blind import blind_program, is_linear, program_is_linear, transfer_uniform_qi
from .ordering import EPPO, PPO, check_program, infer_precedence, parse_precedence
from .parser import format_program
from .qi import QiAssignment, VALID, check_qi, is_uniform
from .semantics import is_orthogonal
from .terms import Program
from .wordnorm import certify_extended

SCHEMA_VERSION = 1
TOOL_VERSION = "0.1.0"

PASS = "pass"
FAIL = "fail"
UNKNOWN = "unknown"


def program_digest(program: Program) -> str:
    return hashlib.sha256(format_program(program).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Report:
    data: dict

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True) + "\n"

    @property
    def verdicts(self) -> dict:
        return self.data["verdicts"]

    def exit_code(self) -> int:
        values = [self.verdicts[k] for k in ("p_criterion", "blind_p", "extended_p")]
        if PASS in values:
            return 0
        if all(v == FAIL for v in values):
            return 1
        return 2


def _three_valued(flag: Optional[bool]) -> str:
    if flag is None:
        return UNKNOWN
    return PASS if flag else FAIL


def build_report(
    program: Program,
    assignment: Optional[QiAssignment] = None,
    order_text: Optional[str] = None,
    seed: int = 0,
    budget: Budget = DEFAULT_BUDGET,
    sizes: range = range(1, 9),
    with_measurements: bool = True,
) -> Report:
    """Run the full pipeline and assemble the machine-readable report."""
    stages: dict = {}
    order_text = order_text or program.declared_order

    def precedence_for(mode: str):
        if order_text:
            return parse_precedence(order_text, program, mode)
        return infer_precedence(program, mode)

    ppo_prec = precedence_for(PPO)
    ppo = check_program(program, ppo_prec, PPO) if ppo_prec is not None else None
    eppo_prec = precedence_for(EPPO)
    eppo = check_program(program, eppo_prec, EPPO) if eppo_prec is not None else None
    stages["ordering"] = {
        "ppo": ppo.as_dict() if ppo else {"overall": False, "note": "no precedence found"},
        "eppo": eppo.as_dict() if eppo else {"overall": False, "note": "no precedence found"},
    }
    ppo_pass = bool(ppo and ppo.overall)
    eppo_pass = bool(eppo and eppo.overall)

    qi_overall = None
    uniform = None
    if assignment is not None:
        verdict = check_qi(program, assignment, seed=seed)
        uniform = is_uniform(assignment, program)
        qi_overall = verdict.overall
        stages["qi"] = verdict.as_dict()
        stages["qi"]["uniform"] = uniform
    else:
        stages["qi"] = None

    prec = eppo_prec or ppo_prec
    linear = program_is_linear(program, prec) if prec is not None else None
    stages["linearity"] = (
        {"per_function": is_linear(program, prec), "overall": linear}
        if prec is not None
        else None
    )
    stages["memo_gate"] = {"orthogonal": is_orthogonal(program)}
    stages["repeated_lhs_variables"] = program.has_repeated_lhs_variables()

    try:
        blind = blind_program(program)
        blind_stage: dict = {
            "program": format_program(blind.program),
            "provenance": dict(sorted(blind.provenance.items())),
            "duplicate_equations": [list(g) for g in blind.duplicate_groups],
        }
        bl_prec = infer_precedence(blind.program, PPO)
        bl_ppo = (
            check_program(blind.program, bl_prec, PPO) if bl_prec is not None else None
        )
        blind_stage["ppo"] = {"overall": bool(bl_ppo and bl_ppo.overall)}
        if assignment is not None and uniform:
            transferred = transfer_uniform_qi(assignment, program, blind)
            blind_stage["transferred_qi"] = check_qi(
                blind.program, transferred, seed=seed
            ).overall
        stages["blind"] = blind_stage
    except NotWordProgram as exc:
        stages["blind"] = {"error": str(exc)}

    extended = None
    if with_measurements:
        try:
            extended = certify_extended(
                program, assignment, sizes=sizes, budget=budget, seed=seed
            )
            stages["extended"] = extended.as_dict()
        except TrsError as exc:
            stages["extended"] = {"error": str(exc)}
    else:
        stages["extended"] = None

    if ppo_pass and qi_overall == VALID:
        p_criterion = PASS
    elif not ppo_pass or qi_overall == "invalid":
        p_criterion = FAIL
    else:
        p_criterion = UNKNOWN
    blind_p = (
        PASS
        if (p_criterion == PASS and bool(uniform) and bool(linear))
        else (
            FAIL
            if p_criterion == FAIL or uniform is False or linear is False
            else UNKNOWN
        )
    )
    if extended is not None:
        if extended.overall == "certified-p":
            extended_p = PASS
        elif extended.overall == "refuted" or not eppo_pass:
            extended_p = FAIL
        else:
            extended_p = UNKNOWN
    else:
        extended_p = PASS if (eppo_pass and qi_overall == VALID) else (
            FAIL if not eppo_pass else UNKNOWN
        )

    data = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": TOOL_VERSION,
        "program": {
            "digest": program_digest(program),
            "main": program.main.name,
            "functions": sorted(f.name for f in program.functions),
            "constructors": sorted(c.name for c in program.constructors),
            "equations": len(program.equations),
        },
        "parameters": {
            "seed": seed,
            "budget": {
                "max_rules": budget.max_rules,
                "max_depth": budget.max_depth,
                "max_derivations": budget.max_derivations,
            },
            "sizes": [sizes.start, sizes.stop - 1] if isinstance(sizes, range) else None,
            # fixed evaluation conventions that shape which derivations are
            # explored under truncation
            "split_order": "left-to-right",
            "rank_counting": "per-precedence-class",
        },
        "stages": stages,
        "verdicts": {
            "p_criterion": p_criterion,
            "blind_p": blind_p,
            "extended_p": extended_p,
        },
    }
    return Report(data)
