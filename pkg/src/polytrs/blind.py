"""Blind abstraction: collapse word constructors and measure growth.

Blinding maps every arity-1 constructor to ``s`` and every arity-0
constructor to ``0``, keeping one function symbol per original.  The image
of a deterministic program is in general non-deterministic, so worst-case
measurement quantifies over all derivations; the measurement back end is an
exact dynamic program over states rather than derivation enumeration.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .base import (
    Budget,
    BudgetExceeded,
    CycleDetected,
    DEFAULT_BUDGET,
    NotWordProgram,
    QiError,
)
from .ordering import Precedence
from .qi import QiAssignment, is_uniform
from .semantics import DerivationProof, Judgement
from .terms import (
    App,
    CONSTRUCTOR,
    Equation,
    FUNCTION,
    Program,
    Symbol,
    Term,
    Var,
    apply_subst,
    format_term,
    is_value,
    matching_equations,
    subterms,
    term_size,
)

BLIND_S = Symbol("s", CONSTRUCTOR, 1)
BLIND_0 = Symbol("0", CONSTRUCTOR, 0)


@dataclass(frozen=True)
class BlindProgram:
    program: Program
    provenance: dict  # original symbol name -> blinded symbol name
    duplicate_groups: tuple  # tuples of equation indices that became equal

    @property
    def has_duplicates(self) -> bool:
        return bool(self.duplicate_groups)


def _blind_symbol(sym: Symbol, names: dict) -> Symbol:
    if sym.is_constructor:
        return BLIND_S if sym.arity == 1 else BLIND_0
    return Symbol(names[sym.name], FUNCTION, sym.arity)


def _blind_term(t: Term, names: dict) -> Term:
    if isinstance(t, Var):
        return t
    return App(_blind_symbol(t.symbol, names), tuple(_blind_term(a, names) for a in t.args))


def blind_program(program: Program) -> BlindProgram:
    """The blind image; requires all constructors of arity <= 1.

    Equations are mapped one for one, so the provenance is positional;
    duplicates created by the collapse are kept and reported.
    """
    for c in program.constructors:
        if c.arity > 1:
            raise NotWordProgram(
                f"constructor {c.name}/{c.arity} cannot be blinded (arity >= 2)"
            )
    fn_names = {f.name: f"bl_{f.name}" for f in program.functions}
    signature = [BLIND_S, BLIND_0] + [
        Symbol(fn_names[f.name], FUNCTION, f.arity) for f in program.functions
    ]
    equations = []
    for eq in program.equations:
        equations.append(
            Equation(
                _blind_symbol(eq.lhs_function, fn_names),
                tuple(_blind_term(p, fn_names) for p in eq.lhs_patterns),
                _blind_term(eq.rhs, fn_names),
                eq.index,
            )
        )
    groups: dict[tuple, list[int]] = {}
    for eq in equations:
        key = (eq.lhs_function.name, eq.lhs_patterns, eq.rhs)
        groups.setdefault(key, []).append(eq.index)
    dupes = tuple(tuple(v) for v in groups.values() if len(v) > 1)
    provenance = {c.name: ("s" if c.arity == 1 else "0") for c in program.constructors}
    provenance.update(fn_names)
    main = next(s for s in signature if s.name == fn_names[program.main.name])
    blinded = Program(tuple(signature), tuple(equations), main)
    return BlindProgram(blinded, provenance, dupes)


def blind_value(v: Term) -> Term:
    names: dict = {}
    return _blind_term(v, names)


def blind_proof(blind: BlindProgram, proof: DerivationProof) -> DerivationProof:
    """Map a cbv proof through the blinding; rule counts are preserved."""
    fn_names = {k: v for k, v in blind.provenance.items()}
    eq_by_index = {eq.index: eq for eq in blind.program.equations}

    def go(j: Judgement) -> Judgement:
        return Judgement(
            j.rule,
            _blind_term(j.lhs, fn_names),
            _blind_term(j.result, fn_names),
            tuple(go(c) for c in j.children),
            eq_by_index[j.equation.index] if j.equation is not None else None,
        )

    from .semantics import classify

    root = go(proof.root)
    return DerivationProof(root, proof.mode, classify(root), ())


def is_linear(program: Program, precedence: Precedence) -> dict:
    """Per-function linearity: at most one same-class call in each rhs."""
    out: dict[str, bool] = {}
    for f in program.functions:
        linear = True
        for eq in program.equations_for(f):
            occ = 0
            for u in subterms(eq.rhs):
                if isinstance(u, App) and u.symbol.is_function:
                    if (
                        precedence.class_of(u.symbol.name)
                        == precedence.class_of(f.name)
                    ):
                        occ += 1
            if occ > 1:
                linear = False
        out[f.name] = linear
    return out


def program_is_linear(program: Program, precedence: Precedence) -> bool:
    return all(is_linear(program, precedence).values())


def transfer_uniform_qi(
    assignment: QiAssignment, program: Program, blind: BlindProgram
) -> QiAssignment:
    """Carry a uniform assignment over to the blind image."""
    if not is_uniform(assignment, program):
        raise QiError("only uniform assignments can be blinded")
    entries: dict = {}
    unary = [c for c in program.constructors if c.arity == 1]
    nullary = [c for c in program.constructors if c.arity == 0]
    from .qi import Arg, Const, Sum

    entries["s"] = (
        assignment.entry(unary[0].name) if unary else Sum((Arg(0), Const(Fraction(1))))
    )
    entries["0"] = (
        assignment.entry(nullary[0].name) if nullary else Const(Fraction(1))
    )
    for f in program.functions:
        if f.name in assignment.entries:
            entries[blind.provenance[f.name]] = assignment.entry(f.name)
    return QiAssignment(entries)


# -- growth measurement --------------------------------------------------------


@dataclass(frozen=True)
class GrowthRow:
    size: int
    worst_rules: int
    worst_result_size: int
    derivations: int
    truncated: bool

    def as_dict(self) -> dict:
        return {
            "n": self.size,
            "worst_rules": self.worst_rules,
            "worst_result_size": self.worst_result_size,
            "derivations": self.derivations,
            "truncated": self.truncated,
        }


@dataclass(frozen=True)
class GrowthTable:
    rows: tuple
    inputs_per_size: dict

    def as_csv(self) -> str:
        lines = ["n,worst_rules,worst_result_size,derivations,truncated"]
        for r in self.rows:
            lines.append(
                f"{r.size},{r.worst_rules},{r.worst_result_size},"
                f"{r.derivations},{str(r.truncated).lower()}"
            )
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        return {
            "rows": [r.as_dict() for r in self.rows],
            "classification": {
                "worst_rules": classify_growth([r.worst_rules for r in self.rows if not r.truncated]),
                "worst_result_size": classify_growth(
                    [r.worst_result_size for r in self.rows if not r.truncated]
                ),
                "note": "empirical, not a proof",
            },
        }


def classify_growth(values: list) -> str:
    """Successive-ratio heuristic over untruncated rows; empirical only.

    Exponential growth keeps its ratio up; polynomial growth has ratios
    sinking toward one.  Neither pattern is a proof of anything.
    """
    vals = [v for v in values if v > 0]
    if len(vals) < 4:
        return "inconclusive"
    ratios = [b / a for a, b in zip(vals, vals[1:])]
    tail = ratios[-3:]
    geo = (tail[0] * tail[1] * tail[2]) ** (1.0 / 3.0)
    if geo >= 1.4 and tail[-1] >= 1.3:
        return "exponential-consistent"
    sinking = all(b <= a + 0.02 for a, b in zip(tail, tail[1:]))
    if tail[-1] <= 1.35 and (sinking or geo <= 1.25):
        return "polynomial-consistent"
    return "inconclusive"


def word_alphabet(program: Program) -> tuple[list, list]:
    unary = [c for c in program.constructors if c.arity == 1]
    nullary = [c for c in program.constructors if c.arity == 0]
    if any(c.arity > 1 for c in program.constructors):
        raise NotWordProgram("the program has a constructor of arity >= 2")
    return unary, nullary


def make_word(letters: list, terminator: Symbol) -> Term:
    out: Term = App(terminator)
    for sym in reversed(letters):
        out = App(sym, (out,))
    return out


def word_length(v: Term) -> int:
    """Number of unary constructors (letters); the terminator is free."""
    n = 0
    while isinstance(v, App) and v.symbol.arity == 1:
        n += 1
        v = v.args[0]
    return n


def words_of_length(
    program: Program, n: int, cap: int = 64, seed: int = 0
) -> list[Term]:
    unary, nullary = word_alphabet(program)
    if not nullary:
        return []
    total = len(unary) ** n * len(nullary) if unary else len(nullary)
    if n > 0 and not unary:
        return []
    if total <= cap:
        words = []
        for letters in itertools.product(unary, repeat=n):
            for z in nullary:
                words.append(make_word(list(letters), z))
        return words
    rng = random.Random(f"{seed}:{n}")
    words = []
    for _ in range(cap):
        letters = [unary[rng.randrange(len(unary))] for _ in range(n)]
        z = nullary[rng.randrange(len(nullary))]
        words.append(make_word(letters, z))
    return words


def input_tuples(
    program: Program, main: Symbol, n: int, cap: int = 64, seed: int = 0
) -> list[tuple]:
    """Argument tuples of total word length n for the main function."""
    k = main.arity
    if k == 0:
        return [()]
    if k == 1:
        return [(w,) for w in words_of_length(program, n, cap, seed)]
    out = []
    comps = [c for c in itertools.product(range(n + 1), repeat=k) if sum(c) == n]
    rng = random.Random(f"{seed}:{n}:comps")
    if len(comps) > cap:
        comps = rng.sample(comps, cap)
    per = max(2, int(cap ** (1 / k)) + 1)
    per_comp = max(1, (cap * 4) // len(comps))
    for comp in comps:
        pools = [words_of_length(program, c, per, seed) for c in comp]
        out.extend(itertools.islice(itertools.product(*pools), per_comp))
    return out


def strong_poly_bound(program: Program, assignment, precedence, n: int) -> int:
    """Concrete per-size derivation bound for strict-order, valid-QI,
    linear programs: rank recurrence x per-rank descendant cap x activation
    growth, with the QI bounding active sizes."""
    import math

    from .callgraph import function_ranks
    from .ordering import Precedence  # noqa: F401 (signature documentation)
    from .qi import eval_expr, max_constructor_constant
    from .semantics import activation_growth

    main = program.main
    arity = max(1, main.arity)
    a = max_constructor_constant(assignment, program)
    point = [a * (n + 1)] * main.arity
    s_cap = 1 + max(1, program.max_arity()) * eval_expr(
        assignment.entry(main.name), point
    )
    s_cap = int(math.ceil(s_cap))
    a_cap = n + arity  # same-class descendants per node: linearity + descent
    ranks = function_ranks(program, precedence)
    k = max(ranks.values(), default=1)
    d = max(
        (
            sum(1 for u in subterms(eq.rhs) if isinstance(u, App) and u.symbol.is_function)
            for eq in program.equations
        ),
        default=1,
    )
    total_nodes = 0
    for i in range(1, k + 1):
        total_nodes += sum(
            d ** (k - j) * (a_cap + 1) ** (k - j + 1) for j in range(i, k + 1)
        )
    g = activation_growth(program)
    return (total_nodes + 1) * (g * (s_cap + 1) + 1) + n + arity + 1


class _WorstCostDp:
    """Exact worst-case (rules, result) dynamic program over ground terms.

    outcomes(t) maps each derivable value to the pair (max rule count over
    derivations ending in that value, derivation count).  Recursion through
    states is cycle-checked: re-entering an in-progress state means the
    program can loop.
    """

    def __init__(self, program: Program, budget: Budget):
        self.program = program
        self.budget = budget
        self.memo: dict = {}
        self.stack: set = set()
        self.work = 0

    def outcomes(self, t: Term) -> dict:
        if is_value(t):
            return {t: (term_size(t), 1)}
        if t in self.memo:
            return self.memo[t]
        if t in self.stack:
            raise CycleDetected(f"state {format_term(t)} depends on itself")
        self.work += 1
        if self.work > self.budget.max_rules:
            raise BudgetExceeded("worst-cost table exceeded the budget")
        self.stack.add(t)
        try:
            out: dict = {}
            if isinstance(t, Var):
                raise NotWordProgram("open term in measurement")
            if t.symbol.is_constructor or not all(is_value(a) for a in t.args):
                per_arg = [self.outcomes(a) for a in t.args]
                for combo in itertools.product(*(sorted(d, key=format_term) for d in per_arg)):
                    cost = 1 + sum(per_arg[i][v][0] for i, v in enumerate(combo))
                    count = 1
                    for i, v in enumerate(combo):
                        count *= per_arg[i][v][1]
                    head = App(t.symbol, combo)
                    if t.symbol.is_constructor:
                        _merge(out, head, cost, count)
                    else:
                        for v, (c2, n2) in self.outcomes(head).items():
                            _merge(out, v, cost + c2, count * n2)
            else:
                for eq, sigma in matching_equations(self.program, t):
                    body = apply_subst(eq.rhs, sigma)
                    for v, (c, n) in self.outcomes(body).items():
                        _merge(out, v, 1 + c, n)
            self.memo[t] = out
            return out
        finally:
            self.stack.discard(t)


def _merge(out: dict, v: Term, cost: int, count: int) -> None:
    old = out.get(v)
    if old is None:
        out[v] = (cost, count)
    else:
        out[v] = (max(old[0], cost), old[1] + count)


def measure_strong_poly(
    program: Program,
    main: Optional[Symbol] = None,
    sizes: range = range(1, 9),
    budget: Budget = DEFAULT_BUDGET,
    inputs_cap: int = 64,
    seed: int = 0,
) -> GrowthTable:
    """Worst rule count and result size per input size, over all derivations.

    Inputs are all (or a seeded sample of) words of each size; the result
    size column measures word length.  Rows where the budget bites are
    flagged truncated rather than silently clipped.
    """
    main = main or program.main
    rows = []
    inputs_per_size = {}
    for n in sizes:
        tuples = input_tuples(program, main, n, inputs_cap, seed)
        inputs_per_size[n] = len(tuples)
        worst_rules = 0
        worst_result = 0
        derivs = 0
        truncated = False
        for args in tuples:
            dp = _WorstCostDp(program, budget)
            try:
                outs = dp.outcomes(App(main, args))
            except (BudgetExceeded, CycleDetected):
                truncated = True
                continue
            for v, (cost, count) in outs.items():
                worst_rules = max(worst_rules, cost)
                worst_result = max(worst_result, word_length(v))
                derivs += count
        rows.append(GrowthRow(n, worst_rules, worst_result, derivs, truncated))
    return GrowthTable(tuple(rows), inputs_per_size)
