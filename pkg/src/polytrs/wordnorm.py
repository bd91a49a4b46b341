"""Word-program analysis: production sizes, normality, normalization,
path commutation, descendant bounds and the extended certification.

Everything here assumes unary words: all constructors have arity at most
one, so patterns are either ground words or a constructor prefix applied to
a variable.  Programs mixing in wider constructors are rejected outright.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .base import (
    Budget,
    BudgetExceeded,
    CycleDetected,
    DEFAULT_BUDGET,
    NormalizationError,
    NotWordProgram,
)
from .callgraph import (
    CallNode,
    CallStructure,
    DAG,
    State,
    reachable_states,
    rhs_call_positions,
)
from .ordering import EPPO, OrderingVerdict, Precedence, check_program, infer_precedence
from .qi import QiAssignment, QiExpr, VALID, check_qi, eval_expr
from .semantics import is_orthogonal
from .terms import (
    App,
    Equation,
    Program,
    Symbol,
    Term,
    Var,
    format_term,
    term_size,
    variables,
)


@dataclass(frozen=True)
class WordPattern:
    prefix: tuple  # unary constructor symbols, outermost first
    tail: Optional[str]  # variable name, or None for a ground word
    terminator: Optional[Symbol]  # nullary constructor of a ground word

    @property
    def length(self) -> int:
        """Pattern length: |prefix| for open patterns, the full constructor
        count (prefix plus terminator) for ground ones."""
        return len(self.prefix) + (1 if self.tail is None else 0)


def word_pattern(p: Term) -> WordPattern:
    prefix = []
    while isinstance(p, App) and p.symbol.arity == 1:
        if not p.symbol.is_constructor:
            raise NotWordProgram(f"{p.symbol.name} is not a constructor")
        prefix.append(p.symbol)
        p = p.args[0]
    if isinstance(p, Var):
        return WordPattern(tuple(prefix), p.name, None)
    if isinstance(p, App) and p.symbol.is_constructor and p.symbol.arity == 0:
        return WordPattern(tuple(prefix), None, p.symbol)
    raise NotWordProgram(f"{format_term(p)} is not a word pattern")


def require_word_program(program: Program) -> None:
    for c in program.constructors:
        if c.arity > 1:
            raise NotWordProgram(
                f"constructor {c.name}/{c.arity} takes the program outside words"
            )


@dataclass(frozen=True)
class SameClassCall:
    equation: Equation
    occurrence: int
    callee: Symbol
    arg_patterns: tuple  # WordPattern per argument

    @property
    def production_size(self) -> int:
        return max((w.length for w in self.arg_patterns), default=0)


@dataclass(frozen=True)
class ProductionProfile:
    per_equation: dict  # equation index -> K_e
    per_class: dict  # class id -> K_h
    calls: tuple  # SameClassCall in label order

    def class_k(self, precedence: Precedence, name: str) -> int:
        return self.per_class.get(precedence.class_of(name), 0)


def same_class_calls(program: Program, precedence: Precedence) -> list[SameClassCall]:
    """The labelled enumeration g^1..g^n of same-class rhs call sites."""
    require_word_program(program)
    out = []
    for eq in program.equations:
        cls = precedence.class_of(eq.lhs_function.name)
        for occ, pos in enumerate(rhs_call_positions(eq)):
            sub: Term = eq.rhs
            for i in pos:
                sub = sub.args[i]
            assert isinstance(sub, App)
            if precedence.class_of(sub.symbol.name) != cls:
                continue
            args = []
            for a in sub.args:
                try:
                    args.append(word_pattern(a))
                except NotWordProgram:
                    raise NotWordProgram(
                        f"equation {eq.index}: same-class call argument "
                        f"{format_term(a)} is not a word pattern"
                    )
            out.append(SameClassCall(eq, occ, sub.symbol, tuple(args)))
    return out


def production_profile(program: Program, precedence: Precedence) -> ProductionProfile:
    """Exact production sizes K_e per equation and K per precedence class."""
    calls = same_class_calls(program, precedence)
    per_equation: dict = {eq.index: 0 for eq in program.equations}
    for call in calls:
        per_equation[call.equation.index] = max(
            per_equation[call.equation.index], call.production_size
        )
    per_class: dict = {}
    for eq in program.equations:
        cls = precedence.class_of(eq.lhs_function.name)
        per_class[cls] = max(per_class.get(cls, 0), per_equation[eq.index])
    return ProductionProfile(per_equation, per_class, tuple(calls))


@dataclass(frozen=True)
class NormalityReport:
    normal: bool
    witnesses: tuple  # (equation index, argument position, length, required)


def is_normal(program: Program, precedence: Precedence) -> NormalityReport:
    """Every pattern of every same-class equation is at least K long.

    Ground patterns count their terminator (full length); open patterns
    count the constructor prefix.
    """
    profile = production_profile(program, precedence)
    witnesses = []
    for eq in program.equations:
        k = profile.per_class.get(precedence.class_of(eq.lhs_function.name), 0)
        for i, p in enumerate(eq.lhs_patterns):
            w = word_pattern(p)
            if w.length < k:
                witnesses.append((eq.index, i, w.length, k))
    return NormalityReport(not witnesses, tuple(witnesses))


def _fresh_var(eq: Equation, base: str) -> str:
    used = set()
    for t in (eq.lhs,) + (eq.rhs,):
        used.update(variables(t))
    cand = base + "'"
    while cand in used:
        cand += "'"
    return cand


def _instantiate(eq: Equation, var: str, replacement: Term) -> Equation:
    subst = {var: replacement}
    for v in variables(eq.lhs):
        subst.setdefault(v, Var(v))
    from .terms import apply_subst

    return Equation(
        eq.lhs_function,
        tuple(apply_subst(p, subst) for p in eq.lhs_patterns),
        apply_subst(eq.rhs, subst),
        eq.index,
    )


def normalize(
    program: Program,
    precedence: Optional[Precedence] = None,
    max_equations: int = 10_000,
) -> Program:
    """Extend under-sized patterns until every class reaches its production size.

    An equation whose pattern is shorter than the class K is replaced by its
    instances under tail |-> c(tail') for every unary constructor and
    tail |-> z for every nullary one; K is recomputed every round.  Ground
    patterns cannot be extended, so a ground pattern below K is an error.
    """
    require_word_program(program)
    if precedence is None:
        precedence = infer_precedence(program, EPPO)
        if precedence is None:
            raise NormalizationError("the program is not ordered by the fair path order")
    verdict = check_program(program, precedence, EPPO)
    if not verdict.overall:
        raise NormalizationError(
            "normalization needs a program ordered by the fair path order"
        )
    unary = [c for c in program.constructors if c.arity == 1]
    nullary = [c for c in program.constructors if c.arity == 0]
    equations = list(program.equations)
    while True:
        prog = Program(program.signature, tuple(
            Equation(e.lhs_function, e.lhs_patterns, e.rhs, i)
            for i, e in enumerate(equations)
        ), program.main)
        profile = production_profile(prog, precedence)
        target = None
        for eq in prog.equations:
            k = profile.per_class.get(precedence.class_of(eq.lhs_function.name), 0)
            for i, p in enumerate(eq.lhs_patterns):
                w = word_pattern(p)
                if w.length >= k:
                    continue
                if w.tail is None:
                    raise NormalizationError(
                        f"equation {eq.index}: ground pattern of length "
                        f"{w.length} cannot reach the production size {k}"
                    )
                target = (eq, w.tail)
                break
            if target:
                break
        if target is None:
            return prog
        eq, tail = target
        instances = []
        for c in unary:
            fresh = _fresh_var(eq, tail)
            instances.append(_instantiate(eq, tail, App(c, (Var(fresh),))))
        for z in nullary:
            instances.append(_instantiate(eq, tail, App(z)))
        pos = eq.index  # prog was re-indexed by list position
        equations = equations[:pos] + instances + equations[pos + 1 :]
        if len(equations) > max_equations:
            raise NormalizationError(
                f"normalization exceeded the {max_equations}-equation cap"
            )


def normalization_diff(original: Program, normalized: Program) -> dict:
    old = {repr(e) for e in original.equations}
    new = {repr(e) for e in normalized.equations}
    return {
        "added": sorted(new - old),
        "removed": sorted(old - new),
        "equations_before": len(original.equations),
        "equations_after": len(normalized.equations),
    }


# -- path words over the call dag ----------------------------------------------


@dataclass(frozen=True)
class PathLabel:
    """One occurrence in the global enumeration of same-class call sites."""

    index: int
    equation_index: int
    occurrence: int
    callee: str

    def __repr__(self) -> str:
        return f"{self.callee}^{self.index}"


def call_site_labels(program: Program, precedence: Precedence) -> dict:
    """(equation index, rhs occurrence) -> PathLabel for same-class sites."""
    labels = {}
    for i, call in enumerate(same_class_calls(program, precedence)):
        labels[(call.equation.index, call.occurrence)] = PathLabel(
            i + 1, call.equation.index, call.occurrence, call.callee.name
        )
    return labels


def _adjacency(dag: CallStructure):
    for node in dag.nodes():
        for edge, child in dag.successors_of(node):
            yield node, edge, child


def same_class_paths(
    dag: CallStructure,
    start: CallNode,
    labels: dict,
    precedence: Precedence,
    max_length: int = 6,
) -> list[tuple[tuple, CallNode]]:
    """All same-class label paths from a node, up to a length cap."""
    cls = precedence.class_of(start.state.function.name)
    out: list[tuple[tuple, CallNode]] = []

    def go(node: CallNode, word: tuple) -> None:
        if len(word) >= max_length:
            return
        for edge, child in dag.successors_of(node):
            if precedence.class_of(child.state.function.name) != cls:
                continue
            lab = labels.get((edge.equation.index, edge.occurrence))
            if lab is None:
                continue
            out.append((word + (lab,), child))
            go(child, word + (lab,))

    go(start, ())
    return out


def path_word(
    dag: CallStructure,
    ancestor: State,
    descendant: State,
    program: Program,
    precedence: Precedence,
    max_length: int = 12,
) -> list[PathLabel]:
    """The label sequence of a same-class path between two dag states."""
    labels = call_site_labels(program, precedence)
    start = next((n for n in dag.nodes() if n.state == ancestor), None)
    if start is None:
        raise ValueError(f"{ancestor!r} does not occur in the dag")
    for word, node in same_class_paths(dag, start, labels, precedence, max_length):
        if node.state == descendant:
            return list(word)
    raise ValueError(f"no same-class path from {ancestor!r} to {descendant!r}")


@dataclass(frozen=True)
class DescendantBound:
    state: State
    count: int
    bound: int
    holds: bool
    branch_cap: int
    longest_branch: int
    branch_holds: bool


def same_class_descendant_bound(
    dag: CallStructure, node: CallNode, precedence: Precedence, program: Program
) -> DescendantBound:
    """Distinct same-class descendants against (I+1)^M, branches against I.

    M is the size of the path-label alphabet of the node's class: the number
    of enumerated same-class call sites.  Counting class members instead is
    too small; a two-site single-function descent already beats it.
    """
    if dag.kind != DAG:
        raise ValueError("the descendant bound is a call-dag statement")
    cls = precedence.class_of(node.state.function.name)
    m = sum(
        1
        for call in same_class_calls(program, precedence)
        if precedence.class_of(call.equation.lhs_function.name) == cls
    )
    m = max(m, 1)
    n = node.state.function.arity
    i_cap = n * max((term_size(v) for v in node.state.arguments), default=0)
    seen: set = set()
    longest = [0]

    def go(cur: CallNode, depth: int) -> None:
        longest[0] = max(longest[0], depth)
        for _, child in dag.successors_of(cur):
            if precedence.class_of(child.state.function.name) != cls:
                continue
            if child.state in seen:
                continue
            seen.add(child.state)
            go(child, depth + 1)

    go(node, 0)
    bound = (i_cap + 1) ** m
    return DescendantBound(
        node.state,
        len(seen),
        bound,
        len(seen) <= bound,
        i_cap,
        longest[0],
        longest[0] <= i_cap,
    )


def vector_count(n: int, i: int) -> int:
    """Number of n-vectors of naturals with component sum exactly i.

    Matches the recurrence D_i^n = sum_{j<=i} D_j^(n-1), and is bounded by
    (i+1)^n.
    """
    if n == 0:
        return 1 if i == 0 else 0
    if n == 1:
        return 1
    return sum(vector_count(n - 1, j) for j in range(i + 1))


# -- bounded values measurement --------------------------------------------------


@dataclass(frozen=True)
class BoundedValuesRow:
    size: int
    max_state_size: int
    states: int
    truncated: bool
    poly_ok: Optional[bool] = None

    def as_dict(self) -> dict:
        return {
            "n": self.size,
            "max_state_size": self.max_state_size,
            "states": self.states,
            "truncated": self.truncated,
            "poly_ok": self.poly_ok,
        }


def measure_bounded_values(
    program: Program,
    sizes: range = range(1, 9),
    budget: Budget = DEFAULT_BUDGET,
    user_poly: Optional[QiExpr] = None,
    inputs_cap: int = 32,
    seed: int = 0,
) -> list[BoundedValuesRow]:
    """Per input size, the largest state in any call tree of any input.

    States are enumerated through the transition relation, which agrees
    with call-tree membership; a user polynomial in the input size is
    checked against each untruncated row when supplied.
    """
    from .blind import input_tuples

    rows = []
    main = program.main
    for n in sizes:
        worst = 0
        count = 0
        truncated = False
        for args in input_tuples(program, main, n, inputs_cap, seed):
            try:
                states = reachable_states(program, State(main, tuple(args)), budget)
            except (BudgetExceeded, CycleDetected):
                truncated = True
                continue
            count += len(states)
            for st in states:
                worst = max(worst, term_size(st.term))
        poly_ok = None
        if user_poly is not None and not truncated:
            poly_ok = eval_expr(user_poly, [n]) >= worst
        rows.append(BoundedValuesRow(n, worst, count, truncated, poly_ok))
    return rows


# -- extended certification ------------------------------------------------------


@dataclass(frozen=True)
class ExtendedVerdict:
    eppo: Optional[OrderingVerdict]
    eppo_pass: bool
    word: bool
    normalized: bool
    normal_equations: Optional[int]
    qi_overall: Optional[str]
    orthogonal: bool
    linear: bool
    bounded_values: str  # certified | empirical-poly | empirical-exp | unknown
    growth: Optional[dict]
    value_rows: Optional[tuple]
    overall: str  # certified-p | refuted | empirically-consistent | unknown

    def as_dict(self) -> dict:
        return {
            "eppo": self.eppo.as_dict() if self.eppo else None,
            "eppo_pass": self.eppo_pass,
            "word_program": self.word,
            "normalized": self.normalized,
            "normal_equations": self.normal_equations,
            "qi": self.qi_overall,
            "orthogonal": self.orthogonal,
            "linear": self.linear,
            "bounded_values": self.bounded_values,
            "growth": self.growth,
            "value_rows": [r.as_dict() for r in self.value_rows] if self.value_rows else None,
            "overall": self.overall,
        }


def certify_extended(
    program: Program,
    assignment: Optional[QiAssignment] = None,
    user_poly: Optional[QiExpr] = None,
    sizes: range = range(1, 9),
    budget: Budget = DEFAULT_BUDGET,
    seed: int = 0,
) -> ExtendedVerdict:
    """The composite verdict behind the extended criterion.

    A fair-order pass plus a valid quasi-interpretation certifies membership
    (with memoisation, hence the confluence or linearity gate); otherwise
    measurement can refute polynomial growth or support it empirically.
    """
    from .blind import classify_growth, measure_strong_poly, program_is_linear

    word = all(c.arity <= 1 for c in program.constructors)
    prec = infer_precedence(program, EPPO)
    eppo = check_program(program, prec, EPPO) if prec is not None else None
    eppo_pass = bool(eppo and eppo.overall)

    normalized = False
    normal_equations = None
    working = program
    if eppo_pass and word:
        try:
            working = normalize(program, prec)
            normalized = working.equations != program.equations
            normal_equations = len(working.equations)
        except (NormalizationError, NotWordProgram):
            pass

    qi_overall = None
    if assignment is not None:
        qi_overall = check_qi(program, assignment, seed=seed).overall

    orthogonal = is_orthogonal(program)
    linear = bool(prec) and program_is_linear(program, prec)
    has_memo_path = orthogonal or linear

    growth = None
    value_rows = None
    bounded = "unknown"
    if qi_overall == VALID:
        bounded = "certified"
    elif word:
        # With a memoisation (or linear cbv) path the relevant empirical
        # quantity is the size of reachable states; without one, plain
        # call-by-value growth is all there is to measure.
        if has_memo_path:
            try:
                value_rows = tuple(
                    measure_bounded_values(
                        program, sizes=sizes, budget=budget, user_poly=user_poly,
                        seed=seed,
                    )
                )
                cls = classify_growth(
                    [r.max_state_size for r in value_rows if not r.truncated]
                )
                if cls == "exponential-consistent":
                    bounded = "empirical-exp"
                elif cls == "polynomial-consistent" or (
                    len({r.max_state_size for r in value_rows}) == 1
                    and not any(r.truncated for r in value_rows)
                ):
                    bounded = "empirical-poly"
            except (BudgetExceeded, CycleDetected, NotWordProgram):
                value_rows = None
        else:
            try:
                table = measure_strong_poly(program, sizes=sizes, budget=budget, seed=seed)
                growth = table.as_dict()
                rules_cls = growth["classification"]["worst_rules"]
                if rules_cls == "exponential-consistent":
                    bounded = "empirical-exp"
                elif rules_cls == "polynomial-consistent":
                    bounded = "empirical-poly"
            except (BudgetExceeded, CycleDetected, NotWordProgram):
                pass

    if eppo_pass and qi_overall == VALID and has_memo_path:
        overall = "certified-p"
    elif bounded == "empirical-exp":
        overall = "refuted"
    elif eppo_pass and bounded == "empirical-poly" and (
        user_poly is None
        or (value_rows and all(r.poly_ok for r in value_rows if r.poly_ok is not None))
    ):
        overall = "empirically-consistent"
    else:
        overall = "unknown"

    return ExtendedVerdict(
        eppo,
        eppo_pass,
        word,
        normalized,
        normal_equations,
        qi_overall,
        orthogonal,
        linear,
        bounded,
        growth,
        value_rows,
        overall,
    )
