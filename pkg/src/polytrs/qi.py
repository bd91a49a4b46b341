"""Quasi-interpretation expressions, verification and the meet semi-lattice.

Assignment expressions are max-plus polynomials over non-negative rationals:
sums, products, max and (for meets only) min of constants and arguments.
Every expression is weakly monotone and polynomially bounded by construction;
the additivity, subterm and per-equation inequality conditions are verified.

The per-equation check ``floor(l) >= floor(r)`` is decided by a sound but
incomplete normalization to maxima of posynomials with coefficient-wise
dominance, refuted by deterministic grid plus seeded rational sampling, and
reported Unknown otherwise.
"""

from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional

from .base import ParseError, QiError
from .terms import Program, Term, Var, term_size, variables

GRID_POINTS = (0, 1, 2, 5, 10)
RANDOM_POINTS = 256
GRID_CAP = 20_000  # full grid up to this many points, seeded subsample beyond

VALID = "valid"
INVALID = "invalid"
UNKNOWN = "unknown"


# -- expressions --------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: Fraction

    def __post_init__(self):
        v = Fraction(self.value)
        if v < 0:
            raise QiError("negative constant in an assignment expression")
        object.__setattr__(self, "value", v)


@dataclass(frozen=True)
class Arg:
    index: int


@dataclass(frozen=True)
class Sum:
    items: tuple


@dataclass(frozen=True)
class Prod:
    items: tuple


@dataclass(frozen=True)
class Max:
    items: tuple


@dataclass(frozen=True)
class Min:
    items: tuple


QiExpr = Const | Arg | Sum | Prod | Max | Min


def expr_arity(e: QiExpr) -> int:
    if isinstance(e, Arg):
        return e.index + 1
    if isinstance(e, Const):
        return 0
    return max((expr_arity(i) for i in e.items), default=0)


def contains_min(e: QiExpr) -> bool:
    if isinstance(e, Min):
        return True
    if isinstance(e, (Sum, Prod, Max)):
        return any(contains_min(i) for i in e.items)
    return False


def eval_expr(e: QiExpr, point) -> Fraction:
    """Exact rational evaluation at a point of non-negative rationals."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Arg):
        try:
            v = Fraction(point[e.index])
        except IndexError:
            raise QiError(f"point of length {len(point)} for argument {e.index + 1}")
        if v < 0:
            raise QiError("assignment expressions are evaluated on R+")
        return v
    if isinstance(e, Sum):
        return sum((eval_expr(i, point) for i in e.items), Fraction(0))
    if isinstance(e, Prod):
        out = Fraction(1)
        for i in e.items:
            out *= eval_expr(i, point)
        return out
    if isinstance(e, Max):
        return max((eval_expr(i, point) for i in e.items), default=Fraction(0))
    if isinstance(e, Min):
        return min(eval_expr(i, point) for i in e.items)
    raise QiError(f"unknown expression node {e!r}")


def format_expr(e: QiExpr, names: Optional[list] = None) -> str:
    def name(i: int) -> str:
        if names and i < len(names):
            return names[i]
        return f"X{i + 1}"

    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Arg):
        return name(e.index)
    if isinstance(e, Sum):
        return " + ".join(_paren(i, names, Sum) for i in e.items) or "0"
    if isinstance(e, Prod):
        return "*".join(_paren(i, names, Prod) for i in e.items) or "1"
    if isinstance(e, Max):
        return "max(" + ", ".join(format_expr(i, names) for i in e.items) + ")"
    if isinstance(e, Min):
        return "min(" + ", ".join(format_expr(i, names) for i in e.items) + ")"
    raise QiError(f"unknown expression node {e!r}")


def _paren(e: QiExpr, names, ctx) -> str:
    inner = format_expr(e, names)
    if ctx is Prod and isinstance(e, Sum):
        return f"({inner})"
    return inner


def substitute(e: QiExpr, args: list) -> QiExpr:
    """Replace Arg i by args[i]."""
    if isinstance(e, Const):
        return e
    if isinstance(e, Arg):
        return args[e.index]
    return type(e)(tuple(substitute(i, args) for i in e.items))


# -- posynomial normal form ---------------------------------------------------
#
# A posynomial is a map from exponent vectors to positive coefficients; an
# expression normalizes to a max of posynomials (min handled by branch
# selection at the obligation level).


Posy = dict  # tuple[int, ...] -> Fraction


def _posy_add(a: Posy, b: Posy) -> Posy:
    out = dict(a)
    for m, c in b.items():
        out[m] = out.get(m, Fraction(0)) + c
    return out


def _posy_mul(a: Posy, b: Posy) -> Posy:
    out: Posy = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m = tuple(x + y for x, y in zip(m1, m2))
            out[m] = out.get(m, Fraction(0)) + c1 * c2
    return out


def posy_dominates(a: Posy, b: Posy) -> bool:
    """Coefficient-wise a >= b after monomial alignment (sound, incomplete)."""
    return all(a.get(m, Fraction(0)) >= c for m, c in b.items())


def _prune(branches: list) -> list:
    out: list[Posy] = []
    for b in branches:
        if any(posy_dominates(kept, b) for kept in out):
            continue
        out = [kept for kept in out if not posy_dominates(b, kept)]
        out.append(b)
    return out


def max_posy_form(e: QiExpr, arity: int, cap: int = 4096) -> Optional[list]:
    """Max-of-posynomials normal form; None when min occurs or the form blows up.

    Identical max subexpressions always take equal values, so one branch
    choice is made per distinct max node rather than per occurrence; the
    expression is monotone in each such choice, which makes the expansion
    exact instead of merely an upper envelope.
    """
    if contains_min(e):
        return None
    zero = tuple([0] * arity)
    maxes: list[Max] = []
    seen: set = set()

    def collect(u: QiExpr) -> None:
        if isinstance(u, (Const, Arg)):
            return
        if isinstance(u, Max) and u not in seen:
            seen.add(u)
            maxes.append(u)
        for item in u.items:
            collect(item)

    collect(e)
    total = 1
    for m in maxes:
        total *= max(1, len(m.items))
        if total > cap:
            return None

    def inst(u: QiExpr, choice: dict) -> Posy:
        if isinstance(u, Const):
            return {zero: u.value} if u.value else {}
        if isinstance(u, Arg):
            mono = tuple(1 if i == u.index else 0 for i in range(arity))
            return {mono: Fraction(1)}
        if isinstance(u, Max):
            picked = choice[u]
            return inst(picked, choice) if picked is not None else {}
        parts = [inst(item, choice) for item in u.items]
        if isinstance(u, Sum):
            acc: Posy = {}
            for p in parts:
                acc = _posy_add(acc, p)
            return acc
        acc = {zero: Fraction(1)}
        for p in parts:
            acc = _posy_mul(acc, p)
        return acc

    branches = []
    pools = [list(m.items) if m.items else [None] for m in maxes]
    for combo in itertools.product(*pools):
        branches.append(inst(e, dict(zip(maxes, combo))))
    return _prune(branches)


def expr_from_posy(p: Posy) -> QiExpr:
    """Rebuild a sum-of-monomials expression from a posynomial."""
    if not p:
        return Const(Fraction(0))
    terms = []
    for mono, coeff in sorted(p.items()):
        factors: list[QiExpr] = []
        if coeff != 1 or not any(mono):
            factors.append(Const(coeff))
        for i, e in enumerate(mono):
            factors.extend([Arg(i)] * e)
        terms.append(factors[0] if len(factors) == 1 else Prod(tuple(factors)))
    return terms[0] if len(terms) == 1 else Sum(tuple(terms))


def simplify(e: QiExpr, arity: int, cap: int = 512) -> QiExpr:
    """Canonical pruned max-of-posynomials form when one exists.

    Substitution-heavy constructions (compiled recurrences in particular)
    produce towers of shared subterms; renormalizing keeps them flat.
    """
    if contains_min(e):
        return e
    form = max_posy_form(e, arity, cap=cap)
    if form is None:
        return e
    branches = [expr_from_posy(p) for p in sorted(form, key=_posy_key)]
    if not branches:
        return Const(Fraction(0))
    return branches[0] if len(branches) == 1 else Max(tuple(branches))


def _posy_key(p: Posy):
    return sorted(p.items())


def _min_choices(e: QiExpr, cap: int = 64) -> Iterator[QiExpr]:
    """All expressions obtained by committing every min node to one branch."""
    if isinstance(e, (Const, Arg)):
        yield e
        return
    if isinstance(e, Min):
        for item in e.items:
            yield from _min_choices(item, cap)
        return
    pools = [list(itertools.islice(_min_choices(i, cap), cap)) for i in e.items]
    for combo in itertools.product(*pools):
        yield type(e)(tuple(combo))


def dominates(lhs: QiExpr, rhs: QiExpr, arity: int) -> bool:
    """Sound sufficient check for lhs >= rhs pointwise on R+^arity.

    Both sides are brought to max-of-posynomials; each rhs branch must be
    coefficient-dominated by some lhs branch.  A min on the lhs must
    dominate through every branch, a min on the rhs through some branch.
    """
    if contains_min(lhs):
        # Every min branch of the lhs must dominate; never drop any.
        choices = list(itertools.islice(_min_choices(lhs), 65))
        if len(choices) > 64:
            return False
        lhs_forms = [max_posy_form(c, arity) for c in choices]
    else:
        lhs_forms = [max_posy_form(lhs, arity)]
    if any(f is None for f in lhs_forms):
        return False
    rhs_choices = (
        [rhs] if not contains_min(rhs) else list(itertools.islice(_min_choices(rhs), 64))
    )
    for lf in lhs_forms:
        ok = False
        for rc in rhs_choices:
            rf = max_posy_form(rc, arity)
            if rf is None:
                continue
            if all(any(posy_dominates(lb, rb) for lb in lf) for rb in rf):
                ok = True
                break
        if not ok:
            return False
    return True


# -- assignments --------------------------------------------------------------


@dataclass(frozen=True)
class QiAssignment:
    entries: dict  # symbol name -> QiExpr

    def entry(self, name: str) -> QiExpr:
        try:
            return self.entries[name]
        except KeyError:
            raise QiError(f"no assignment entry for symbol {name}")

    def covers(self, term: Term) -> bool:
        if isinstance(term, Var):
            return True
        return term.symbol.name in self.entries and all(
            self.covers(a) for a in term.args
        )


def term_qi(assignment: QiAssignment, term: Term, var_order: Optional[list] = None) -> QiExpr:
    """Canonical extension of the assignment to a term.

    Variables become Arg indices in ``var_order`` (default: left-to-right
    first occurrence in the term itself).
    """
    if var_order is None:
        var_order = variables(term)
    idx = {v: i for i, v in enumerate(var_order)}

    def go(t: Term) -> QiExpr:
        if isinstance(t, Var):
            try:
                return Arg(idx[t.name])
            except KeyError:
                raise QiError(f"variable {t.name} not in the variable order")
        entry = assignment.entry(t.symbol.name)
        return substitute(entry, [go(a) for a in t.args])

    return go(term)


def value_qi(assignment: QiAssignment, value: Term) -> Fraction:
    """Rational weight of a ground constructor term."""
    return eval_expr(term_qi(assignment, value), [])


def additive_shape(e: QiExpr, arity: int) -> Optional[Fraction]:
    """If e is exactly Sum(all Args once, Const a >= 1), return a, else None."""
    items: tuple
    if isinstance(e, Sum):
        items = e.items
    elif arity == 0:
        items = (e,) if isinstance(e, Const) else ()
        if not items:
            return None
    else:
        items = (e,)
    args = sorted(i.index for i in items if isinstance(i, Arg))
    consts = [i.value for i in items if isinstance(i, Const)]
    others = [i for i in items if not isinstance(i, (Arg, Const))]
    if others or args != list(range(arity)) or len(consts) > 1:
        return None
    a = consts[0] if consts else Fraction(0)
    return a if a >= 1 else None


def _sample_points(arity: int, tag: str, seed: int = 0) -> Iterator[tuple]:
    """Grid then seeded random rationals; the tag pins the stream per
    obligation so parallel or reordered checking cannot change verdicts."""
    if arity == 0:
        yield ()
        return
    grid = list(itertools.product(GRID_POINTS, repeat=arity))
    if len(grid) > GRID_CAP:
        rng = random.Random(f"{seed}:{tag}:grid")
        grid = rng.sample(grid, GRID_CAP)
    for p in grid:
        yield tuple(Fraction(x) for x in p)
    rng = random.Random(f"{seed}:{tag}:rand")
    for _ in range(RANDOM_POINTS):
        yield tuple(
            Fraction(rng.randint(0, 64), rng.randint(1, 8)) for _ in range(arity)
        )


@dataclass(frozen=True)
class ConditionReport:
    subterm: dict  # name -> (status, witness point or None)
    additivity: dict  # constructor name -> bool
    monotone: bool  # by construction
    polynomial: bool  # by construction

    @property
    def ok(self) -> bool:
        return (
            all(s == VALID for s, _ in self.subterm.values())
            and all(self.additivity.values())
        )

    def as_dict(self) -> dict:
        return {
            "monotone": self.monotone,
            "polynomial": self.polynomial,
            "subterm": {
                k: {"status": s, "witness": [str(x) for x in w] if w else None}
                for k, (s, w) in sorted(self.subterm.items())
            },
            "additivity": dict(sorted(self.additivity.items())),
            "ok": self.ok,
        }


def check_conditions(assignment: QiAssignment, program: Program) -> ConditionReport:
    """The four assignment conditions.

    Weak monotonicity and polynomial boundedness hold by construction of the
    expression language; additivity is syntactic on constructors; the
    subterm condition is checked by dominance with sampling refutation.
    """
    subterm: dict = {}
    additivity: dict = {}
    for sym in program.signature:
        if sym.name not in assignment.entries:
            continue
        e = assignment.entry(sym.name)
        if sym.is_constructor:
            additivity[sym.name] = additive_shape(e, sym.arity) is not None
        status = VALID
        witness = None
        for i in range(sym.arity):
            if dominates(e, Arg(i), sym.arity):
                continue
            status = UNKNOWN
            refuted = _refute(e, Arg(i), sym.arity, tag=f"subterm:{sym.name}:{i}")
            if refuted is not None:
                status, witness = INVALID, refuted
                break
        subterm[sym.name] = (status, witness)
    return ConditionReport(subterm, additivity, True, True)


def _refute(lhs: QiExpr, rhs: QiExpr, arity: int, tag: str, seed: int = 0):
    for p in _sample_points(arity, tag, seed):
        if eval_expr(lhs, p) < eval_expr(rhs, p):
            return p
    return None


@dataclass(frozen=True)
class ObligationVerdict:
    equation_index: int
    obligation: str
    status: str
    witness: Optional[tuple] = None
    note: Optional[str] = None


@dataclass(frozen=True)
class QiVerdict:
    per_equation: tuple
    conditions: ConditionReport
    overall: str

    def as_dict(self) -> dict:
        return {
            "overall": self.overall,
            "conditions": self.conditions.as_dict(),
            "per_equation": [
                {
                    "equation": v.equation_index,
                    "obligation": v.obligation,
                    "status": v.status,
                    "witness": [str(x) for x in v.witness] if v.witness else None,
                    "note": v.note,
                }
                for v in self.per_equation
            ],
        }


def check_qi(program: Program, assignment: QiAssignment, seed: int = 0) -> QiVerdict:
    """Verify floor(l) >= floor(r) for every equation.

    The variable order of each obligation is the left-to-right first
    occurrence in the lhs, so obligations are deterministic.
    """
    conditions = check_conditions(assignment, program)
    verdicts = []
    for eq in program.equations:
        lhs_term = eq.lhs
        var_order = variables(lhs_term)
        if not (assignment.covers(lhs_term) and assignment.covers(eq.rhs)):
            verdicts.append(
                ObligationVerdict(
                    eq.index, repr(eq), UNKNOWN, note="missing assignment entries"
                )
            )
            continue
        lhs = term_qi(assignment, lhs_term, var_order)
        rhs = term_qi(assignment, eq.rhs, var_order)
        arity = len(var_order)
        obligation = f"{format_expr(lhs, var_order)} >= {format_expr(rhs, var_order)}"
        if dominates(lhs, rhs, arity):
            verdicts.append(ObligationVerdict(eq.index, obligation, VALID))
            continue
        witness = _refute(lhs, rhs, arity, tag=f"eq:{eq.index}", seed=seed)
        if witness is not None:
            verdicts.append(ObligationVerdict(eq.index, obligation, INVALID, witness))
        else:
            verdicts.append(ObligationVerdict(eq.index, obligation, UNKNOWN))
    if any(v.status == INVALID for v in verdicts) or not conditions.ok:
        overall = INVALID
    elif all(v.status == VALID for v in verdicts):
        overall = VALID
    else:
        overall = UNKNOWN
    return QiVerdict(tuple(verdicts), conditions, overall)


def is_uniform(assignment: QiAssignment, program: Program) -> bool:
    """Same-arity constructors carry structurally identical expressions."""
    by_arity: dict[int, list] = {}
    for c in program.constructors:
        if c.name in assignment.entries:
            by_arity.setdefault(c.arity, []).append(assignment.entry(c.name))
    return all(all(e == es[0] for e in es) for es in by_arity.values())


def meet(a1: QiAssignment, a2: QiAssignment, program: Program) -> QiAssignment:
    """Pointwise greatest lower bound of two compatible assignments."""
    for c in program.constructors:
        if a1.entries.get(c.name) != a2.entries.get(c.name):
            raise QiError(
                f"incompatible assignments: constructor {c.name} entries differ"
            )
    entries = {}
    for name, e1 in a1.entries.items():
        sym = program.symbol(name)
        if sym.is_constructor:
            entries[name] = e1
        elif name in a2.entries:
            e2 = a2.entries[name]
            entries[name] = e1 if e1 == e2 else Min((e1, e2))
    return QiAssignment(entries)


def max_constructor_constant(assignment: QiAssignment, program: Program) -> Fraction:
    """The constant a with |v| <= floor(v) <= a * |v| on values."""
    out = Fraction(1)
    for c in program.constructors:
        if c.name in assignment.entries:
            a = additive_shape(assignment.entry(c.name), c.arity)
            if a is None:
                raise QiError(f"constructor {c.name} is not additively assigned")
            out = max(out, a)
    return out


def active_size_bound(
    assignment: QiAssignment, program: Program, call: Term
) -> Fraction:
    """Bound on the size of any active term in derivations of a call f(v..).

    Instantiates |s| <= 1 + k * floor(call) with floor(v_i) <= a|v_i|.
    """
    a = max_constructor_constant(assignment, program)
    entry = assignment.entry(call.symbol.name)
    point = [a * term_size(v) for v in call.args]
    k = max(1, program.max_arity())
    return 1 + k * eval_expr(entry, point)


# -- assignment file format ----------------------------------------------------

_QI_LINE = re.compile(r"qi\s+([A-Za-z0-9_']+)\s*(?:\(([^)]*)\))?\s*=\s*(.*)")


def parse_assignment(text: str, program: Program) -> QiAssignment:
    """Parse lines like ``qi append(X,Y) = X + Y``; rationals as p/q."""
    entries: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#")[0].strip()
        if not line:
            continue
        m = _QI_LINE.fullmatch(line)
        if not m:
            raise ParseError("expected 'qi name(X, ..) = expression'", lineno, 1)
        name, params_text, body = m.group(1), m.group(2), m.group(3)
        sym = program.symbol(name)
        params = [p.strip() for p in params_text.split(",")] if params_text else []
        params = [p for p in params if p]
        if len(params) != sym.arity:
            raise ParseError(
                f"{name}/{sym.arity} declared with {len(params)} parameters", lineno, 1
            )
        entries[name] = _parse_expr(body, params, lineno)
    return QiAssignment(entries)


_EXPR_TOKEN = re.compile(r"\d+/\d+|\d+|[A-Za-z_][A-Za-z0-9_']*|[(),+*]|\S")


def _parse_expr(text: str, params: list, lineno: int) -> QiExpr:
    toks = _EXPR_TOKEN.findall(text)
    pos = [0]

    def peek():
        return toks[pos[0]] if pos[0] < len(toks) else None

    def take():
        t = peek()
        if t is None:
            raise ParseError("unexpected end of expression", lineno, 1)
        pos[0] += 1
        return t

    def expect(t):
        got = take()
        if got != t:
            raise ParseError(f"expected {t!r}, got {got!r}", lineno, 1)

    def parse_sum() -> QiExpr:
        items = [parse_prod()]
        while peek() == "+":
            take()
            items.append(parse_prod())
        return items[0] if len(items) == 1 else Sum(tuple(items))

    def parse_prod() -> QiExpr:
        items = [parse_atom()]
        while peek() == "*":
            take()
            items.append(parse_atom())
        return items[0] if len(items) == 1 else Prod(tuple(items))

    def parse_atom() -> QiExpr:
        t = take()
        if t in ("max", "min"):
            expect("(")
            items = [parse_sum()]
            while peek() == ",":
                take()
                items.append(parse_sum())
            expect(")")
            return (Max if t == "max" else Min)(tuple(items))
        if t == "(":
            e = parse_sum()
            expect(")")
            return e
        if re.fullmatch(r"\d+/\d+|\d+", t):
            num, _, den = t.partition("/")
            return Const(Fraction(int(num), int(den or 1)))
        if t in params:
            return Arg(params.index(t))
        raise ParseError(f"unknown name {t!r} in expression", lineno, 1)

    e = parse_sum()
    if peek() is not None:
        raise ParseError(f"trailing input {peek()!r} in expression", lineno, 1)
    return e


def format_assignment(assignment: QiAssignment, program: Program) -> str:
    lines = []
    for sym in program.signature:
        if sym.name not in assignment.entries:
            continue
        names = [f"X{i+1}" for i in range(sym.arity)]
        head = f"{sym.name}({', '.join(names)})" if names else sym.name
        lines.append(f"qi {head} = {format_expr(assignment.entry(sym.name), names)}")
    return "\n".join(lines) + "\n"
