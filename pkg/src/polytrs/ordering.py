"""Precedences and the product path ordering termination checkers.

A precedence partitions the signature into equivalence classes and orders
the classes.  With strict (pairwise incomparable) constructors the induced
recursive path ordering is PPO; with fair constructors (same arity implies
equivalent) it is EPPO.  Tuples of arguments are compared by the product
extension: every component weakly below, some component strictly below.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .base import ParseError, PrecedenceError
from .terms import (
    App,
    Equation,
    Program,
    Symbol,
    Term,
    format_term,
    subterms,
)

PPO = "ppo"
EPPO = "eppo"

LESS = "less"
EQUIV = "equiv"
GREATER = "greater"
INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class Precedence:
    """Partition of symbol names into classes plus a strict order on classes.

    ``class_ids`` maps each symbol name to its class id; ``below`` holds the
    transitively closed pairs (a, b) with class a strictly below class b.
    """

    class_ids: dict
    below: frozenset
    signature: tuple

    def class_of(self, name: str) -> int:
        try:
            return self.class_ids[name]
        except KeyError:
            raise PrecedenceError(f"symbol {name} not covered by the precedence")

    def members(self, cid: int) -> list[Symbol]:
        return [s for s in self.signature if self.class_ids[s.name] == cid]

    def compare_symbols(self, a: Symbol, b: Symbol) -> str:
        ca, cb = self.class_of(a.name), self.class_of(b.name)
        if ca == cb:
            return EQUIV
        if (ca, cb) in self.below:
            return LESS
        if (cb, ca) in self.below:
            return GREATER
        return INCOMPARABLE

    # -- attributes ---------------------------------------------------------

    def is_separating(self) -> bool:
        return all(
            self.compare_symbols(c, f) == LESS
            for c in self.signature
            if c.is_constructor
            for f in self.signature
            if f.is_function
        )

    def is_compatible(self, program: Program) -> bool:
        for eq in program.equations:
            for u in subterms(eq.rhs):
                if isinstance(u, App):
                    if self.compare_symbols(u.symbol, eq.lhs_function) in (
                        GREATER,
                        INCOMPARABLE,
                    ):
                        return False
        return True

    def is_fair(self) -> bool:
        ctors = [s for s in self.signature if s.is_constructor]
        return all(
            (self.compare_symbols(a, b) == EQUIV) == (a.arity == b.arity)
            or a == b
            for a in ctors
            for b in ctors
        )

    def is_strict(self) -> bool:
        ctors = [s for s in self.signature if s.is_constructor]
        return all(
            self.compare_symbols(a, b) == INCOMPARABLE
            for a in ctors
            for b in ctors
            if a != b
        )

    def has_mixed_classes(self) -> bool:
        kinds: dict[int, set] = {}
        for s in self.signature:
            kinds.setdefault(self.class_ids[s.name], set()).add(s.kind)
        return any(len(v) > 1 for v in kinds.values())

    def attributes(self, program: Optional[Program] = None) -> dict:
        out = {
            "separating": self.is_separating(),
            "fair": self.is_fair(),
            "strict_ctors": self.is_strict(),
        }
        if program is not None:
            out["compatible"] = self.is_compatible(program)
        return out

    def mode(self) -> str:
        return PPO if self.is_strict() else EPPO

    def describe(self) -> str:
        by_class: dict[int, list[str]] = {}
        for s in self.signature:
            by_class.setdefault(self.class_ids[s.name], []).append(s.name)
        parts = []
        for cid in sorted(by_class, key=lambda c: sorted(by_class[c])[0]):
            parts.append("{" + " ".join(sorted(by_class[cid])) + "}")
        rels = sorted(
            f"{sorted(by_class[a])[0]} < {sorted(by_class[b])[0]}"
            for (a, b) in self.below
            if a in by_class and b in by_class
        )
        return "; ".join([" ".join(parts)] + rels)

    def with_constructor_mode(self, mode: str) -> "Precedence":
        """Rebuild the constructor part: strict for PPO, fair for EPPO."""
        return _build(
            self.signature,
            _function_classes(self),
            mode,
        )


def _function_classes(prec: Precedence) -> list[list[str]]:
    by_class: dict[int, list[str]] = {}
    order: dict[int, int] = {}
    for s in prec.signature:
        if s.is_function:
            by_class.setdefault(prec.class_ids[s.name], []).append(s.name)
    groups = [sorted(v) for _, v in sorted(by_class.items())]
    # Preserve the strict order among function classes via representatives.
    return groups, [
        (sorted(by_class[a])[0], sorted(by_class[b])[0])
        for (a, b) in prec.below
        if a in by_class and b in by_class
    ]


def _build(signature: tuple, fn_structure, mode: str) -> Precedence:
    groups, rel = fn_structure
    class_ids: dict[str, int] = {}
    next_id = 0
    rep_to_id: dict[str, int] = {}
    for group in groups:
        for name in group:
            class_ids[name] = next_id
        rep_to_id[sorted(group)[0]] = next_id
        next_id += 1
    ctors = [s for s in signature if s.is_constructor]
    ctor_ids: list[int] = []
    if mode == PPO:
        for c in ctors:
            class_ids[c.name] = next_id
            ctor_ids.append(next_id)
            next_id += 1
    else:
        by_arity: dict[int, int] = {}
        for c in ctors:
            if c.arity not in by_arity:
                by_arity[c.arity] = next_id
                ctor_ids.append(next_id)
                next_id += 1
            class_ids[c.name] = by_arity[c.arity]
    below = set()
    for a, b in rel:
        if rep_to_id[a] != rep_to_id[b]:
            below.add((rep_to_id[a], rep_to_id[b]))
    changed = True
    while changed:
        changed = False
        for (a, b) in list(below):
            for (c, d) in list(below):
                if b == c and (a, d) not in below:
                    below.add((a, d))
                    changed = True
    for (a, b) in below:
        if (b, a) in below:
            raise PrecedenceError("cyclic precedence declaration")
    fn_ids = set(rep_to_id.values())
    for cid in ctor_ids:
        for fid in fn_ids:
            below.add((cid, fid))
    return Precedence(class_ids, frozenset(below), signature)


def make_precedence(
    program: Program,
    classes: list[list[str]],
    order_pairs: list[tuple[str, str]],
    mode: str = EPPO,
) -> Precedence:
    """Build a separating precedence from function classes and < pairs.

    Constructor classes are derived from the mode; classes mixing functions
    and constructors are rejected outright.
    """
    sig_names = {s.name for s in program.signature}
    fn_names = {s.name for s in program.functions}
    seen: set[str] = set()
    for group in classes:
        for name in group:
            if name not in sig_names:
                raise PrecedenceError(f"unknown symbol {name} in precedence")
            if name not in fn_names:
                raise PrecedenceError(
                    f"constructor {name} may not be placed in a function class"
                )
            if name in seen:
                raise PrecedenceError(f"symbol {name} appears in two classes")
            seen.add(name)
    groups = [sorted(g) for g in classes]
    for f in sorted(fn_names - seen):
        groups.append([f])
    rep_of: dict[str, str] = {}
    for g in groups:
        for name in g:
            rep_of[name] = sorted(g)[0]
    rel = []
    for a, b in order_pairs:
        if a not in rep_of or b not in rep_of:
            raise PrecedenceError(f"order pair {a} < {b} mentions a non-function")
        rel.append((rep_of[a], rep_of[b]))
    prec = _build(tuple(program.signature), (groups, rel), mode)
    if prec.has_mixed_classes():
        raise PrecedenceError("mixed constructor/function classes are not allowed")
    return prec


def parse_precedence(text: str, program: Program, mode: str = EPPO) -> Precedence:
    """Parse ``append < f ; s0 ~ s1`` into a precedence.

    ``~`` between constructors is only consistent with EPPO (fair) mode and
    is otherwise rejected; ``~`` between functions merges their classes.
    """
    merges: list[tuple[str, str]] = []
    pairs: list[tuple[str, str]] = []
    fn_names = {s.name for s in program.functions}
    ctor_names = {s.name for s in program.constructors}
    for clause in text.split(";"):
        clause = clause.strip()
        if not clause:
            continue
        if "<" in clause:
            parts = [p.strip() for p in clause.split("<")]
            for a, b in zip(parts, parts[1:]):
                pairs.append((a, b))
        elif "~" in clause:
            parts = [p.strip() for p in clause.split("~")]
            for a, b in zip(parts, parts[1:]):
                merges.append((a, b))
        else:
            raise ParseError(f"cannot read precedence clause {clause!r}")
    for a, b in merges:
        if a in ctor_names and b in ctor_names:
            ca = next(s for s in program.constructors if s.name == a)
            cb = next(s for s in program.constructors if s.name == b)
            if mode == PPO:
                raise PrecedenceError(
                    f"{a} ~ {b} declares equivalent constructors; use EPPO"
                )
            if ca.arity != cb.arity:
                raise PrecedenceError(f"{a} ~ {b}: arities differ")
        elif a in ctor_names or b in ctor_names:
            raise PrecedenceError(f"{a} ~ {b} mixes constructor and function")
    fn_merges = [(a, b) for a, b in merges if a in fn_names]
    classes = _union_find_classes(fn_names, fn_merges)
    return make_precedence(program, classes, pairs, mode)


def _union_find_classes(names: set, merges: list) -> list[list[str]]:
    parent = {n: n for n in names}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in merges:
        if a in parent and b in parent:
            parent[find(a)] = find(b)
    groups: dict[str, list[str]] = {}
    for n in names:
        groups.setdefault(find(n), []).append(n)
    return [sorted(g) for g in groups.values()]


# -- the path ordering -------------------------------------------------------


class PathOrder:
    """Memoised decision procedure for s < t under a separating precedence."""

    def __init__(self, precedence: Precedence):
        if not precedence.is_separating():
            raise PrecedenceError("the path ordering needs a separating precedence")
        self.precedence = precedence
        self._memo: dict = {}

    def less(self, s: Term, t: Term) -> bool:
        key = (s, t)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        self._memo[key] = False  # irreflexive default breaks accidental cycles
        out = self._less(s, t)
        self._memo[key] = out
        return out

    def _less(self, s: Term, t: Term) -> bool:
        if isinstance(t, App):
            # Rule 1: s is, or is below, an immediate argument of t.
            for ti in t.args:
                if s == ti or self.less(s, ti):
                    return True
        if isinstance(s, App) and isinstance(t, App):
            rel = self.precedence.compare_symbols(s.symbol, t.symbol)
            if rel == LESS:
                # Rule 2: smaller head symbol, all arguments below t.
                return all(self.less(si, t) for si in s.args)
            if rel == EQUIV and len(s.args) == len(t.args):
                # Rule 3: equivalent heads, product-wise smaller arguments.
                return self.product_less(s.args, t.args) and all(
                    self.less(si, t) for si in s.args
                )
        return False

    def product_less(self, ss: tuple, ts: tuple) -> bool:
        strict = False
        for a, b in zip(ss, ts):
            if a == b:
                continue
            if self.less(a, b):
                strict = True
            else:
                return False
        return strict


def compare(precedence: Precedence, s: Term, t: Term) -> bool:
    """True iff s is strictly below t in the path ordering (Less)."""
    return PathOrder(precedence).less(s, t)


@dataclass(frozen=True)
class EquationVerdict:
    equation: Equation
    decreasing: bool
    failing_subgoal: Optional[str] = None


@dataclass(frozen=True)
class OrderingVerdict:
    mode: str
    precedence: Precedence
    per_equation: tuple
    overall: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "overall", all(v.decreasing for v in self.per_equation)
        )

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "precedence": self.precedence.describe(),
            "overall": self.overall,
            "per_equation": [
                {
                    "equation": v.equation.index,
                    "text": repr(v.equation),
                    "decreasing": v.decreasing,
                    "failing_subgoal": v.failing_subgoal,
                }
                for v in self.per_equation
            ],
        }


def _failing_subgoal(order: PathOrder, s: Term, t: Term) -> str:
    """A concrete unsatisfied proof obligation for s < t (which must fail)."""
    if isinstance(s, App) and isinstance(t, App):
        rel = order.precedence.compare_symbols(s.symbol, t.symbol)
        if rel == LESS:
            for si in s.args:
                if not order.less(si, t):
                    return _failing_subgoal(order, si, t)
        if rel == EQUIV and len(s.args) == len(t.args):
            for a, b in zip(s.args, t.args):
                if a != b and not order.less(a, b):
                    return (
                        f"{format_term(a)} is not below {format_term(b)} "
                        "in the product comparison"
                    )
            if all(a == b for a, b in zip(s.args, t.args)):
                return "no strictly decreasing argument in the product comparison"
    return f"{format_term(s)} is not below {format_term(t)}"


def check_program(
    program: Program, precedence: Precedence, mode: Optional[str] = None
) -> OrderingVerdict:
    """Per-equation decrease check r < l; the verdict carries witnesses."""
    if mode is not None:
        precedence = precedence.with_constructor_mode(mode)
    else:
        mode = precedence.mode()
    order = PathOrder(precedence)
    verdicts = []
    for eq in program.equations:
        lhs = eq.lhs
        if order.less(eq.rhs, lhs):
            verdicts.append(EquationVerdict(eq, True))
        else:
            verdicts.append(
                EquationVerdict(eq, False, _failing_subgoal(order, eq.rhs, lhs))
            )
    return OrderingVerdict(mode, precedence, tuple(verdicts))


def static_call_graph(program: Program) -> dict:
    """f -> set of functions occurring in the rhs of f's equations."""
    out: dict[str, set] = {f.name: set() for f in program.functions}
    for eq in program.equations:
        for u in subterms(eq.rhs):
            if isinstance(u, App) and u.symbol.is_function:
                out[eq.lhs_function.name].add(u.symbol.name)
    return out


def _sccs(graph: dict) -> list[list[str]]:
    """Strongly connected components, iterative Tarjan, stable order."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set = set()
    stack: list[str] = []
    out: list[list[str]] = []
    counter = [0]

    def strongconnect(v0: str) -> None:
        work = [(v0, iter(sorted(graph[v0])))]
        index[v0] = low[v0] = counter[0]
        counter[0] += 1
        stack.append(v0)
        on_stack.add(v0)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(graph[w]))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(sorted(comp))

    for v in sorted(graph):
        if v not in index:
            strongconnect(v)
    return out


def infer_precedence(program: Program, mode: str = EPPO) -> Optional[Precedence]:
    """Canonical candidate: classes from call-graph SCCs, order from calls.

    Returns the precedence when the program passes under it, else None.
    Only this finest compatible candidate is tried.
    """
    graph = static_call_graph(program)
    comps = _sccs(graph)
    rep = {}
    for comp in comps:
        for name in comp:
            rep[name] = comp[0]
    pairs = []
    for f, callees in graph.items():
        for g in callees:
            if rep[f] != rep[g]:
                pairs.append((g, f))
    prec = make_precedence(program, comps, pairs, mode)
    verdict = check_program(program, prec, mode)
    return prec if verdict.overall else None
