"""Safe-recursion function algebra: compilation to rewrite programs and
automatic uniform quasi-interpretations.

Terms of the algebra separate normal from safe argument positions;
recursion runs over a normal argument and its result may only be used
safely.  Compilation flattens the two zones into one argument list, keeping
the boundary as metadata for the quasi-interpretation construction.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from fractions import Fraction

from .base import ParseError, SignatureError
from .qi import Arg, Const, Max, Prod, QiAssignment, QiExpr, Sum, simplify, substitute
from .terms import (
    App,
    CONSTRUCTOR,
    Equation,
    FUNCTION,
    Program,
    Symbol,
    Term,
    Var,
)

S0 = Symbol("s0", CONSTRUCTOR, 1)
S1 = Symbol("s1", CONSTRUCTOR, 1)
ZERO = Symbol("0", CONSTRUCTOR, 0)


@dataclass(frozen=True)
class BcZero:
    pass


@dataclass(frozen=True)
class BcSucc:
    bit: int

    def __post_init__(self):
        if self.bit not in (0, 1):
            raise SignatureError("successor bit must be 0 or 1")


@dataclass(frozen=True)
class BcProj:
    normals: int
    safes: int
    index: int  # 1-based over the concatenated argument list

    def __post_init__(self):
        if not 1 <= self.index <= self.normals + self.safes:
            raise SignatureError("projection index out of range")


@dataclass(frozen=True)
class BcPred:
    pass


@dataclass(frozen=True)
class BcCond:
    pass


@dataclass(frozen=True)
class BcSafeRec:
    base: "BcTerm"
    step0: "BcTerm"
    step1: "BcTerm"


@dataclass(frozen=True)
class BcSafeComp:
    normals: int
    safes: int
    outer: "BcTerm"
    normal_inner: tuple  # each of arity (normals; 0)
    safe_inner: tuple  # each of arity (normals; safes)


BcTerm = BcZero | BcSucc | BcProj | BcPred | BcCond | BcSafeRec | BcSafeComp


def bc_arity(b: BcTerm) -> tuple[int, int]:
    """(normal, safe) arity; validates consistency of compound terms."""
    if isinstance(b, BcZero):
        return (0, 0)
    if isinstance(b, (BcSucc, BcPred)):
        return (0, 1)
    if isinstance(b, BcCond):
        return (0, 3)
    if isinstance(b, BcProj):
        return (b.normals, b.safes)
    if isinstance(b, BcSafeRec):
        n, m = bc_arity(b.base)
        for step in (b.step0, b.step1):
            if bc_arity(step) != (n + 1, m + 1):
                raise SignatureError(
                    f"recursion step has arity {bc_arity(step)}, needs ({n + 1}; {m + 1})"
                )
        return (n + 1, m)
    if isinstance(b, BcSafeComp):
        p, q = bc_arity(b.outer)
        if len(b.normal_inner) != p or len(b.safe_inner) != q:
            raise SignatureError(
                f"composition needs {p} normal and {q} safe inner functions"
            )
        for h in b.normal_inner:
            if bc_arity(h) != (b.normals, 0):
                raise SignatureError(
                    f"normal inner function has arity {bc_arity(h)}, needs ({b.normals}; 0)"
                )
        for l in b.safe_inner:
            if bc_arity(l) != (b.normals, b.safes):
                raise SignatureError(
                    f"safe inner function has arity {bc_arity(l)}, "
                    f"needs ({b.normals}; {b.safes})"
                )
        return (b.normals, b.safes)
    raise SignatureError(f"unknown algebra term {b!r}")


@dataclass(frozen=True)
class BcCompilation:
    program: Program
    qi: QiAssignment
    provenance: dict  # symbol name -> description
    boundaries: dict  # symbol name -> (normal, safe)
    main: Symbol


class _Compiler:
    def __init__(self):
        self.symbols: dict[BcTerm, Symbol] = {}
        self.equations: list[Equation] = []
        self.q_parts: dict[str, QiExpr] = {}  # over normal argument indices
        self.entries: dict[str, QiExpr] = {}
        self.provenance: dict[str, str] = {}
        self.boundaries: dict[str, tuple] = {}
        self.counters: dict[str, int] = {}

    def fresh(self, kind: str, arity: int) -> Symbol:
        i = self.counters.get(kind, 0)
        self.counters[kind] = i + 1
        return Symbol(f"bc_{kind}_{i}", FUNCTION, arity)

    def add_equation(self, f: Symbol, patterns: tuple, rhs: Term) -> None:
        self.equations.append(Equation(f, patterns, rhs, len(self.equations)))

    def compile(self, b: BcTerm) -> Symbol:
        if b in self.symbols:
            return self.symbols[b]
        n, m = bc_arity(b)
        xs = tuple(Var(f"x{i + 1}") for i in range(n))
        ys = tuple(Var(f"y{i + 1}") for i in range(m))
        safe_args = [Arg(n + i) for i in range(m)]

        def finish(sym: Symbol, q: QiExpr, desc: str) -> Symbol:
            self.symbols[b] = sym
            q = simplify(q, n)
            self.q_parts[sym.name] = q
            entry = q if m == 0 else Sum((q, Max(tuple(safe_args))))
            self.entries[sym.name] = simplify(entry, n + m)
            self.provenance[sym.name] = desc
            self.boundaries[sym.name] = (n, m)
            return sym

        if isinstance(b, BcZero):
            sym = self.fresh("zero", 0)
            self.add_equation(sym, (), App(ZERO))
            return finish(sym, Const(Fraction(1)), "constant 0")
        if isinstance(b, BcSucc):
            sym = self.fresh("succ", 1)
            ctor = S0 if b.bit == 0 else S1
            self.add_equation(sym, ys, App(ctor, (ys[0],)))
            return finish(sym, Const(Fraction(1)), f"successor s{b.bit}")
        if isinstance(b, BcProj):
            sym = self.fresh("proj", n + m)
            args = xs + ys
            self.add_equation(sym, args, args[b.index - 1])
            # floor(proj) is the max over all arguments; its q part is the
            # posynomial over-approximation sum of normals, which keeps the
            # compiled recurrences free of nested maxima.
            self.entries[sym.name] = Max(tuple(Arg(i) for i in range(n + m)))
            self.symbols[b] = sym
            self.q_parts[sym.name] = (
                Sum(tuple(Arg(i) for i in range(n))) if n else Const(Fraction(0))
            )
            self.provenance[sym.name] = f"projection {b.index} of ({n}; {m})"
            self.boundaries[sym.name] = (n, m)
            return sym
        if isinstance(b, BcPred):
            sym = self.fresh("pred", 1)
            y = Var("y1")
            self.add_equation(sym, (App(ZERO),), App(ZERO))
            self.add_equation(sym, (App(S0, (y,)),), y)
            self.add_equation(sym, (App(S1, (y,)),), y)
            return finish(sym, Const(Fraction(0)), "predecessor")
        if isinstance(b, BcCond):
            sym = self.fresh("cond", 3)
            w, y, z = Var("w"), Var("y1"), Var("y2")
            self.add_equation(sym, (App(ZERO), y, z), y)
            self.add_equation(sym, (App(S0, (w,)), y, z), y)
            self.add_equation(sym, (App(S1, (w,)), y, z), z)
            # floor(cond) = max of the three safe arguments, q part 0.
            return finish(sym, Const(Fraction(0)), "conditional")
        if isinstance(b, BcSafeRec):
            g = self.compile(b.base)
            h0 = self.compile(b.step0)
            h1 = self.compile(b.step1)
            sym = self.fresh("rec", n + m)
            z = Var("z")
            rest = xs[1:]
            self.add_equation(sym, (App(ZERO),) + rest + ys, App(g, rest + ys))
            for bit, h in ((0, h0), (1, h1)):
                ctor = S0 if bit == 0 else S1
                call = App(sym, (z,) + rest + ys)
                self.add_equation(
                    sym,
                    (App(ctor, (z,)),) + rest + ys,
                    App(h, (z,) + rest + ys + (call,)),
                )
            # q(A, X..) = A * (q_h0 + q_h1)(A, X..) + q_g(X..), padded with
            # the sum of the normal arguments so the subterm condition holds
            # on all of R+ even when inner functions drop arguments.
            a = Arg(0)
            normals = [Arg(i) for i in range(n)]
            q_g = substitute(self.q_parts[g.name], normals[1:])
            q_h0 = substitute(self.q_parts[h0.name], normals)
            q_h1 = substitute(self.q_parts[h1.name], normals)
            base_q = Sum((Prod((a, Sum((q_h0, q_h1)))), q_g))
            q = Sum(tuple([base_q] + normals))
            return finish(sym, q, "safe recursion")
        if isinstance(b, BcSafeComp):
            outer = self.compile(b.outer)
            hs = [self.compile(h) for h in b.normal_inner]
            ls = [self.compile(l) for l in b.safe_inner]
            sym = self.fresh("comp", n + m)
            rhs = App(
                outer,
                tuple(App(h, xs) for h in hs) + tuple(App(l, xs + ys) for l in ls),
            )
            self.add_equation(sym, xs + ys, rhs)
            normals = [Arg(i) for i in range(n)]
            q_hs = [substitute(self.q_parts[h.name], normals) for h in hs]
            q_g = substitute(self.q_parts[outer.name], q_hs)
            q_ls = [substitute(self.q_parts[l.name], normals) for l in ls]
            q = Sum(tuple([q_g] + q_ls + normals))
            return finish(sym, q, "safe composition")
        raise SignatureError(f"unknown algebra term {b!r}")


def compile_bc(b: BcTerm) -> BcCompilation:
    """Compile to a rewrite program over {s0, s1, 0} with a generated QI.

    Structurally identical subterms share one compiled symbol; naming is
    deterministic, so compilation is reproducible.
    """
    bc_arity(b)  # validate before emitting anything
    comp = _Compiler()
    main = comp.compile(b)
    signature = [S0, S1, ZERO] + [
        s for s in _symbol_order(comp.equations) if s.is_function
    ]
    program = Program(tuple(signature), tuple(comp.equations), main)
    entries = dict(comp.entries)
    entries["s0"] = Sum((Arg(0), Const(Fraction(1))))
    entries["s1"] = Sum((Arg(0), Const(Fraction(1))))
    entries["0"] = Const(Fraction(1))
    return BcCompilation(
        program, QiAssignment(entries), comp.provenance, comp.boundaries, main
    )


def _symbol_order(equations: list) -> list[Symbol]:
    seen: dict[str, Symbol] = {}
    for eq in equations:
        seen.setdefault(eq.lhs_function.name, eq.lhs_function)
    return list(seen.values())


def auto_qi(b: BcTerm) -> QiAssignment:
    """The generated uniform quasi-interpretation of a compiled term."""
    return compile_bc(b).qi


# -- reference semantics (independent of the rewrite machinery) -----------------


def bc_eval(b: BcTerm, normals: tuple, safes: tuple) -> tuple:
    """Direct denotation on bit tuples; leftmost bit is outermost."""
    if isinstance(b, BcZero):
        return ()
    if isinstance(b, BcSucc):
        return (b.bit,) + safes[0]
    if isinstance(b, BcProj):
        args = normals + safes
        return args[b.index - 1]
    if isinstance(b, BcPred):
        return safes[0][1:]
    if isinstance(b, BcCond):
        w, y, z = safes
        if not w or w[0] == 0:
            return y
        return z
    if isinstance(b, BcSafeRec):
        z, rest = normals[0], normals[1:]
        if not z:
            return bc_eval(b.base, rest, safes)
        step = b.step0 if z[0] == 0 else b.step1
        prev = bc_eval(b, (z[1:],) + rest, safes)
        return bc_eval(step, (z[1:],) + rest, safes + (prev,))
    if isinstance(b, BcSafeComp):
        hs = tuple(bc_eval(h, normals, ()) for h in b.normal_inner)
        ls = tuple(bc_eval(l, normals, safes) for l in b.safe_inner)
        return bc_eval(b.outer, hs, ls)
    raise SignatureError(f"unknown algebra term {b!r}")


def word_to_bits(v: Term) -> tuple:
    bits = []
    while isinstance(v, App) and v.symbol.arity == 1:
        bits.append(0 if v.symbol.name == "s0" else 1)
        v = v.args[0]
    return tuple(bits)


def bits_to_word(bits: tuple) -> Term:
    out: Term = App(ZERO)
    for b in reversed(bits):
        out = App(S0 if b == 0 else S1, (out,))
    return out


# -- random generation -----------------------------------------------------------


def random_bc(seed: int, depth_cap: int = 4) -> BcTerm:
    """Arity-consistent random algebra term, reproducible by seed."""
    rng = random.Random(seed)
    n = rng.randint(0, 2)
    m = rng.randint(0 if n else 1, 2)
    return _gen(rng, n, m, depth_cap)


def _initial(rng: random.Random, n: int, m: int) -> BcTerm:
    options: list[BcTerm] = []
    if (n, m) == (0, 0):
        options.append(BcZero())
    if (n, m) == (0, 1):
        options.extend([BcSucc(0), BcSucc(1), BcPred()])
    if (n, m) == (0, 3):
        options.append(BcCond())
    if n + m >= 1:
        options.extend(BcProj(n, m, j) for j in range(1, n + m + 1))
    if not options:
        options.append(BcZero() if (n, m) == (0, 0) else BcProj(n, m, 1))
    return options[rng.randrange(len(options))]


def _gen(rng: random.Random, n: int, m: int, depth: int) -> BcTerm:
    if depth <= 0:
        return _initial(rng, n, m)
    roll = rng.random()
    if roll < 0.25 and n >= 1:
        base = _gen(rng, n - 1, m, depth - 1)
        step0 = _gen(rng, n, m + 1, depth - 1)
        step1 = _gen(rng, n, m + 1, depth - 1)
        return BcSafeRec(base, step0, step1)
    if roll < 0.60:
        p = rng.randint(0, 2)
        q = rng.randint(0, 2)
        outer = _gen(rng, p, q, depth - 1)
        hs = tuple(_gen(rng, n, 0, depth - 1) for _ in range(p))
        ls = tuple(_gen(rng, n, m, depth - 1) for _ in range(q))
        return BcSafeComp(n, m, outer, hs, ls)
    return _initial(rng, n, m)


# -- s-expression format -----------------------------------------------------------

_SEXPR_TOKEN = re.compile(r"[()]|[^\s()]+")


def parse_bc(text: str) -> BcTerm:
    """Read terms like ``(rec (proj 1 1 2) (comp (2 2) ...) ...)``."""
    toks = _SEXPR_TOKEN.findall(re.sub(r";[^\n]*", "", text))
    pos = [0]

    def peek() -> str:
        if pos[0] >= len(toks):
            raise ParseError("unexpected end of input")
        return toks[pos[0]]

    def take() -> str:
        tok = peek()
        pos[0] += 1
        return tok

    def expect(t: str) -> None:
        got = take()
        if got != t:
            raise ParseError(f"expected {t!r}, got {got!r}")

    def number() -> int:
        tok = take()
        if not tok.isdigit():
            raise ParseError(f"expected a number, got {tok!r}")
        return int(tok)

    def term() -> BcTerm:
        expect("(")
        head = take()
        if head in ("zero", "0"):
            expect(")")
            return BcZero()
        if head in ("succ", "s"):
            bit = number()
            expect(")")
            return BcSucc(bit)
        if head in ("proj", "pi"):
            n, m, j = number(), number(), number()
            expect(")")
            return BcProj(n, m, j)
        if head in ("pred", "p"):
            expect(")")
            return BcPred()
        if head in ("cond", "c"):
            expect(")")
            return BcCond()
        if head in ("rec", "saferec"):
            g, h0, h1 = term(), term(), term()
            expect(")")
            return BcSafeRec(g, h0, h1)
        if head in ("comp", "safecomp"):
            expect("(")
            n, m = number(), number()
            expect(")")
            g = term()
            expect("(")
            hs = []
            while toks[pos[0]] != ")":
                hs.append(term())
            expect(")")
            expect("(")
            ls = []
            while toks[pos[0]] != ")":
                ls.append(term())
            expect(")")
            expect(")")
            return BcSafeComp(n, m, g, tuple(hs), tuple(ls))
        raise ParseError(f"unknown algebra constructor {head!r}")

    try:
        out = term()
        if pos[0] != len(toks):
            raise ParseError(f"trailing input {toks[pos[0]]!r}")
        bc_arity(out)
    except SignatureError as exc:
        raise ParseError(str(exc)) from exc
    return out


def format_bc(b: BcTerm) -> str:
    if isinstance(b, BcZero):
        return "(zero)"
    if isinstance(b, BcSucc):
        return f"(succ {b.bit})"
    if isinstance(b, BcProj):
        return f"(proj {b.normals} {b.safes} {b.index})"
    if isinstance(b, BcPred):
        return "(pred)"
    if isinstance(b, BcCond):
        return "(cond)"
    if isinstance(b, BcSafeRec):
        return f"(rec {format_bc(b.base)} {format_bc(b.step0)} {format_bc(b.step1)})"
    if isinstance(b, BcSafeComp):
        hs = " ".join(format_bc(h) for h in b.normal_inner)
        ls = " ".join(format_bc(l) for l in b.safe_inner)
        return f"(comp ({b.normals} {b.safes}) {format_bc(b.outer)} ({hs}) ({ls}))"
    raise SignatureError(f"unknown algebra term {b!r}")
