"""Call-by-value evaluation, with and without memoisation.

Both interpreters build full derivation proofs.  Judgements are tagged with
the rule that produced them; Function and Update conclusions are *active*,
Constructor and Split conclusions *passive*, Read conclusions *semi-active*.
The rule-count accounting on proofs is the toolkit's primary cost metric.
"""

from __future__ import annotations

import itertools
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .base import (
    Budget,
    BudgetExceeded,
    CycleDetected,
    DEFAULT_BUDGET,
    NoMatchingEquation,
    NonConfluentProgram,
)
from .terms import (
    App,
    Equation,
    Program,
    Substitution,
    Term,
    Var,
    apply_subst,
    format_term,
    is_value,
    is_subterm,
    match_tuple,
    matching_equations,
    term_depth,
    term_size,
)

R_CONSTRUCTOR = "Constructor"
R_SPLIT = "Split"
R_FUNCTION = "Function"
R_READ = "Read"
R_UPDATE = "Update"

ACTIVE_RULES = frozenset({R_FUNCTION, R_UPDATE})
PASSIVE_RULES = frozenset({R_CONSTRUCTOR, R_SPLIT})
SEMI_ACTIVE_RULES = frozenset({R_READ})


@dataclass(frozen=True)
class Judgement:
    rule: str
    lhs: Term
    result: Term
    children: tuple = ()
    equation: Optional[Equation] = None
    size: int = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(
            self, "size", 1 + sum(c.size for c in self.children)
        )

    @property
    def is_active(self) -> bool:
        return self.rule in ACTIVE_RULES

    @property
    def is_passive(self) -> bool:
        return self.rule in PASSIVE_RULES

    @property
    def is_semi_active(self) -> bool:
        return self.rule in SEMI_ACTIVE_RULES

    @property
    def activation(self) -> Optional["Judgement"]:
        """For Function/Update judgements: the derivation of rhs*sigma."""
        if self.rule in ACTIVE_RULES and self.children:
            return self.children[-1]
        return None

    def walk(self) -> Iterator["Judgement"]:
        yield self
        for c in self.children:
            yield from c.walk()

    def shape(self) -> tuple:
        """Structure used for golden-tree comparisons."""
        return (
            self.rule,
            format_term(self.lhs),
            format_term(self.result),
            tuple(c.shape() for c in self.children),
        )


@dataclass(frozen=True)
class DerivationStats:
    rule_count: int
    active_count: int  # distinct active judgements (lhs, result)
    active_occurrences: int
    passive_count: int
    semi_active_count: int
    max_active_size: int
    per_symbol_active: dict
    charged_cost: int

    def as_dict(self) -> dict:
        return {
            "rule_count": self.rule_count,
            "active_count": self.active_count,
            "active_occurrences": self.active_occurrences,
            "passive_count": self.passive_count,
            "semi_active_count": self.semi_active_count,
            "max_active_size": self.max_active_size,
            "per_symbol_active": dict(sorted(self.per_symbol_active.items())),
            "charged_cost": self.charged_cost,
        }


@dataclass(frozen=True)
class DerivationProof:
    root: Judgement
    mode: str  # "cbv" or "memo"
    stats: DerivationStats
    cache_trace: tuple = ()  # (function name, args, value) in Update order

    @property
    def result(self) -> Term:
        return self.root.result


@dataclass(frozen=True)
class FirstMatch:
    pass


@dataclass(frozen=True)
class Seeded:
    seed: int = 0


@dataclass(frozen=True)
class Exhaustive:
    pass


ChoicePolicy = FirstMatch | Seeded | Exhaustive


def classify(root: Judgement) -> DerivationStats:
    """Count judgements by class; active_count is over distinct judgements."""
    rule_count = 0
    active_occ = 0
    passive = 0
    semi = 0
    max_active = 0
    distinct_active: set = set()
    per_symbol: Counter = Counter()
    charged = 0
    cache_size = 0
    for j in root.walk():
        rule_count += 1
        if j.is_active:
            active_occ += 1
            distinct_active.add((j.lhs, j.result))
            per_symbol[j.lhs.symbol.name] += 1
            max_active = max(max_active, term_size(j.lhs))
            if j.rule == R_UPDATE:
                charged += cache_size * term_size(j.lhs)
                cache_size += 1
        elif j.is_semi_active:
            semi += 1
            charged += cache_size * term_size(j.lhs)
        else:
            passive += 1
    return DerivationStats(
        rule_count=rule_count,
        active_count=len(distinct_active),
        active_occurrences=active_occ,
        passive_count=passive,
        semi_active_count=semi,
        max_active_size=max_active,
        per_symbol_active=dict(per_symbol),
        charged_cost=rule_count + charged,
    )


def _make_proof(root: Judgement, mode: str, cache_trace: tuple = ()) -> DerivationProof:
    return DerivationProof(root, mode, classify(root), cache_trace)


def _value_proof(v: Term) -> Judgement:
    assert isinstance(v, App)
    return Judgement(R_CONSTRUCTOR, v, v, tuple(_value_proof(a) for a in v.args))


class _CbvRun:
    """One evaluation run; threads the budget through the recursion."""

    def __init__(self, program: Program, policy: ChoicePolicy, budget: Budget):
        self.program = program
        self.policy = policy
        self.budget = budget
        self.truncated = False
        self.rng = random.Random(policy.seed) if isinstance(policy, Seeded) else None

    # -- single-derivation path (FirstMatch / Seeded) --------------------

    def derive_one(self, t: Term, depth: int, steps: list) -> Judgement:
        steps[0] += 1
        if steps[0] > self.budget.max_rules or depth > self.budget.max_depth:
            raise BudgetExceeded(
                f"budget exceeded while evaluating {format_term(t)[:80]}"
            )
        if isinstance(t, Var):
            raise NoMatchingEquation(f"cannot evaluate open term {t.name}")
        if t.symbol.is_constructor:
            kids = tuple(self.derive_one(a, depth + 1, steps) for a in t.args)
            return Judgement(
                R_CONSTRUCTOR, t, App(t.symbol, tuple(k.result for k in kids)), kids
            )
        if all(is_value(a) for a in t.args):
            matches = matching_equations(self.program, t)
            if not matches:
                raise NoMatchingEquation(f"no equation matches {format_term(t)}")
            if isinstance(self.policy, Seeded) and len(matches) > 1:
                eq, sigma = matches[self.rng.randrange(len(matches))]
            else:
                eq, sigma = matches[0]
            body = self.derive_one(apply_subst(eq.rhs, sigma), depth + 1, steps)
            return Judgement(R_FUNCTION, t, body.result, (body,), eq)
        kids = tuple(self.derive_one(a, depth + 1, steps) for a in t.args)
        call = App(t.symbol, tuple(k.result for k in kids))
        final = self.derive_one(call, depth + 1, steps)
        return Judgement(R_SPLIT, t, final.result, kids + (final,))

    # -- exhaustive enumeration -------------------------------------------

    def enumerate(self, t: Term, depth: int, used: int) -> list[Judgement]:
        """All derivations of t whose size fits in the remaining budget."""
        if depth > self.budget.max_depth or used >= self.budget.max_rules:
            self.truncated = True
            return []
        if isinstance(t, Var):
            raise NoMatchingEquation(f"cannot evaluate open term {t.name}")
        remaining = self.budget.max_rules - used
        out: list[Judgement] = []
        if t.symbol.is_constructor:
            for kids in self._child_product(t.args, depth, used + 1):
                out.append(
                    Judgement(
                        R_CONSTRUCTOR,
                        t,
                        App(t.symbol, tuple(k.result for k in kids)),
                        kids,
                    )
                )
                if len(out) >= self.budget.max_derivations:
                    self.truncated = True
                    break
            return out
        if all(is_value(a) for a in t.args):
            for eq, sigma in matching_equations(self.program, t):
                for body in self.enumerate(
                    apply_subst(eq.rhs, sigma), depth + 1, used + 1
                ):
                    out.append(Judgement(R_FUNCTION, t, body.result, (body,), eq))
                    if len(out) >= self.budget.max_derivations:
                        self.truncated = True
                        return out
            return out
        for kids in self._child_product(t.args, depth, used + 1):
            call = App(t.symbol, tuple(k.result for k in kids))
            inner_used = used + 1 + sum(k.size for k in kids)
            for final in self.enumerate(call, depth + 1, inner_used):
                out.append(Judgement(R_SPLIT, t, final.result, kids + (final,)))
                if len(out) >= self.budget.max_derivations:
                    self.truncated = True
                    return out
        return out

    def _child_product(self, args: tuple, depth: int, used: int) -> Iterator[tuple]:
        """Cartesian product of the argument derivations, budget-pruned."""
        lists = []
        for a in args:
            derivs = self.enumerate(a, depth + 1, used)
            if not derivs:
                return
            lists.append(derivs)
        for combo in itertools.product(*lists):
            if used + sum(k.size for k in combo) > self.budget.max_rules:
                self.truncated = True
                continue
            yield combo


def eval_cbv(
    program: Program,
    term: Term,
    policy: ChoicePolicy = FirstMatch(),
    budget: Budget = DEFAULT_BUDGET,
) -> Iterator[DerivationProof]:
    """Stream of call-by-value derivation proofs of a ground term.

    FirstMatch / Seeded emit exactly one proof; Exhaustive enumerates every
    derivation within the budget (deduplication never applies: each rule
    choice sequence is its own derivation).
    """
    run = _CbvRun(program, policy, budget)
    if isinstance(policy, Exhaustive):
        derivs = run.enumerate(term, 0, 0)
        if not derivs and run.truncated:
            raise BudgetExceeded(f"no derivation of {format_term(term)} fits the budget")
        for root in derivs:
            yield _make_proof(root, "cbv")
    else:
        root = run.derive_one(term, 0, [0])
        yield _make_proof(root, "cbv")


def all_derivations(
    program: Program, term: Term, budget: Budget = DEFAULT_BUDGET
) -> tuple[list[DerivationProof], bool]:
    """Materialised exhaustive enumeration plus a truncation flag."""
    run = _CbvRun(program, Exhaustive(), budget)
    derivs = run.enumerate(term, 0, 0)
    return [_make_proof(r, "cbv") for r in derivs], run.truncated


def derivable_value_set(
    program: Program, term: Term, _memo: Optional[dict] = None, _stack: Optional[set] = None,
    max_states: int = 100_000,
) -> frozenset:
    """Set of values derivable from a ground term, by memoised set semantics.

    Independent of proof construction; used by transition enumeration and as
    a measurement back end.  Raises CycleDetected when a state recursively
    depends on itself (possible nontermination).
    """
    memo = {} if _memo is None else _memo
    stack = set() if _stack is None else _stack

    def go(u: Term) -> frozenset:
        if is_value(u):
            return frozenset([u])
        if isinstance(u, Var):
            raise NoMatchingEquation(f"cannot evaluate open term {u.name}")
        if u in memo:
            return memo[u]
        if u in stack:
            raise CycleDetected(f"recursive state {format_term(u)}")
        if len(memo) > max_states:
            raise BudgetExceeded("state budget exceeded in value-set evaluation")
        stack.add(u)
        out: set = set()
        if u.symbol.is_constructor:
            arg_sets = [sorted(go(a), key=format_term) for a in u.args]
            for combo in itertools.product(*arg_sets):
                out.add(App(u.symbol, combo))
        elif all(is_value(a) for a in u.args):
            for eq, sigma in matching_equations(program, u):
                out |= go(apply_subst(eq.rhs, sigma))
        else:
            arg_sets = [sorted(go(a), key=format_term) for a in u.args]
            for combo in itertools.product(*arg_sets):
                out |= go(App(u.symbol, combo))
        stack.discard(u)
        res = frozenset(out)
        memo[u] = res
        return res

    return go(term)


# -- memoisation ------------------------------------------------------------


def unify_patterns(p: Term, q: Term, subst: Substitution) -> Optional[Substitution]:
    """Syntactic unification of two constructor patterns (shared var space)."""

    def resolve(t: Term) -> Term:
        while isinstance(t, Var) and t.name in subst:
            t = subst[t.name]
        return t

    p, q = resolve(p), resolve(q)
    if p == q:
        return subst
    if isinstance(p, Var):
        subst[p.name] = q
        return subst
    if isinstance(q, Var):
        subst[q.name] = p
        return subst
    if p.symbol != q.symbol:
        return None
    for a, b in zip(p.args, q.args):
        if unify_patterns(a, b, subst) is None:
            return None
    return subst


def overlapping_pairs(program: Program) -> list[tuple[Equation, Equation]]:
    """Pairs of distinct equations for one function whose lhs tuples unify."""
    out = []
    eqs = program.equations
    for i, e1 in enumerate(eqs):
        for e2 in eqs[i + 1 :]:
            if e1.lhs_function != e2.lhs_function:
                continue
            subst: Substitution = {}
            ok = True
            for p, q in zip(e1.lhs_patterns, _rename(e2.lhs_patterns)):
                if unify_patterns(p, q, subst) is None:
                    ok = False
                    break
            if ok:
                out.append((e1, e2))
    return out


def _rename(patterns: tuple) -> tuple:
    def go(t: Term) -> Term:
        if isinstance(t, Var):
            return Var(t.name + "'r")
        return App(t.symbol, tuple(go(a) for a in t.args))

    return tuple(go(p) for p in patterns)


def is_orthogonal(program: Program) -> bool:
    """Left-linear and non-overlapping: sufficient for confluence.

    Patterns contain no function symbols, so rules can only overlap at the
    root; root overlap plus left-linearity is the whole check.
    """
    if program.has_repeated_lhs_variables():
        return False
    return not overlapping_pairs(program)


class _MemoRun:
    def __init__(self, program: Program, budget: Budget):
        self.program = program
        self.budget = budget
        self.cache: dict = {}
        self.trace: list = []
        self.steps = 0

    def derive(self, t: Term, depth: int) -> Judgement:
        self.steps += 1
        if self.steps > self.budget.max_rules or depth > self.budget.max_depth:
            raise BudgetExceeded(f"budget exceeded while evaluating {format_term(t)[:80]}")
        if isinstance(t, Var):
            raise NoMatchingEquation(f"cannot evaluate open term {t.name}")
        if t.symbol.is_constructor:
            kids = tuple(self.derive(a, depth + 1) for a in t.args)
            return Judgement(
                R_CONSTRUCTOR, t, App(t.symbol, tuple(k.result for k in kids)), kids
            )
        if all(is_value(a) for a in t.args):
            key = (t.symbol.name, t.args)
            if key in self.cache:
                return Judgement(R_READ, t, self.cache[key])
            matches = matching_equations(self.program, t)
            if not matches:
                raise NoMatchingEquation(f"no equation matches {format_term(t)}")
            eq, sigma = matches[0]
            body = self.derive(apply_subst(eq.rhs, sigma), depth + 1)
            self.cache[key] = body.result
            self.trace.append((t.symbol.name, t.args, body.result))
            return Judgement(R_UPDATE, t, body.result, (body,), eq)
        kids = tuple(self.derive(a, depth + 1) for a in t.args)
        call = App(t.symbol, tuple(k.result for k in kids))
        final = self.derive(call, depth + 1)
        return Judgement(R_SPLIT, t, final.result, kids + (final,))


def eval_memo(
    program: Program,
    term: Term,
    budget: Budget = DEFAULT_BUDGET,
    allow_nonconfluent: bool = False,
) -> DerivationProof:
    """Call-by-value evaluation with a cache; Read has priority over Update.

    Requires an orthogonal program (the sufficient confluence check) unless
    the caller explicitly overrides; the first matching equation is taken at
    genuine choice points under the override.
    """
    if not allow_nonconfluent and not is_orthogonal(program):
        raise NonConfluentProgram(
            "program is not orthogonal (left-linear + non-overlapping); "
            "memoisation refused without an explicit override"
        )
    run = _MemoRun(program, budget)
    root = run.derive(term, 0)
    return _make_proof(root, "memo", tuple(run.trace))


# -- proof validation and accounting ----------------------------------------


def validate_proof(program: Program, proof: DerivationProof) -> None:
    """Check every judgement against the inference rules; raises ValueError.

    For memo proofs the cache is re-threaded through the traversal, so Read
    entries must have been installed by a previous Update.
    """
    cache: dict = {}

    def check(j: Judgement) -> None:
        t, v = j.lhs, j.result
        if j.rule == R_CONSTRUCTOR:
            if not isinstance(t, App) or not t.symbol.is_constructor:
                raise ValueError(f"Constructor rule on {format_term(t)}")
            _expect(len(j.children) == len(t.args), j, "arity of premises")
            for a, c in zip(t.args, j.children):
                _expect(c.lhs == a, j, "premise lhs mismatch")
                check(c)
            _expect(
                v == App(t.symbol, tuple(c.result for c in j.children)),
                j,
                "conclusion value",
            )
        elif j.rule == R_SPLIT:
            _expect(
                isinstance(t, App) and t.symbol.is_function, j, "Split head"
            )
            _expect(
                any(not is_value(a) for a in t.args), j, "Split needs a non-value"
            )
            _expect(len(j.children) == len(t.args) + 1, j, "Split premise count")
            for a, c in zip(t.args, j.children[:-1]):
                _expect(c.lhs == a, j, "Split premise lhs")
                check(c)
            final = j.children[-1]
            _expect(
                final.lhs
                == App(t.symbol, tuple(c.result for c in j.children[:-1])),
                j,
                "Split call lhs",
            )
            check(final)
            _expect(final.result == v, j, "Split conclusion value")
        elif j.rule in (R_FUNCTION, R_UPDATE):
            _expect(
                isinstance(t, App)
                and t.symbol.is_function
                and all(is_value(a) for a in t.args),
                j,
                "active lhs must be a function on values",
            )
            eq = j.equation
            _expect(eq is not None and eq in program.equations, j, "activated equation")
            _expect(eq.lhs_function == t.symbol, j, "equation head")
            sigma = match_tuple(eq.lhs_patterns, t.args)
            _expect(sigma is not None, j, "patterns do not match")
            _expect(len(j.children) == 1, j, "activation premise count")
            act = j.children[0]
            _expect(act.lhs == apply_subst(eq.rhs, sigma), j, "activation lhs")
            if j.rule == R_UPDATE:
                key = (t.symbol.name, t.args)
                _expect(key not in cache, j, "Update on a cached call")
            check(act)
            _expect(act.result == v, j, "activation value")
            if j.rule == R_UPDATE:
                cache[(t.symbol.name, t.args)] = v
        elif j.rule == R_READ:
            key = (t.symbol.name, t.args)
            _expect(cache.get(key) == v, j, "Read entry not in cache")
            _expect(not j.children, j, "Read is a leaf")
        else:
            raise ValueError(f"unknown rule {j.rule}")

    check(proof.root)
    if proof.mode == "memo":
        entries = {(f, args): v for (f, args, v) in proof.cache_trace}
        if entries != cache:
            raise ValueError("cache trace does not agree with Update judgements")


def _expect(cond: bool, j: Judgement, what: str) -> None:
    if not cond:
        raise ValueError(f"invalid {j.rule} judgement at {format_term(j.lhs)}: {what}")


@dataclass(frozen=True)
class Dependence:
    root: Judgement
    judgements: tuple

    @property
    def size(self) -> int:
        return len(self.judgements)

    @property
    def depth(self) -> int:
        def go(j: Judgement, keep: frozenset) -> int:
            kids = [go(c, keep) for c in j.children if id(c) in keep]
            return 1 + max(kids, default=0)

        return go(self.root, frozenset(id(j) for j in self.judgements))


def max_dependence(proof: DerivationProof, judgement: Judgement) -> Dependence:
    """Largest passive-only subderivation rooted at a passive judgement."""
    if not judgement.is_passive:
        raise ValueError("dependences are rooted at passive judgements")
    if not any(j is judgement for j in proof.root.walk()):
        raise ValueError("judgement does not occur in the proof")

    collected: list[Judgement] = []

    def go(j: Judgement) -> None:
        collected.append(j)
        for c in j.children:
            if c.is_passive:
                go(c)

    go(judgement)
    return Dependence(judgement, tuple(collected))


def activation_growth(program: Program) -> int:
    """Max rhs size over all equations: the linear-growth constant c such
    that any activation of an active term t has size <= c * |t|."""
    return max((term_size(eq.rhs) for eq in program.equations), default=1)


def assembled_rule_bound(program: Program, proof: DerivationProof) -> int:
    """Concrete instance of the derivation-size polynomial Q(A, S).

    Every passive judgement sits in the dependence of some activation (or of
    the root term), each bounded by the activation size G*(S+1); Read leaves
    add at most an arity factor.
    """
    stats = proof.stats
    g = activation_growth(program)
    s = max(stats.max_active_size, 1)
    a = stats.active_occurrences
    k = max(program.max_arity(), 1)
    base = (a + 1) * (g * (s + 1) + 1) + term_size(proof.root.lhs)
    if proof.mode == "memo":
        return (k + 1) * base
    return base


def check_dependence_bounds(proof: DerivationProof) -> None:
    """Assert the three dependence bounds on every passive judgement."""

    def collect(j: Judgement) -> tuple[list, int]:
        nodes = [j]
        depth = 1
        for c in j.children:
            if c.is_passive:
                sub_nodes, sub_depth = collect(c)
                nodes.extend(sub_nodes)
                depth = max(depth, 1 + sub_depth)
        return nodes, depth

    for j in proof.root.walk():
        if not j.is_passive:
            continue
        nodes, depth = collect(j)
        for node in nodes:
            if not is_subterm(node.lhs, j.lhs):
                raise ValueError(
                    f"dependence member {format_term(node.lhs)} is not a "
                    f"subterm of {format_term(j.lhs)}"
                )
        if depth > term_depth(j.lhs):
            raise ValueError("dependence deeper than its root term")
        if len(nodes) > term_size(j.lhs):
            raise ValueError("dependence larger than its root term size")


def check_read_linkage(proof: DerivationProof) -> None:
    """Every Read judgement must resolve to an earlier Update entry."""
    seen: set = set()
    trace_pos = {
        (f, args, v): i for i, (f, args, v) in enumerate(proof.cache_trace)
    }

    def go(j: Judgement) -> None:
        if j.rule == R_READ:
            key = (j.lhs.symbol.name, j.lhs.args, j.result)
            if key not in seen:
                raise ValueError(
                    f"Read of {format_term(j.lhs)} before the matching Update"
                )
            if key not in trace_pos:
                raise ValueError("Read entry missing from the cache trace")
        for c in j.children:
            go(c)
        if j.rule == R_UPDATE:
            seen.add((j.lhs.symbol.name, j.lhs.args, j.result))

    go(proof.root)


def proof_to_json(proof: DerivationProof) -> dict:
    def enc(j: Judgement) -> dict:
        out = {
            "rule": j.rule,
            "lhs": format_term(j.lhs),
            "result": format_term(j.result),
            "children": [enc(c) for c in j.children],
        }
        if j.equation is not None:
            out["equation"] = j.equation.index
        return out

    return {
        "mode": proof.mode,
        "root": enc(proof.root),
        "stats": proof.stats.as_dict(),
        "cache_trace": [
            {
                "function": f,
                "args": [format_term(a) for a in args],
                "value": format_term(v),
            }
            for (f, args, v) in proof.cache_trace
        ],
    }
