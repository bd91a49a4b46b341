"""States, transitions, call trees and call dags.

A state is a function symbol applied to values.  The call tree of a cbv
proof keeps only the active judgements; the call dag of a memo proof keeps
the Update judgements and turns every Read leaf into a link to the unique
Update node with the same call.  Edges are labelled with the activated
equation and the rhs call-site occurrence they realise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .base import Budget, DEFAULT_BUDGET, PrecedenceError
from .semantics import (
    DerivationProof,
    Judgement,
    R_READ,
    derivable_value_set,
)
from .terms import (
    App,
    Equation,
    Program,
    Symbol,
    Term,
    format_term,
    is_value,
    subterms,
    term_size,
)
from .ordering import EQUIV, LESS, Precedence

FOREST = "forest"
DAG = "dag"


@dataclass(frozen=True)
class State:
    function: Symbol
    arguments: tuple

    def __post_init__(self):
        if len(self.arguments) != self.function.arity:
            raise ValueError("state arity mismatch")

    @property
    def term(self) -> App:
        return App(self.function, self.arguments)

    @property
    def size(self) -> int:
        return term_size(self.term)

    def __repr__(self) -> str:
        args = ", ".join(format_term(a) for a in self.arguments)
        return f"<{self.function.name}, {args}>" if args else f"<{self.function.name}>"


@dataclass(frozen=True)
class TransitionEdge:
    source: State
    target: State
    equation: Equation
    occurrence: int  # index among the function-headed subterm occurrences of the rhs


@dataclass
class CallNode:
    state: State
    children: list = field(default_factory=list)  # (TransitionEdge, CallNode)
    read_links: list = field(default_factory=list)  # (TransitionEdge, CallNode)

    def walk(self) -> Iterator["CallNode"]:
        yield self
        for _, c in self.children:
            yield from c.walk()


@dataclass
class CallStructure:
    kind: str  # FOREST or DAG
    roots: list

    def nodes(self) -> list[CallNode]:
        if self.kind == FOREST:
            out = []
            for r in self.roots:
                out.extend(r.walk())
            return out
        seen: dict[int, CallNode] = {}
        stack = list(self.roots)
        while stack:
            n = stack.pop()
            if id(n) in seen:
                continue
            seen[id(n)] = n
            for _, c in n.children:
                stack.append(c)
            for _, c in n.read_links:
                stack.append(c)
        return list(seen.values())

    def node_count(self) -> int:
        return len(self.nodes())

    def edges(self) -> list[TransitionEdge]:
        out = []
        for n in self.nodes():
            out.extend(e for e, _ in n.children)
            out.extend(e for e, _ in n.read_links)
        return out

    def successors_of(self, node: CallNode) -> list[tuple[TransitionEdge, CallNode]]:
        return list(node.children) + list(node.read_links)

    def max_children(self) -> int:
        return max((len(n.children) for n in self.nodes()), default=0)

    def to_dot(self) -> str:
        lines = ["digraph calls {"]
        ids: dict[int, str] = {}
        for i, n in enumerate(self.nodes()):
            ids[id(n)] = f"n{i}"
            lines.append(f'  n{i} [label="{n.state!r}"];')
        for n in self.nodes():
            for e, c in n.children:
                lines.append(
                    f"  {ids[id(n)]} -> {ids[id(c)]} "
                    f'[label="e{e.equation.index}.{e.occurrence}"];'
                )
            for e, c in n.read_links:
                lines.append(
                    f"  {ids[id(n)]} -> {ids[id(c)]} "
                    f'[label="e{e.equation.index}.{e.occurrence}", style=dashed];'
                )
        lines.append("}")
        return "\n".join(lines)

    def to_json(self) -> dict:
        node_list = self.nodes()
        ids = {id(n): i for i, n in enumerate(node_list)}
        return {
            "kind": self.kind,
            "nodes": [repr(n.state) for n in node_list],
            "edges": [
                {
                    "from": ids[id(n)],
                    "to": ids[id(c)],
                    "equation": e.equation.index,
                    "occurrence": e.occurrence,
                    "read_link": linked,
                }
                for n in node_list
                for linked, group in ((False, n.children), (True, n.read_links))
                for e, c in group
            ],
        }


def call_tree_arity(program: Program) -> int:
    """Bound on the number of children of any call-structure node.

    Every function-headed occurrence of an rhs spawns exactly one call
    judgement under the activation, nested calls included, so the constant
    counts occurrences rather than maximal subterms.
    """
    return max(
        (len(rhs_call_positions(eq)) for eq in program.equations), default=0
    )


def rhs_call_positions(eq: Equation) -> list[tuple]:
    """Positions of function-headed subterm occurrences of the rhs, pre-order."""
    out: list[tuple] = []

    def go(t: Term, pos: tuple) -> None:
        if isinstance(t, App):
            if t.symbol.is_function:
                out.append(pos)
            for i, a in enumerate(t.args):
                go(a, pos + (i,))

    go(eq.rhs, ())
    return out


def _activation_sites(u: Term) -> list[tuple]:
    """Call positions of a ground term in evaluation order (Split's call last)."""
    if is_value(u):
        return []
    assert isinstance(u, App)
    sites: list[tuple] = []
    if u.symbol.is_constructor:
        for i, a in enumerate(u.args):
            sites.extend((i,) + p for p in _activation_sites(a))
        return sites
    if all(is_value(a) for a in u.args):
        return [()]
    for i, a in enumerate(u.args):
        sites.extend((i,) + p for p in _activation_sites(a))
    sites.append(())
    return sites


def _topmost_calls(j: Judgement) -> list[Judgement]:
    if j.is_active or j.is_semi_active:
        return [j]
    out = []
    for c in j.children:
        out.extend(_topmost_calls(c))
    return out


def _state_of(j: Judgement) -> State:
    return State(j.lhs.symbol, j.lhs.args)


def _build_children(j: Judgement) -> list[tuple[TransitionEdge, Judgement]]:
    """Pair each topmost call under j's activation with its rhs occurrence."""
    act = j.activation
    if act is None:
        return []
    eq = j.equation
    positions = rhs_call_positions(eq)
    sites = _activation_sites(act.lhs)
    calls = _topmost_calls(act)
    assert len(sites) == len(calls), "call sites out of step with the proof"
    pos_index = {p: i for i, p in enumerate(positions)}
    out = []
    for site, call in zip(sites, calls):
        edge = TransitionEdge(_state_of(j), _state_of(call), eq, pos_index[site])
        out.append((edge, call))
    return out


def call_tree(proof: DerivationProof) -> CallStructure:
    """Forest of active judgement occurrences of a cbv proof."""
    if proof.mode != "cbv":
        raise ValueError("call trees are built from cbv proofs")

    def build(j: Judgement) -> CallNode:
        node = CallNode(_state_of(j))
        for edge, call in _build_children(j):
            node.children.append((edge, build(call)))
        return node

    roots = [build(j) for j in _topmost_calls(proof.root)]
    return CallStructure(FOREST, roots)


def call_dag(proof: DerivationProof) -> CallStructure:
    """Dag of Update judgements of a memo proof; Read leaves become links."""
    if proof.mode != "memo":
        raise ValueError("call dags are built from memo proofs")
    by_key: dict[tuple, CallNode] = {}

    def build(j: Judgement) -> CallNode:
        key = (j.lhs.symbol.name, j.lhs.args)
        node = CallNode(_state_of(j))
        by_key[key] = node
        for edge, call in _build_children(j):
            if call.rule == R_READ:
                node.read_links.append((edge, by_key[(call.lhs.symbol.name, call.lhs.args)]))
            else:
                node.children.append((edge, build(call)))
        return node

    roots = []
    for j in _topmost_calls(proof.root):
        if j.rule == R_READ:
            continue  # a repeated root-level call resolves inside the dag
        roots.append(build(j))
    return CallStructure(DAG, roots)


def successors(
    program: Program, state: State, budget: Budget = DEFAULT_BUDGET
) -> list[TransitionEdge]:
    """All transitions realizable from a state.

    For every matching equation and every function-headed subterm of its
    rhs, the subterm's arguments are evaluated exhaustively (set semantics);
    each derivable argument tuple yields one edge.
    """
    import itertools

    from .terms import apply_subst, matching_equations

    out = []
    memo: dict = {}
    for eq, sigma in matching_equations(program, state.term):
        positions = rhs_call_positions(eq)
        for occ, pos in enumerate(positions):
            sub = eq.rhs
            for i in pos:
                sub = sub.args[i]
            inst = apply_subst(sub, sigma)
            arg_sets = []
            for a in inst.args:
                vals = derivable_value_set(
                    program, a, _memo=memo, max_states=budget.max_rules
                )
                arg_sets.append(sorted(vals, key=format_term))
            for combo in itertools.product(*arg_sets):
                out.append(
                    TransitionEdge(
                        state, State(inst.symbol, tuple(combo)), eq, occ
                    )
                )
    return out


def reachable_states(
    program: Program, initial: State, budget: Budget = DEFAULT_BUDGET
) -> set[State]:
    """States reachable through transitions; equals the states appearing in
    call trees rooted at the initial state."""
    from .base import BudgetExceeded

    seen = {initial}
    frontier = [initial]
    while frontier:
        if len(seen) > budget.max_rules:
            raise BudgetExceeded("state space exceeds the budget")
        eta = frontier.pop()
        for edge in successors(program, eta, budget):
            if edge.target not in seen:
                seen.add(edge.target)
                frontier.append(edge.target)
    return seen


# -- rank statistics ----------------------------------------------------------


@dataclass(frozen=True)
class ClassRankStats:
    class_symbols: tuple
    rank: int
    node_count: int
    max_same_class_descendants: int


@dataclass(frozen=True)
class RankReport:
    per_class: tuple
    max_descendants: int  # the quantity A
    total_nodes: int
    bound: int
    holds: bool

    def as_dict(self) -> dict:
        return {
            "per_class": [
                {
                    "symbols": list(c.class_symbols),
                    "rank": c.rank,
                    "nodes": c.node_count,
                    "max_same_class_descendants": c.max_same_class_descendants,
                }
                for c in self.per_class
            ],
            "max_descendants": self.max_descendants,
            "total_nodes": self.total_nodes,
            "bound": self.bound,
            "holds": self.holds,
        }


def function_ranks(program: Program, precedence: Precedence) -> dict:
    """rank(f) = 1 + max rank of strictly smaller function classes."""
    classes: dict[int, list[Symbol]] = {}
    for f in program.functions:
        classes.setdefault(precedence.class_of(f.name), []).append(f)
    memo: dict[int, int] = {}

    def rank(cid: int) -> int:
        if cid in memo:
            return memo[cid]
        smaller = [
            o
            for o in classes
            if o != cid and (o, cid) in precedence.below
        ]
        memo[cid] = 1 + max((rank(o) for o in smaller), default=0)
        return memo[cid]

    return {cid: rank(cid) for cid in classes}


def same_class_descendant_counts(
    structure: CallStructure, precedence: Precedence
) -> dict:
    """Per node id: number of descendant node occurrences in the same class.

    In a dag, distinct nodes are distinct states, so occurrence counting and
    state counting coincide.
    """
    counts: dict[int, int] = {}

    def descend(node: CallNode, cls: int, seen: set) -> int:
        total = 0
        for _, c in structure.successors_of(node):
            if id(c) in seen:
                continue
            seen.add(id(c))
            here = 1 if precedence.class_of(c.state.function.name) == cls else 0
            total += here + descend(c, cls, seen)
        return total

    for node in structure.nodes():
        cls = precedence.class_of(node.state.function.name)
        counts[id(node)] = descend(node, cls, set())
    return counts


def rank_stats(structure: CallStructure, precedence: Precedence, program: Program) -> RankReport:
    """Per-class counting and the rank-recurrence size bound.

    The bound instantiates B_i = sum_{i<=j<=k} d^(k-j) * (A+1)^(k-j+1) with
    d the maximum number of function occurrences in any rhs and k the
    maximum rank; the +1 absorbs the node itself alongside its descendants.
    """
    if not precedence.is_separating():
        raise PrecedenceError("rank statistics need a separating precedence")
    if not precedence.is_compatible(program):
        raise PrecedenceError("rank statistics need a compatible precedence")
    ranks = function_ranks(program, precedence)
    counts = same_class_descendant_counts(structure, precedence)
    nodes = structure.nodes()
    a_max = max(counts.values(), default=0)
    d = 1
    for eq in program.equations:
        d = max(d, sum(1 for u in subterms(eq.rhs) if isinstance(u, App) and u.symbol.is_function))
    k = max(ranks.values(), default=0)

    per_class = []
    for cid, rank in sorted(ranks.items()):
        members = tuple(sorted(s.name for s in program.functions if precedence.class_of(s.name) == cid))
        cls_nodes = [n for n in nodes if precedence.class_of(n.state.function.name) == cid]
        per_class.append(
            ClassRankStats(
                members,
                rank,
                len(cls_nodes),
                max((counts[id(n)] for n in cls_nodes), default=0),
            )
        )
    bound = 0
    for i in range(1, k + 1):
        b_i = sum(d ** (k - j) * (a_max + 1) ** (k - j + 1) for j in range(i, k + 1))
        bound += b_i
    bound *= max(1, len(structure.roots))
    return RankReport(
        tuple(per_class),
        a_max,
        len(nodes),
        bound,
        len(nodes) <= bound,
    )


def check_edge_class_descent(
    structure: CallStructure, precedence: Precedence
) -> None:
    """Along every edge the child's class is weakly below the parent's."""
    for n in structure.nodes():
        for e, c in structure.successors_of(n):
            rel = precedence.compare_symbols(c.state.function, n.state.function)
            if rel not in (LESS, EQUIV):
                raise ValueError(
                    f"edge {n.state!r} -> {c.state!r} climbs the precedence"
                )


def ppo_descendant_bound(
    structure: CallStructure, precedence: Precedence
) -> list[dict]:
    """Per-node check of the PPO same-class dag bound c * prod(|v_i| + 1)."""
    counts = same_class_descendant_counts(structure, precedence)
    out = []
    for n in structure.nodes():
        cid = precedence.class_of(n.state.function.name)
        c = max(
            1,
            sum(
                1
                for s in precedence.signature
                if s.is_function and precedence.class_ids[s.name] == cid
            ),
        )
        bound = c
        for v in n.state.arguments:
            bound *= term_size(v) + 1
        out.append(
            {
                "state": repr(n.state),
                "descendants": counts[id(n)],
                "bound": bound,
                "holds": counts[id(n)] <= bound,
            }
        )
    return out
