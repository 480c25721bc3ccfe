"""Fixing variables, DMCP verification and minimal fixed-set search."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import NotDMCPError
from .expression import Atom, Expression, Parameter, Variable, postorder
from .problem import Equality, Inequality, Problem, SOCConstraint, is_dcp


@dataclass(frozen=True, order=True)
class IndexSet:
    """Sorted set of block indices."""

    members: tuple[int, ...] = ()

    def __init__(self, members: Iterable[int] = ()):
        object.__setattr__(self, "members", tuple(sorted({int(m) for m in members})))

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, i) -> bool:
        return i in self.members

    def complement(self, n: int) -> "IndexSet":
        return IndexSet(i for i in range(n) if i not in self.members)

    def issubset(self, other: "IndexSet") -> bool:
        return set(self.members) <= set(other.members)

    def __repr__(self) -> str:
        return f"IndexSet({list(self.members)})"


def _as_index_set(fixed, blocks: Sequence[Variable]) -> IndexSet:
    if isinstance(fixed, IndexSet):
        idx = fixed
    else:
        pos = {v.uid: i for i, v in enumerate(blocks)}
        idx = IndexSet(pos[f.uid] if isinstance(f, Variable) else f for f in fixed)
    for i in idx:
        if not 0 <= i < len(blocks):
            raise IndexError(f"block index {i} out of range for {len(blocks)} blocks")
    return idx


def _rewrite(nodes: Iterable[Expression], subst: Mapping[int, Expression]) -> dict[int, Expression]:
    """Rebuild the ancestors of substituted leaves; untouched subtrees are shared."""
    new: dict[int, Expression] = {}
    for node in nodes:
        if node.uid in subst:
            new[node.uid] = subst[node.uid]
        elif node.is_leaf:
            new[node.uid] = node
        else:
            args = tuple(new[a.uid] for a in node.args)
            if all(x is y for x, y in zip(args, node.args)):
                new[node.uid] = node
            else:
                new[node.uid] = Atom(node.spec, args, node.data)
    return new


def _rewrite_constraint(c, new):
    if isinstance(c, Inequality):
        return Inequality(new[c.expr.uid])
    if isinstance(c, Equality):
        return Equality(new[c.expr.uid])
    return SOCConstraint(new[c.t.uid], new[c.x.uid])


def _param_for(v: Variable, point: Mapping | None) -> Parameter:
    p = Parameter(v.shape, name=v.name, sign=v.sign)
    value = point.get(v) if point is not None else None
    if value is None:
        value = v.value
    if value is not None:
        p.value = value
    return p


class FixedProblem:
    """A problem with the blocks in ``fixed`` replaced by same-signed parameters.

    Rebinding values (:meth:`bind`) never touches tree structure, so analysis
    results are value independent.
    """

    def __init__(self, base: Problem, fixed: IndexSet, point: Mapping | None = None):
        self.base = base
        self.fixed = fixed
        blocks = base.variables()
        self.params: dict[int, Parameter] = {i: _param_for(blocks[i], point) for i in fixed}
        subst = {blocks[i].uid: p for i, p in self.params.items()}
        new = _rewrite(base.nodes, subst)
        self.free_indices = [i for i in range(len(blocks)) if i not in fixed]
        self.free = [blocks[i] for i in self.free_indices]
        self.problem = Problem(new[base.objective.uid],
                               [_rewrite_constraint(c, new) for c in base.constraints],
                               variables=self.free)

    def bind(self, point: Mapping) -> None:
        blocks = self.base.variables()
        for i, p in self.params.items():
            p.value = point[blocks[i]]

    def is_dcp(self) -> bool:
        return is_dcp(self.problem)

    def __repr__(self) -> str:
        return f"FixedProblem(fixed={list(self.fixed)}, free={[v.name for v in self.free]})"


def fix(target, fixed, point: Mapping | None = None):
    """Replace the fixed blocks by parameters bound to their current values.

    ``target`` is a :class:`Problem` (returns a :class:`FixedProblem`) or an
    :class:`Expression` (returns the rewritten expression). ``fixed`` is an
    :class:`IndexSet` over the target's variables in declaration order, or an
    iterable of Variables / indices. Values come from ``point`` or ``Variable.value``.
    """
    if isinstance(target, Problem):
        return FixedProblem(target, _as_index_set(fixed, target.variables()), point)
    blocks = target.variables()
    idx = _as_index_set(fixed, blocks)
    subst = {blocks[i].uid: _param_for(blocks[i], point) for i in idx}
    return _rewrite(postorder(target), subst)[target.uid]


def is_dcp_with_fixed(p: Problem, fixed) -> bool:
    """DCP check with the given blocks fixed; depends only on signs and shapes."""
    idx = _as_index_set(fixed, p.variables())
    blocks = p.variables()
    return is_dcp(p, [blocks[i] for i in idx])


def _all_but(p: Problem, i: int) -> list[Variable]:
    return [v for j, v in enumerate(p.variables()) if j != i]


def block_verdicts(p: Problem) -> list[bool]:
    """``is_dcp_with_fixed(p, {i}^c)`` for every block ``i`` (one pass per block)."""
    return [is_dcp(p, _all_but(p, i)) for i in range(p.n_blocks)]


def is_dmcp(p: Problem) -> bool:
    return all(block_verdicts(p))


@dataclass(frozen=True)
class ConflictGraph:
    n: int
    edges: frozenset  # of (i, j) with i < j
    self_conflicts: frozenset

    def neighbors(self, i: int) -> set[int]:
        return {b if a == i else a for a, b in self.edges if i in (a, b)}

    def adjacency(self) -> list[set[int]]:
        adj = [set() for _ in range(self.n)]
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def is_independent(self, members: Iterable[int]) -> bool:
        s = set(members)
        if s & self.self_conflicts:
            return False
        return not any(a in s and b in s for a, b in self.edges)

    def is_maximal_independent(self, members: Iterable[int]) -> bool:
        s = set(members)
        if not self.is_independent(s):
            return False
        return all(not self.is_independent(s | {v}) for v in range(self.n) if v not in s)


def build_conflict_graph(p: Problem) -> ConflictGraph:
    """Edge i~j when blocks i and j sit in different child trees of one
    multi-convex atom; a block in two such children is a self-conflict."""
    index = {v.uid: i for i, v in enumerate(p.variables())}
    empty: frozenset = frozenset()
    below: dict[int, frozenset] = {}
    edges: set[tuple[int, int]] = set()
    selfc: set[int] = set()
    for node in p.nodes:
        if isinstance(node, Variable):
            below[node.uid] = frozenset((index[node.uid],))
            continue
        if node.is_leaf:
            below[node.uid] = empty
            continue
        kids = [below[a.uid] for a in node.args]
        live = [k for k in kids if k]
        if len(live) <= 1:
            below[node.uid] = live[0] if live else empty
            continue
        if node.spec.multiconvex:
            for a in range(len(live)):
                for b in range(a + 1, len(live)):
                    for i in live[a]:
                        for j in live[b]:
                            if i == j:
                                selfc.add(i)
                            else:
                                edges.add((min(i, j), max(i, j)))
        below[node.uid] = frozenset().union(*live)
    return ConflictGraph(len(index), frozenset(edges), frozenset(selfc))


class _TooMany(Exception):
    pass


def maximal_independent_sets(g: ConflictGraph, limit: int = 1024) -> list[frozenset]:
    """All maximal independent sets (Bron-Kerbosch with pivoting on the
    complement graph). Raises ``_TooMany`` past ``limit`` sets."""
    adj = g.adjacency()
    everyone = frozenset(range(g.n))
    compat = [everyone - adj[v] - {v} for v in range(g.n)]
    out: list[frozenset] = []

    def expand(r: frozenset, cand: set, excl: set) -> None:
        if not cand and not excl:
            out.append(r)
            if len(out) > limit:
                raise _TooMany
            return
        pivot = min(cand | excl, key=lambda u: (-len(cand & compat[u]), u))
        for v in sorted(cand - compat[pivot]):
            expand(r | {v}, cand & compat[v], excl & compat[v])
            cand.discard(v)
            excl.add(v)

    if g.n:
        expand(frozenset(), set(everyone), set())
    else:
        out.append(frozenset())
    return out


def greedy_independent_set(g: ConflictGraph, seed: int, adj=None) -> frozenset:
    """Grow an independent set from ``seed`` adding vertices in ascending order."""
    adj = adj if adj is not None else g.adjacency()
    chosen = {seed}
    blocked = set(adj[seed])
    for v in range(g.n):
        if v not in chosen and v not in blocked:
            chosen.add(v)
            blocked |= adj[v]
    return frozenset(chosen)


def find_minimal_sets(p: Problem, enumerate_limit: int = 1024) -> list[IndexSet]:
    """Minimal fixed sets: complements of maximal independent sets of the
    conflict graph, with supersets dropped, in sorted order.

    Every maximal independent set is enumerated while there are at most
    ``enumerate_limit`` of them; beyond that one greedy set per seed block is
    used instead.
    """
    if not is_dmcp(p):
        raise NotDMCPError("problem is not DMCP: some block is not DCP with all others fixed")
    g = build_conflict_graph(p)
    if g.self_conflicts:
        raise NotDMCPError(f"blocks {sorted(g.self_conflicts)} conflict with themselves")
    try:
        free_sets = maximal_independent_sets(g, enumerate_limit)
    except _TooMany:
        adj = g.adjacency()
        free_sets = [greedy_independent_set(g, i, adj) for i in range(g.n)]
    candidates = {IndexSet(set(range(g.n)) - s) for s in free_sets}
    minimal = [c for c in candidates
               if not any(o != c and o.issubset(c) for o in candidates)]
    return sorted(minimal)


def dcp_with_fixed_by_blocks(p: Problem, fixed, graph: ConflictGraph | None = None,
                             verdicts: Sequence[bool] | None = None) -> bool:
    """Decide DCP-with-F-fixed from the single-block verdicts: the free blocks
    must be pairwise conflict-free and each must be DCP with all others fixed."""
    idx = _as_index_set(fixed, p.variables())
    free = idx.complement(p.n_blocks)
    graph = graph if graph is not None else build_conflict_graph(p)
    if not graph.is_independent(free):
        return False
    verdicts = verdicts if verdicts is not None else block_verdicts(p)
    return all(verdicts[i] for i in free)


def verify_fixed_sets(p: Problem, sets: Sequence) -> list[IndexSet]:
    """Validate a user-supplied collection of fixed sets."""
    out = [_as_index_set(s, p.variables()) for s in sets]
    for s in out:
        if not is_dcp_with_fixed(p, s):
            raise NotDMCPError(f"problem is not DCP with {list(s)} fixed")
    if p.n_blocks and out:
        common = set(range(p.n_blocks))
        for s in out:
            common &= set(s)
        if common:
            raise NotDMCPError(f"blocks {sorted(common)} are fixed in every set")
    if p.n_blocks and not out:
        raise NotDMCPError("empty fixed-set collection")
    return out


__all__ = [
    "IndexSet", "FixedProblem", "ConflictGraph", "fix", "is_dcp_with_fixed", "is_dmcp",
    "block_verdicts", "build_conflict_graph", "find_minimal_sets",
    "maximal_independent_sets", "greedy_independent_set", "dcp_with_fixed_by_blocks",
    "verify_fixed_sets",
]
