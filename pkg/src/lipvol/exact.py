"""Exact counting: rooted h-Lipschitz functions, Ehrhart leading coefficients,
graph homomorphisms into circular targets, and the K_{d,d} volume.

Both counters are frontier dynamic programs.  Vertices are added in BFS order;
the state is the tuple of values on the *frontier* (added vertices that still
have an unadded neighbour), and a vertex leaves the frontier as soon as its
last neighbour has been added.  For Lipschitz counts the state is additionally
taken modulo a global shift, because the number of ways to extend a partial
assignment only depends on value differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from lipvol.graphs import (
    Graph,
    bfs_order,
    components,
    make_circular_target,
    make_complete_bipartite,
    make_hypercube,
)

DEFAULT_BUDGET = 10**9


class ResourceBudgetExceeded(RuntimeError):
    """Raised when a counting routine would expand more DP nodes than allowed."""

    def __init__(self, budget: int, what: str = "count"):
        super().__init__(f"{what}: work budget of {budget} node expansions exceeded")
        self.budget = budget


class _Budget:
    def __init__(self, limit: int, what: str):
        self.limit = limit
        self.used = 0
        self.what = what

    def spend(self, k: int) -> None:
        self.used += k
        if self.used > self.limit:
            raise ResourceBudgetExceeded(self.limit, self.what)


@dataclass(frozen=True)
class EhrhartResult:
    counts: tuple[int, ...]
    D: int
    leading: Fraction
    c: float
    roots: tuple[int, ...] = field(default=())

    @property
    def volume(self) -> Fraction:
        return self.leading


@dataclass(frozen=True)
class HomCount:
    count: int
    target_M: int


def _elimination_schedule(g: Graph, order: list[int]):
    """For each step: assigned neighbours of the new vertex, and vertices whose
    last neighbour is added at this step (they leave the frontier)."""
    pos = {v: i for i, v in enumerate(order)}
    last = {v: max([pos[v]] + [pos[w] for w in g.adj[v]]) for v in order}
    steps = []
    for i, v in enumerate(order):
        back = [w for w in g.adj[v] if pos[w] < i]
        leaving = [w for w in order[: i + 1] if last[w] == i]
        steps.append((v, back, leaving))
    return steps


def _count_component(g: Graph, root: int, h: int, budget: _Budget) -> int:
    order = bfs_order(g, root)
    if len(order) == 1:
        return 1
    frontier: list[int] = []
    states: dict[tuple[int, ...], int] = {}
    for i, (v, back, leaving) in enumerate(_elimination_schedule(g, order)):
        if i == 0:
            frontier = [v]
            states = {(0,): 1}
        else:
            slots = [frontier.index(w) for w in back]
            grown: dict[tuple[int, ...], int] = {}
            if v in leaving:
                # v's value never matters again: weight by its window length
                for key, cnt in states.items():
                    vals = [key[j] for j in slots]
                    width = min(vals) - max(vals) + 2 * h + 1
                    if width > 0:
                        budget.spend(1)
                        grown[key + (0,)] = cnt * width
            else:
                for key, cnt in states.items():
                    vals = [key[j] for j in slots]
                    lo, hi = max(vals) - h, min(vals) + h
                    if lo > hi:
                        continue
                    budget.spend(hi - lo + 1)
                    for x in range(lo, hi + 1):
                        grown[key + (x,)] = cnt
            frontier = frontier + [v]
            states = grown
        if leaving:
            gone = set(leaving)
            keep = [j for j, w in enumerate(frontier) if w not in gone]
            frontier = [frontier[j] for j in keep]
            merged: dict[tuple[int, ...], int] = {}
            for key, cnt in states.items():
                if keep:
                    base = key[keep[0]]
                    nk = tuple(key[j] - base for j in keep)
                else:
                    nk = ()
                merged[nk] = merged.get(nk, 0) + cnt
            states = merged
    return sum(states.values())


def count_lipschitz(
    g: Graph,
    h: int,
    *,
    roots: tuple[int, ...] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> int:
    """Number of integer h-Lipschitz functions on ``g`` that vanish at one root per
    component.  ``roots`` overrides the default (minimum vertex of each component);
    the count does not depend on the choice, only the elimination order does."""
    if g.loops:
        raise ValueError("Lipschitz counting needs a loop-free graph")
    if h < 0:
        raise ValueError("h must be nonnegative")
    dec = components(g)
    if roots is None:
        roots = dec.roots
    elif sorted(dec.component_id[r] for r in roots) != list(range(dec.k)):
        raise ValueError("roots must contain exactly one vertex per component")
    tracker = _Budget(budget, "count_lipschitz")
    total = 1
    for r in roots:
        total *= _count_component(g, r, h, tracker)
    return total


def finite_difference(values: list[int], order: int) -> list[int]:
    out = list(values)
    for _ in range(order):
        out = [b - a for a, b in zip(out, out[1:])]
    return out


def ehrhart_c(
    g: Graph,
    *,
    roots: tuple[int, ...] | None = None,
    budget: int = DEFAULT_BUDGET,
    extra: int = 0,
) -> EhrhartResult:
    """Leading Ehrhart coefficient of N_G(h) and c(G) = leading^(1/D).

    N_G is sampled at h = 0..D (+ ``extra`` further points, kept in ``counts``);
    the leading coefficient is the D-th forward difference at 0 over D!.  For
    D = 0 (edgeless graphs) ``c`` is reported as 1.0.
    """
    dec = components(g)
    D = g.n - dec.k
    counts = tuple(count_lipschitz(g, h, roots=roots, budget=budget) for h in range(D + 1 + extra))
    delta = finite_difference(list(counts[: D + 1]), D)[0]
    leading = Fraction(delta, math.factorial(D))
    c = math.exp(math.log(leading) / D) if D > 0 else 1.0
    return EhrhartResult(counts, D, leading, c, tuple(roots) if roots is not None else dec.roots)


def _hom_component(g: Graph, root: int, target: Graph, budget: _Budget) -> int:
    order = bfs_order(g, root)
    tnbrs = [frozenset(target.adj[t]) | ({t} if t in target.loops else set()) for t in range(target.n)]
    frontier: list[int] = []
    states: dict[tuple[int, ...], int] = {(): 1}
    for v, back, leaving in _elimination_schedule(g, order):
        slots = [frontier.index(w) for w in back]
        grown: dict[tuple[int, ...], int] = {}
        for key, cnt in states.items():
            if slots:
                cand = set(tnbrs[key[slots[0]]])
                for j in slots[1:]:
                    cand &= tnbrs[key[j]]
            else:
                cand = range(target.n)
            budget.spend(len(cand) or 1)
            if v in leaving:
                if cand:
                    grown[key + (0,)] = cnt * len(cand)
                continue
            for t in cand:
                grown[key + (t,)] = cnt
        frontier = frontier + [v]
        states = grown
        if leaving:
            gone = set(leaving)
            keep = [j for j, w in enumerate(frontier) if w not in gone]
            frontier = [frontier[j] for j in keep]
            merged: dict[tuple[int, ...], int] = {}
            for key, cnt in states.items():
                nk = tuple(key[j] for j in keep)
                merged[nk] = merged.get(nk, 0) + cnt
            states = merged
    return sum(states.values())


def count_hom(g: Graph, target: Graph, *, budget: int = DEFAULT_BUDGET) -> HomCount:
    """Number of maps V(g) -> V(target) sending edges to edges (loops allowed on
    the target, so adjacent vertices may share an image exactly when it is looped)."""
    if g.loops:
        raise ValueError("source graph must be loop-free")
    tracker = _Budget(budget, "count_hom")
    total = 1
    for r in components(g).roots:
        total *= _hom_component(g, r, target, tracker)
    return HomCount(total, target.n)


def _gf2_rank(vectors: list[int]) -> int:
    basis: dict[int, int] = {}
    for vec in vectors:
        while vec:
            top = vec.bit_length() - 1
            if top not in basis:
                basis[top] = vec
                break
            vec ^= basis[top]
    return len(basis)


def four_cycles_generate_cycle_space(g: Graph) -> bool:
    """True iff the 4-cycles of ``g`` span its cycle space over GF(2)."""
    index = {e: i for i, e in enumerate(g.sorted_edges())}
    k = components(g).k
    dim = g.m - g.n + k
    if dim == 0:
        return True
    vecs = []
    for a, c in combinations(range(g.n), 2):
        common = sorted(set(g.adj[a]) & set(g.adj[c]))
        for b, dd in combinations(common, 2):
            mask = 0
            for u, w in ((a, b), (b, c), (c, dd), (dd, a)):
                mask |= 1 << index[(min(u, w), max(u, w))]
            vecs.append(mask)
    return _gf2_rank(vecs) == dim


def lifting_check(g: Graph, h: int, L: int) -> dict:
    """Compare Hom(g, T_{Lh,h}) with Lh * N_g(h) for a connected graph whose cycle
    space is generated by 4-cycles."""
    if L < 5:
        raise ValueError("lifting needs L >= 5 so that 4h < M = Lh")
    if h < 1:
        raise ValueError("h must be positive")
    if components(g).k != 1:
        raise ValueError("lifting check needs a connected graph (one root)")
    if not four_cycles_generate_cycle_space(g):
        raise ValueError("cycle space of the graph is not generated by 4-cycles")
    M = L * h
    hom = count_hom(g, make_circular_target(M, h)).count
    mn = M * count_lipschitz(g, h)
    return {"hom": hom, "M_times_N": mn, "M": M, "pass": hom == mn}


def galvin_tetali_check(d: int, h: int, L: int = 5) -> dict:
    """Hom(Q_d, T) <= Hom(K_{d,d}, T)^(2^d / 2d), compared as integer powers."""
    if d < 1:
        raise ValueError("d must be positive")
    target = make_circular_target(L * h, h)
    lhs = count_hom(make_hypercube(d), target).count
    rhs = count_hom(make_complete_bipartite(d, d), target).count
    N = 1 << d
    ok = lhs ** (2 * d) <= rhs ** N
    return {
        "lhs": lhs,
        "rhs": rhs,
        "log_lhs": math.log(lhs),
        "rhs_log": N / (2 * d) * math.log(rhs),
        "pass": ok,
    }


def kdd_volume_exact(d: int) -> Fraction:
    """Rooted Lipschitz volume of K_{d,d}: 2^(2d-1) d (d-1) B(d-1, d+1)."""
    if d < 2:
        raise ValueError("closed form needs d >= 2")
    beta = Fraction(math.factorial(d - 2) * math.factorial(d), math.factorial(2 * d - 1))
    return 2 ** (2 * d - 1) * d * (d - 1) * beta


def _log_fraction(x: Fraction) -> float:
    return math.log(x.numerator) - math.log(x.denominator)


def hypercube_log_c_upper(d: int, L: int = 5) -> float:
    """log of the Galvin-Tetali upper bound on c(Q_d)."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if L < 5:
        raise ValueError("L must be >= 5")
    N = 1 << d
    log_v = _log_fraction(kdd_volume_exact(d))
    return (N / (2 * d) * (math.log(L) + log_v) - math.log(L)) / (N - 1)


def hypercube_upper_holds(leading: Fraction, d: int, L: int = 5) -> bool:
    """Exact test of c(Q_d)^(N-1) <= L^-1 (L V_d)^(N/2d) given the leading
    coefficient c(Q_d)^(N-1); both sides are raised to the power 2d."""
    N = 1 << d
    return leading ** (2 * d) * L ** (2 * d) <= (L * kdd_volume_exact(d)) ** N


def hypercube_c_upper(d: int, L: int = 5, *, verify: bool = True) -> float:
    """Upper bound ((1/L) (L V_d)^(N/2d))^(1/(N-1)) on c(Q_d), N = 2^d.

    For d <= 3 the exact c(Q_d) is also computed and checked against the bound.
    """
    bound = math.exp(hypercube_log_c_upper(d, L))
    if verify and d <= 3:
        exact = ehrhart_c(make_hypercube(d))
        if not hypercube_upper_holds(exact.leading, d, L):
            raise AssertionError(f"c(Q_{d}) = {exact.c} exceeds the bound {bound}")
    return bound
