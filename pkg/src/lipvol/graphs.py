"""Graphs, deterministic constructors, G(n, p) sampling and connectivity.

Vertices are always ``0..n-1``.  Edges are stored as ``(u, v)`` with ``u < v``.
Loops only appear on homomorphism targets such as :func:`make_circular_target`.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

from lipvol.rng import make_rng

__all__ = [
    "Graph",
    "ComponentDecomposition",
    "components",
    "gen_gnp",
    "make_path",
    "make_cycle",
    "make_complete",
    "make_complete_bipartite",
    "make_hypercube",
    "make_circular_target",
    "giant_fraction_fixed_point",
    "giant_component",
    "read_edge_list",
    "write_edge_list",
    "format_edge_list",
    "parse_edge_list",
]

MAX_HYPERCUBE_DIM = 20


def _norm_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)
    loops: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"vertex count must be nonnegative, got {self.n}")
        edges = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-pair ({u}, {v}) must be given as a loop")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")
            edges.add(_norm_edge(u, v))
        loops = set()
        for u in self.loops:
            u = int(u)
            if not 0 <= u < self.n:
                raise ValueError(f"loop at {u} out of range for n={self.n}")
            loops.add(u)
        object.__setattr__(self, "edges", frozenset(edges))
        object.__setattr__(self, "loops", frozenset(loops))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], loops: Iterable[int] = ()) -> "Graph":
        return cls(n, frozenset(edges), frozenset(loops))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def adj(self) -> tuple[tuple[int, ...], ...]:
        """Sorted non-loop neighbour lists."""
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return tuple(tuple(sorted(a)) for a in nbrs)

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        if u == v:
            return u in self.loops
        return _norm_edge(u, v) in self.edges

    def subgraph(self, vertices: Iterable[int]) -> tuple["Graph", list[int]]:
        """Induced subgraph relabelled to ``0..k-1`` in increasing original order.

        Returns the subgraph and the list mapping new labels to old ones.
        """
        keep = sorted(set(vertices))
        index = {v: i for i, v in enumerate(keep)}
        edges = [(index[u], index[v]) for u, v in self.edges if u in index and v in index]
        loops = [index[u] for u in self.loops if u in index]
        return Graph.from_edges(len(keep), edges, loops), keep

    def is_bipartite(self) -> bool:
        if self.loops:
            return False
        colour = [-1] * self.n
        for s in range(self.n):
            if colour[s] >= 0:
                continue
            colour[s] = 0
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for w in self.adj[u]:
                    if colour[w] < 0:
                        colour[w] = 1 - colour[u]
                        queue.append(w)
                    elif colour[w] == colour[u]:
                        return False
        return True


@dataclass(frozen=True)
class ComponentDecomposition:
    component_id: tuple[int, ...]
    roots: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.roots)

    def members(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in self.roots]
        for v, c in enumerate(self.component_id):
            out[c].append(v)
        return out


def components(g: Graph) -> ComponentDecomposition:
    """Connected components by BFS; components are numbered by their minimum vertex,
    which is also the root."""
    comp = [-1] * g.n
    roots = []
    for s in range(g.n):
        if comp[s] >= 0:
            continue
        c = len(roots)
        roots.append(s)
        comp[s] = c
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in g.adj[u]:
                if comp[w] < 0:
                    comp[w] = c
                    queue.append(w)
    return ComponentDecomposition(tuple(comp), tuple(roots))


def giant_component(g: Graph) -> tuple[Graph, list[int]]:
    """Largest component (ties: smallest root) as a relabelled graph."""
    dec = components(g)
    if g.n == 0:
        return g, []
    groups = dec.members()
    best = max(range(dec.k), key=lambda c: (len(groups[c]), -dec.roots[c]))
    return g.subgraph(groups[best])


def bfs_order(g: Graph, root: int, restrict: set[int] | None = None) -> list[int]:
    """BFS from ``root`` with ties broken by vertex index."""
    order = [root]
    seen = {root}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w in g.adj[u]:
            if w not in seen and (restrict is None or w in restrict):
                seen.add(w)
                order.append(w)
                queue.append(w)
    return order


def mcs_order(g: Graph, root: int) -> list[int]:
    """Maximum-cardinality search from ``root`` over its component.

    Each step picks the unvisited vertex with the most visited neighbours (ties by
    index).  Like BFS, every vertex after the root has a visited neighbour.
    """
    comp = set(bfs_order(g, root))
    count = dict.fromkeys(comp, 0)
    # buckets keyed by count; lazy deletion
    buckets: list[set[int]] = [set(comp)]
    visited = set()
    order = []
    current = root
    best = 0
    while True:
        order.append(current)
        visited.add(current)
        buckets[count[current]].discard(current)
        for w in g.adj[current]:
            if w in visited:
                continue
            buckets[count[w]].discard(w)
            count[w] += 1
            if count[w] == len(buckets):
                buckets.append(set())
            buckets[count[w]].add(w)
            best = max(best, count[w])
        if len(order) == len(comp):
            return order
        while best > 0 and not buckets[best]:
            best -= 1
        current = min(buckets[best])


def gen_gnp(n: int, d: float, seed: int | np.random.Generator, *, p: float | None = None) -> Graph:
    """Sample G(n, d/n).

    Pairs ``(u, v)``, ``u < v``, are indexed colexicographically (``v(v-1)/2 + u``)
    and visited by geometric skips, so the cost is O(n + |E|).  ``p`` overrides
    ``d/n`` (e.g. ``p=1.0`` for a complete graph) and skips the ``d < n`` check.
    """
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    if p is None:
        if d < 0 or d >= n:
            raise ValueError(f"need 0 <= d < n, got d={d}, n={n}")
        p = d / n
    elif not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must lie in [0, 1], got {p}")
    rng = make_rng(seed)
    total = n * (n - 1) // 2
    if p == 0.0 or total == 0:
        return Graph(n)
    if p == 1.0:
        idx = np.arange(total, dtype=np.int64)
    else:
        chunks = []
        pos = -1
        expected = p * total
        batch = int(expected + 6.0 * math.sqrt(expected) + 16)
        while True:
            # clip: for tiny p numpy returns int64 max, and the cumsum would wrap
            steps = np.minimum(rng.geometric(p, size=batch), total + 1).astype(np.int64)
            cand = pos + np.cumsum(steps)
            chunks.append(cand[cand < total])
            if cand[-1] >= total:
                break
            pos = int(cand[-1])
            batch = max(16, batch // 4)
        idx = np.concatenate(chunks)
    v = np.floor((1.0 + np.sqrt(1.0 + 8.0 * idx.astype(np.float64))) / 2.0).astype(np.int64)
    # float rounding near perfect squares: fix up so v(v-1)/2 <= idx < v(v+1)/2
    v -= (v * (v - 1) // 2) > idx
    v += (v * (v + 1) // 2) <= idx
    u = idx - v * (v - 1) // 2
    return Graph(n, frozenset(zip(u.tolist(), v.tolist())))


def make_path(n: int) -> Graph:
    if n < 1:
        raise ValueError("path needs at least one vertex")
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def make_cycle(n: int) -> Graph:
    if n < 3:
        raise ValueError("a simple cycle needs at least 3 vertices")
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def make_complete(n: int) -> Graph:
    if n < 1:
        raise ValueError("complete graph needs at least one vertex")
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def make_complete_bipartite(a: int, b: int) -> Graph:
    """K_{a,b} with left part ``0..a-1`` and right part ``a..a+b-1``."""
    if a < 1 or b < 1:
        raise ValueError("both parts of K_{a,b} need at least one vertex")
    return Graph.from_edges(a + b, [(i, a + j) for i in range(a) for j in range(b)])


def make_hypercube(d: int) -> Graph:
    """Q_d; vertex index is the integer whose binary expansion is the coordinate vector."""
    if d < 1:
        raise ValueError("hypercube dimension must be >= 1")
    if d > MAX_HYPERCUBE_DIM:
        raise ValueError(f"hypercube dimension {d} exceeds the memory guard {MAX_HYPERCUBE_DIM}")
    n = 1 << d
    return Graph.from_edges(n, [(u, u | (1 << i)) for u in range(n) for i in range(d) if not u >> i & 1])


def make_circular_target(M: int, h: int) -> Graph:
    """T_{M,h}: Z/MZ, a loop at every vertex, u ~ v iff cyclic distance is in [1, h]."""
    if h < 1 or M < 1:
        raise ValueError("M and h must be positive")
    if M <= 2 * h:
        raise ValueError(
            f"T_(M,h) needs M > 2h for homomorphisms to lift to Lipschitz functions; got M={M}, h={h}"
        )
    edges = [(u, (u + k) % M) for u in range(M) for k in range(1, h + 1)]
    return Graph.from_edges(M, edges, range(M))


def giant_fraction_fixed_point(d: float, tol: float = 1e-12) -> float:
    """Smallest root of rho = exp(-d (1 - rho)) on [0, 1]; this is the limiting
    fraction of vertices outside the giant component of G(n, d/n)."""
    if d <= 0:
        raise ValueError("d must be positive")
    if d <= 1.0:
        return 1.0

    def f(r: float) -> float:
        return r - math.exp(-d * (1.0 - r))

    # f(0) < 0; f changes sign again just below the trivial root at 1.
    # f'(1) = 1 - d < 0, so f > 0 on (rho_d, 1).  Bracket on [0, 1 - eps].
    lo, hi = 0.0, 1.0 - 1.0 / d
    while f(hi) <= 0:
        hi = (hi + 1.0) / 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def format_edge_list(g: Graph) -> str:
    lines = [f"{g.n} {g.m} {len(g.loops)}"]
    lines += [f"{u} {v}" for u, v in g.sorted_edges()]
    lines += [str(u) for u in sorted(g.loops)]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Graph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise ValueError("empty edge-list file")
    header = rows[0]
    if len(header) == 2:
        header = header + ["0"]
    n, m, nl = (int(t) for t in header)
    if len(rows) != 1 + m + nl:
        raise ValueError(f"header announces {m} edges and {nl} loops but file has {len(rows) - 1} entries")
    edges = [(int(r[0]), int(r[1])) for r in rows[1 : 1 + m]]
    loops = [int(r[0]) for r in rows[1 + m :]]
    g = Graph.from_edges(n, edges, loops)
    if g.m != m:
        raise ValueError("duplicate edges in edge-list file")
    return g


def read_edge_list(path: str | Path) -> Graph:
    return parse_edge_list(Path(path).read_text())


def write_edge_list(g: Graph, path: str | Path) -> None:
    Path(path).write_text(format_edge_list(g))
