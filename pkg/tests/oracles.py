"""Brute-force reference implementations, independent of the library code paths."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
from scipy import integrate


def union_find_components(n, edges):
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    return [find(v) for v in range(n)]


def brute_lipschitz(n, edges, h):
    """Rooted h-Lipschitz count by enumerating every labelling in a box.

    One root per component (its smallest vertex) is pinned to 0; all other
    values range over [-h(n-1), h(n-1)], which contains every feasible value.
    """
    comp = union_find_components(n, edges)
    roots = {comp[v] for v in range(n)}
    free = [v for v in range(n) if v not in roots]
    span = range(-h * max(n - 1, 0), h * max(n - 1, 0) + 1)
    total = 0
    x = [0] * n
    for vals in itertools.product(span, repeat=len(free)):
        for v, a in zip(free, vals):
            x[v] = a
        if all(abs(x[u] - x[v]) <= h for u, v in edges):
            total += 1
    return total


def brute_hom(n, edges, M, h):
    """Homomorphisms into T_{M,h}: every map V -> Z/MZ with cyclic distance <= h per edge."""
    total = 0
    for f in itertools.product(range(M), repeat=n):
        ok = True
        for u, v in edges:
            dist = abs(f[u] - f[v]) % M
            if min(dist, M - dist) > h:
                ok = False
                break
        total += ok
    return total


def lagrange_leading(values):
    """Leading coefficient of the interpolating polynomial through (h, values[h])."""
    D = len(values) - 1
    s = Fraction(0)
    for k, v in enumerate(values):
        s += (-1) ** (D - k) * math.comb(D, k) * v
    return s / math.factorial(D)


def brute_violating_pairs(x):
    x = list(x)
    return sum(1 for i in range(len(x)) for j in range(i + 1, len(x)) if abs(x[i] - x[j]) > 1)


def brute_anchor(x):
    """Exhaustive O(n^2) anchor search; ties to the smaller index."""
    best = None
    for v in range(len(x)):
        out = sum(1 for xi in x if not 0.0 <= xi - x[v] <= 1.0)
        if best is None or out < best[1]:
            best = (v, out)
    return {"anchor_index": best[0], "outside_count": best[1]}


def slice_volume_k2(a, b):
    """Area of {(x, y) in [a, b]^2 : |x - y| <= 1} by quadrature."""
    val, _ = integrate.quad(lambda x: max(0.0, min(b, x + 1) - max(a, x - 1)), a, b,
                            points=[a + 1, b - 1], limit=200)
    return val


def slice_volume_path3(a, b):
    """Volume of {x in [a,b]^3 : |x0-x1| <= 1, |x1-x2| <= 1}: integrate the
    squared window length over the middle vertex."""
    def g(y):
        return max(0.0, min(b, y + 1) - max(a, y - 1)) ** 2

    val, _ = integrate.quad(g, a, b, points=[a + 1, b - 1], limit=200)
    return val


def slice_volume_k3(a, b):
    """Volume of {x in [a,b]^3 : pairwise |xi-xj| <= 1}.

    Sort the three values: 3! times the integral over x1 <= x2 <= x3 with
    x3 - x1 <= 1, where the middle value contributes the factor x3 - x1.  For
    width W = b - a >= 1 this is 6 ((W - 1)/2 + 1/6) = 3W - 2.
    """
    W = b - a
    if W < 1:
        return W**3
    return 3 * W - 2


def bisect_root(f, lo, hi, tol=1e-14):
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def random_graph_edges(n, p, rng):
    return [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]


def connected_random_graph(n, p, rng):
    while True:
        edges = random_graph_edges(n, p, rng)
        if len(set(union_find_components(n, edges))) == 1:
            return edges


def sample_connected_graphs(count, n, seed, p=0.5):
    rng = np.random.default_rng(seed)
    return [connected_random_graph(n, p, rng) for _ in range(count)]
