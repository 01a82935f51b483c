"""Exact small-instance solvers used as ground truth.

Vertex sets are Python ints used as bitsets.  No randomness anywhere.
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field

from .graph_core import ConflictGraph, Graph, conflict_graph


@dataclass
class OracleResult:
    value: int | None
    lower: int
    upper: int
    certificate: dict[int, int] | None
    nodes: int
    millis: float
    sat: bool | None = None

    @property
    def exact(self) -> bool:
        return self.value is not None

    def to_json(self, certificate_path: str | None = None) -> str:
        return json.dumps({"value": self.value, "lower": self.lower, "upper": self.upper,
                           "sat": self.sat, "certificate_path": certificate_path,
                           "nodes": self.nodes, "millis": round(self.millis, 3)})


class _Budget(Exception):
    pass


def _bitsets(H) -> list[int]:
    if isinstance(H, ConflictGraph):
        adj = H.adjacency
    else:
        adj = H.adjacency
    masks = []
    for nb in adj:
        m = 0
        for u in nb:
            m |= 1 << u
        masks.append(m)
    return masks


def _bits(x: int):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def max_clique(adj: list[int]) -> list[int]:
    """Maximum clique by Bron-Kerbosch with pivoting."""
    best: list[int] = []

    def expand(R, P, X):
        nonlocal best
        if not P and not X:
            if len(R) > len(best):
                best = list(R)
            return
        if len(R) + bin(P).count("1") <= len(best):
            return
        pivot = max(_bits(P | X), key=lambda u: bin(P & adj[u]).count("1"))
        for v in list(_bits(P & ~adj[pivot])):
            expand(R + [v], P & adj[v], X & adj[v])
            P &= ~(1 << v)
            X |= 1 << v

    expand([], (1 << len(adj)) - 1, 0)
    return sorted(best)


def _dsatur_greedy(adj: list[int]) -> dict[int, int]:
    n = len(adj)
    color: dict[int, int] = {}
    sat = [set() for _ in range(n)]
    deg = [bin(a).count("1") for a in adj]
    for _ in range(n):
        v = max((u for u in range(n) if u not in color), key=lambda u: (len(sat[u]), deg[u], -u))
        c = next(c for c in itertools.count() if c not in sat[v])
        color[v] = c
        for u in _bits(adj[v]):
            sat[u].add(c)
    return color


def exact_chromatic_number(H, budget: int = 5_000_000) -> OracleResult:
    """Chromatic number by DSATUR branch and bound.

    Lower bound from a maximum clique, upper bound from greedy DSATUR.  New
    colors are only ever introduced as the next unused id, so the first
    vertex is fixed to color 0 and color permutations are never revisited.
    On budget exhaustion the result carries ``value=None`` and the bounds.
    """
    start = time.perf_counter()
    adj = _bitsets(H)
    n = len(adj)
    if n == 0:
        return OracleResult(0, 0, 0, {}, 0, 0.0)
    clique = max_clique(adj)
    lower = len(clique)
    best = _dsatur_greedy(adj)
    upper = max(best.values()) + 1
    nodes = 0
    if lower < upper:
        color = [-1] * n
        deg = [bin(a).count("1") for a in adj]
        # neighbor color counts per vertex: sat_count[v][c]
        sat_count = [[0] * upper for _ in range(n)]
        sat_size = [0] * n
        # clique vertices first, on distinct colors
        order_fixed = clique

        def assign(v, c, delta):
            for u in _bits(adj[v]):
                before = sat_count[u][c]
                sat_count[u][c] = before + delta
                if delta > 0 and before == 0:
                    sat_size[u] += 1
                elif delta < 0 and before == 1:
                    sat_size[u] -= 1

        for c, v in enumerate(order_fixed):
            color[v] = c
            assign(v, c, 1)

        def search(colored: int, used: int):
            nonlocal nodes, upper, best
            nodes += 1
            if nodes > budget:
                raise _Budget
            if colored == n:
                if used < upper:
                    upper = used
                    best = {v: color[v] for v in range(n)}
                return
            v = max((u for u in range(n) if color[u] < 0), key=lambda u: (sat_size[u], deg[u], -u))
            limit = min(used + 1, upper - 1)
            for c in range(limit):
                if sat_count[v][c]:
                    continue
                color[v] = c
                assign(v, c, 1)
                search(colored + 1, max(used, c + 1))
                assign(v, c, -1)
                color[v] = -1
                if upper <= lower:
                    return

        try:
            search(len(order_fixed), len(order_fixed))
        except _Budget:
            ms = (time.perf_counter() - start) * 1000
            return OracleResult(None, lower, upper, best, nodes, ms)
    ms = (time.perf_counter() - start) * 1000
    return OracleResult(upper, upper, upper, dict(sorted(best.items())), nodes, ms)


def exact_strong_chromatic_index(G: Graph, t: int = 2, budget: int = 5_000_000) -> OracleResult:
    """Exact distance-t chromatic index: chromatic number of ``L(G)^t``."""
    if G.m == 0:
        return OracleResult(0, 0, 0, {}, 0, 0.0)
    return exact_chromatic_number(conflict_graph(G, t), budget)


def exact_list_coloring(H, lists, budget: int = 5_000_000) -> OracleResult:
    """Decide L-colorability by backtracking with singleton propagation.

    ``lists`` is a sequence (or dict) of color collections per vertex.
    """
    start = time.perf_counter()
    adj = H.adjacency if not isinstance(H, ConflictGraph) else H.adjacency
    n = len(adj)
    domains = [set(lists[v]) for v in range(n)]
    nodes = 0
    color: dict[int, int] = {}

    def propagate(doms, v, c, trail):
        # assign v=c, remove c from neighbors; chase singleton domains
        stack = [(v, c)]
        while stack:
            x, cx = stack.pop()
            if x in color:
                if color[x] != cx:
                    return False
                continue
            color[x] = cx
            trail.append(x)
            for y in adj[x]:
                if y in color:
                    if color[y] == cx:
                        return False
                    continue
                if cx in doms[y]:
                    doms[y] = doms[y] - {cx}
                    if not doms[y]:
                        return False
                    if len(doms[y]) == 1:
                        stack.append((y, next(iter(doms[y]))))
        return True

    def solve(doms):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise _Budget
        free = [v for v in range(n) if v not in color]
        if not free:
            return True
        v = min(free, key=lambda u: (len(doms[u]), u))
        for c in sorted(doms[v]):
            trail: list[int] = []
            child = list(doms)
            if propagate(child, v, c, trail) and solve(child):
                return True
            for x in trail:
                del color[x]
        return False

    try:
        ok = True
        trail: list[int] = []
        for v in range(n):
            if not domains[v]:
                ok = False
                break
        if ok:
            for v in range(n):
                if len(domains[v]) == 1 and v not in color:
                    if not propagate(domains, v, next(iter(domains[v])), trail):
                        ok = False
                        break
        if ok:
            ok = solve(domains)
    except _Budget:
        ms = (time.perf_counter() - start) * 1000
        return OracleResult(None, 0, 0, None, nodes, ms, sat=None)
    ms = (time.perf_counter() - start) * 1000
    cert = dict(sorted(color.items())) if ok else None
    return OracleResult(None, 0, 0, cert, nodes, ms, sat=ok)


@dataclass
class BicliqueResult:
    found: bool | None
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    nodes: int = 0


def contains_biclique(G: Graph, s: int, t: int, budget: int = 10_000_000) -> BicliqueResult:
    """Search for a (not necessarily induced) K_{s,t} subgraph.

    Grows the smaller side in increasing vertex order while tracking the
    common neighborhood; ``found=None`` means the budget ran out.
    """
    small, large = sorted((s, t))
    adj = _bitsets(G)
    nodes = 0

    def grow(chosen: list[int], common: int, nxt: int):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise _Budget
        if len(chosen) == small:
            return chosen
        for v in range(nxt, G.n):
            new_common = (common & adj[v]) if chosen else adj[v]
            if bin(new_common).count("1") < large:
                continue
            got = grow(chosen + [v], new_common, v + 1)
            if got:
                return got
        return None

    try:
        left = grow([], 0, 0)
    except _Budget:
        return BicliqueResult(None, nodes=nodes)
    if left is None:
        return BicliqueResult(False, nodes=nodes)
    common = adj[left[0]]
    for v in left[1:]:
        common &= adj[v]
    right = list(_bits(common))[:large]
    if small == s:
        return BicliqueResult(True, left, right, nodes)
    return BicliqueResult(True, right, left, nodes)
