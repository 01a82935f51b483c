"""Seeded constructions of the graph families used in experiments."""

from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .graph_core import Graph, bfs_distances

log = logging.getLogger(__name__)

FAMILIES = ("cycle", "complete_bipartite", "c5_blowup", "random_regular",
            "projective_incidence", "high_girth_regular")


@dataclass(frozen=True)
class GenSpec:
    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def build(self) -> Graph:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        p = dict(self.params)
        if self.family == "cycle":
            return gen_cycle(p["n"])
        if self.family == "complete_bipartite":
            return gen_complete_bipartite(p["a"], p["b"])
        if self.family == "c5_blowup":
            return gen_c5_blowup(p["t"])
        if self.family == "random_regular":
            return gen_random_regular(p["n"], p["d"], self.seed)
        if self.family == "projective_incidence":
            return gen_projective_incidence(p["q"])
        return gen_high_girth_regular(p["n"], p["d"], p["g"], self.seed).graph


def gen_cycle(n: int) -> Graph:
    if n < 3:
        raise ValueError("a cycle needs at least 3 vertices")
    return Graph.from_edges(n, ((i, (i + 1) % n) for i in range(n)))


def gen_complete_bipartite(a: int, b: int) -> Graph:
    if a < 1 or b < 1:
        raise ValueError("both sides of K_{a,b} must be nonempty")
    return Graph.from_edges(a + b, ((i, a + j) for i in range(a) for j in range(b)))


def gen_c5_blowup(t: int) -> Graph:
    """C_5 with every vertex replaced by an independent set of size ``t``.

    Vertex ``(i, x)`` of part ``i`` gets id ``i * t + x``.
    """
    if t < 1:
        raise ValueError("blow-up size must be at least 1")
    edges = []
    for i in range(5):
        j = (i + 1) % 5
        edges += [(i * t + x, j * t + y) for x in range(t) for y in range(t)]
    return Graph.from_edges(5 * t, edges)


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def gen_random_regular(n: int, d: int, seed, restart_budget: int = 10_000) -> Graph:
    """Uniform-ish random simple d-regular graph.

    Stubs are paired at random; pairs that would create a loop or a repeated
    edge go back into the pool and only that residue is re-paired.  If the
    residue can no longer be paired simply, the whole attempt restarts.
    """
    if (n * d) % 2:
        raise ValueError(f"n*d must be even (n={n}, d={d})")
    if not 0 <= d < n:
        raise ValueError(f"need 0 <= d < n (n={n}, d={d})")
    rng = _as_generator(seed)
    if d == 0:
        return Graph.from_edges(n, [])
    for _ in range(restart_budget):
        edges = _try_pairing(n, d, rng)
        if edges is not None:
            return Graph.from_edges(n, edges)
    raise RuntimeError(f"random regular generation failed after {restart_budget} restarts")


def _try_pairing(n: int, d: int, rng: np.random.Generator):
    edges: set[tuple[int, int]] = set()
    stubs = np.repeat(np.arange(n), d)
    rounds = 0
    while len(stubs):
        rounds += 1
        if rounds > 200:
            # the residue keeps failing; start over
            return None
        rng.shuffle(stubs)
        leftover = []
        for a, b in zip(stubs[0::2].tolist(), stubs[1::2].tolist()):
            key = (a, b) if a < b else (b, a)
            if a != b and key not in edges:
                edges.add(key)
            else:
                leftover += [a, b]
        if not leftover:
            break
        if not _pairable(edges, leftover):
            return None
        stubs = np.asarray(leftover)
    return edges


def _pairable(edges, leftover) -> bool:
    nodes = sorted(set(leftover))
    for a, b in itertools.combinations(nodes, 2):
        if (a, b) not in edges:
            return True
    return False


_IRREDUCIBLE = {4: (2, 0b111), 8: (2, 0b1011), 9: (3, (1, 0, 1)), 16: (2, 0b10011)}
PRIME_POWERS = (2, 3, 4, 5, 7, 8, 9, 11, 13, 16)


def field_tables(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Addition and multiplication tables of GF(q) for tabulated prime powers.

    Elements are integers ``0..q-1``; for q = p^k they encode polynomial
    coefficients in base p.
    """
    if q not in PRIME_POWERS:
        raise ValueError(f"q={q} is not a supported prime power {PRIME_POWERS}")
    if q in (2, 3, 5, 7, 11, 13):
        r = np.arange(q)
        return (r[:, None] + r[None, :]) % q, (r[:, None] * r[None, :]) % q
    p, mod = _IRREDUCIBLE[q]
    k = round(np.log(q) / np.log(p))
    if p == 2:
        add = np.bitwise_xor.outer(np.arange(q), np.arange(q))
        mul = np.zeros((q, q), dtype=np.int64)
        for a in range(q):
            for b in range(q):
                x, y, acc = a, b, 0
                while y:
                    if y & 1:
                        acc ^= x
                    y >>= 1
                    x <<= 1
                    if x & q:
                        x ^= mod
                mul[a, b] = acc
        return add, mul
    # odd characteristic (q = 9): reduce by x^2 = -(c1 x + c0) with mod=(1, c1, c0)
    def digits(a):
        return [(a // p ** i) % p for i in range(k)]

    def encode(ds):
        return sum(d * p ** i for i, d in enumerate(ds))

    add = np.array([[encode([(x + y) % p for x, y in zip(digits(a), digits(b))])
                     for b in range(q)] for a in range(q)])
    _, c1, c0 = mod
    mul = np.zeros((q, q), dtype=np.int64)
    for a in range(q):
        for b in range(q):
            a0, a1 = digits(a)
            b0, b1 = digits(b)
            r0 = a0 * b0
            r1 = a0 * b1 + a1 * b0
            r2 = a1 * b1
            # x^2 = -c1 x - c0
            r1 -= c1 * r2
            r0 -= c0 * r2
            mul[a, b] = encode([r0 % p, r1 % p])
    return add, mul


def _projective_points(q: int) -> list[tuple[int, int, int]]:
    # normalized: first nonzero coordinate equals 1
    pts = [(1, y, z) for y in range(q) for z in range(q)]
    pts += [(0, 1, z) for z in range(q)]
    pts.append((0, 0, 1))
    return pts


def gen_projective_incidence(q: int) -> Graph:
    """Point-line incidence graph of PG(2, q).

    Points get ids ``0..N-1`` and lines ``N..2N-1`` with ``N = q^2 + q + 1``.
    """
    add, mul = field_tables(q)
    pts = _projective_points(q)
    N = len(pts)
    edges = []
    for j, (a, b, c) in enumerate(pts):
        for i, (x, y, z) in enumerate(pts):
            if add[add[mul[a, x], mul[b, y]], mul[c, z]] == 0:
                edges.append((i, N + j))
    return Graph.from_edges(2 * N, edges)


def girth(G: Graph) -> float:
    """Length of a shortest cycle (``inf`` for forests), by BFS from every vertex."""
    best = float("inf")
    for s in range(G.n):
        dist = {s: 0}
        parent = {s: -1}
        queue = [s]
        head = 0
        while head < len(queue):
            u = queue[head]
            head += 1
            if 2 * dist[u] + 1 >= best:
                break
            for w in G.adjacency[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    parent[w] = u
                    queue.append(w)
                elif parent[u] != w:
                    best = min(best, dist[u] + dist[w] + 1)
    return best


def _shortest_cycle_through(adj: list[set[int]], u: int, v: int, limit: int):
    """Shortest cycle containing edge uv of length < limit, as a vertex path."""
    # BFS from u to v avoiding the edge uv itself
    parent = {u: None}
    frontier = [u]
    depth = 0
    while frontier and depth + 1 < limit - 1:
        depth += 1
        nxt = []
        for x in frontier:
            for w in sorted(adj[x]):
                if x == u and w == v:
                    continue
                if w in parent:
                    continue
                parent[w] = x
                if w == v:
                    path = [v]
                    while parent[path[-1]] is not None:
                        path.append(parent[path[-1]])
                    return path
                nxt.append(w)
        frontier = nxt
    return None


@dataclass
class HighGirthResult:
    graph: Graph
    deleted: int
    base: Graph


def gen_high_girth_regular(n: int, d: int, g: int, seed) -> HighGirthResult:
    """Random d-regular graph with short cycles destroyed by edge deletion.

    Repeatedly finds a shortest cycle of length < g (ties broken by the
    smallest edge id on it) and deletes that smallest-id edge.
    """
    if g < 4:
        raise ValueError("target girth must be at least 4")
    if n <= d ** (g - 1):
        warnings.warn(f"n={n} is small relative to d^(g-1); expect many deletions",
                      RuntimeWarning, stacklevel=2)
    base = gen_random_regular(n, d, seed)
    adj = [set(a) for a in base.adjacency]
    deleted = 0
    while True:
        best = None
        for eid, (u, v) in enumerate(base.edges):
            if v not in adj[u]:
                continue
            cyc = _shortest_cycle_through(adj, u, v, g)
            if cyc is None:
                continue
            length = len(cyc)
            ids = [base.edge_id(cyc[i], cyc[(i + 1) % length]) for i in range(length)]
            key = (length, min(ids))
            if best is None or key < best:
                best = key
            if length == 3:
                break
        if best is None:
            break
        x, y = base.edges[best[1]]
        adj[x].discard(y)
        adj[y].discard(x)
        deleted += 1
    log.debug("high-girth generator deleted %d edges", deleted)
    G = Graph.from_edges(n, ((u, w) for u in range(n) for w in adj[u] if u < w))
    return HighGirthResult(G, deleted, base)
