"""Graphs, distance layers and line-graph powers.

A :class:`Graph` is simple and undirected with sorted adjacency lists.  Edges
get canonical ids: sorted ``(u, v)`` pairs with ``u < v`` in lexicographic
order.  :func:`conflict_graph` builds ``L(G)^t``, whose proper colorings are
exactly the distance-``t`` edge colorings of the base graph (``t = 2`` gives
strong edge colorings).
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp


class GraphFormatError(ValueError):
    """Raised for malformed graph files; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    adjacency: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, int], ...]
    _edge_index: dict = field(default=None, repr=False, compare=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        """Build a graph on ``range(n)``; duplicates collapse, loops raise."""
        pairs = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) outside range(0, {n})")
            pairs.add((u, v) if u < v else (v, u))
        canon = tuple(sorted(pairs))
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in canon:
            adj[u].append(v)
            adj[v].append(u)
        index = {e: i for i, e in enumerate(canon)}
        return cls(n, tuple(tuple(sorted(a)) for a in adj), canon, index)

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def degrees(self) -> list[int]:
        return [len(a) for a in self.adjacency]

    @property
    def max_degree(self) -> int:
        return max((len(a) for a in self.adjacency), default=0)

    def edge_id(self, u: int, v: int) -> int:
        key = (u, v) if u < v else (v, u)
        return self._edge_index[key]

    def has_edge(self, u: int, v: int) -> bool:
        key = (u, v) if u < v else (v, u)
        return key in self._edge_index

    def is_regular(self) -> bool:
        return len(set(self.degrees())) <= 1

    def incident_edges(self, v: int) -> list[int]:
        return [self.edge_id(v, w) for w in self.adjacency[v]]

    def to_csr(self) -> sp.csr_matrix:
        """Adjacency matrix as a 0/1 CSR matrix."""
        if self.m == 0:
            return sp.csr_matrix((self.n, self.n), dtype=np.int64)
        e = np.asarray(self.edges, dtype=np.int64)
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        data = np.ones(len(rows), dtype=np.int64)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def edge_list_text(self) -> str:
        """Canonical edge-list serialization (one ``u v`` per line)."""
        header = f"# n={self.n} m={self.m}\n"
        return header + "".join(f"{u} {v}\n" for u, v in self.edges)


def _parse_int(token: str, line: int) -> int:
    try:
        value = int(token)
    except ValueError:
        raise GraphFormatError(f"expected a nonnegative integer, got {token!r}", line) from None
    if value < 0:
        raise GraphFormatError(f"negative vertex id {value}", line)
    return value


def parse_edge_list(text: str) -> Graph:
    raw: list[tuple[int, int]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise GraphFormatError(f"expected 'u v', got {line!r}", lineno)
        u, v = (_parse_int(tok, lineno) for tok in tokens)
        if u == v:
            raise GraphFormatError(f"self-loop at vertex {u}", lineno)
        raw.append((u, v))
    # compact ids to [0, n) preserving order of the original labels
    labels = sorted({x for e in raw for x in e})
    relabel = {x: i for i, x in enumerate(labels)}
    return Graph.from_edges(len(labels), ((relabel[u], relabel[v]) for u, v in raw))


def parse_dimacs(text: str) -> Graph:
    n = None
    raw: list[tuple[int, int]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens or tokens[0] == "c":
            continue
        if tokens[0] == "p":
            if len(tokens) != 4:
                raise GraphFormatError("expected 'p edge <n> <m>'", lineno)
            n = _parse_int(tokens[2], lineno)
        elif tokens[0] == "e":
            if n is None:
                raise GraphFormatError("edge line before problem line", lineno)
            if len(tokens) != 3:
                raise GraphFormatError("expected 'e <u> <v>'", lineno)
            u, v = (_parse_int(tok, lineno) for tok in tokens[1:])
            if not (1 <= u <= n and 1 <= v <= n):
                raise GraphFormatError(f"vertex out of range 1..{n}", lineno)
            if u == v:
                raise GraphFormatError(f"self-loop at vertex {u}", lineno)
            raw.append((u - 1, v - 1))
        else:
            raise GraphFormatError(f"unknown line type {tokens[0]!r}", lineno)
    if n is None:
        raise GraphFormatError("missing problem line")
    return Graph.from_edges(n, raw)


def load_graph(path: str | Path, format: str | None = None) -> Graph:
    """Read an edge-list or DIMACS file.

    ``format`` is ``"edge-list"`` or ``"dimacs"``; when omitted it is sniffed
    from the first non-comment line.
    """
    text = Path(path).read_text()
    if format is None:
        first = next((ln.split() for ln in text.splitlines()
                      if ln.strip() and not ln.lstrip().startswith(("#", "c "))), [])
        format = "dimacs" if first[:1] == ["p"] else "edge-list"
    if format == "dimacs":
        return parse_dimacs(text)
    if format == "edge-list":
        return parse_edge_list(text)
    raise ValueError(f"unknown graph format {format!r}")


def bfs_distances(G: Graph, sources: Iterable[int], limit: int | None = None) -> dict[int, int]:
    """Multi-source BFS; vertices farther than ``limit`` are omitted."""
    dist = {}
    queue = deque()
    for s in sources:
        if s not in dist:
            dist[s] = 0
            queue.append(s)
    while queue:
        u = queue.popleft()
        du = dist[u]
        if limit is not None and du >= limit:
            continue
        for w in G.adjacency[u]:
            if w not in dist:
                dist[w] = du + 1
                queue.append(w)
    return dist


def vertex_ring(G: Graph, v: int, i: int) -> set[int]:
    """Vertices at distance exactly ``i`` from ``v``."""
    if not 0 <= v < G.n:
        raise IndexError(f"vertex {v} not in graph")
    return {u for u, d in bfs_distances(G, [v], limit=i).items() if d == i}


def edge_rings(G: Graph, v: int) -> list[set[int]]:
    """All nonempty edge rings ``[E_1(v), E_2(v), ...]``.

    Edge ``xy`` lies in ``E_i(v)`` exactly when the nearer endpoint is at
    distance ``i - 1`` from ``v``.
    """
    if not 0 <= v < G.n:
        raise IndexError(f"vertex {v} not in graph")
    dist = bfs_distances(G, [v])
    rings: list[set[int]] = []
    for idx, (x, y) in enumerate(G.edges):
        if x not in dist:
            continue
        i = min(dist[x], dist[y])
        while len(rings) <= i:
            rings.append(set())
        rings[i].add(idx)
    return rings


def edge_ring(G: Graph, v: int, i: int) -> set[int]:
    """``E_i(v)``, touching only the ball of radius ``i`` around ``v``."""
    if i < 1:
        raise ValueError("edge rings are indexed from 1")
    if not 0 <= v < G.n:
        raise IndexError(f"vertex {v} not in graph")
    dist = bfs_distances(G, [v], limit=i)
    ring = set()
    for x, dx in dist.items():
        if dx != i - 1:
            continue
        for y in G.adjacency[x]:
            if dist.get(y, i) >= i - 1:
                ring.add(G.edge_id(x, y))
    return ring


def codegree(G: Graph, u: int, v: int) -> int:
    if u == v:
        raise ValueError("codegree needs two distinct vertices")
    a, b = G.adjacency[u], G.adjacency[v]
    i = j = count = 0
    while i < len(a) and j < len(b):
        if a[i] == b[j]:
            count += 1
            i += 1
            j += 1
        elif a[i] < b[j]:
            i += 1
        else:
            j += 1
    return count


@dataclass(frozen=True, eq=False)
class ConflictGraph:
    """``L(G)^t``: vertex ``e`` is the base edge with canonical id ``e``."""

    base: Graph
    t: int
    indptr: np.ndarray
    indices: np.ndarray

    @property
    def n(self) -> int:
        return self.base.m

    @property
    def vertices(self) -> range:
        return range(self.base.m)

    def neighbors(self, e: int) -> np.ndarray:
        return self.indices[self.indptr[e]:self.indptr[e + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.n else 0

    @property
    def adjacency(self) -> list[list[int]]:
        return [self.neighbors(e).tolist() for e in self.vertices]

    def neighbor_sets(self) -> list[set[int]]:
        return [set(self.neighbors(e).tolist()) for e in self.vertices]

    def to_csr(self) -> sp.csr_matrix:
        data = np.ones(len(self.indices), dtype=np.int32)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def as_graph(self) -> Graph:
        """The conflict graph as a plain :class:`Graph` on edge ids."""
        pairs = ((e, int(f)) for e in self.vertices for f in self.neighbors(e) if e < f)
        return Graph.from_edges(self.n, pairs)

    def degree_bound(self) -> int:
        """``2 d (d-1)^{t-1}``: the conflict max degree when G has max degree d."""
        d = self.base.max_degree
        return 2 * d * (d - 1) ** (self.t - 1) if d else 0


def conflict_graph(G: Graph, t: int = 2) -> ConflictGraph:
    """Build ``L(G)^t``.

    Edges ``e != e'`` conflict when some endpoint of ``e`` is within distance
    ``t - 1`` of some endpoint of ``e'``.  Computed as the sparsity pattern of
    ``B^T (I + A)^{t-1} B`` with ``B`` the vertex/edge incidence matrix, which
    is the (t-1)-step BFS from every edge's endpoints done in bulk.
    """
    if t < 2:
        raise ValueError("distance parameter t must be at least 2")
    if G.n == 0:
        raise ValueError("graph is empty")
    m = G.m
    if m == 0:
        return ConflictGraph(G, t, np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int32))
    e = np.asarray(G.edges, dtype=np.int64)
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([np.arange(m), np.arange(m)])
    inc = sp.csr_matrix((np.ones(2 * m, dtype=np.int32), (rows, cols)), shape=(G.n, m))
    reach = (G.to_csr() + sp.identity(G.n, dtype=np.int64, format="csr")).astype(bool).astype(np.int32)
    ball = inc.copy()
    for _ in range(t - 1):
        ball = (reach @ ball).astype(bool).astype(np.int32)
    conflict = (inc.T.tocsr() @ ball).tocsr()
    conflict.setdiag(0)
    conflict.eliminate_zeros()
    conflict.sort_indices()
    return ConflictGraph(G, t, conflict.indptr.astype(np.int64), conflict.indices.astype(np.int32))


@dataclass
class ColoringReport:
    valid: bool
    violations: list
    colors_used: int
    class_sizes: dict
    out_of_palette: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "violations": [[a, b, c] for (a, b), c in self.violations],
            "colors_used": self.colors_used,
            "class_sizes": {str(k): v for k, v in sorted(self.class_sizes.items())},
            "out_of_palette": self.out_of_palette,
        }


def _coloring_items(coloring) -> list[tuple[int, int]]:
    if isinstance(coloring, Mapping):
        return [(int(k), int(c)) for k, c in coloring.items() if c is not None and c >= 0]
    return [(i, int(c)) for i, c in enumerate(coloring) if c is not None and c >= 0]


def induced_matching_violations(G: Graph, coloring, t: int = 2) -> list:
    """Violations of the class-by-class definition: two same-colored edges
    with endpoints within distance ``t - 1`` in ``G``."""
    classes: dict[int, list[int]] = {}
    for e, c in _coloring_items(coloring):
        classes.setdefault(c, []).append(e)
    bad = []
    for c, members in classes.items():
        for idx, e in enumerate(members):
            near = bfs_distances(G, G.edges[e], limit=t - 1)
            for f in members[idx + 1:]:
                x, y = G.edges[f]
                if x in near or y in near:
                    bad.append(((min(e, f), max(e, f)), c))
    return sorted(bad)


def verify_coloring(H, coloring, palette: int | None = None, cross_check: bool = True) -> ColoringReport:
    """Check that ``coloring`` is proper on ``H`` (a Graph or ConflictGraph).

    ``coloring`` maps vertex -> color (dict) or is a sequence with ``-1`` /
    ``None`` for uncolored vertices.  For a conflict graph, the per-class
    induced-matching check is also run on the base graph and must agree.
    """
    items = _coloring_items(coloring)
    color = dict(items)
    violations = []
    if isinstance(H, ConflictGraph):
        nbrs = lambda v: H.neighbors(v).tolist()
    else:
        nbrs = lambda v: H.adjacency[v]
    for v, c in items:
        for u in nbrs(v):
            if u > v and color.get(u) == c:
                violations.append(((v, u), c))
    violations.sort()
    out_of_palette = []
    if palette is not None:
        out_of_palette = sorted(v for v, c in items if not 0 <= c < palette)
    if isinstance(H, ConflictGraph) and cross_check and H.base.m <= 5000:
        other = induced_matching_violations(H.base, color, H.t)
        if other != violations:
            raise AssertionError("conflict-graph and induced-matching checks disagree")
    sizes = Counter(color.values())
    return ColoringReport(
        valid=not violations,
        violations=violations,
        colors_used=len(sizes),
        class_sizes=dict(sizes),
        out_of_palette=out_of_palette,
    )


def write_coloring(path: str | Path, G: Graph, coloring) -> None:
    """Write the canonical edge table followed by ``edge_id color`` lines."""
    color = dict(_coloring_items(coloring))
    lines = ["# edges: edge_id u v"]
    lines += [f"{i} {u} {v}" for i, (u, v) in enumerate(G.edges)]
    lines.append("# coloring: edge_id color")
    lines += [f"{e} {color[e]}" for e in sorted(color)]
    Path(path).write_text("\n".join(lines) + "\n")
