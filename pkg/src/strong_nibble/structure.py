"""Friend relations, the covering family X with its B^X regions, and the
structural audits that go with them (codegree conditions, KST and
Bondy-Simonovits edge bounds, second eigenvalue, expander mixing)."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .graph_core import ConflictGraph, Graph, bfs_distances, edge_ring


def default_threshold(d: float) -> float:
    """``d / ln^40 d``; infinite (nobody is a friend) once ``ln d <= 1``."""
    if d <= math.e:
        return math.inf
    return d / math.log(d) ** 40


@dataclass(frozen=True, eq=False)
class FriendModel:
    """Symmetric reflexive friend relation on V(G), lifted to edges.

    Two vertices are friends when their codegree in ``G^power`` reaches
    ``threshold``.  Two edges are friends when some endpoint of one is a
    friend of some endpoint of the other.
    """

    base: Graph
    threshold: float
    vertex_friends: tuple[tuple[int, ...], ...]
    power: int = 1
    level: str = "edge"
    _sets: tuple = field(default=(), repr=False)

    def are_friends(self, u: int, v: int) -> bool:
        return v in self._sets[u]

    def edge_friends(self, e: int, f: int) -> bool:
        a, b = self.base.edges[e]
        x, y = self.base.edges[f]
        sa, sb = self._sets[a], self._sets[b]
        return x in sa or y in sa or x in sb or y in sb

    def edge_friend_set(self, e: int) -> set[int]:
        """All edges that are friends of edge ``e`` (including ``e``)."""
        out = set()
        for w in self.friend_vertices_of_edge(e):
            out.update(self.base.incident_edges(w))
        return out

    def friend_vertices_of_edge(self, e: int) -> set[int]:
        a, b = self.base.edges[e]
        return set(self._sets[a]) | set(self._sets[b])


def _power_neighborhoods(G: Graph, power: int) -> list[set[int]]:
    if power == 1:
        return [set(a) for a in G.adjacency]
    out = []
    for v in range(G.n):
        near = bfs_distances(G, [v], limit=power)
        near.pop(v)
        out.append(set(near))
    return out


def vertex_friends(G: Graph, threshold: float, power: int = 1) -> FriendModel:
    """Friend relation with codegree cutoff ``threshold``.

    Only pairs within distance ``2 * power`` can have positive codegree in
    ``G^power``, so only those are scanned.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    nbrs = _power_neighborhoods(G, power)
    friends = [{v} for v in range(G.n)]
    if threshold > max((len(s) for s in nbrs), default=0):
        # no pair can reach the cutoff
        sets = tuple(frozenset(f) for f in friends)
        return FriendModel(G, threshold, tuple((v,) for v in range(G.n)), power, "edge", sets)
    for u in range(G.n):
        candidates = set()
        for w in nbrs[u]:
            candidates |= nbrs[w]
        if threshold <= 0:
            candidates |= nbrs[u]
        for v in candidates:
            if v <= u:
                continue
            if len(nbrs[u] & nbrs[v]) >= threshold:
                friends[u].add(v)
                friends[v].add(u)
    sets = tuple(frozenset(f) for f in friends)
    return FriendModel(G, threshold, tuple(tuple(sorted(f)) for f in friends), power, "edge", sets)


@dataclass
class AuditResult:
    max_codegree: int
    argmax: tuple[int, int] | None
    pairs_checked: int
    vacuous: bool


def _conflict_sets(CG: ConflictGraph) -> list[set[int]]:
    return CG.neighbor_sets()


def edge_strangers_codegree_audit(CG: ConflictGraph, FM: FriendModel) -> AuditResult:
    """Largest conflict-graph codegree over stranger pairs of edges.

    Pairs further than distance 2 apart in the conflict graph have codegree
    zero and are skipped.  Ties go to the lexicographically smallest pair.
    """
    A = CG.to_csr()
    C = (A @ A).tocoo()
    best, arg, checked = 0, None, 0
    for e, f, c in sorted(zip(C.row.tolist(), C.col.tolist(), C.data.tolist())):
        if e >= f or FM.edge_friends(e, f):
            continue
        checked += 1
        if c > best:
            best, arg = int(c), (e, f)
    any_strangers = checked > 0 or _has_stranger_pair(CG, FM)
    return AuditResult(best, arg, checked, vacuous=not any_strangers)


def _has_stranger_pair(CG: ConflictGraph, FM: FriendModel) -> bool:
    m = CG.n
    for e in range(m):
        if len(FM.edge_friend_set(e)) < m:
            return True
    return False


def equitable_partition(H: Graph) -> list[list[int]]:
    """Partition V(H) into at most Δ+1 independent sets whose sizes differ by at most 1.

    Greedy coloring into Δ+1 classes, then moves of single vertices from a
    largest class into a smaller class with no neighbor there.  If the moves
    stall, networkx's Kierstead-Kostochka routine (which always succeeds with
    Δ+1 colors) takes over.
    """
    if H.n == 0:
        return []
    r = H.max_degree + 1
    classes: list[set[int]] = [set() for _ in range(r)]
    order = sorted(range(H.n), key=lambda v: (-H.degree(v), v))
    color = {}
    for v in order:
        used = {color[u] for u in H.adjacency[v] if u in color}
        c = min((c for c in range(r) if c not in used), key=lambda c: (len(classes[c]), c))
        color[v] = c
        classes[c].add(v)
    if not _balance(H, classes, color):
        nxg = nx.Graph()
        nxg.add_nodes_from(range(H.n))
        nxg.add_edges_from(H.edges)
        coloring = nx.algorithms.coloring.equitable_color(nxg, r)
        classes = [set() for _ in range(r)]
        for v, c in coloring.items():
            classes[c].add(v)
    parts = [sorted(c) for c in classes if c]
    parts.sort(key=lambda p: p[0])
    return parts


def _balance(H: Graph, classes: list[set[int]], color: dict) -> bool:
    for _ in range(H.n * len(classes) + 1):
        sizes = [len(c) for c in classes]
        big, small = max(sizes), min(sizes)
        if big - small <= 1:
            return True
        moved = False
        for src in (i for i, s in enumerate(sizes) if s == big):
            for dst in sorted(range(len(classes)), key=lambda i: sizes[i]):
                if sizes[dst] >= big - 1:
                    break
                for v in sorted(classes[src]):
                    if not any(color.get(u) == dst for u in H.adjacency[v]):
                        classes[src].remove(v)
                        classes[dst].add(v)
                        color[v] = dst
                        moved = True
                        break
                if moved:
                    break
            if moved:
                break
        if not moved:
            return False
    return False


@dataclass
class XSet:
    owner: int | None
    members: tuple[int, ...]
    kind: str
    bx: frozenset | None = None


@dataclass(eq=False)
class FamilyX:
    """Multiset of conflict-vertex sets; set ids are list positions."""

    sets: list[XSet]
    t: int
    friends: FriendModel | None = None
    membership: dict[int, list[int]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.membership:
            for sid, X in enumerate(self.sets):
                for e in X.members:
                    self.membership.setdefault(e, []).append(sid)

    def owned_by(self, v: int) -> list[int]:
        return [sid for sid, X in enumerate(self.sets) if X.owner == v]


def build_family_X(G: Graph, FM: FriendModel, t: int = 2) -> FamilyX:
    """For each vertex v: a singleton {vw} per friend neighbor w, and the
    stranger neighbors split into blocks of mutual strangers.  Blocks of size
    at least 2 get ``B^X = E_{t+1}(v)``."""
    sets: list[XSet] = []
    for v in range(G.n):
        strangers = []
        for w in G.adjacency[v]:
            if FM.are_friends(v, w):
                sets.append(XSet(v, (G.edge_id(v, w),), "singleton"))
            else:
                strangers.append(w)
        if not strangers:
            continue
        local = {w: i for i, w in enumerate(strangers)}
        friendship = Graph.from_edges(
            len(strangers),
            ((local[a], local[b]) for a, b in itertools.combinations(strangers, 2)
             if FM.are_friends(a, b)),
        )
        ring = None
        for part in equitable_partition(friendship):
            members = tuple(sorted(G.edge_id(v, strangers[i]) for i in part))
            bx = None
            if len(members) >= 2:
                if ring is None:
                    ring = frozenset(edge_ring(G, v, t + 1))
                bx = ring
            sets.append(XSet(v, members, "stranger_block", bx))
    return FamilyX(sets, t, FM)


@dataclass
class ConditionEntry:
    id: str
    measured: float
    threshold: float
    margin: float
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {"condition": self.id, "measured": _jsonable(self.measured),
                "threshold": _jsonable(self.threshold), "margin": _jsonable(self.margin),
                "pass": self.passed, "note": self.note}


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


@dataclass
class ConditionReport:
    entries: list[ConditionEntry]
    delta: int
    scale_note: str = ""

    @property
    def overall(self) -> bool:
        return all(e.passed for e in self.entries)

    def __getitem__(self, key: str) -> ConditionEntry:
        for e in self.entries:
            if e.id == key:
                return e
        raise KeyError(key)

    def to_json(self) -> str:
        return json.dumps({"delta": self.delta, "overall": self.overall,
                           "scale_note": self.scale_note,
                           "conditions": [e.to_dict() for e in self.entries]}, indent=2)


def _entry(cid: str, measured: float, threshold: float, note: str = "") -> ConditionEntry:
    margin = threshold - measured
    ok = bool(measured <= threshold) if not math.isnan(threshold) else False
    return ConditionEntry(cid, measured, threshold, margin, ok, note)


def verify_general_conditions(CG: ConflictGraph, FM: FriendModel, FX: FamilyX,
                              gamma: float, epsilon: float, N: int = 1) -> ConditionReport:
    """Measure every hypothesis of the general list-coloring theorem on
    ``CG`` and compare it with its threshold (all logs natural)."""
    Delta = CG.max_degree
    lnD = math.log(Delta) if Delta > 1 else 0.0
    note = "" if lnD > 1 else "thresholds undefined at this scale (ln Delta <= 1)"

    def pw(x, k):
        return x ** k if x > 0 else math.nan

    codeg_thr = Delta / pw(lnD, 20) if lnD > 0 else math.nan
    nbrs = _conflict_sets(CG)
    entries = []

    audit = edge_strangers_codegree_audit(CG, FM) if CG.n else AuditResult(0, None, 0, True)
    entries.append(_entry("1", audit.max_codegree, codeg_thr,
                          "vacuous: no stranger pairs" if audit.vacuous else f"argmax {audit.argmax}"))

    max_size = max((len(X.members) for X in FX.sets), default=0)
    entries.append(_entry("2a", max_size, float(Delta) ** gamma))

    worst_family, uncovered = 0, []
    owned: dict[int, list[int]] = {}
    ownerless = []
    for sid, X in enumerate(FX.sets):
        if X.owner is None:
            ownerless.append(sid)
        else:
            owned.setdefault(X.owner, []).append(sid)
    for e in range(CG.n):
        fam = []
        for w in FM.friend_vertices_of_edge(e):
            fam += owned.get(w, [])
        friends_e = FM.edge_friend_set(e)
        fam += [sid for sid in ownerless if friends_e.intersection(FX.sets[sid].members)]
        worst_family = max(worst_family, len(fam))
        covered = set()
        for sid in fam:
            covered.update(FX.sets[sid].members)
        if not friends_e <= covered:
            uncovered.append(e)
    e2b = _entry("2b", worst_family, pw(Delta, (1 - gamma) * epsilon / 12))
    if uncovered:
        e2b.passed = False
        e2b.note = f"friends not covered for {len(uncovered)} vertices, first {uncovered[0]}"
    entries.append(e2b)

    multiplicity = max((len(s) for s in FX.membership.values()), default=0)
    entries.append(_entry("2c", multiplicity, pw(Delta, N)))

    big = [X for X in FX.sets if len(X.members) >= 2]
    if not big:
        entries.append(_entry("3a", 0, math.inf, "vacuous: no set of size >= 2"))
        entries.append(_entry("3b", 0, math.inf, "vacuous: no set of size >= 2"))
    else:
        deficit = -math.inf
        pair_max = 0
        for X in big:
            bx = X.bx if X.bx is not None else frozenset()
            for e in X.members:
                deficit = max(deficit, len(nbrs[e]) - len(nbrs[e] & bx))
            for e, f in itertools.combinations(X.members, 2):
                if FM is None or FM.edge_friends(e, f):
                    pair_max = max(pair_max, len(nbrs[e] & nbrs[f] & bx))
        thr3a = Delta * (1 - gamma + pw(lnD, -10)) if lnD > 0 else math.nan
        entries.append(_entry("3a", deficit, thr3a, "measured = max d(v) - |N(v) & B^X|"))
        entries.append(_entry("3b", pair_max, codeg_thr))
    return ConditionReport(entries, Delta, note)


def kst_bound(m: int, n: int, s: int, t: int) -> float:
    """Edge bound for K_{s,t}-free bipartite graphs with parts of size m and n."""
    if s < 1 or t < 1 or m < 0 or n < 0:
        raise ValueError("need s, t >= 1 and m, n >= 0")
    return (t - 1) ** (1 / s) * n * m ** (1 - 1 / s) + (s - 1) * m


def check_kst(G: Graph, left: list[int], right: list[int], s: int, t: int) -> bool:
    """True when the bipartite graph ``G`` (parts ``left``/``right``, with
    ``left`` the side of size m) respects the KST bound strictly."""
    return G.m < kst_bound(len(left), len(right), s, t)


def bondy_simonovits_bound(n: int, k: int) -> float:
    if k < 2:
        raise ValueError("k must be at least 2")
    return 100 * k * n ** (1 + 1 / k)


def check_bondy_simonovits(G: Graph, k: int) -> bool:
    return G.m < bondy_simonovits_bound(G.n, k)


@dataclass
class EigenEstimate:
    value: float
    converged: bool
    iterations: int
    max_magnitude: float

    def __float__(self) -> float:
        return self.value


def _deflated_power(op, n: int, tol: float, cap: int, rng) -> tuple[float, bool, int]:
    ones = np.ones(n) / math.sqrt(n)
    x = rng.standard_normal(n)
    x -= ones * (ones @ x)
    x /= np.linalg.norm(x)
    rho = 0.0
    for it in range(1, cap + 1):
        y = op(x)
        y -= ones * (ones @ y)
        rho = float(x @ y)
        resid = np.linalg.norm(y - rho * x)
        norm = np.linalg.norm(y)
        if norm == 0:
            return 0.0, True, it
        if resid <= tol:
            return rho, True, it
        x = y / norm
    return rho, False, cap


def second_eigenvalue(G: Graph, tol: float = 1e-8, cap: int = 100_000, seed: int = 0) -> EigenEstimate:
    """Second largest (signed) adjacency eigenvalue of a regular graph.

    Power iteration on ``A + dI`` restricted to the complement of the
    all-ones vector; ``A + dI`` is positive semidefinite so the dominant
    remaining eigenvalue is ``λ₂ + d``.  Stops when the residual
    ``||Mx - ρx||`` drops below ``tol``.  ``max_magnitude`` is the largest
    ``|λ|`` after deflation (``d`` for bipartite graphs).
    """
    if not G.is_regular():
        raise ValueError("second_eigenvalue needs a regular graph")
    if G.n < 2:
        raise ValueError("graph needs at least two vertices")
    d = G.degree(0)
    A = G.to_csr().astype(float)
    rng = np.random.default_rng(seed)
    shifted, ok, its = _deflated_power(lambda x: A @ x + d * x, G.n, tol, cap, rng)
    sq, ok2, _ = _deflated_power(lambda x: A @ (A @ x), G.n, tol, cap, rng)
    return EigenEstimate(shifted - d, ok, its, math.sqrt(max(sq, 0.0)))


@dataclass
class MixingReport:
    samples: int
    max_deviation: float
    standard_violations: int
    printed_violations: int
    worst_standard_excess: float
    worst_printed_excess: float


def mixing_deviation(A: np.ndarray, d: int, S: np.ndarray, T: np.ndarray) -> float:
    n = A.shape[0]
    e = float(S.astype(float) @ A @ T.astype(float))
    return abs(e - d / n * S.sum() * T.sum())


def expander_mixing_check(G: Graph, lam: float, trials: int = 1000, seed=0,
                          exhaustive: bool = False) -> MixingReport:
    """Compare ``|e(S,T) - (d/n)|S||T||`` against ``λ sqrt(|S||T|)`` and
    against ``sqrt(λ |S||T|)`` over random (or all) subset pairs."""
    if not G.is_regular():
        raise ValueError("expander_mixing_check needs a regular graph")
    n = G.n
    d = G.degree(0) if n else 0
    A = G.to_csr().toarray().astype(float)
    if exhaustive:
        if n > 12:
            raise ValueError("exhaustive mixing check limited to n <= 12")
        X = ((np.arange(2 ** n)[:, None] >> np.arange(n)) & 1).astype(float)
        Ys = Xs = X
    else:
        rng = np.random.default_rng(seed)
        dens = rng.random((trials, 2))
        Xs = (rng.random((trials, n)) < dens[:, :1]).astype(float)
        Ys = (rng.random((trials, n)) < dens[:, 1:]).astype(float)
    std_v = prn_v = 0
    worst_std = worst_prn = -math.inf
    max_dev = 0.0
    sx_all = Xs.sum(axis=1)
    eps = 1e-9
    for start in range(0, len(Xs), 256):
        blk = Xs[start:start + 256]
        sx = sx_all[start:start + 256]
        if exhaustive:
            E = blk @ A @ Ys.T
            st = sx[:, None] * Ys.sum(axis=1)[None, :]
        else:
            yb = Ys[start:start + 256]
            E = np.einsum("ij,jk,ik->i", blk, A, yb)
            st = sx * yb.sum(axis=1)
        dev = np.abs(E - d / n * st)
        std_excess = dev - lam * np.sqrt(st)
        prn_excess = dev - np.sqrt(lam * st)
        std_v += int((std_excess > eps).sum())
        prn_v += int((prn_excess > eps).sum())
        worst_std = max(worst_std, float(std_excess.max()))
        worst_prn = max(worst_prn, float(prn_excess.max()))
        max_dev = max(max_dev, float(dev.max()))
    samples = len(Xs) * (len(Ys) if exhaustive else 1)
    return MixingReport(samples, max_dev, std_v, prn_v, worst_std, worst_prn)


def friend_counts(FM: FriendModel) -> list[int]:
    """Number of non-reflexive friends per vertex."""
    return [len(f) - 1 for f in FM.vertex_friends]
