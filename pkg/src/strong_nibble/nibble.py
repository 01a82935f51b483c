"""The wasteful coloring procedure on a conflict graph.

One iteration is the nibble (activate, assign, delete the assigned color from
neighbors' next lists, keep it if it survived, equalizing coin flips)
followed by the trim (cut lists down to the schedule's size, drop edges whose
endpoints no longer share a color).

State lives in dense numpy arrays indexed by conflict vertex and color:
``lists[v, c]`` says whether ``c`` is in ``L(v)`` and ``tdeg[v, c]`` is the
color degree ``t(v, c)``: the number of live, uncolored neighbors of ``v``
whose list contains ``c``.  ``tdeg`` is updated incrementally with sparse
products so a round costs time proportional to what changed.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .graph_core import ConflictGraph
from .schedule import Schedule

log = logging.getLogger(__name__)


class NibbleError(RuntimeError):
    """Theory mode could not find an outcome satisfying P(i+1)."""

    def __init__(self, message: str, report: "PropertyReport"):
        super().__init__(message)
        self.report = report


def _mirror_positions(indptr: np.ndarray, indices: np.ndarray) -> np.ndarray:
    n = len(indptr) - 1
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
    order = np.lexsort((rows, indices))
    mirror = np.empty(len(indices), dtype=np.int64)
    mirror[order] = np.arange(len(indices))
    return mirror


class ListState:
    """Mutable nibble state over a fixed conflict graph."""

    def __init__(self, cg: ConflictGraph, lists: np.ndarray, *, _shared=None):
        self.cg = cg
        self.lists = np.asarray(lists, dtype=bool)
        self.n, self.k = self.lists.shape
        self.i = 1
        self.color = np.full(self.n, -1, dtype=np.int64)
        self.colored_at = np.zeros(self.n, dtype=np.int64)
        if _shared is None:
            self.rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(cg.indptr))
            self.mirror = _mirror_positions(cg.indptr, cg.indices)
        else:
            self.rows, self.mirror = _shared
        self.live = np.ones(len(cg.indices), dtype=np.int32)
        self.tdeg = np.zeros((self.n, self.k), dtype=np.int32)
        self.recompute_color_degrees()

    # -- structure ------------------------------------------------------
    @property
    def uncolored(self) -> np.ndarray:
        return self.color < 0

    def adjacency_matrix(self) -> sp.csr_matrix:
        """Live adjacency as CSR; dead entries are stored zeros."""
        return sp.csr_matrix((self.live, self.cg.indices, self.cg.indptr), shape=(self.n, self.n))

    def live_neighbors(self, v: int) -> np.ndarray:
        lo, hi = self.cg.indptr[v], self.cg.indptr[v + 1]
        return self.cg.indices[lo:hi][self.live[lo:hi].astype(bool)]

    def live_edges(self) -> list[tuple[int, int]]:
        mask = self.live.astype(bool) & (self.rows < self.cg.indices)
        return list(zip(self.rows[mask].tolist(), self.cg.indices[mask].tolist()))

    def list_of(self, v: int) -> list[int]:
        return np.flatnonzero(self.lists[v]).tolist()

    def list_sizes(self) -> np.ndarray:
        return self.lists.sum(axis=1)

    def t(self, v: int, c: int) -> int:
        return int(self.tdeg[v, c])

    def T_set(self, v: int, c: int) -> set[int]:
        """Uncolored live neighbors ``u`` of ``v`` with ``c`` in ``L(u)``."""
        nb = self.live_neighbors(v)
        return set(nb[self.lists[nb, c]].tolist())

    def recompute_color_degrees(self) -> None:
        L = (self.lists & self.uncolored[:, None]).astype(np.int32)
        self.tdeg = np.asarray(self.adjacency_matrix() @ L, dtype=np.int32)

    def copy(self) -> "ListState":
        other = ListState.__new__(ListState)
        other.cg, other.n, other.k, other.i = self.cg, self.n, self.k, self.i
        other.rows, other.mirror = self.rows, self.mirror
        for name in ("lists", "color", "colored_at", "live", "tdeg"):
            setattr(other, name, getattr(self, name).copy())
        return other

    # -- mutation -------------------------------------------------------
    def remove_colors(self, removed: np.ndarray) -> None:
        """Delete the ``(v, c)`` entries flagged in ``removed`` from uncolored lists."""
        removed = removed & self.lists & self.uncolored[:, None]
        if not removed.any():
            return
        delta = self.adjacency_matrix() @ sp.csr_matrix(removed.astype(np.int32))
        self.tdeg -= delta.toarray().astype(np.int32)
        self.lists &= ~removed

    def commit_colors(self, vertices, colors, iteration: int) -> None:
        vertices = np.asarray(vertices, dtype=np.int64)
        if not len(vertices):
            return
        contrib = np.zeros((self.n, self.k), dtype=np.int32)
        contrib[vertices] = self.lists[vertices]
        delta = self.adjacency_matrix() @ sp.csr_matrix(contrib)
        self.tdeg -= delta.toarray().astype(np.int32)
        self.color[vertices] = colors
        self.colored_at[vertices] = iteration
        for v in vertices.tolist():
            lo, hi = self.cg.indptr[v], self.cg.indptr[v + 1]
            self.live[lo:hi] = 0
            self.live[self.mirror[lo:hi]] = 0

    def prune_disjoint_edges(self, touched=None) -> int:
        """Kill live edges whose endpoint lists are disjoint; returns the count."""
        if touched is None:
            cand = np.flatnonzero(self.live)
        else:
            tmask = np.zeros(self.n, dtype=bool)
            tmask[np.asarray(list(touched), dtype=np.int64)] = True
            cand = np.flatnonzero(self.live.astype(bool) & tmask[self.rows])
        # lists whose sizes sum past k must intersect
        sizes = self.list_sizes()
        cand = cand[sizes[self.rows[cand]] + sizes[self.cg.indices[cand]] <= self.k]
        if not len(cand):
            return 0
        packed = np.packbits(self.lists, axis=1)
        dead = []
        for lo in range(0, len(cand), 1 << 20):
            chunk = cand[lo:lo + (1 << 20)]
            a = packed[self.rows[chunk]]
            b = packed[self.cg.indices[chunk]]
            disjoint = ~(a & b).any(axis=1)
            dead.append(chunk[disjoint])
        dead = np.concatenate(dead)
        if not len(dead):
            return 0
        dead = np.unique(np.concatenate([dead, self.mirror[dead]]))
        pruned = sp.csr_matrix(
            (np.ones(len(dead), dtype=np.int32), (self.rows[dead], self.cg.indices[dead])),
            shape=(self.n, self.n))
        L = (self.lists & self.uncolored[:, None]).astype(np.int32)
        self.tdeg -= np.asarray(pruned @ L, dtype=np.int32)
        self.live[dead] = 0
        return len(dead) // 2


def init_lists(cg: ConflictGraph, k: int) -> ListState:
    """Every vertex uncolored with list ``{0, ..., k-1}``."""
    if k < 1:
        raise ValueError("palette size k must be at least 1")
    return ListState(cg, np.ones((cg.n, k), dtype=bool))


def equalizing_probability(eta: float, L_i: float, T_i: float, t) -> np.ndarray | float:
    """``min(1, (1 - η/L_i)^(T_i - t))``; vectorized over ``t``."""
    expo = np.maximum(T_i - np.asarray(t, dtype=float), 0.0)
    if eta >= L_i:
        # base clamps to 0; only a zero exponent survives
        out = (expo == 0).astype(float)
    else:
        out = np.exp(expo * math.log1p(-eta / L_i))
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class PartialColoring:
    assignments: dict[int, int]
    iteration: dict[int, int]

    @classmethod
    def from_state(cls, LS: ListState) -> "PartialColoring":
        idx = np.flatnonzero(LS.color >= 0).tolist()
        return cls({v: int(LS.color[v]) for v in idx}, {v: int(LS.colored_at[v]) for v in idx})


@dataclass
class IterationLog:
    """What happened inside one nibble round (before trimming)."""

    i: int
    attempt: int
    activated: list[int]
    assigned: dict[int, int]
    newly_colored: list[int]
    n3_deletions: int
    n5_deletions: int
    mean_list_before: float
    mean_list_after: float


def _stream(seed: int, i: int, attempt: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, i, attempt])))


def nibble_iteration(LS: ListState, S: Schedule, seed: int, attempt: int = 0,
                     eta: float | None = None) -> tuple[ListState, list[int], IterationLog]:
    """One nibble round; returns the new state, the newly colored vertices and a log.

    The random draws are laid out by vertex (and by vertex and color for the
    coin flips) in a Philox stream keyed by ``(seed, i, attempt)``, so the
    outcome depends only on the inputs.
    """
    i = LS.i
    if eta is None:
        eta = S.eta
    L_i, T_i = S.L[i - 1], S.T[i - 1]
    rng = _stream(seed, i, attempt)
    act_draw = rng.random(LS.n)
    pick_draw = rng.random(LS.n)
    flip_draw = rng.random((LS.n, LS.k))

    unc = LS.uncolored
    lists = LS.lists
    sizes = lists.sum(axis=1)
    activated = np.flatnonzero(unc & (act_draw < eta) & (sizes > 0))

    # N3: wasteful deletions, computed against L_i and T_i
    deleted = np.zeros_like(lists)
    assigned = {}
    for v in activated.tolist():
        colors = np.flatnonzero(lists[v])
        c = int(colors[min(int(pick_draw[v] * len(colors)), len(colors) - 1)])
        assigned[v] = c
        nb = LS.live_neighbors(v)
        deleted[nb[lists[nb, c]], c] = True

    # N4: keep the assigned color unless a neighbor's assignment removed it
    newly = [v for v, c in assigned.items() if not deleted[v, c]]

    # N5: equalizing coin flips for vertices still uncolored
    still = unc.copy()
    still[newly] = False
    eq = equalizing_probability(eta, L_i, T_i, LS.tdeg)
    flip_out = (flip_draw >= eq) & lists & still[:, None]

    out = LS.copy()
    n3 = int((deleted & lists & still[:, None]).sum())
    removal = (deleted | flip_out) & still[:, None]
    out.remove_colors(removal)
    out.commit_colors(newly, [assigned[v] for v in newly], i)
    # colored vertices no longer count toward color degrees; their lists are a record
    out.lists[newly] &= ~deleted[newly]
    out.i = i + 1

    remaining = out.uncolored
    before = float(lists[remaining].sum(axis=1).mean()) if remaining.any() else 0.0
    after = float(out.lists[remaining].sum(axis=1).mean()) if remaining.any() else 0.0
    record = IterationLog(i, attempt, activated.tolist(), assigned, sorted(newly),
                          n3, int(flip_out.sum()), before, after)
    return out, sorted(newly), record


def trim(LS: ListState, target: int, touched=None) -> ListState:
    """Cut every uncolored list down to ``target`` colors, then prune edges
    whose endpoints have disjoint lists.  Works in place and returns ``LS``.

    Colors with the highest color degree go first; ties drop the larger id.
    """
    sizes = LS.list_sizes()
    over = np.flatnonzero(LS.uncolored & (sizes > target))
    removal = np.zeros_like(LS.lists)
    if len(over):
        # rank key: higher color degree first, then larger id; absent colors last
        sub = LS.lists[over]
        key = LS.tdeg[over].astype(np.int64) * (LS.k + 1) + np.arange(LS.k)
        key = np.where(sub, key, -1)
        order = np.argsort(-key, axis=1, kind="stable")
        excess = sizes[over] - target
        drop = np.arange(LS.k)[None, :] < excess[:, None]
        rows = np.repeat(over, LS.k).reshape(len(over), LS.k)
        removal[rows[drop], order[drop]] = True
    LS.remove_colors(removal)
    if touched is not None:
        touched = set(touched) | set(over.tolist())
    LS.prune_disjoint_edges(touched)
    return LS


@dataclass
class PropertyEntry:
    name: str
    passed: bool
    measured: float
    bound: float
    witness: tuple | None = None
    violations: int = 0


@dataclass
class PropertyReport:
    i: int
    entries: list[PropertyEntry]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def __getitem__(self, name: str) -> PropertyEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def bad_event_counts(self) -> dict[str, int]:
        return {e.name: e.violations for e in self.entries}


def check_properties(LS: ListState, FX, S: Schedule, i: int, *, p1: str = "equal",
                     only: tuple[str, ...] | None = None) -> PropertyReport:
    """Evaluate P1-P6 exhaustively against the schedule's values at ``i``.

    ``p1="equal"`` asserts ``|L(v)| = floor(L_i)`` (after trimming),
    ``p1="at_least"`` asserts ``>=``.  ``only`` restricts to a subset of
    ``("P1", ..., "P6")`` for large instances where P3 is too costly.
    """
    want = set(only) if only else {"P1", "P2", "P3", "P4", "P5", "P6"}
    target = math.floor(S.L[i - 1])
    T_i, Q_i, X_i, B_i = S.T[i - 1], S.Q[i - 1], S.X[i - 1], S.B[i - 1]
    unc = LS.uncolored
    U = np.flatnonzero(unc)
    live_lists = LS.lists & unc[:, None]
    entries = []

    if "P1" in want:
        sizes = LS.list_sizes()[U]
        bad = (sizes != target) if p1 == "equal" else (sizes < target)
        wit = (int(U[np.flatnonzero(bad)[0]]), int(sizes[np.flatnonzero(bad)[0]])) if bad.any() else None
        worst = float(sizes[np.argmax(np.abs(sizes - target))]) if len(U) else float(target)
        entries.append(PropertyEntry("P1", not bad.any(), worst, float(target), wit, int(bad.sum())))

    if "P2" in want:
        tv = np.where(live_lists, LS.tdeg, -1)
        measured = int(tv.max()) if len(U) else 0
        bad = tv > T_i
        wit = tuple(int(x) for x in np.argwhere(bad)[0]) if bad.any() else None
        entries.append(PropertyEntry("P2", not bad.any(), measured, T_i, wit, int(bad.sum())))

    friends = FX.friends if FX is not None else None
    if "P3" in want:
        best, wit, nbad = 0, None, 0
        if friends is not None:
            A = LS.adjacency_matrix()
            two = (A @ A).tocoo()
            for u, v in sorted(zip(two.row.tolist(), two.col.tolist())):
                if u >= v or not (unc[u] and unc[v]) or friends.edge_friends(u, v):
                    continue
                q = _pair_q(LS, u, v, None)
                if q is None:
                    continue
                qmax, c = q
                if qmax > Q_i:
                    nbad += 1
                if wit is None or qmax > best:
                    best, wit = qmax, (u, v, c)
        entries.append(PropertyEntry("P3", nbad == 0, best, Q_i, wit, nbad))

    if "P4" in want or "P5" in want or "P6" in want:
        p4 = [0, None, 0]
        p5 = [0, None, 0]
        p6 = [-math.inf, None, 0]
        for sid, X in enumerate(FX.sets if FX is not None else []):
            members = [e for e in X.members if unc[e]]
            if "P5" in want and members:
                counts = live_lists[members].sum(axis=0)
                c = int(np.argmax(counts))
                if counts[c] > X_i:
                    p5[2] += int((counts > X_i).sum())
                if counts[c] > p5[0] or p5[1] is None:
                    p5[0], p5[1] = int(counts[c]), (sid, c)
            if len(X.members) < 2:
                continue
            bx = np.zeros(LS.n, dtype=bool)
            if X.bx:
                bx[np.fromiter(X.bx, dtype=np.int64)] = True
            if "P4" in want:
                for u, v in itertools.combinations(members, 2):
                    if friends is not None and not friends.edge_friends(u, v):
                        continue
                    q = _pair_q(LS, u, v, bx)
                    if q is None:
                        continue
                    if q[0] > Q_i:
                        p4[2] += 1
                    if q[0] > p4[0] or p4[1] is None:
                        p4[0], p4[1] = q[0], (sid, u, v, q[1])
            if "P6" in want:
                lhs_bound = T_i - B_i
                for v in members:
                    nb = LS.live_neighbors(v)
                    outside = nb[~bx[nb]]
                    diff = live_lists[outside].sum(axis=0)
                    vals = np.where(LS.lists[v], diff, -1)
                    c = int(np.argmax(vals))
                    if vals[c] < 0:
                        continue
                    if vals[c] > lhs_bound:
                        p6[2] += int((vals > lhs_bound).sum())
                    if vals[c] > p6[0]:
                        p6[0], p6[1] = int(vals[c]), (sid, v, c)
        if "P4" in want:
            entries.append(PropertyEntry("P4", p4[2] == 0, p4[0], Q_i, p4[1], p4[2]))
        if "P5" in want:
            entries.append(PropertyEntry("P5", p5[2] == 0, p5[0], X_i, p5[1], p5[2]))
        if "P6" in want:
            measured = p6[0] if p6[0] > -math.inf else 0
            entries.append(PropertyEntry("P6", p6[2] == 0, measured, T_i - B_i, p6[1], p6[2]))
    return PropertyReport(i, entries)


def _pair_q(LS: ListState, u: int, v: int, region):
    """``max_c |T(u,c) ∩ T(v,c) [∩ region]|`` over ``c`` in both lists, with the argmax."""
    shared = LS.lists[u] & LS.lists[v]
    if not shared.any():
        return None
    common = np.intersect1d(LS.live_neighbors(u), LS.live_neighbors(v), assume_unique=True)
    if region is not None:
        common = common[region[common]]
    counts = (LS.lists[common] & LS.uncolored[common, None]).sum(axis=0)
    counts = np.where(shared, counts, -1)
    c = int(np.argmax(counts))
    return int(counts[c]), c


@dataclass
class TraceRecord:
    i: int
    n_uncolored: int
    min_list: int
    mean_list: float
    max_list: int
    max_tvc: int
    keep_pred: float
    keep_emp: float
    colored_round: int
    cumulative_colored: int
    retries: int
    wall_time: float = field(default=0.0, compare=False)
    note: str = ""

    CSV_COLUMNS = ("i", "n_uncolored", "min_list", "mean_list", "max_list", "max_tvc",
                   "keep_pred", "keep_emp", "colored_round", "retries")


def trace_csv(trace: list[TraceRecord]) -> str:
    """Trace as CSV; wall time is left out so the file is reproducible."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TraceRecord.CSV_COLUMNS)
    for rec in trace:
        row = []
        for col in TraceRecord.CSV_COLUMNS:
            val = getattr(rec, col)
            row.append(f"{val:.10g}" if isinstance(val, float) else val)
        w.writerow(row)
    return buf.getvalue()


@dataclass
class NibbleResult:
    coloring: PartialColoring
    state: ListState
    trace: list[TraceRecord]
    reports: list[PropertyReport]
    halted: str


def run_nibble(cg: ConflictGraph, FX, S: Schedule, mode: str = "empirical",
               retry_budget: int = 10, seed: int = 0, *, k: int | None = None,
               max_iterations: int | None = None, eta: float | None = None,
               empirical_checks: tuple[str, ...] = ("P1", "P2")) -> NibbleResult:
    """Iterate nibble + trim from ``i = 1`` up to ``i_star - 1``.

    ``theory`` mode re-draws an iteration (fresh attempt index, same seed)
    whenever P(i+1) fails, and raises :class:`NibbleError` once
    ``retry_budget`` re-draws are spent.  ``empirical`` mode records the
    failures and carries on.  Open schedules (no ``i_star``) run until the
    schedule ends, which happens once ``L_i < 1``.
    """
    if mode not in ("theory", "empirical"):
        raise ValueError(f"unknown mode {mode!r}")
    if k is None:
        k = math.floor(S.L[0])
    LS = init_lists(cg, k)
    natural_last = (S.i_star if S.closed else S.length) - 1
    last = natural_last if max_iterations is None else min(natural_last, max_iterations)
    trace: list[TraceRecord] = []
    reports: list[PropertyReport] = []
    cumulative = 0
    for i in range(1, last + 1):
        if not LS.uncolored.any():
            halted = "all_colored"
            break
        target = math.floor(S.L[i])
        if target < 1:
            halted = "schedule_exhausted"
            break
        start = time.perf_counter()
        for attempt in range(retry_budget + 1):
            nxt, newly, info = nibble_iteration(LS, S, seed, attempt, eta)
            changed = np.flatnonzero((nxt.lists != LS.lists).any(axis=1))
            trim(nxt, target, touched=changed)
            if mode == "theory":
                report = check_properties(nxt, FX, S, i + 1)
                if report.passed:
                    break
                log.info("iteration %d attempt %d failed P(%d)", i, attempt, i + 1)
            else:
                report = check_properties(nxt, FX, S, i + 1, only=empirical_checks)
                if not report.passed:
                    log.info("iteration %d: P(%d) violations %s", i, i + 1, report.bad_event_counts)
                break
        else:
            raise NibbleError(f"P({i + 1}) failed after {retry_budget} re-draws", report)
        reports.append(report)
        LS = nxt
        cumulative += len(newly)
        sizes = LS.list_sizes()[LS.uncolored]
        tv = np.where(LS.lists & LS.uncolored[:, None], LS.tdeg, 0)
        keep_emp = info.mean_list_after / info.mean_list_before if info.mean_list_before else 0.0
        trace.append(TraceRecord(
            i=i, n_uncolored=int(LS.uncolored.sum()),
            min_list=int(sizes.min()) if len(sizes) else 0,
            mean_list=float(sizes.mean()) if len(sizes) else 0.0,
            max_list=int(sizes.max()) if len(sizes) else 0,
            max_tvc=int(tv.max()) if tv.size else 0,
            keep_pred=S.keep[i - 1], keep_emp=keep_emp,
            colored_round=len(newly), cumulative_colored=cumulative,
            retries=attempt, wall_time=time.perf_counter() - start))
    else:
        if last < natural_last:
            halted = "max_iterations"
        else:
            halted = "i_star" if S.closed else "schedule_end"
    return NibbleResult(PartialColoring.from_state(LS), LS, trace, reports, halted)
