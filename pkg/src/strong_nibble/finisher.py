"""Completing a partial coloring once lists dominate color degrees."""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass

import numpy as np

from .nibble import ListState

log = logging.getLogger(__name__)


class FinishError(RuntimeError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class FinishConfig:
    ratio_required: float = 8.0
    resample_cap: int | None = None  # default 1000 * |residual|
    seed: int = 0

    def __post_init__(self):
        if self.ratio_required < 2:
            raise ValueError("ratio_required must be at least 2")


@dataclass
class FinishResult:
    coloring: dict[int, int]
    resamplings: int
    vertices: int

    @property
    def resamplings_per_vertex(self) -> float:
        """Vertex redraws (two per resampled constraint) per residual vertex."""
        return 2 * self.resamplings / self.vertices if self.vertices else 0.0


def max_color_degree(LS: ListState) -> int:
    U = LS.uncolored
    vals = np.where(LS.lists & U[:, None], LS.tdeg, 0)
    return int(vals.max()) if vals.size else 0


def check_ratio(LS: ListState, ratio: float):
    """Return ``None`` if every residual list has at least ``ratio * d``
    colors (``d`` the maximum color degree), else ``(v, |L(v)|, d)``."""
    d = max_color_degree(LS)
    U = np.flatnonzero(LS.uncolored)
    sizes = LS.list_sizes()[U]
    need = max(ratio * d, 1)
    bad = np.flatnonzero(sizes < need)
    if len(bad):
        v = int(U[bad[np.argmin(sizes[bad])]])
        return v, int(LS.list_sizes()[v]), d
    return None


def finish_lll(LS: ListState, cfg: FinishConfig = FinishConfig()) -> FinishResult:
    """Moser-Tardos resampling on the residual (uncolored, live) graph.

    Every residual vertex draws a uniform color from its list; while some
    live edge has both ends on the same color, the lexicographically
    smallest such edge has both endpoints redrawn.
    """
    witness = check_ratio(LS, cfg.ratio_required)
    if witness is not None:
        v, size, d = witness
        raise FinishError(
            f"list condition fails at vertex {v}: |L|={size} < {cfg.ratio_required} * {d}", witness)
    U = np.flatnonzero(LS.uncolored)
    if not len(U):
        return FinishResult({}, 0, 0)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([cfg.seed, 0x11])))
    options = {v: np.flatnonzero(LS.lists[v]) for v in U.tolist()}
    color = {v: int(opts[rng.integers(len(opts))]) for v, opts in options.items()}
    nbrs = {v: LS.live_neighbors(v).tolist() for v in U.tolist()}
    heap = [(u, w) for u in color for w in nbrs[u] if u < w and color[u] == color[w]]
    heapq.heapify(heap)
    cap = cfg.resample_cap if cfg.resample_cap is not None else 1000 * len(U)
    count = 0
    while heap:
        u, w = heapq.heappop(heap)
        if color[u] != color[w]:
            continue
        if count >= cap:
            raise FinishError(f"resample cap {cap} exhausted", {"violated": (u, w), "coloring": color})
        count += 1
        for x in (u, w):
            opts = options[x]
            color[x] = int(opts[rng.integers(len(opts))])
        for x in (u, w):
            for y in nbrs[x]:
                if color[x] == color[y]:
                    heapq.heappush(heap, (min(x, y), max(x, y)))
    return FinishResult(color, count, len(U))


@dataclass
class GreedyResult:
    coloring: dict[int, int]
    stuck: int | None

    @property
    def ok(self) -> bool:
        return self.stuck is None


def finish_greedy(LS: ListState) -> GreedyResult:
    """Residual vertices in decreasing live degree, each taking its smallest
    list color not yet used by a live neighbor.  Stops at the first vertex
    with no color left."""
    U = np.flatnonzero(LS.uncolored).tolist()
    nbrs = {v: LS.live_neighbors(v).tolist() for v in U}
    order = sorted(U, key=lambda v: (-len(nbrs[v]), v))
    color: dict[int, int] = {}
    for v in order:
        taken = {color[u] for u in nbrs[v] if u in color}
        free = [c for c in np.flatnonzero(LS.lists[v]).tolist() if c not in taken]
        if not free:
            return GreedyResult(color, v)
        color[v] = free[0]
    return GreedyResult(color, None)


def finish_fallback(LS: ListState, partial: dict[int, int]) -> dict[int, int]:
    """Greedy completion on the full conflict graph, ignoring lists when needed.

    List colors are preferred; otherwise the smallest color unused by any
    conflict neighbor is taken, which never exceeds the conflict graph's max
    degree.
    """
    cg = LS.cg
    color = dict(partial)
    U = [v for v in np.flatnonzero(LS.uncolored).tolist() if v not in color]
    deg = cg.degrees()
    for v in sorted(U, key=lambda v: (-int(deg[v]), v)):
        taken = {color[u] for u in cg.neighbors(v).tolist() if u in color}
        choice = next((c for c in np.flatnonzero(LS.lists[v]).tolist() if c not in taken), None)
        if choice is None:
            choice = next(c for c in range(len(taken) + 1) if c not in taken)
        color[v] = choice
    return color


@dataclass
class Completion:
    coloring: dict[int, int]
    method: str
    resamplings: int = 0


def complete(LS: ListState, cfg: FinishConfig = FinishConfig()) -> Completion:
    """Finish the residual: LLL when the list condition holds, else greedy on
    the lists, else the palette-extending fallback.  The result covers every
    conflict vertex (nibble colors included)."""
    base = {int(v): int(LS.color[v]) for v in np.flatnonzero(LS.color >= 0)}
    if check_ratio(LS, cfg.ratio_required) is None:
        res = finish_lll(LS, cfg)
        return Completion({**base, **res.coloring}, "lll", res.resamplings)
    greedy = finish_greedy(LS)
    if greedy.ok:
        return Completion({**base, **greedy.coloring}, "greedy")
    log.info("greedy list coloring stuck at %s; extending palette", greedy.stuck)
    return Completion(finish_fallback(LS, base), "fallback")
