"""Parameter schedule of the wasteful coloring procedure.

All logarithms are natural.  ``keep_i = (1 - η/L_i)^{T_i}`` is evaluated as
``exp(T_i * log1p(-η/L_i))``; η/L_i is around 1e-10 at large Δ and the naive
power loses most of its digits there.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import warnings
from dataclasses import dataclass, field

log = logging.getLogger(__name__)


class ScheduleError(RuntimeError):
    def __init__(self, message: str, schedule: "Schedule"):
        super().__init__(message)
        self.schedule = schedule


@dataclass
class Schedule:
    delta: float
    epsilon: float
    gamma: float
    K: float
    eta: float
    L: list[float] = field(default_factory=list)
    T: list[float] = field(default_factory=list)
    keep: list[float] = field(default_factory=list)
    Q: list[float] = field(default_factory=list)
    X: list[float] = field(default_factory=list)
    B: list[float] = field(default_factory=list)
    r: list[float] = field(default_factory=list)
    i_star: int | None = None

    # arrays are stored 0-based; these accessors take the 1-based iteration
    def at(self, name: str, i: int) -> float:
        return getattr(self, name)[i - 1]

    @property
    def length(self) -> int:
        return len(self.L)

    @property
    def log_delta(self) -> float:
        return math.log(self.delta)

    @property
    def closed(self) -> bool:
        return self.i_star is not None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "L", "T", "keep", "Q", "X", "B", "r"])
        for i in range(self.length):
            w.writerow([i + 1] + [repr(getattr(self, k)[i]) for k in ("L", "T", "keep", "Q", "X", "B", "r")])
        return buf.getvalue()


def iteration_cap(delta: float) -> int:
    return int(10 * math.log(delta) ** 1.5)


def build_schedule(delta: float, epsilon: float, gamma: float, *, strict: bool = True,
                   cap: int | None = None) -> Schedule:
    """Run the recurrences until ``L_i >= 8 T_i`` (that ``i`` is ``i_star``).

    Gives up after ``10 ln^{3/2} Δ`` iterations (or ``cap``).  With
    ``strict`` this raises :class:`ScheduleError` carrying the trajectory;
    otherwise the open trajectory is returned with ``i_star = None``, which
    is what desk-scale runs use.  An open trajectory also stops once
    ``L_i < 1``.
    """
    if delta < 3:
        raise ValueError(f"Δ must be at least 3 so that ln Δ > 1 (got {delta})")
    if not 0 < gamma < 1:
        raise ValueError("γ must lie in (0, 1)")
    if epsilon <= 0:
        raise ValueError("ε must be positive")
    if epsilon >= 1:
        warnings.warn("ε >= 1: recurrences stay defined but the theory assumes ε < 1",
                      RuntimeWarning, stacklevel=2)
    lnD = math.log(delta)
    inv2 = lnD ** -2
    K = epsilon / 1000
    eta = K / lnD
    S = Schedule(delta, epsilon, gamma, K, eta)
    if cap is None:
        cap = iteration_cap(delta)
    L, T = (1 + epsilon) * delta / lnD, float(delta)
    Q = gamma * delta / (10 * lnD ** 18)
    B = delta * (gamma - inv2)
    for i in range(1, cap + 1):
        keep = math.exp(T * math.log1p(-eta / L))
        S.L.append(L)
        S.T.append(T)
        S.keep.append(keep)
        S.Q.append(Q)
        S.X.append(T ** gamma)
        S.B.append(B)
        S.r.append(T / L)
        if L >= 8 * T:
            S.i_star = i
            return S
        if L < 1:
            if strict:
                raise ScheduleError(f"schedule exhausted at i={i} (L_i={L:.4g} < 1) before closing", S)
            log.warning("schedule exhausted at i=%d (L_i=%g < 1)", i, L)
            return S
        shrink = keep * (1 - eta * keep) * (1 + inv2)
        L, T = L * keep * (1 - inv2), T * shrink
        Q, B = Q * shrink, B * shrink
    if strict:
        raise ScheduleError(
            f"schedule did not close within {cap} iterations "
            f"(r_1={S.r[0]:.4g}, r_{cap}={S.r[-1]:.4g})", S)
    return S


@dataclass
class ItemResult:
    item: str
    holds: bool
    first_failure: int | None
    worst: float
    description: str


@dataclass
class ScheduleCheck:
    items: list[ItemResult]
    checked_through: int
    closed: bool
    i_star_bound: float
    i_star_within_bound: bool

    @property
    def all_items_hold(self) -> bool:
        return all(it.holds for it in self.items)

    @property
    def ok(self) -> bool:
        return self.closed and self.i_star_within_bound and self.all_items_hold

    def to_dict(self) -> dict:
        return {
            "closed": self.closed,
            "checked_through": self.checked_through,
            "i_star_bound": self.i_star_bound,
            "i_star_within_bound": self.i_star_within_bound,
            "items": [vars(it) for it in self.items],
            "ok": self.ok,
        }


def verify_schedule_properties(S: Schedule, rel_tol: float = 1e-10) -> ScheduleCheck:
    """Evaluate the eight schedule inequalities at every ``i <= i_star``.

    For an open schedule the range is ``i <= min(ln^{3/2} Δ, length)``,
    the range over which the inequalities are claimed regardless of closing.
    ``worst`` is the smallest slack seen; for the two identities the slack
    is ``rel_tol`` minus the relative error.
    """
    lnD = S.log_delta
    inv2 = lnD ** -2
    D = S.delta
    bound = lnD ** 1.5
    last = S.i_star if S.closed else min(S.length, int(bound))
    eps, gam, eta = S.epsilon, S.gamma, S.eta
    keep1, r1 = S.keep[0], S.r[0]

    def run(name, desc, check):
        """``check(i)`` returns ``(holds, slack)``."""
        first, worst = None, math.inf
        for i in range(1, last + 1):
            ok, slack = check(i)
            worst = min(worst, slack)
            if not ok and first is None:
                first = i
        return ItemResult(name, first is None, first, worst, desc)

    def identity(a, b):
        err = abs(a - b) / max(abs(a), abs(b))
        return err <= rel_tol, rel_tol - err

    def item_i(i):
        k = S.keep[i - 1]
        return k >= keep1 and keep1 > math.exp(-S.K), min(k - keep1, keep1 - math.exp(-S.K))

    def item_ii(i):
        cap = r1 * (1 - eta * keep1) ** (i - 1) * math.exp(4 * (i - 1) * inv2)
        ri = S.r[i - 1]
        return ri <= cap and cap <= r1 and r1 < lnD, min(cap - ri, r1 - cap, lnD - r1)

    def strict(lhs, rhs):
        return lhs > rhs, lhs - rhs

    items = [
        run("i", "keep_i >= keep_1 > e^{-K}", item_i),
        run("ii", "r_i <= r_1 (1 - η keep_1)^{i-1} exp(4(i-1)/ln^2 Δ) <= r_1 < ln Δ", item_ii),
        run("iii", "L_i > 10 Δ^{ε/2}", lambda i: strict(S.L[i - 1], 10 * D ** (eps / 2))),
        run("iv", "T_i > Δ^{ε/2}", lambda i: strict(S.T[i - 1], D ** (eps / 2))),
        run("v", "B_i / T_i = γ - ln^{-2} Δ",
            lambda i: identity(S.B[i - 1] / S.T[i - 1], gam - inv2)),
        run("vi", "T_i / Q_i = (10/γ) ln^18 Δ",
            lambda i: identity(S.T[i - 1] / S.Q[i - 1], 10 / gam * lnD ** 18)),
        run("vii", "B_i / Q_i > 5 ln^18 Δ",
            lambda i: strict(S.B[i - 1] / S.Q[i - 1], 5 * lnD ** 18)),
        run("viii", "Q_i / X_i > Δ^{(1-γ)ε/3}",
            lambda i: strict(S.Q[i - 1] / S.X[i - 1], D ** ((1 - gam) * eps / 3))),
        run("rough", "A_{i+1} <= A_i <= 2 A_{i+1} for A in L, T, Q, B", lambda i: _rough(S, i)),
    ]
    within = S.closed and S.i_star <= bound
    return ScheduleCheck(items, last, S.closed, bound, within)


def _rough(S: Schedule, i: int) -> tuple[bool, float]:
    if i >= S.length:
        return True, math.inf
    slack = math.inf
    for name in ("L", "T", "Q", "B"):
        a, b = getattr(S, name)[i - 1], getattr(S, name)[i]
        slack = min(slack, a - b, 2 * b - a)
    return slack >= 0, slack


@dataclass
class IntegerView:
    L_target: int
    T: float
    Q: float
    X: float
    B: float
    exhausted: bool


def integer_view(S: Schedule, i: int) -> IntegerView:
    """Integral list-size target ``floor(L_i)`` plus the real thresholds."""
    if not 1 <= i <= S.length:
        raise IndexError(f"iteration {i} outside schedule 1..{S.length}")
    L = S.L[i - 1]
    exhausted = L < 1
    if exhausted:
        warnings.warn("schedule exhausted (L_i < 1)", RuntimeWarning, stacklevel=2)
    target = 0 if exhausted else math.floor(L)
    return IntegerView(target, S.T[i - 1], S.Q[i - 1], S.X[i - 1], S.B[i - 1], exhausted)
