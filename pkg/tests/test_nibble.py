import itertools
import math

import numpy as np
import pytest

from strong_nibble.generators import gen_c5_blowup, gen_cycle, gen_projective_incidence, gen_random_regular
from strong_nibble.graph_core import Graph, conflict_graph
from strong_nibble.nibble import (ListState, NibbleError, check_properties, equalizing_probability,
                                  init_lists, nibble_iteration, run_nibble, trace_csv, trim)
from strong_nibble.schedule import Schedule, build_schedule
from strong_nibble.structure import build_family_X, edge_strangers_codegree_audit, vertex_friends

import brute


def flat_schedule(L, T, eta, length=5, i_star=None):
    return Schedule(float(max(T, 3)), 0.5, 0.5, eta * 10, eta, L=[float(L)] * length,
                    T=[float(T)] * length, keep=[1.0] * length, Q=[1.0] * length,
                    X=[1.0] * length, B=[0.0] * length, r=[T / L] * length, i_star=i_star)


def single_vertex():
    return conflict_graph(Graph.from_edges(2, [(0, 1)]), 2)


def adjacent_pair():
    return conflict_graph(Graph.from_edges(3, [(0, 1), (1, 2)]), 2)


def lists_of(LS):
    return [set(LS.list_of(v)) for v in range(LS.n)]


def check_bookkeeping(LS):
    """Color degrees and live edges agree with a from-scratch recount."""
    adj = brute.conflict_adj(LS.cg.base, LS.cg.t)
    unc = LS.uncolored.tolist()
    L = lists_of(LS)
    live = {(u, v) for u in range(LS.n) for v in adj[u]
            if u < v and unc[u] and unc[v] and L[u] & L[v]}
    assert set(LS.live_edges()) == live
    live_adj = [set() for _ in range(LS.n)]
    for u, v in live:
        live_adj[u].add(v)
        live_adj[v].add(u)
    want = brute.color_degrees(live_adj, L, unc)
    for v in range(LS.n):
        if not unc[v]:
            continue
        for c in L[v]:
            assert LS.t(v, c) == want[v, c], (v, c)


# -- initialization -----------------------------------------------------

def test_init_k5():
    LS = init_lists(conflict_graph(gen_cycle(5), 2), 5)
    assert all(LS.list_of(v) == [0, 1, 2, 3, 4] for v in range(5))
    assert (LS.tdeg == 4).all()


def test_init_single_vertex():
    LS = init_lists(single_vertex(), 1)
    assert LS.list_of(0) == [0] and LS.t(0, 0) == 0


def test_init_c6():
    LS = init_lists(conflict_graph(gen_cycle(6), 2), 3)
    assert (LS.tdeg == 4).all()


def test_init_rejects_empty_palette():
    with pytest.raises(ValueError):
        init_lists(single_vertex(), 0)


# -- equalizing probability ----------------------------------------------

def test_eq_examples():
    assert equalizing_probability(0.1, 100, 50, 50) == 1.0
    assert equalizing_probability(0.1, 100, 50, 60) == 1.0
    assert equalizing_probability(0.1, 100, 50, 40) == pytest.approx(0.999 ** 10, rel=1e-12)
    assert 0.999 ** 10 == pytest.approx(0.990045, abs=1e-6)


def test_eq_vectorized():
    out = equalizing_probability(0.1, 100, 50, np.array([40, 50, 60]))
    assert out.tolist() == pytest.approx([0.999 ** 10, 1.0, 1.0])


# -- one iteration ------------------------------------------------------

def test_zero_eta_changes_nothing_when_t_equals_T():
    cg = conflict_graph(gen_cycle(6), 2)
    LS = init_lists(cg, 3)
    nxt, newly, log = nibble_iteration(LS, flat_schedule(3, 4, 0.0), seed=1)
    assert newly == [] and log.activated == []
    assert (nxt.lists == LS.lists).all()


def test_adjacent_collision():
    LS = init_lists(adjacent_pair(), 1)
    nxt, newly, log = nibble_iteration(LS, flat_schedule(1, 1, 1.0), seed=0, eta=1.0)
    assert log.assigned == {0: 0, 1: 0}
    assert newly == []
    assert nxt.list_of(0) == [] and nxt.list_of(1) == []


def test_single_vertex_forced():
    LS = init_lists(single_vertex(), 1)
    nxt, newly, _ = nibble_iteration(LS, flat_schedule(1, 1, 1.0), seed=0, eta=1.0)
    assert newly == [0] and nxt.color[0] == 0


@pytest.mark.parametrize("seed", range(4))
def test_bookkeeping_after_iteration_and_trim(seed):
    G = gen_c5_blowup(2)
    LS = init_lists(conflict_graph(G, 2), 12)
    S = flat_schedule(12, 19, 0.3)
    for _ in range(3):
        LS, _, _ = nibble_iteration(LS, S, seed, eta=0.3)
        trim(LS, max(LS.list_sizes().max() - 2, 1))
        check_bookkeeping(LS)


def test_colored_vertices_keep_their_color_in_record():
    LS = init_lists(conflict_graph(gen_projective_incidence(2), 2), 10)
    nxt, newly, _ = nibble_iteration(LS, flat_schedule(10, 12, 0.5), 3, eta=0.5)
    assert newly
    for v in newly:
        assert nxt.lists[v, nxt.color[v]]


def test_wasteful_deletions_replayed():
    LS = init_lists(conflict_graph(gen_random_regular(30, 4, 2), 2), 8)
    nxt, _, log = nibble_iteration(LS, flat_schedule(8, 24, 0.5), 11, eta=0.5)
    for u, c in log.assigned.items():
        for v in LS.live_neighbors(u).tolist():
            assert not nxt.lists[v, c]


# -- trim ---------------------------------------------------------------

def test_trim_tie_break():
    LS = ListState(single_vertex(), np.array([[False, True, True, True, True]]))
    trim(LS, 2)
    assert LS.list_of(0) == [1, 2]


def test_trim_drops_high_color_degree_first():
    cg = adjacent_pair()
    lists = np.array([[True, True, True], [True, False, False]])
    LS = ListState(cg, lists)
    trim(LS, 2)
    assert LS.list_of(0) == [1, 2]


def test_trim_short_list_untouched():
    LS = ListState(single_vertex(), np.array([[True, False, True]]))
    trim(LS, 5)
    assert LS.list_of(0) == [0, 2]


def test_trim_prunes_disjoint_edge():
    cg = adjacent_pair()
    lists = np.array([[False, True, True, False, False], [False, False, False, True, True]])
    LS = ListState(cg, lists)
    assert LS.live_edges() == [(0, 1)]
    trim(LS, 2)
    assert LS.live_edges() == []
    assert LS.t(0, 1) == 0


# -- properties -----------------------------------------------------------

def c6_setup(theta=2):
    G = gen_cycle(6)
    cg = conflict_graph(G, 2)
    FM = vertex_friends(G, theta)
    return G, cg, build_family_X(G, FM, 2)


def test_fresh_state_p1_p2():
    G, cg, FX = c6_setup()
    S = build_schedule(cg.max_degree, 0.5, 0.5, strict=False)
    LS = init_lists(cg, math.floor(S.L[0]))
    rep = check_properties(LS, FX, S, 1, only=("P1", "P2"))
    assert rep.passed


@pytest.mark.parametrize("G,theta", [(gen_cycle(6), 2), (gen_projective_incidence(2), 1),
                                     (gen_c5_blowup(2), 2)])
def test_p3_at_one_is_audit(G, theta):
    cg = conflict_graph(G, 2)
    FM = vertex_friends(G, theta)
    FX = build_family_X(G, FM, 2)
    S = build_schedule(max(cg.max_degree, 3), 0.5, 0.5, strict=False)
    LS = init_lists(cg, 4)
    rep = check_properties(LS, FX, S, 1, only=("P3",))
    assert rep["P3"].measured == edge_strangers_codegree_audit(cg, FM).max_codegree


def test_p1_witness():
    G, cg, FX = c6_setup()
    S = build_schedule(4, 0.5, 0.5, strict=False)
    LS = init_lists(cg, math.floor(S.L[0]))
    LS.remove_colors(np.eye(LS.n, LS.k, dtype=bool) & (np.arange(LS.n) == 2)[:, None])
    rep = check_properties(LS, FX, S, 1, only=("P1",))
    assert not rep.passed
    assert rep["P1"].witness == (2, LS.k - 1)


def brute_p3_p4(LS, FX):
    """P3 over stranger pairs and P4 over friend pairs inside sets, from scratch."""
    adj = brute.conflict_adj(LS.cg.base, 2)
    unc = LS.uncolored.tolist()
    L = lists_of(LS)
    live = [{w for w in adj[u] if unc[u] and unc[w] and L[u] & L[w]} for u in range(LS.n)]

    def q(u, v, region):
        best = None
        for c in sorted(L[u] & L[v]):
            common = [w for w in live[u] & live[v] if c in L[w] and (region is None or w in region)]
            best = len(common) if best is None else max(best, len(common))
        return best

    FM = FX.friends
    p3 = 0
    for u, v in itertools.combinations(range(LS.n), 2):
        if unc[u] and unc[v] and not FM.edge_friends(u, v) and live[u] & live[v]:
            val = q(u, v, None)
            if val is not None:
                p3 = max(p3, val)
    p4 = 0
    for X in FX.sets:
        if len(X.members) < 2:
            continue
        members = [e for e in X.members if unc[e]]
        for u, v in itertools.combinations(members, 2):
            if FM.edge_friends(u, v):
                val = q(u, v, X.bx or frozenset())
                if val is not None:
                    p4 = max(p4, val)
    return p3, p4


@pytest.mark.parametrize("seed", range(3))
def test_p3_p4_match_brute_force(seed):
    G = gen_c5_blowup(2)
    cg = conflict_graph(G, 2)
    FX = build_family_X(G, vertex_friends(G, 2), 2)
    LS = init_lists(cg, 10)
    S = flat_schedule(10, 19, 0.4)
    LS, _, _ = nibble_iteration(LS, S, seed, eta=0.4)
    trim(LS, 7)
    rep = check_properties(LS, FX, S, 2, only=("P3", "P4"))
    assert (rep["P3"].measured, rep["P4"].measured) == brute_p3_p4(LS, FX)


# -- driver -------------------------------------------------------------

def test_i_star_one_means_no_iterations():
    cg = conflict_graph(gen_cycle(6), 2)
    S = flat_schedule(40, 4, 0.1, length=1, i_star=1)
    res = run_nibble(cg, None, S, k=40)
    assert res.trace == [] and res.coloring.assignments == {}
    assert res.halted == "i_star"


def test_trace_deterministic():
    cg = conflict_graph(gen_random_regular(40, 4, 1), 2)
    S = build_schedule(2 * 16, 0.5, 0.5, strict=False)
    a = run_nibble(cg, None, S, seed=5, eta=0.3, max_iterations=6)
    b = run_nibble(cg, None, S, seed=5, eta=0.3, max_iterations=6)
    assert trace_csv(a.trace) == trace_csv(b.trace)
    assert a.coloring.assignments == b.coloring.assignments
    c = run_nibble(cg, None, S, seed=6, eta=0.3, max_iterations=6)
    assert a.coloring.assignments != c.coloring.assignments


def test_trace_columns():
    cg = conflict_graph(gen_cycle(8), 2)
    S = build_schedule(8, 0.5, 0.5, strict=False)
    res = run_nibble(cg, None, S, seed=0, max_iterations=2)
    header = trace_csv(res.trace).splitlines()[0]
    assert header == "i,n_uncolored,min_list,mean_list,max_list,max_tvc,keep_pred,keep_emp,colored_round,retries"


def test_theory_mode_with_all_friends():
    G = gen_projective_incidence(3)
    cg = conflict_graph(G, 2)
    FX = build_family_X(G, vertex_friends(G, 0), 2)
    S = build_schedule(cg.max_degree, 0.5, 0.5, strict=False)
    res = run_nibble(cg, FX, S, mode="theory", seed=2, max_iterations=4)
    assert len(res.trace) == 4
    assert all(r.passed for r in res.reports)


def test_theory_mode_exhausts_retries():
    G, cg, FX = c6_setup(theta=2)
    S = build_schedule(4, 0.5, 0.5, strict=False)
    with pytest.raises(NibbleError) as err:
        run_nibble(cg, FX, S, mode="theory", retry_budget=3, seed=0)
    assert not err.value.report["P3"].passed


def test_unknown_mode():
    with pytest.raises(ValueError):
        run_nibble(conflict_graph(gen_cycle(5), 2), None, build_schedule(4, 0.5, 0.5, strict=False),
                   mode="fast")
