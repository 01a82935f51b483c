import math
import warnings

import mpmath
import pytest

from strong_nibble.schedule import (Schedule, ScheduleError, build_schedule, integer_view,
                                    iteration_cap, verify_schedule_properties)


def mp_trajectory(delta, eps, gamma, steps):
    """The recurrences evaluated at 50 digits, written out independently."""
    mpmath.mp.dps = 50
    D = mpmath.mpf(delta)
    ln = mpmath.log(D)
    eta = mpmath.mpf(eps) / 1000 / ln
    L = (1 + mpmath.mpf(eps)) * D / ln
    T = D
    Q = mpmath.mpf(gamma) * D / (10 * ln ** 18)
    B = D * (mpmath.mpf(gamma) - ln ** -2)
    out = []
    for _ in range(steps):
        keep = (1 - eta / L) ** T
        out.append((L, T, keep, Q, B))
        mult = keep * (1 - eta * keep) * (1 + ln ** -2)
        L, T, Q, B = L * keep * (1 - ln ** -2), T * mult, Q * mult, B * mult
    return out


def open_schedule(delta, eps=0.5, gamma=0.5):
    return build_schedule(delta, eps, gamma, strict=False)


def test_first_values_2_20():
    S = open_schedule(2 ** 20)
    assert S.K == pytest.approx(5e-4)
    assert S.eta == pytest.approx(3.607e-5, rel=1e-3)
    assert S.L[0] == pytest.approx(1.1346e5, rel=1e-4)
    assert S.T[0] == 2 ** 20


@pytest.mark.parametrize("delta,eps", [(2 ** 20, 0.5), (1000, 0.3), (2 ** 40, 1.0)])
def test_r1_identity(delta, eps):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        S = build_schedule(delta, eps, 0.5, strict=False)
    assert S.r[0] == pytest.approx(math.log(delta) / (1 + eps), rel=1e-12)


@pytest.mark.parametrize("delta", [2 ** 20, 2 ** 30])
def test_matches_high_precision(delta):
    S = open_schedule(delta)
    ref = mp_trajectory(delta, 0.5, 0.5, 200)
    for i in (0, 1, 10, 100, 199):
        L, T, keep, Q, B = ref[i]
        assert S.L[i] == pytest.approx(float(L), rel=1e-10)
        assert S.T[i] == pytest.approx(float(T), rel=1e-10)
        assert S.keep[i] == pytest.approx(float(keep), rel=1e-10)
        assert S.Q[i] == pytest.approx(float(Q), rel=1e-10)
        assert S.B[i] == pytest.approx(float(B), rel=1e-10)


def test_b_over_t_at_one():
    S = open_schedule(2 ** 30)
    assert S.B[0] / S.T[0] == pytest.approx(0.5 - math.log(2 ** 30) ** -2, rel=1e-15)


def test_t_over_q_constant():
    S = open_schedule(2 ** 30)
    ratios = [t / q for t, q in zip(S.T, S.Q)]
    assert max(ratios) / min(ratios) - 1 < 1e-12


@pytest.mark.parametrize("delta", [2 ** 20, 2 ** 30, 2 ** 40])
def test_grid_does_not_close(delta):
    # at these Δ the ratio T_i/L_i grows every step, so L_i >= 8 T_i is never reached
    with pytest.raises(ScheduleError) as err:
        build_schedule(delta, 0.5, 0.5)
    S = err.value.schedule
    assert S.length == iteration_cap(delta)
    assert all(b > a for a, b in zip(S.r, S.r[1:]))


def test_open_schedule_check_report():
    with pytest.raises(ScheduleError) as err:
        build_schedule(2 ** 40, 0.5, 0.5)
    check = verify_schedule_properties(err.value.schedule)
    assert not check.closed and not check.ok
    items = {it.item: it for it in check.items}
    for name in ("iii", "iv", "v", "vi", "vii"):
        assert items[name].holds
    # T_i/L_i grows at this scale, so keep_i falls and T_i itself increases
    assert items["i"].first_failure == 2 and items["ii"].first_failure == 2
    assert items["rough"].first_failure == 1
    assert items["viii"].first_failure == 1


def test_closing_schedule_reports_i_star():
    # a hand-built trajectory that closes at i=2
    S = Schedule(100.0, 0.5, 0.5, 5e-4, 1e-4, L=[10.0, 9.0], T=[5.0, 1.0], keep=[0.9, 0.9],
                 Q=[1.0, 0.5], X=[1.0, 1.0], B=[1.0, 0.5], r=[0.5, 1 / 9], i_star=2)
    check = verify_schedule_properties(S)
    assert check.closed and check.checked_through == 2
    assert check.i_star_within_bound


def test_delta_too_small():
    with pytest.raises(ValueError):
        build_schedule(2, 0.5, 0.5)


def test_gamma_range():
    with pytest.raises(ValueError):
        build_schedule(100, 0.5, 1.0)


def test_epsilon_one_warns():
    with pytest.warns(RuntimeWarning):
        build_schedule(2 ** 20, 1.0, 0.5, strict=False)


def test_open_schedule_stops_below_one():
    S = open_schedule(50)
    assert S.L[-1] < 1 <= S.L[-2]
    assert S.i_star is None


def _view_schedule(L):
    return Schedule(100.0, 0.5, 0.5, 5e-4, 1e-4, L=[L], T=[1.0], keep=[1.0], Q=[1.0],
                    X=[1.0], B=[1.0], r=[1.0 / L])


def test_integer_view():
    assert integer_view(_view_schedule(113457.9), 1).L_target == 113457
    assert integer_view(_view_schedule(8.0), 1).L_target == 8
    with pytest.warns(RuntimeWarning, match="exhausted"):
        v = integer_view(_view_schedule(0.5), 1)
    assert v.L_target == 0 and v.exhausted


def test_csv_columns():
    S = open_schedule(1000)
    lines = S.to_csv().splitlines()
    assert lines[0] == "i,L,T,keep,Q,X,B,r"
    assert len(lines) == S.length + 1
