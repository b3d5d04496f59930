import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nibblecolor import NibbleParams, build_schedule, check_prop22, keep_value, uncov_value
from nibblecolor.schedule import schedule_csv

# frozen from a 60-digit evaluation of the closed forms
ORACLE = {
    (110.0, 100.0, 1, 0.01): (109.00448666577303, 99.009050121220245),
    (1500.0, 1000.0, 2, 0.1): (1312.7541438292706, 854.43747251145328),
    (45.0, 30.0, 3, 0.25): (27.255857041582936, 19.064335353039484),
}


def test_keep_uncov_against_frozen_oracle():
    for (lam, d, c, p), (keep_ref, uncov_ref) in ORACLE.items():
        params = NibbleParams(lam, d, c, p)
        assert keep_value(params) == pytest.approx(keep_ref, rel=1e-12)
        assert uncov_value(params) == pytest.approx(uncov_ref, rel=1e-12)


def test_keep_p_zero_is_list_size():
    assert keep_value(NibbleParams(7.0, 100.0, 3, 0.0)) == 7.0


def test_keep_degree_zero_is_list_size():
    assert keep_value(NibbleParams(7.0, 0.0, 3, 0.5)) == 7.0


def test_uncov_p_zero_is_degree_bound():
    assert uncov_value(NibbleParams(7.0, 100.0, 3, 0.0)) == pytest.approx(100.0, rel=1e-12)


def test_uncov_overlap_one_formula():
    lam, d, p = 9.0, 5.0, 0.3
    want = ((1 - p) + p * (1 - (1 - p / lam) ** d)) * d
    assert uncov_value(NibbleParams(lam, d, 1, p)) == pytest.approx(want, rel=1e-12)


def test_domain_error_when_activation_reaches_list_size():
    with pytest.raises(ValueError, match="survive probability"):
        keep_value(NibbleParams(0.5, 2.0, 1, 0.9))


@settings(max_examples=200, deadline=None)
@given(
    lam=st.floats(1.0, 1e6),
    d=st.floats(0.0, 1e6),
    c=st.integers(1, 6),
    p=st.floats(0.0, 0.99),
)
def test_keep_uncov_ranges(lam, d, c, p):
    if p >= lam:
        return
    params = NibbleParams(lam, d, c, p)
    keep = keep_value(params)
    uncov = uncov_value(params)
    assert 0.0 <= keep <= lam
    assert 0.0 <= uncov <= d + 1e-9 * d


def test_keep_monotone_in_activation_and_degree():
    base = keep_value(NibbleParams(100.0, 50.0, 2, 0.1))
    assert keep_value(NibbleParams(100.0, 50.0, 2, 0.2)) < base
    assert keep_value(NibbleParams(100.0, 80.0, 2, 0.1)) < base


def test_strict_window_accepts_and_rejects():
    # D = 1e6: window is [1/log^2 D, 1/log D] = [0.00524, 0.0724]
    NibbleParams(1.5e6, 1e6, 2, 0.05, 0.5, strict=True)
    with pytest.raises(ValueError, match="window"):
        NibbleParams(1.5e6, 1e6, 2, 0.5, 0.5, strict=True)
    with pytest.raises(ValueError, match="window"):
        NibbleParams(1.2e6, 1e6, 2, 0.05, 0.5, strict=True)  # below (1+eps) D
    with pytest.raises(ValueError, match="window"):
        NibbleParams(9.0, 2.0, 1, 0.9, 0.5, strict=True)  # degree too small


def test_prop22_degree_inequality_zero_slack_at_p_zero():
    rep = check_prop22(NibbleParams(1.5e4, 1e4, 2, 0.0, 0.5))
    assert rep.degree_ok
    assert rep.degree_margin == pytest.approx(0.0, abs=1e-9)


def test_prop22_holds_in_the_asymptotic_regime():
    d = 1e18
    p = 1 / math.log(d)
    rep = check_prop22(NibbleParams(1.5 * d, d, 2, p, 0.5))
    assert rep.ratio_ok and rep.degree_ok


def test_prop22_ratio_fails_at_desk_scale():
    # the additive 4/5-power corrections dominate here; record the fact
    d = 1e6
    p = 1 / math.log(d)
    rep = check_prop22(NibbleParams(1.5 * d, d, 2, p, 0.5))
    assert rep.degree_ok
    assert not rep.ratio_ok
    assert rep.ratio_margin < 0


def test_build_schedule_deterministic():
    s1 = build_schedule(1e6, 0.5, 2)
    s2 = build_schedule(1e6, 0.5, 2)
    assert s1.rows == s2.rows
    assert s1.activation == pytest.approx(1 / math.log(1e6), rel=1e-15)


def test_build_schedule_rows_follow_recurrence():
    s = build_schedule(1e5, 0.4, 1, activation=0.05)
    for prev, cur in zip(s.rows, s.rows[1:]):
        params = NibbleParams(prev.list_size, prev.degree_bound, 1, 0.05, 0.4)
        assert cur.list_size == pytest.approx(
            keep_value(params) - prev.list_size ** 0.8, rel=1e-12
        )
        assert cur.degree_bound == pytest.approx(
            uncov_value(params) + prev.degree_bound ** 0.8, rel=1e-12
        )
        assert cur.ratio == math.ceil(cur.list_size) / cur.degree_bound


def test_build_schedule_collapse_detected():
    # small degree and tiny slack: lists wither before any threshold
    s = build_schedule(50, 0.1, 1, activation=0.5)
    assert s.stop_reason in ("collapse", "cap")
    assert s.i_star is None


def test_build_schedule_threshold_fires_in_asymptopia():
    s = build_schedule(1e18, 0.5, 1)
    assert s.stop_reason == "threshold"
    assert s.i_star is not None
    assert s.i_star <= s.round_cap
    for prev, cur in zip(s.rows, s.rows[1:]):
        assert cur.ratio >= prev.ratio * (1 + 0.5 * s.activation / 4)


def test_schedule_csv_shape():
    s = build_schedule(1e4, 0.5, 2, activation=0.1)
    text = schedule_csv(s)
    lines = text.strip().splitlines()
    assert lines[0] == "i,Lambda_i,D_i,ratio,stop_reason"
    assert len(lines) == len(s.rows) + 1
    assert lines[-1].endswith(s.stop_reason)


def test_build_schedule_rejects_bad_inputs():
    with pytest.raises(ValueError):
        build_schedule(0.5, 0.5, 1)
    with pytest.raises(ValueError):
        build_schedule(100, -1, 1)
    with pytest.raises(ValueError):
        build_schedule(100, 0.5, 1, activation=1.5)
