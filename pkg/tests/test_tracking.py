import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from msdfactory.codes import block_distribution, bravyi_haah as bh, eta, reed_muller_code, toffoli_code
from msdfactory.tracking import (
    cost, leading_coefficient, parse_reports, serialize_reports, special_k2_value, table2_rows,
    track_block_checked, track_module_checked, tracking_states, union_bound_ratio,
)

TOF = toffoli_code()


def test_ten_ten_ten_spot_value():
    reps = track_module_checked([bh(10)] * 3, 1e-3)
    assert f"{reps[-1].eps_g:.1e}" == "2.3e-16"
    assert [r.branch_width for r in reps] == [10, 100, 1000]


def test_two_level_coefficient():
    assert leading_coefficient([bh(10), bh(10)]) == 421 * 139 == 58519


@pytest.mark.parametrize("k", [6, 10, 14])
def test_mixed_orderings(k):
    assert leading_coefficient([TOF, bh(k)]) == 112 * (4 + 3 * k * (k - 1) // 2)
    assert leading_coefficient([bh(k), TOF]) == (16 + 9 * k * (k - 1) // 2) * 28
    assert leading_coefficient([TOF, bh(k), bh(k)]) == 1792 * (16 + 9 * k * (k - 1) // 2) * (4 + 3 * k * (k - 1) // 2)


@pytest.mark.parametrize("ks", [(2, 2), (2, 6), (6, 2), (10, 14), (2, 6, 10), (14, 2, 2)])
def test_k2_matches_special_form(ks):
    rounds = [bh(k) for k in ks]
    assert leading_coefficient(rounds) == special_k2_value(rounds)


def test_table_polynomials_exact():
    for row in table2_rows():
        for k in (6, 10, 14):
            ks = (k,) * row["nbh"]
            assert leading_coefficient(row["build"](ks)) == row["printed"](ks)


def test_large_k_limits():
    for row in table2_rows():
        ks = (50,) * row["nbh"]
        assert abs(leading_coefficient(row["build"](ks)) / row["c_limit"](ks) - 1) < 0.15
        assert abs(union_bound_ratio(row["build"](ks)) / row["ratio_limit"](ks) - 1) < 0.15


def test_zero_noise():
    for r in track_module_checked([bh(6), bh(2)], 0.0):
        assert r.p_suc == 1.0 and r.eps_g == 0.0
    for r in track_block_checked([bh(6), bh(2)], 0.0):
        assert r.eps_g == 0.0 and r.per_state_error == 0.0


def _undetected(code, w):
    return sum(1 for s in itertools.combinations(range(code.n), w)
               if (r := code.check(sum(1 << i for i in s)))[0] and r[1])


@pytest.mark.parametrize("code", [bh(2), bh(6), TOF], ids=lambda c: c.label)
def test_one_round_residual(code):
    # exact minus theorem is A_3 eps^3 + O(eps^4), A_3 the undetected weight-3 count
    a3 = _undetected(code, 3)
    for eps in (1e-3, 1e-4):
        exact = block_distribution(code, eps, w_max=6).global_error
        thm = track_module_checked([code], eps)[0].eps_g
        res = exact - thm
        assert abs(res - a3 * eps**3) < math.comb(code.n, 4) * eps**4


def test_block_per_qubit_leading_order():
    eps = 1e-5
    rep = track_block_checked([bh(2)], eps)[0]
    assert math.isclose(rep.per_state_error / eps**2, 7, rel_tol=1e-3)
    d = block_distribution(bh(2), 1e-2)
    assert math.isclose(track_block_checked([bh(2)], 1e-2)[0].per_state_error, d.marginal_qubit_error[0],
                        rel_tol=1e-9)


def test_block_three_round_estimate():
    rep = track_block_checked([bh(10)] * 3, 1e-3)[-1]
    assert 1e-12 < rep.eps_g < 1e-10


def test_cost_examples():
    assert cost([reed_muller_code()], 0.0, "block") == 15
    d = block_distribution(bh(2), 0.01)
    assert math.isclose(cost([bh(2)], 0.01, "block"), 14 / (2 * d.p_success), rel_tol=1e-12)
    with pytest.raises(ValueError):
        cost([bh(2)], 0.01, "tile")


def test_rm_rejected_in_module_mode():
    with pytest.raises(ValueError):
        track_module_checked([reed_muller_code(), bh(2)], 1e-3)


def test_report_roundtrip():
    reps = track_block_checked([bh(6), bh(10)], 1e-3)
    text = serialize_reports(reps, {"mode": "block"})
    parsed = parse_reports(text)
    assert [int(p["level"]) for p in parsed] == [1, 2]
    assert float(parsed[1]["eps_g"]) == pytest.approx(reps[1].eps_g, rel=1e-6)


def test_deep_levels_stay_finite():
    st3 = tracking_states([bh(50)] * 3, 1e-4)[-1]
    assert math.isfinite(st3.log_b) and st3.b < 1e-40
    assert track_module_checked([bh(50)] * 3, 1e-4)[-1].eps_g > 0


ks = st.sampled_from([2, 6, 10, 14, 18])


@settings(max_examples=40, deadline=None)
@given(st.lists(ks, min_size=1, max_size=3), st.floats(1e-5, 3e-3))
def test_module_never_worse_than_union_bound(rounds, eps):
    codes = [bh(k) for k in rounds]
    mod = track_module_checked(codes, eps)[-1].eps_g
    blk = track_block_checked(codes, eps)[-1].eps_g
    assert mod <= blk * (1 + 1e-9)


@settings(max_examples=30, deadline=None)
@given(st.lists(ks, min_size=2, max_size=3), st.floats(1e-5, 1e-3))
def test_error_decreases_with_level(rounds, eps):
    reps = track_module_checked([bh(k) for k in rounds], eps)
    errs = [eps] + [r.eps_g for r in reps]
    assert all(b < a for a, b in zip(errs, errs[1:]))


@settings(max_examples=30, deadline=None)
@given(st.lists(ks, min_size=1, max_size=3))
def test_coefficient_is_product_formula(rounds):
    codes = [bh(k) for k in rounds]
    l = len(codes)
    expected = math.prod(eta(c).power_sum(2 ** (l - j)) for j, c in enumerate(codes, start=1))
    assert leading_coefficient(codes) == expected
