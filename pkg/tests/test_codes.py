import math

import pytest
from hypothesis import given, settings, strategies as st

from msdfactory.codes import (
    Kind, TailTooLarge, block_distribution, bravyi_haah, check_triorthogonal, closed_form_sum_eta_power,
    code_invariant_violations, eta, exact_block_error, load_golden, macwilliams_distribution,
    protocol_from_name, reed_muller_code, state_error_probability, success_probability, sum_eta_power,
    toffoli_code, weight_enumerator_undetected,
)
from msdfactory.gf2 import BinaryMatrix, in_row_span, nullspace_basis, same_row_span

BH_SMALL = [2, 6, 10, 14]


def test_bh2_shape_and_printed_structure():
    c = bravyi_haah(2)
    assert (c.n, c.k, c.g0.rows) == (14, 2, 3)
    gp = load_golden("gperp_bh2")
    assert same_row_span(nullspace_basis(c.g), gp)
    # G0 = M G_perp and G1 = W + Q G_perp with the printed M and Q
    assert same_row_span(load_golden("m_bh2") @ gp, c.g0)
    g1 = c.g1
    for j in range(2):
        assert in_row_span(gp, g1.packed_rows[j] ^ (BinaryMatrix.from_support([[0, 1, 5 + 3 * (j + 1)]], 14)).packed_rows[0])


def test_bh6_dual_to_printed_matrix():
    c = bravyi_haah(6)
    assert c.n == 26
    gp = load_golden("gperp_bh6")
    assert gp.shape == (17, 26)
    assert same_row_span(nullspace_basis(c.g), gp)


@pytest.mark.parametrize("k", BH_SMALL + [18, 30, 50])
def test_bh_invariants(k):
    c = bravyi_haah(k)
    assert c.n == 3 * k + 8
    assert check_triorthogonal(c.g0, c.g1)
    assert code_invariant_violations(c) == []


@pytest.mark.parametrize("k", [0, 1, 3, 4, 8, -2])
def test_bh_rejects_bad_k(k):
    with pytest.raises(ValueError):
        bravyi_haah(k)


def test_toffoli_as_printed():
    c = toffoli_code()
    assert (c.n, c.k, c.states_out) == (8, 3, 1)
    assert c.g1.row_weights() == [4, 4, 4]
    assert c.g0 == BinaryMatrix([[1] * 8])
    for j in range(8):
        assert c.check(1 << j)[0] is False
    assert not check_triorthogonal(c.g0, c.g1)
    assert code_invariant_violations(c) == []


def test_reed_muller_as_printed():
    c = reed_muller_code()
    assert (c.n, c.k) == (15, 1)
    assert c.g0.row_weights() == [8, 8, 8, 8]
    assert c.g1.row_weights() == [15]
    assert check_triorthogonal(c.g0, c.g1)
    assert eta(c).total() == 35 and eta(c).weight == 3
    assert c.suppression_order == 3


def test_protocol_names():
    assert protocol_from_name("bh:10") is bravyi_haah(10)
    assert protocol_from_name("BH6").label == "BH6"
    assert protocol_from_name("tof").kind is Kind.TOFFOLI
    assert protocol_from_name("rm").kind is Kind.REED_MULLER
    for bad in ("bh:x", "steane", "bh:3"):
        with pytest.raises(ValueError):
            protocol_from_name(bad)


def test_eta_examples():
    e6 = eta(bravyi_haah(6))
    assert len(e6.counts) == 16
    assert all(v == 3 for y, v in e6.counts.items() if y.bit_count() == 2)
    assert e6[(1 << 6) - 1] == 4
    assert eta(bravyi_haah(2)).counts == {3: 7}
    et = eta(toffoli_code())
    assert sorted(et.counts) == list(range(1, 8)) and set(et.counts.values()) == {4}


def test_sum_eta_examples():
    assert sum_eta_power(bravyi_haah(6), 1) == 49
    assert sum_eta_power(bravyi_haah(2), 3) == 343
    assert sum_eta_power(toffoli_code(), 2) == 112
    with pytest.raises(ValueError):
        sum_eta_power(bravyi_haah(2), 0)


@pytest.mark.parametrize("k", BH_SMALL + [18])
def test_eta_closed_forms(k):
    c = bravyi_haah(k)
    for m in (1, 2, 3, 4):
        assert sum_eta_power(c, m) == closed_form_sum_eta_power(c, m)
    e = eta(c)
    # every output participates in 3k+1 undetected pairs (7 at k=2)
    for j in range(k):
        assert e.marginal(1 << j) == (7 if k == 2 else 3 * k + 1)


def test_zero_noise_distribution():
    for c in (bravyi_haah(2), toffoli_code(), reed_muller_code()):
        d = block_distribution(c, 0.0)
        assert d.p_success == 1.0 and d.p_out == {0: 1.0}


def test_bh2_exhaustive_matches_enumerator():
    d = block_distribution(bravyi_haah(2), 0.01)
    assert abs(sum(d.p_out.values()) - 1) < 1e-12
    assert abs(d.global_error - weight_enumerator_undetected(2, 0.01)) < 1e-12
    m = macwilliams_distribution(bravyi_haah(2), 0.01)
    for y in range(4):
        assert abs(m.p_out.get(y, 0.0) - d.p_out.get(y, 0.0)) < 1e-12


def test_rm_leading_order():
    d = block_distribution(reed_muller_code(), 0.01)
    assert abs(d.global_error / (35 * 0.01**3) - 1) < 0.1


def test_bh6_truncated_within_tail_bound():
    d = block_distribution(bravyi_haah(6), 0.005, w_max=6)
    ref = weight_enumerator_undetected(6, 0.005)
    assert abs(d.global_error - ref) <= d.tail_bound + 1e-12
    with pytest.raises(TailTooLarge):
        block_distribution(bravyi_haah(6), 0.05, w_max=2, tol=1e-9)


def test_leading_order_limit():
    eps = 1e-4
    for c in (bravyi_haah(2), bravyi_haah(6), toffoli_code()):
        d = block_distribution(c, eps, w_max=4)
        ratio = d.global_error * d.p_success / eps**2 / eta(c).total()
        assert abs(ratio - 1) < 0.05


def test_marginals_consistent():
    d = block_distribution(bravyi_haah(6), 0.02)
    for j, m in enumerate(d.marginal_qubit_error):
        assert math.isclose(m, sum(p for y, p in d.p_out.items() if y >> j & 1), rel_tol=1e-12)


def test_state_error_keeps_precision_at_tiny_eps():
    # leading order s eps^order with no cancellation even far below machine precision
    assert math.isclose(state_error_probability(bravyi_haah(10), 1e-12, 1), 31e-24, rel_tol=1e-9)
    assert math.isclose(state_error_probability(reed_muller_code(), 1e-12, 1), 35e-36, rel_tol=1e-9)
    assert math.isclose(state_error_probability(toffoli_code(), 1e-10, 7), 28e-20, rel_tol=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([2, 6]), st.floats(1e-4, 0.2))
def test_state_error_matches_exhaustive(k, eps):
    c = bravyi_haah(k)
    d = block_distribution(c, eps)
    for j in range(k):
        assert math.isclose(state_error_probability(c, eps, 1 << j), d.marginal_qubit_error[j],
                            rel_tol=1e-9, abs_tol=1e-15)
    assert math.isclose(success_probability(c, eps), d.p_success, rel_tol=1e-12)
    assert math.isclose(exact_block_error(c, eps), d.global_error, rel_tol=1e-9, abs_tol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.3))
def test_distribution_normalised(eps):
    for c in (toffoli_code(), reed_muller_code()):
        d = block_distribution(c, eps)
        assert abs(sum(d.p_out.values()) - 1) < 1e-12
        assert 0 <= d.p_success <= 1
