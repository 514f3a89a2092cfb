import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom

from msdfactory.codes import bravyi_haah as bh, exact_block_error, toffoli_code
from msdfactory.factory import FactorySpec
from msdfactory.simulate import (
    InvalidPreselection, SimConfig, SimCounts, append_results, apply_blocks, estimate, evaluate_modules,
    firewall_shuffle, firewall_shuffle_lists, p_num, preselected_modules, results_record, simulate,
    simulate_brute, simulate_rare,
)
from msdfactory.tracking import track_module_checked


def cfg(ks, eps, trials, seed=7, method="rare", **kw):
    return SimConfig(tuple(bh(k) for k in ks), eps, trials, seed, method, **kw)


def test_shuffle_canonical_layout():
    branches = np.arange(12).reshape(3, 4)
    x = firewall_shuffle(branches)
    assert x.shape == (4, 3)
    for t in range(4):
        assert list(x[t]) == [branches[i, t] for i in range(3)]
    assert firewall_shuffle_lists([[1], [0], [1]]) == [[1, 0, 1]]
    with pytest.raises(ValueError):
        firewall_shuffle_lists([[1, 0], [1]])
    with pytest.raises(ValueError):
        firewall_shuffle(np.zeros(3), "canonical")


def test_identical_branches_hit_blocks_in_pairs():
    width = 6
    for pattern in itertools.product([0, 1], repeat=width):
        branches = np.zeros((14, width), dtype=np.uint8)
        branches[3] = branches[9] = pattern
        per_block = firewall_shuffle(branches).sum(axis=1)
        assert set(per_block.tolist()) <= {0, 2}


def test_random_policy_permutes_within_branch():
    rng = np.random.default_rng(0)
    b = np.array([[1, 0, 0, 0], [1, 1, 0, 0]])
    x = firewall_shuffle(b, "random", rng)
    assert x.sum(axis=0).tolist() == [1, 2]
    with pytest.raises(ValueError):
        firewall_shuffle(b, "random")


def test_different_patterns_never_pass():
    # two corrupt branches with unequal patterns: some block sees a single error
    code = bh(2)
    branches = np.zeros((1, 14, 2), dtype=np.uint8)
    branches[0, 0] = [1, 0]
    branches[0, 5] = [1, 1]
    passed, _ = evaluate_modules(code, branches)
    assert not passed[0]


def test_apply_blocks_matches_black_box():
    code = toffoli_code()
    xs = np.array([[(v >> i) & 1 for i in range(8)] for v in range(256)], dtype=np.uint8)
    passed, out = apply_blocks(code, xs)
    for v in range(256):
        ok, y = code.check(v)
        assert bool(passed[v]) == ok
        if ok:
            assert int(out[v, 0]) == y


def test_zero_noise_brute():
    c = simulate_brute(cfg([2, 2], 0.0, 500, method="brute"))
    assert c.n_success == 500 and c.n_error == 0 and c.n_fail == 0
    with pytest.raises(InvalidPreselection):
        simulate_rare(cfg([2, 2], 0.0, 100))


def test_preselection_requires_two():
    rng = np.random.default_rng(1)
    with pytest.raises(InvalidPreselection):
        preselected_modules(rng, bh(2), 1e-3, lambda r, k: np.ones((k, 2), np.uint8), 3, 2, "canonical",
                            n_corrupt=np.array([2, 1, 3]))


def test_config_validation():
    with pytest.raises(ValueError):
        cfg([2, 2], 1e-3, 0)
    with pytest.raises(ValueError):
        cfg([2], 1e-3, 10)
    with pytest.raises(ValueError):
        cfg([2, 2], 1e-3, 10, method="exact")
    with pytest.raises(ValueError):
        cfg([2, 2], 1e-3, 10, shuffle="zigzag")
    with pytest.raises(ValueError):
        cfg([2, 2], 0.7, 10)


def test_determinism_and_thread_independence(monkeypatch):
    c = cfg([2, 6], 1e-2, 3000, seed=11, chunk_size=512)
    a = simulate(c)
    b = simulate(c)
    monkeypatch.setenv("MSDFACTORY_THREADS", "4")
    t = simulate(c)
    assert a.to_record() == b.to_record() == t.to_record()
    other = simulate(cfg([2, 6], 1e-2, 3000, seed=12, chunk_size=512))
    assert other.to_record() != a.to_record()


def test_p_num_closed_form():
    e, n = 1e-4, 14
    ref = 1 - (1 - e) ** n - n * e * (1 - e) ** (n - 1)
    assert math.isclose(p_num(e, n), ref, rel_tol=1e-6)
    assert p_num(0.0, 14) == 0.0


def test_estimate_synthetic():
    counts = SimCounts(n_success=50, n_fail=40, n_error=10, eps_prev=1e-4, n_last=14, method="rare")
    est = estimate(counts)
    pn = binom.sf(1, 14, 1e-4)
    p_suc = (1 - 1e-4) ** 14 + pn * 0.6
    assert math.isclose(est.p_suc, p_suc, rel_tol=1e-12)
    assert math.isclose(est.eps_glo, 0.1 * pn / p_suc, rel_tol=1e-12)


def test_estimate_zero_prev_and_rule_of_three():
    est = estimate(SimCounts(n_success=10, eps_prev=0.0, n_last=14, method="rare"))
    assert est.p_suc == 1.0 and est.eps_glo == 0.0 and est.p_num == 0.0
    est = estimate(SimCounts(n_success=60, n_fail=40, eps_prev=1e-3, n_last=14, method="rare"))
    assert est.eps_glo == 0.0
    assert math.isclose(est.upper_bound, 3 / 100 * est.p_num / est.p_suc)
    with pytest.raises(ValueError):
        estimate(SimCounts(method="rare"))


def test_brute_and_rare_agree():
    eps = 2e-2
    brute = estimate(simulate(cfg([2, 2], eps, 60000, seed=3, method="brute")))
    rare = estimate(simulate(cfg([2, 2], eps, 20000, seed=3)))
    sigma = math.hypot(brute.stderr, rare.stderr)
    assert abs(brute.eps_glo - rare.eps_glo) < 3 * sigma
    assert abs(rare.p_suc - brute.p_suc) < 0.02


def test_rare_matches_theorem_small():
    eps = 1e-2
    est = estimate(simulate(cfg([2, 6], eps, 30000, seed=5)))
    thm = track_module_checked([bh(2), bh(6)], eps)[-1].eps_g
    assert abs(est.eps_glo / thm - 1) < 0.1


def test_firewall_and_single_error_invariants():
    c = simulate(cfg([6, 2], 3e-2, 20000, seed=9, method="brute"))
    assert c.firewall_checked > 0 and c.firewall_violations == 0
    assert c.one_corrupt_passed == 0
    r = simulate(cfg([2, 2], 1e-2, 20000, seed=9))
    assert r.firewall_checked > 0 and r.firewall_violations == 0


def test_results_log(tmp_path):
    c = cfg([2, 2], 1e-2, 2000)
    counts = simulate(c)
    path = tmp_path / "log.jsonl"
    append_results(str(path), results_record(c, counts, estimate(counts)))
    append_results(str(path), results_record(c, counts, estimate(counts)))
    lines = path.read_text().splitlines()
    assert len(lines) == 2 and json.loads(lines[0])["config"] == c.digest()


def test_factory_spec_input():
    spec = FactorySpec.parse("bh:2,bh:2")
    c = SimConfig(spec, 1e-2, 1000, 1)
    assert [x.label for x in c.codes] == ["BH2", "BH2"]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**14 - 1), st.integers(0, 2**14 - 1))
def test_two_corrupt_branch_firewall_lemma(a, b):
    # whole-module check for BH2 at level 2 fed with width-14 patterns a, b in two branches
    code = bh(2)
    width = 14
    pa = [(a >> i) & 1 for i in range(width)]
    pb = [(b >> i) & 1 for i in range(width)]
    if not any(pa) or not any(pb):
        return
    branches = np.zeros((1, code.n, width), dtype=np.uint8)
    branches[0, 1], branches[0, 8] = pa, pb
    passed, _ = evaluate_modules(code, branches)
    if pa != pb:
        assert not passed[0]


def test_exact_round_one_error_used():
    r = simulate(cfg([2, 2], 1e-2, 100))
    assert r.eps_prev == exact_block_error(bh(2), 1e-2)
