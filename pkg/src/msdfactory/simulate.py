"""Monte Carlo factories under i.i.d. Z noise on raw states.

Every magic state is a small bit mask: one bit for a T state, three for a
Toffoli state.  A branch is the row of masks emitted by one module.  Under
the canonical firewall the ``n_l`` branches feeding a level-``l`` module
form an ``n_l x W`` array and block ``t`` reads column ``t``.

Two estimators are provided.  ``simulate_brute`` follows the plain
retry-until-pass recipe.  ``simulate_rare`` only simulates modules whose
inputs contain at least two corrupt branches (with one corrupt branch the
module always fails) and reweights by the exact probability of that event.

Random streams are keyed by ``(seed, stage, chunk)`` with a fixed chunk
size, so results do not depend on how many worker threads run the chunks.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.stats import binom

from .codes import Kind, ProtocolCode, exact_block_error
from .factory import FactorySpec, as_codes

THREADS_ENV = "MSDFACTORY_THREADS"
CHUNK = 4096


class InvalidPreselection(ValueError):
    """A preselected trial was asked to run with fewer than two corrupt branches."""


@dataclass(frozen=True)
class SimConfig:
    factory: FactorySpec | tuple[ProtocolCode, ...]
    eps: float
    trials: int
    seed: int
    method: str = "rare"
    shuffle: str = "canonical"
    chunk_size: int = CHUNK

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.eps < 0.5:
            raise ValueError("eps must lie in [0, 0.5)")
        if self.method not in ("brute", "rare"):
            raise ValueError("method must be 'brute' or 'rare'")
        if self.shuffle not in ("canonical", "random"):
            raise ValueError("shuffle must be 'canonical' or 'random'")
        if len(as_codes(self.factory)) not in (2, 3):
            raise ValueError("simulation supports 2 or 3 rounds")
        if any(c.kind is Kind.REED_MULLER for c in self.codes):
            raise ValueError("module-checked simulation covers BH and Toffoli rounds")

    @property
    def codes(self) -> list[ProtocolCode]:
        return as_codes(self.factory)

    def digest(self) -> str:
        blob = json.dumps(
            dict(codes=[c.label for c in self.codes], eps=self.eps, trials=self.trials, seed=self.seed,
                 method=self.method, shuffle=self.shuffle, chunk=self.chunk_size),
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class SimCounts:
    n_success: int = 0
    n_fail: int = 0
    n_error: int = 0
    eps_prev: float = 0.0
    n_last: int = 0
    method: str = "brute"
    firewall_checked: int = 0
    firewall_violations: int = 0
    one_corrupt_passed: int = 0

    @property
    def total(self) -> int:
        return self.n_success + self.n_fail + self.n_error

    def merge(self, other: "SimCounts") -> "SimCounts":
        for name in ("n_success", "n_fail", "n_error", "firewall_checked", "firewall_violations",
                     "one_corrupt_passed"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        return self

    def to_record(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SimEstimate:
    p_suc: float
    eps_glo: float
    stderr: float
    upper_bound: float | None = None
    p_num: float | None = None


# ---------------------------------------------------------------------------
# block and module evaluation on mask arrays


@dataclass(frozen=True)
class _Kernel:
    g0: tuple[np.ndarray, ...]
    g1: tuple[np.ndarray, ...]
    toffoli: bool
    n: int
    states_out: int


_KERNELS: dict = {}


def _kernel(code: ProtocolCode) -> _Kernel:
    key = (code.kind, code.param, code.g0, code.g1)
    if key not in _KERNELS:
        sup = lambda m: tuple(np.array(m.support(i), dtype=np.intp) for i in range(m.rows))
        _KERNELS[key] = _Kernel(sup(code.g0), sup(code.g1), code.kind is Kind.TOFFOLI, code.n, code.states_out)
    return _KERNELS[key]


def apply_blocks(code: ProtocolCode, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Run blocks on inputs ``x[..., n]`` (uint8 masks): (passed[...], outputs[..., states_out])."""
    kern = _kernel(code)
    syn = np.zeros(x.shape[:-1], dtype=np.uint8)
    for s in kern.g0:
        syn |= np.bitwise_xor.reduce(x[..., s], axis=-1)
    outs = [np.bitwise_xor.reduce(x[..., s], axis=-1) for s in kern.g1]
    if kern.toffoli:
        out = (outs[0] | (outs[1] << 1) | (outs[2] << 2))[..., None].astype(np.uint8)
    else:
        out = np.stack(outs, axis=-1).astype(np.uint8)
    return syn == 0, out


def firewall_shuffle(branches: np.ndarray, policy: str = "canonical", rng: np.random.Generator | None = None) -> np.ndarray:
    """Block inputs for a module: ``result[..., t, i]`` is qubit ``t`` of branch ``i``.

    ``branches`` has shape ``(..., n_l, W)``.  The random policy first
    permutes the qubits of every branch independently.
    """
    b = np.asarray(branches)
    if b.ndim < 2:
        raise ValueError("branches must be at least 2-D (n_l, width)")
    if policy == "random":
        if rng is None:
            raise ValueError("random policy needs an rng")
        perm = np.argsort(rng.random(b.shape), axis=-1)
        b = np.take_along_axis(b, perm, axis=-1)
    elif policy != "canonical":
        raise ValueError(f"unknown shuffle policy {policy!r}")
    return np.swapaxes(b, -1, -2)


def firewall_shuffle_lists(branches: Sequence[Sequence[int]]) -> list[list[int]]:
    """List form of the canonical shuffle; raises on unequal widths."""
    widths = {len(b) for b in branches}
    if len(widths) > 1:
        raise ValueError("all branches must have the same width")
    return [list(col) for col in zip(*branches)]


def evaluate_modules(
    code: ProtocolCode, branches: np.ndarray, policy: str = "canonical", rng=None
) -> tuple[np.ndarray, np.ndarray]:
    """Check whole modules: (module passed[M], output branch[M, W * states_out])."""
    x = firewall_shuffle(branches, policy, rng)
    passed, out = apply_blocks(code, x)
    return passed.all(axis=-1), out.reshape(out.shape[0], -1)


# ---------------------------------------------------------------------------
# samplers


def _place(rng: np.random.Generator, weights: np.ndarray, n: int) -> np.ndarray:
    """Rows of length ``n`` with ``weights[i]`` ones at uniformly random places."""
    keys = rng.random((len(weights), n))
    ranks = np.argsort(np.argsort(keys, axis=1), axis=1)
    return (ranks < weights[:, None]).astype(np.uint8)


def _truncated_binomial(rng: np.random.Generator, n: int, p: float, size: int, low: int = 2) -> np.ndarray:
    ks = np.arange(low, n + 1)
    pmf = binom.pmf(ks, n, p)
    total = pmf.sum()
    if not total > 0:
        # far tail underflow: the smallest admissible weight dominates
        return np.full(size, low)
    return rng.choice(ks, size=size, p=pmf / total)


def successful_level1(rng: np.random.Generator, code: ProtocolCode, eps: float, count: int) -> np.ndarray:
    """Outputs of ``count`` passing round-1 blocks, retrying failed attempts."""
    n = code.n
    chunks, have = [], 0
    p_keep = max(0.05, (1 - eps) ** n)
    while have < count:
        size = max(256, int((count - have) / p_keep * 1.1))
        w = rng.binomial(n, eps, size)
        out = np.zeros((size, code.states_out), dtype=np.uint8)
        keep = w == 0
        heavy = np.flatnonzero(w >= 2)
        if heavy.size:
            passed, o = apply_blocks(code, _place(rng, w[heavy], n))
            keep[heavy[passed]] = True
            out[heavy[passed]] = o[passed]
        out = out[keep]
        chunks.append(out)
        have += len(out)
    return np.concatenate(chunks)[:count]


def corrupt_level1(rng: np.random.Generator, code: ProtocolCode, eps: float, count: int) -> np.ndarray:
    """Round-1 outputs conditioned on passing with a nonzero output."""
    chunks, have = [], 0
    while have < count:
        size = max(256, 4 * (count - have))
        w = _truncated_binomial(rng, code.n, eps, size)
        passed, out = apply_blocks(code, _place(rng, w, code.n))
        good = passed & out.any(axis=1)
        chunks.append(out[good])
        have += int(good.sum())
    return np.concatenate(chunks)[:count]


def successful_level(rng, codes: Sequence[ProtocolCode], eps: float, count: int, policy: str) -> np.ndarray:
    """Outputs of ``count`` passing modules at level ``len(codes)``."""
    if len(codes) == 1:
        return successful_level1(rng, codes[0], eps, count)
    code = codes[-1]
    chunks, have = [], 0
    while have < count:
        m = max(64, int((count - have) * 1.2))
        inputs = successful_level(rng, codes[:-1], eps, m * code.n, policy)
        passed, out = evaluate_modules(code, inputs.reshape(m, code.n, -1), policy, rng)
        chunks.append(out[passed])
        have += int(passed.sum())
    return np.concatenate(chunks)[:count]


@dataclass
class _Outcome:
    passed: np.ndarray
    out: np.ndarray
    n_corrupt: np.ndarray
    fw_checked: int = 0
    fw_violations: int = 0


def preselected_modules(
    rng, code: ProtocolCode, e_prev: float, corrupt: Callable[[np.random.Generator, int], np.ndarray],
    count: int, width: int, policy: str, n_corrupt: np.ndarray | None = None,
) -> _Outcome:
    """Modules whose inputs hold ``J >= 2`` corrupt branches, ``J`` from the conditional binomial."""
    n = code.n
    j = _truncated_binomial(rng, n, e_prev, count) if n_corrupt is None else np.asarray(n_corrupt)
    if np.any(j < 2):
        raise InvalidPreselection("preselected trials need at least two corrupt branches")
    where = _place(rng, j, n).astype(bool)
    branches = np.zeros((count, n, width), dtype=np.uint8)
    branches[where] = corrupt(rng, int(j.sum()))
    passed, out = evaluate_modules(code, branches, policy, rng)
    two = np.flatnonzero(j == 2)
    checked = violations = 0
    if two.size:
        pair = branches[two][where[two]].reshape(two.size, 2, width)
        same = (pair[:, 0] == pair[:, 1]).all(axis=1)
        checked = int(two.size)
        violations = int((passed[two] & ~same).sum())
    return _Outcome(passed, out, j, checked, violations)


def _classify(passed: np.ndarray, out: np.ndarray, counts: SimCounts) -> None:
    err = passed & out.any(axis=1)
    counts.n_error += int(err.sum())
    counts.n_success += int((passed & ~err).sum())
    counts.n_fail += int((~passed).sum())


def _chunks(trials: int, size: int) -> list[tuple[int, int]]:
    return [(c, min(size, trials - c * size)) for c in range(math.ceil(trials / size))]


def _rng(seed: int, stage: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), stage, chunk]))


def _run_chunks(fn: Callable[[int, int], SimCounts], trials: int, size: int) -> SimCounts:
    jobs = _chunks(trials, size)
    threads = max(1, int(os.environ.get(THREADS_ENV, "1") or 1))
    if threads == 1:
        parts = [fn(c, m) for c, m in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda cm: fn(*cm), jobs))
    total = SimCounts()
    for p in parts:
        total.merge(p)
    return total


# ---------------------------------------------------------------------------
# public estimators


def simulate_brute(config: SimConfig) -> SimCounts:
    """Retry lower-level modules until they pass, then classify the top module."""
    codes = config.codes
    top = codes[-1]

    def chunk(c: int, m: int) -> SimCounts:
        rng = _rng(config.seed, 0, c)
        counts = SimCounts(method="brute", n_last=top.n)
        inputs = successful_level(rng, codes[:-1], config.eps, m * top.n, config.shuffle)
        branches = inputs.reshape(m, top.n, -1)
        passed, out = evaluate_modules(top, branches, config.shuffle, rng)
        _classify(passed, out, counts)
        corrupt = branches.any(axis=2)
        nc = corrupt.sum(axis=1)
        counts.one_corrupt_passed = int((passed & (nc == 1)).sum())
        two = np.flatnonzero(nc == 2)
        if two.size:
            pair = branches[two][corrupt[two]].reshape(two.size, 2, -1)
            same = (pair[:, 0] == pair[:, 1]).all(axis=1)
            counts.firewall_checked = int(two.size)
            counts.firewall_violations = int((passed[two] & ~same).sum())
        return counts

    return _run_chunks(chunk, config.trials, config.chunk_size)


def _corrupt_level2_sampler(codes, eps, e1, policy):
    """Sampler of level-2 module outputs conditioned on passing with an error."""
    first, second = codes

    def sample(rng, count):
        chunks, have = [], 0
        width = first.states_out
        while have < count:
            size = max(256, 8 * (count - have))
            res = preselected_modules(
                rng, second, e1, lambda r, k: corrupt_level1(r, first, eps, k), size, width, policy
            )
            good = res.passed & res.out.any(axis=1)
            chunks.append(res.out[good])
            have += int(good.sum())
        return np.concatenate(chunks)[:count]

    return sample


def simulate_rare(config: SimConfig, round2_stats: SimCounts | None = None) -> SimCounts:
    """Preselected simulation of the top module (2 or 3 rounds).

    Two rounds use the exact round-1 block error.  Three rounds take the
    round-2 branch error from ``round2_stats`` (a two-round rare run); when
    it is missing one is run with the same trial budget.
    """
    codes = config.codes
    top = codes[-1]
    if len(codes) == 2:
        e_prev = exact_block_error(codes[0], config.eps)
        width = codes[0].states_out
        corrupt = lambda rng, k: corrupt_level1(rng, codes[0], config.eps, k)
    else:
        if round2_stats is None:
            sub = SimConfig(tuple(codes[:2]), config.eps, config.trials, config.seed, "rare", config.shuffle,
                            config.chunk_size)
            round2_stats = simulate_rare(sub)
        e_prev = estimate(round2_stats).eps_glo
        e1 = exact_block_error(codes[0], config.eps)
        width = codes[0].states_out * codes[1].states_out
        corrupt = _corrupt_level2_sampler(codes[:2], config.eps, e1, config.shuffle)
    if e_prev <= 0:
        raise InvalidPreselection("lower-level branch error is zero; nothing to preselect")

    def chunk(c: int, m: int) -> SimCounts:
        rng = _rng(config.seed, len(codes), c)
        counts = SimCounts(eps_prev=e_prev, n_last=top.n, method="rare")
        res = preselected_modules(rng, top, e_prev, corrupt, m, width, config.shuffle)
        _classify(res.passed, res.out, counts)
        counts.firewall_checked = res.fw_checked
        counts.firewall_violations = res.fw_violations
        return counts

    out = _run_chunks(chunk, config.trials, config.chunk_size)
    out.eps_prev, out.n_last, out.method = e_prev, top.n, "rare"
    return out


def simulate(config: SimConfig, round2_stats: SimCounts | None = None) -> SimCounts:
    if config.method == "brute":
        return simulate_brute(config)
    return simulate_rare(config, round2_stats)


def p_num(e: float, n: int) -> float:
    """Probability that at least two of ``n`` branches are corrupt."""
    return float(binom.sf(1, n, e))


def estimate(counts: SimCounts, n3: int | None = None) -> SimEstimate:
    """Success probability and global error of the top level.

    Rare counts: ``p_suc = (1-e)^n + p_num (a + b)`` and
    ``eps = b p_num / p_suc`` with ``a, b`` the success and error fractions
    among preselected trials.  With no errors observed the estimate is 0
    and ``upper_bound`` carries the rule-of-three bound.
    """
    total = counts.total
    if total == 0:
        raise ValueError("no completed trials")
    if counts.method == "brute":
        passed = counts.n_success + counts.n_error
        p_suc = passed / total
        if passed == 0:
            return SimEstimate(0.0, 0.0, 0.0, upper_bound=1.0)
        eps = counts.n_error / passed
        se = math.sqrt(eps * (1 - eps) / passed)
        return SimEstimate(p_suc, eps, se, 3 / passed if counts.n_error == 0 else None)
    n = counts.n_last if n3 is None else n3
    e = counts.eps_prev
    pn = p_num(e, n)
    a, b = counts.n_success / total, counts.n_error / total
    p_suc = (1 - e) ** n + pn * (a + b)
    eps = b * pn / p_suc
    se = math.sqrt(b * (1 - b) / total) * pn / p_suc
    ub = 3 / total * pn / p_suc if counts.n_error == 0 else None
    return SimEstimate(p_suc, eps, se, ub, pn)


def results_record(config: SimConfig, counts: SimCounts, est: SimEstimate) -> dict:
    """One line of the results log."""
    return dict(config=config.digest(), factory=[c.label for c in config.codes], eps=config.eps,
                trials=config.trials, seed=config.seed, method=config.method, counts=counts.to_record(),
                estimate=asdict(est))


def append_results(path: str, record: dict) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")
