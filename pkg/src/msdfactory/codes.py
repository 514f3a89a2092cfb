"""Block protocols as G-matrix black boxes and their exact single-round behaviour.

A protocol takes ``n`` noisy magic states whose Z-error pattern is ``x``.
It succeeds when ``G0 x = 0`` and then hands on the output error pattern
``y = G1 x``.  Everything below is derived from that rule under i.i.d.
Z noise of strength ``eps`` on the inputs.
"""
from __future__ import annotations

import enum
import functools
import itertools
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping

import numpy as np
from scipy.stats import binom

from .gf2 import BinaryMatrix, in_row_span, nullspace_basis, rank, row_reduce, same_row_span, solve_linear


class Kind(str, enum.Enum):
    BRAVYI_HAAH = "bh"
    TOFFOLI = "toffoli"
    REED_MULLER = "rm"


class TailTooLarge(ValueError):
    """Weight truncation would drop more probability than the caller allows."""


def load_golden(name: str) -> BinaryMatrix:
    """Load one of the packaged matrix literals (``data/<name>.txt``)."""
    text = resources.files("msdfactory").joinpath("data", f"{name}.txt").read_text()
    return BinaryMatrix.from_text(text)


@dataclass(frozen=True)
class ProtocolCode:
    """An ``n -> k`` block protocol.

    ``k`` is the number of rows of ``g1``.  For the Toffoli protocol those
    three rows describe a single output Toffoli state, so ``states_out`` is 1
    there and equals ``k`` otherwise.
    """

    g0: BinaryMatrix
    g1: BinaryMatrix
    kind: Kind
    param: int | None = None

    def __post_init__(self):
        if self.g0.cols != self.g1.cols:
            raise ValueError("g0 and g1 must have the same number of columns")

    @property
    def n(self) -> int:
        return self.g0.cols

    @property
    def k(self) -> int:
        return self.g1.rows

    @property
    def g(self) -> BinaryMatrix:
        return self.g0.vstack(self.g1)

    @property
    def states_out(self) -> int:
        return 1 if self.kind is Kind.TOFFOLI else self.k

    @property
    def output_groups(self) -> tuple[int, ...]:
        """Packed masks over ``y`` bits, one per output magic state."""
        if self.kind is Kind.TOFFOLI:
            return ((1 << self.k) - 1,)
        return tuple(1 << j for j in range(self.k))

    @property
    def label(self) -> str:
        if self.kind is Kind.BRAVYI_HAAH:
            return f"BH{self.param}"
        return "Tof" if self.kind is Kind.TOFFOLI else "RM"

    @property
    def suppression_order(self) -> int:
        """Smallest input weight that can pass undetected."""
        return _min_undetected_weight(self)

    def column_syndromes(self) -> tuple[list[int], list[int]]:
        """Per-input packed columns of ``g0`` and ``g1``."""
        t0, t1 = self.g0.transpose(), self.g1.transpose()
        return list(t0.packed_rows), list(t1.packed_rows)

    def check(self, x: int) -> tuple[bool, int]:
        """Apply the block to a packed error pattern: (passed, y)."""
        return self.g0.apply(x) == 0, self.g1.apply(x)


# ---------------------------------------------------------------------------
# constructors


def check_triorthogonal(g0: BinaryMatrix, g1: BinaryMatrix) -> bool:
    """Pair and triple conditions on the stacked rows of ``G``.

    For rows ``f, g``: ``(f, g) = 1`` exactly when ``f = g`` is a row of
    ``g1``; every product of three distinct rows has even weight.
    """
    rows = list(g0.packed_rows) + list(g1.packed_rows)
    nb = g0.rows
    for i, a in enumerate(rows):
        for j in range(i, len(rows)):
            want = 1 if (i == j and i >= nb) else 0
            if (a & rows[j]).bit_count() % 2 != want:
                return False
    for a, b, c in itertools.combinations(rows, 3):
        if (a & b & c).bit_count() % 2:
            return False
    return True


def _bh_w_matrix(k: int) -> BinaryMatrix:
    # qubits 1, 2 and the output site 6+3j (1-based) for output j
    return BinaryMatrix.from_support([[0, 1, 5 + 3 * j] for j in range(1, k + 1)], 3 * k + 8)


def _validate_bh_k(k: int) -> None:
    if not isinstance(k, (int, np.integer)) or k < 2 or k % 4 != 2:
        raise ValueError(f"Bravyi-Haah parameter must satisfy k = 2 mod 4 and k >= 2, got {k!r}")


@functools.lru_cache(maxsize=None)
def bravyi_haah(k: int) -> ProtocolCode:
    """The ``(3k+8) -> k`` Bravyi-Haah block code, built as the dual of its sparse ``G_perp``.

    ``G0`` spans the self-orthogonal part of that dual; ``G1`` row ``j`` is
    the dual vector in the coset ``W_j + span(G_perp)``.
    """
    _validate_bh_k(k)
    from .realization import build_g_perp

    gp = build_g_perp(k)
    dual = nullspace_basis(gp)
    radical = nullspace_basis(dual @ dual.T)
    g0, _ = row_reduce(radical @ dual)
    w = _bh_w_matrix(k)
    # G_perp (W + Q G_perp)^T = 0  <=>  (G_perp G_perp^T) Q^T = G_perp W^T
    q_t = solve_linear(gp @ gp.T, gp @ w.T, side="right")
    g1 = w + q_t.T @ gp
    if k == 2:
        # same spans; take the printed presentation so its M and Q are exact witnesses
        printed0 = load_golden("m_bh2") @ gp
        printed1 = w + load_golden("q_bh2") @ gp
        same_cosets = all(in_row_span(g0, a ^ b) for a, b in zip(printed1.packed_rows, g1.packed_rows))
        if same_row_span(printed0, g0) and same_cosets:
            g0, g1 = printed0, printed1
    code = ProtocolCode(g0=g0, g1=g1, kind=Kind.BRAVYI_HAAH, param=int(k))
    if g0.rows != 3 or not check_triorthogonal(g0, g1):
        raise AssertionError(f"Bravyi-Haah construction failed for k={k}")
    return code


@functools.lru_cache(maxsize=None)
def toffoli_code() -> ProtocolCode:
    """8 T states in, one Toffoli state out."""
    g = load_golden("g_tof")
    return ProtocolCode(g0=g.select_rows([3]), g1=g.select_rows([0, 1, 2]), kind=Kind.TOFFOLI)


@functools.lru_cache(maxsize=None)
def reed_muller_code() -> ProtocolCode:
    """The punctured 15-to-1 Reed-Muller protocol."""
    g = load_golden("g_rm")
    return ProtocolCode(g0=g.select_rows([0, 1, 2, 3]), g1=g.select_rows([4]), kind=Kind.REED_MULLER)


def protocol_from_name(name: str) -> ProtocolCode:
    """Parse ``bh:10``, ``bh10``, ``tof``/``toffoli`` or ``rm``."""
    s = name.strip().lower().replace(":", "").replace("_", "")
    if s in ("tof", "toffoli"):
        return toffoli_code()
    if s in ("rm", "reedmuller", "15to1"):
        return reed_muller_code()
    if s.startswith("bh"):
        try:
            k = int(s[2:])
        except ValueError:
            raise ValueError(f"cannot parse protocol {name!r}") from None
        return bravyi_haah(k)
    raise ValueError(f"unknown protocol {name!r}")


def code_invariant_violations(code: ProtocolCode) -> list[str]:
    problems = []
    if code.g1.cols != code.n:
        problems.append("g1 width differs from n")
    c0, _ = code.column_syndromes()
    if any(c == 0 for c in c0):
        problems.append("some single error is not detected")
    if code.kind is not Kind.TOFFOLI:
        if not check_triorthogonal(code.g0, code.g1):
            problems.append("G is not triorthogonal")
        dual = nullspace_basis(code.g)
        if not all(in_row_span(dual, r) for r in code.g0.packed_rows):
            problems.append("G0 is not contained in the dual of G")
    if rank(code.g) != code.g.rows:
        problems.append("G rows are linearly dependent")
    return problems


# ---------------------------------------------------------------------------
# weight-2 (lowest-order) error counting


@dataclass(frozen=True)
class EtaFunction:
    """Counts of lowest-weight undetected inputs, keyed by packed output ``y``.

    ``weight`` is the input weight that was counted (2 for BH and Toffoli,
    3 for Reed-Muller, which has no undetected pairs).
    """

    counts: Mapping[int, int]
    k: int
    weight: int = 2

    def __getitem__(self, y: int) -> int:
        return self.counts.get(y, 0)

    def total(self) -> int:
        return sum(self.counts.values())

    def power_sum(self, m: int) -> int:
        return sum(v**m for v in self.counts.values())

    def marginal(self, group: int) -> int:
        """Undetected inputs touching any output bit in ``group``."""
        return sum(v for y, v in self.counts.items() if y & group)

    def by_output_weight(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for y, v in self.counts.items():
            out.setdefault(y.bit_count(), []).append(v)
        return out


def _eta_at_weight(code: ProtocolCode, weight: int) -> dict[int, int]:
    c0, c1 = code.column_syndromes()
    counts: dict[int, int] = {}
    for combo in itertools.combinations(range(code.n), weight):
        s0 = 0
        for j in combo:
            s0 ^= c0[j]
        if s0:
            continue
        y = 0
        for j in combo:
            y ^= c1[j]
        if y:
            counts[y] = counts.get(y, 0) + 1
    return counts


@functools.lru_cache(maxsize=None)
def _min_undetected_weight(code: ProtocolCode) -> int:
    for w in range(2, code.n + 1):
        if _eta_at_weight(code, w):
            return w
    raise ValueError("code detects every error")


@functools.lru_cache(maxsize=None)
def eta(code: ProtocolCode, weight: int | None = None) -> EtaFunction:
    """Exhaustive count over ``C(n, w)`` inputs: ``G0 x = 0`` bins by ``G1 x``.

    ``y = 0`` is never stored.  With ``weight=None`` the lowest weight that
    has undetected inputs is used.
    """
    w = code.suppression_order if weight is None else weight
    return EtaFunction(counts=dict(_eta_at_weight(code, w)), k=code.k, weight=w)


def sum_eta_power(code: ProtocolCode, m: int) -> int:
    if m < 1:
        raise ValueError("m must be >= 1")
    return eta(code).power_sum(m)


def closed_form_sum_eta_power(code: ProtocolCode, m: int) -> int:
    """Closed forms for the power sums, used as an independent cross-check."""
    if code.kind is Kind.BRAVYI_HAAH:
        k = code.param
        if k == 2:
            return 7**m
        return 4**m + 3**m * k * (k - 1) // 2
    if code.kind is Kind.TOFFOLI:
        return 7 * 4**m
    return 35**m  # Reed-Muller: 35 weight-3 inputs, all flipping the single output


# ---------------------------------------------------------------------------
# exact single-block output distribution


@dataclass(frozen=True)
class OutputDistribution:
    p_success: float
    p_out: Mapping[int, float]
    marginal_qubit_error: tuple[float, ...]
    tail_bound: float = 0.0
    method: str = "exhaustive"
    groups: tuple[int, ...] = field(default=(), repr=False)

    @property
    def global_error(self) -> float:
        return 1.0 - self.p_out.get(0, 0.0)

    def state_errors(self) -> tuple[float, ...]:
        """Error probability of each output magic state (Toffoli: one state)."""
        return tuple(sum(p for y, p in self.p_out.items() if y & g) for g in self.groups)


def _finish(code: ProtocolCode, hist: np.ndarray, r0: int, tail: float, method: str) -> OutputDistribution:
    # hist indexed by (G0 x) | (G1 x) << r0
    # entries with zero G0 syndrome sit at multiples of 2**r0
    passed = hist.reshape(-1, 1 << r0)[:, 0]
    p_succ = float(passed.sum())
    if p_succ <= 0:
        raise ZeroDivisionError("success probability vanished")
    p_out = {int(y): float(v) / p_succ for y, v in enumerate(passed) if v > 0}
    marg = tuple(sum(p for y, p in p_out.items() if (y >> j) & 1) for j in range(code.k))
    return OutputDistribution(p_succ, p_out, marg, tail, method, code.output_groups)


def _combined_columns(code: ProtocolCode) -> tuple[np.ndarray, int]:
    c0, c1 = code.column_syndromes()
    r0 = code.g0.rows
    return np.array([a | (b << r0) for a, b in zip(c0, c1)], dtype=np.int64), r0


def _exhaustive(code: ProtocolCode, eps: float) -> OutputDistribution:
    n = code.n
    if n > 26:
        raise ValueError(f"exhaustive enumeration is limited to n <= 26 (n={n})")
    cols, r0 = _combined_columns(code)
    nbins = 1 << (r0 + code.k)
    low = min(n, 16)
    # syndrome and weight of every pattern on the low block, by doubling
    syn_low = np.zeros(1, dtype=np.int64)
    for j in range(low):
        syn_low = np.concatenate([syn_low, syn_low ^ cols[j]])
    w_low = np.bitwise_count(np.arange(1 << low, dtype=np.uint64)).astype(np.int64)
    pw = np.array([eps**w * (1 - eps) ** (n - w) for w in range(n + 1)])
    hist = np.zeros(nbins)
    for hi in range(1 << (n - low)):
        s_hi, w_hi = 0, hi.bit_count()
        h = hi
        j = low
        while h:
            if h & 1:
                s_hi ^= int(cols[j])
            h >>= 1
            j += 1
        hist += np.bincount(syn_low ^ s_hi, weights=pw[w_low + w_hi], minlength=nbins)
    return _finish(code, hist, r0, 0.0, "exhaustive")


def _truncated(code: ProtocolCode, eps: float, w_max: int) -> OutputDistribution:
    # dynamic programme over inputs: dist[w, s] = P(first j inputs have weight w, syndrome s)
    cols, r0 = _combined_columns(code)
    nbits = r0 + code.k
    if nbits > 24:
        raise ValueError("syndrome space too large for weight-truncated enumeration")
    nb = 1 << nbits
    idx = np.arange(nb)
    dist = np.zeros((w_max + 1, nb))
    dist[0, 0] = 1.0
    for c in cols:
        moved = dist[:, idx ^ c]
        new = (1 - eps) * dist
        new[1:] += eps * moved[:-1]
        dist = new
    tail = float(binom.sf(w_max, code.n, eps))
    return _finish(code, dist.sum(axis=0), r0, tail, f"truncated(w<={w_max})")


def block_distribution(
    code: ProtocolCode, eps: float, w_max: int | None = None, tol: float | None = None
) -> OutputDistribution:
    """Postselected output distribution of one block.

    ``w_max=None`` sums ``Pr(x)`` over all ``2**n`` inputs (``n <= 26``).
    An integer keeps only ``|x| <= w_max`` and reports the dropped binomial
    mass as ``tail_bound``; :class:`TailTooLarge` if it exceeds ``tol``.
    """
    if not 0 <= eps < 1:
        raise ValueError("eps must lie in [0, 1)")
    if w_max is None:
        return _exhaustive(code, eps)
    if w_max < 0:
        raise ValueError("w_max must be non-negative")
    w_max = min(w_max, code.n)
    out = _truncated(code, eps, w_max)
    if tol is not None and out.tail_bound > tol:
        raise TailTooLarge(f"tail bound {out.tail_bound:.3e} exceeds tolerance {tol:.3e}")
    return out


# ---------------------------------------------------------------------------
# MacWilliams-identity routes (closed form in 1 - 2 eps)


def _span_weights(m: BinaryMatrix) -> list[int]:
    rows = m.packed_rows
    weights = []
    for bits in range(1 << len(rows)):
        v = 0
        b, i = bits, 0
        while b:
            if b & 1:
                v ^= rows[i]
            b >>= 1
            i += 1
        weights.append(v.bit_count())
    return weights


def annihilated_probability(h: BinaryMatrix, eps: float) -> float:
    """``Pr(h x = 0)`` for i.i.d. bits of bias ``eps``; ``h`` must have independent rows."""
    x = 1.0 - 2.0 * eps
    ws = _span_weights(h)
    return sum(x**w for w in ws) / len(ws)


def success_probability(code: ProtocolCode, eps: float) -> float:
    return annihilated_probability(code.g0, eps)


def _span_vectors(m: BinaryMatrix) -> list[int]:
    out = [0]
    for row in m.packed_rows:
        out += [v ^ row for v in out]
    return out


@functools.lru_cache(maxsize=None)
def _krawtchouk(n: int) -> tuple[tuple[int, ...], ...]:
    """``K[i][w] = sum_j (-1)^j C(i, j) C(n - i, w - j)``."""
    return tuple(
        tuple(sum((-1) ** j * math.comb(i, j) * math.comb(n - i, w - j) for j in range(max(0, w - n + i), min(i, w) + 1))
              for w in range(n + 1))
        for i in range(n + 1)
    )


def _kernel_enumerator(vectors: list[int], n: int) -> list[int]:
    """Integer weight distribution of the dual of ``span(vectors)``."""
    kt = _krawtchouk(n)
    counts = [0] * (n + 1)
    for v in vectors:
        counts[v.bit_count()] += 1
    tot = [sum(c * kt[i][w] for i, c in enumerate(counts) if c) for w in range(n + 1)]
    return [t // len(vectors) for t in tot]


@functools.lru_cache(maxsize=None)
def _error_enumerator(code: ProtocolCode, group: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Counts of ``x`` by weight with ``G0 x = 0``, and with additionally ``G1_sel x != 0``."""
    sel = [j for j in range(code.k) if (group >> j) & 1]
    s0 = _span_vectors(code.g0)
    s01 = _span_vectors(code.g0.vstack(code.g1.select_rows(sel)))
    passed = _kernel_enumerator(s0, code.n)
    clean = _kernel_enumerator(s01, code.n)
    return tuple(passed), tuple(a - b for a, b in zip(passed, clean))


def state_error_probability(code: ProtocolCode, eps: float, group: int) -> float:
    """Exact error of one output state, conditioned on block success.

    Summed from the integer weight enumerator of the failing coset, so every
    term is positive and tiny errors keep full relative precision.
    """
    if group <= 0 or group >> code.k:
        raise ValueError("group must be a non-empty subset of the outputs")
    passed, bad = _error_enumerator(code, group)
    if eps == 0:
        return 0.0
    n = code.n
    w = np.arange(n + 1)
    with np.errstate(divide="ignore"):
        logp = w * math.log(eps) + (n - w) * math.log1p(-eps)
    tail = np.exp(logp)
    p_bad = float(sum(float(c) * t for c, t in zip(bad, tail) if c))
    p_ok = float(sum(float(c) * t for c, t in zip(passed, tail) if c))
    return p_bad / p_ok


def macwilliams_distribution(code: ProtocolCode, eps: float) -> OutputDistribution:
    """Full output distribution from character sums over ``span(G)``.

    ``Pr(G0 x = 0, G1 x = y) = 2^-(r0+k) sum_s (-1)^(s1.y) (1-2eps)^|s G|``,
    evaluated with one Walsh-Hadamard transform over the ``G1`` labels.
    """
    r0, k = code.g0.rows, code.k
    if r0 + k > 22:
        raise ValueError("code too large for the full character-sum distribution")
    x = 1.0 - 2.0 * eps
    g0w = _span_weights(code.g0)
    rows0 = code.g0.packed_rows
    span0 = []
    for bits in range(1 << r0):
        v = 0
        for i in range(r0):
            if (bits >> i) & 1:
                v ^= rows0[i]
        span0.append(v)
    rows1 = code.g1.packed_rows
    a = np.zeros(1 << k)
    for s1 in range(1 << k):
        v1 = 0
        for i in range(k):
            if (s1 >> i) & 1:
                v1 ^= rows1[i]
        a[s1] = sum(x ** (v1 ^ v0).bit_count() for v0 in span0)
    # Walsh-Hadamard: p[y] = sum_s1 (-1)^{s1.y} a[s1]
    h = 1
    p = a.copy()
    while h < len(p):
        p = p.reshape(-1, 2, h)
        p = np.stack([p[:, 0] + p[:, 1], p[:, 0] - p[:, 1]], axis=1).reshape(-1)
        h *= 2
    p /= 1 << (r0 + k)
    p_succ = sum(x**w for w in g0w) / len(g0w)
    p_out = {y: float(v) / p_succ for y, v in enumerate(p) if v > 0}
    marg = tuple(sum(pr for y, pr in p_out.items() if (y >> j) & 1) for j in range(k))
    return OutputDistribution(p_succ, p_out, marg, 0.0, "macwilliams", code.output_groups)


def bh_weight_enumerator(k: int, x: float) -> float:
    """Weight enumerator of ``span(G)`` for the Bravyi-Haah code at ``x = 1 - 2 eps``.

    Index ``m`` counts how many ``G1`` rows enter a codeword; the binomial
    ``C(k, m)`` weights the four families of codewords.
    """
    _validate_bh_k(k)
    total = 0.0
    for m in range(k + 1):
        c = math.comb(k, m)
        if m % 2:
            total += 2 * c * x ** (3 * m + 4)
        else:
            total += c * (x ** (3 * m) + x ** (3 * m + 8))
        total += 6 * c * x ** (2 * k - m + 4)
    return total


def bh_success_probability(k: int, eps: float) -> float:
    """``Pr(G0 x = 0)`` from the ``m = 0`` codewords: ``(1 + x^8 + 6 x^(2k+4)) / 8``."""
    _validate_bh_k(k)
    x = 1.0 - 2.0 * eps
    return (1 + x**8 + 6 * x ** (2 * k + 4)) / 8


def weight_enumerator_undetected(k: int, eps: float) -> float:
    """Global undetected-error probability of one BH block, conditioned on success.

    ``Pr(G x = 0) = W(k, eps) / 2^(k+3)`` by the MacWilliams identity, so the
    result is ``1 - W / (2^(k+3) P_suc)``.
    """
    p_succ = bh_success_probability(k, eps)
    clean = bh_weight_enumerator(k, 1.0 - 2.0 * eps) / 2 ** (k + 3)
    return 1.0 - clean / p_succ


def exact_block_error(code: ProtocolCode, eps: float) -> float:
    """Probability that a passing block emits any output error (``1 - p_out(0)``)."""
    if code.kind is Kind.BRAVYI_HAAH:
        return weight_enumerator_undetected(code.param, eps)
    p0 = success_probability(code, eps)
    return 1.0 - annihilated_probability(code.g, eps) / p0
