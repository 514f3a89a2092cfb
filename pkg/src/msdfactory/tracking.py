"""Correlated-error bookkeeping across distillation rounds.

Module checking keeps the whole level-``l`` module only if every block in
it passes.  Its error is then governed by

    A_l = (1-eps)^m_l,    B_l = C_l eps^(2^l) (1-eps)^(m_l - 2^l),
    C_l = prod_j sum_v eta_j(v)^(2^(l-j)),

with ``m_l = n_1 ... n_l``.  Block checking treats every output state as
independent and applies a union bound over the ``K`` outputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .codes import Kind, ProtocolCode, state_error_probability, success_probability, sum_eta_power


@dataclass(frozen=True)
class TrackingState:
    level: int
    c: int
    m: int
    log_a: float
    log_b: float

    @property
    def a(self) -> float:
        return math.exp(self.log_a)

    @property
    def b(self) -> float:
        return math.exp(self.log_b) if self.log_b > -math.inf else 0.0


@dataclass(frozen=True)
class RoundReport:
    level: int
    p_suc: float
    eps_g: float
    branch_width: int
    per_state_error: float | None = None
    method: str = "theorem"

    def items(self) -> list[tuple[str, str]]:
        out = [
            ("level", str(self.level)),
            ("p_suc", f"{self.p_suc:.6e}"),
            ("eps_g", f"{self.eps_g:.6e}"),
            ("branch_width", str(self.branch_width)),
        ]
        if self.per_state_error is not None:
            out.append(("per_state_error", f"{self.per_state_error:.6e}"))
        out.append(("method", self.method))
        return out


def serialize_reports(reports: Sequence[RoundReport], header: dict[str, str] | None = None) -> str:
    """``key=value`` lines, a blank line between levels."""
    blocks = []
    if header:
        blocks.append("\n".join(f"{k}={v}" for k, v in header.items()))
    for r in reports:
        blocks.append("\n".join(f"{k}={v}" for k, v in r.items()))
    return "\n\n".join(blocks) + "\n"


def parse_reports(text: str) -> list[dict[str, str]]:
    out = []
    for block in text.strip().split("\n\n"):
        rec = dict(line.split("=", 1) for line in block.splitlines() if "=" in line)
        if "level" in rec:
            out.append(rec)
    return out


def _ordering_note(rounds: Sequence[ProtocolCode]) -> str:
    kinds = [r.kind for r in rounds]
    tof = [i for i, kd in enumerate(kinds) if kd is Kind.TOFFOLI]
    if not tof:
        return "validated"
    if len(tof) == 1 and tof[0] in (0, len(rounds) - 1):
        return "validated"
    return "unvalidated-ordering"


def _require_module_compatible(rounds: Sequence[ProtocolCode]) -> None:
    if not rounds:
        raise ValueError("at least one round is required")
    for r in rounds:
        if r.kind is Kind.REED_MULLER:
            raise ValueError("module checking is only modelled for second-order protocols (BH, Toffoli)")


def leading_coefficient(rounds: Sequence[ProtocolCode]) -> int:
    """``C_l = prod_j sum_v eta_j(v)^(2^(l-j))`` in exact integers."""
    _require_module_compatible(rounds)
    l = len(rounds)
    c = 1
    for j, code in enumerate(rounds, start=1):
        c *= sum_eta_power(code, 2 ** (l - j))
    return c


def tracking_states(rounds: Sequence[ProtocolCode], eps: float) -> list[TrackingState]:
    """Log-domain ``A_l, B_l`` for every level, starting with level 0 (``A_0 + B_0 = 1``)."""
    _require_module_compatible(rounds)
    if not 0 <= eps < 0.5:
        raise ValueError("eps must lie in [0, 0.5)")
    log1m = math.log1p(-eps)
    states = [TrackingState(0, 1, 1, log1m, math.log(eps) if eps > 0 else -math.inf)]
    m = 1
    for l in range(1, len(rounds) + 1):
        m *= rounds[l - 1].n
        c = leading_coefficient(rounds[:l])
        w = 2**l
        log_a = m * log1m
        log_b = math.log(c) + w * math.log(eps) + (m - w) * log1m if eps > 0 else -math.inf
        states.append(TrackingState(l, c, m, log_a, log_b))
    return states


def _log_sum(s: TrackingState) -> float:
    if s.level == 0:
        return 0.0
    if s.log_b == -math.inf:
        return s.log_a
    hi, lo = max(s.log_a, s.log_b), min(s.log_a, s.log_b)
    return hi + math.log1p(math.exp(lo - hi))


def track_module_checked(rounds: Sequence[ProtocolCode], eps: float) -> list[RoundReport]:
    """Per-level conditional success and global output infidelity."""
    states = tracking_states(rounds, eps)
    reports = []
    width = 1
    note = _ordering_note(rounds)
    for l in range(1, len(states)):
        s, prev = states[l], states[l - 1]
        n_l = rounds[l - 1].n
        log_p = _log_sum(s) - n_l * _log_sum(prev)
        if s.log_b == -math.inf:
            eps_g = 0.0
        else:
            # B / (A + B) = 1 / (1 + A/B)
            eps_g = 1.0 / (1.0 + math.exp(s.log_a - s.log_b))
        width *= rounds[l - 1].states_out
        reports.append(RoundReport(l, min(1.0, math.exp(log_p)), eps_g, width, method=f"theorem:{note}"))
    return reports


def union_bound_factor(code: ProtocolCode) -> tuple[int, int]:
    """(s, order) with per-state error ``s * p^order`` at leading order.

    BH: each output sits in ``3k+1`` undetected pairs (7 for k=2).  The
    Toffoli output is one state hit by all 28 pairs.  Reed-Muller: 35 triples.
    """
    if code.kind is Kind.BRAVYI_HAAH:
        return (7 if code.param == 2 else 3 * code.param + 1), 2
    if code.kind is Kind.TOFFOLI:
        return 28, 2
    return 35, 3


def track_block_checked(
    rounds: Sequence[ProtocolCode], eps: float, exact: bool = True
) -> list[RoundReport]:
    """Independent per-state error iteration with ``eps_g = 1 - (1 - p)^K``.

    ``exact=True`` uses the exact single-block state error (via the
    MacWilliams identity); otherwise the leading-order ``s p^order``.
    """
    if not rounds:
        raise ValueError("at least one round is required")
    if not 0 <= eps < 0.5:
        raise ValueError("eps must lie in [0, 0.5)")
    p = eps
    width = 1
    reports = []
    for l, code in enumerate(rounds, start=1):
        p_suc = success_probability(code, p)
        if exact:
            p = state_error_probability(code, p, code.output_groups[0])
        else:
            s, order = union_bound_factor(code)
            p = min(1.0, s * p**order)
        width *= code.states_out
        eps_g = -math.expm1(width * math.log1p(-p)) if p < 1 else 1.0
        reports.append(RoundReport(l, p_suc, eps_g, width, p, "exact" if exact else "leading-order"))
    return reports


def union_bound_ratio(rounds: Sequence[ProtocolCode]) -> float:
    """Leading-order ``K * eps_BH / eps^(2^l)`` for an ``l``-round factory."""
    coef = 1.0
    for code in rounds:
        s, order = union_bound_factor(code)
        if order != 2:
            raise ValueError("ratio defined for second-order protocols only")
        coef = s * coef**2
    width = 1
    for code in rounds:
        width *= code.states_out
    return width * coef


def cost(rounds: Sequence[ProtocolCode], eps: float, mode: str = "module") -> float:
    """Expected raw magic states per output state.

    Block mode chains ``n / (k P_s(p_i))`` with ``p_i`` the per-state error
    entering round ``i``.  Module mode charges each level-``l`` module
    ``n_l`` successful level-``(l-1)`` modules and divides by its
    conditional success probability.
    """
    if mode == "block":
        reports = track_block_checked(rounds, eps)
        p_in = [eps] + [r.per_state_error for r in reports[:-1]]
        total = 1.0
        for code, p in zip(rounds, p_in):
            total *= code.n / (code.states_out * success_probability(code, p))
        return total
    if mode == "module":
        reports = track_module_checked(rounds, eps)
        expected = 1.0
        for code, rep in zip(rounds, reports):
            expected = code.n * expected / rep.p_suc
        return expected / reports[-1].branch_width
    raise ValueError(f"mode must be 'block' or 'module', got {mode!r}")


# the printed leading-coefficient table; polynomials assume every BH k > 2


def bh_factor(k: int, m: int) -> int:
    """``sum_v eta(v)^m`` for one BH round: the printed polynomial for k > 2, ``7^m`` at k = 2."""
    if k == 2:
        return 7**m
    return 4**m + 3**m * k * (k - 1) // 2


def table2_rows() -> list[dict]:
    """Rows of the table: printed polynomial, printed large-k limits and a factory builder.

    Each callable takes the tuple of BH parameters of that row in level order.
    """
    from .codes import bravyi_haah as bh, toffoli_code as tof

    return [
        dict(label="BH_k1,BH_k2", nbh=2, build=lambda ks: [bh(ks[0]), bh(ks[1])],
             printed=lambda ks: (16 + 9 * ks[0] * (ks[0] - 1) / 2) * (4 + 3 * ks[1] * (ks[1] - 1) / 2),
             c_limit=lambda ks: 27 / 4 * ks[0] ** 2 * ks[1] ** 2,
             ratio_limit=lambda ks: 27 * ks[0] ** 3 * ks[1] ** 2),
        dict(label="Tof,BH_k", nbh=1, build=lambda ks: [tof(), bh(ks[0])],
             printed=lambda ks: 112 * (4 + 3 * ks[0] * (ks[0] - 1) / 2),
             c_limit=lambda ks: 168 * ks[0] ** 2,
             ratio_limit=lambda ks: 2352 * ks[0] ** 2),
        dict(label="BH_k,Tof", nbh=1, build=lambda ks: [bh(ks[0]), tof()],
             printed=lambda ks: (16 + 9 * ks[0] * (ks[0] - 1) / 2) * 28,
             c_limit=lambda ks: 126 * ks[0] ** 2,
             ratio_limit=lambda ks: 252 * ks[0] ** 3),
        dict(label="BH_k1,BH_k2,BH_k3", nbh=3, build=lambda ks: [bh(k) for k in ks],
             printed=lambda ks: (256 + 81 * ks[0] * (ks[0] - 1) / 2)
             * (16 + 9 * ks[1] * (ks[1] - 1) / 2) * (4 + 3 * ks[2] * (ks[2] - 1) / 2),
             c_limit=lambda ks: 273.375 * ks[0] ** 2 * ks[1] ** 2 * ks[2] ** 2,
             ratio_limit=lambda ks: 2187 * ks[0] ** 5 * ks[1] ** 3 * ks[2] ** 2),
        dict(label="Tof,BH_k1,BH_k2", nbh=2, build=lambda ks: [tof(), bh(ks[0]), bh(ks[1])],
             printed=lambda ks: 1792 * (16 + 9 * ks[0] * (ks[0] - 1) / 2) * (4 + 3 * ks[1] * (ks[1] - 1) / 2),
             c_limit=lambda ks: 12096 * ks[0] ** 2 * ks[1] ** 2,
             ratio_limit=lambda ks: 28**4 * 3**3 * ks[0] ** 3 * ks[1] ** 2),
        dict(label="BH_k1,BH_k2,Tof", nbh=2, build=lambda ks: [bh(ks[0]), bh(ks[1]), tof()],
             printed=lambda ks: (256 + 81 * ks[0] * (ks[0] - 1) / 2) * (16 + 9 * ks[1] * (ks[1] - 1) / 2) * 28,
             # printed as 5013; 81/2 * 9/2 * 28 = 5103
             c_limit=lambda ks: 5103 * ks[0] ** 2 * ks[1] ** 2,
             ratio_limit=lambda ks: 20412 * ks[0] ** 5 * ks[1] ** 3),
    ]


def special_k2_value(rounds: Sequence[ProtocolCode]) -> int:
    """The table's product with every BH factor taken from :func:`bh_factor` (covers k = 2)."""
    l = len(rounds)
    c = 1
    for j, code in enumerate(rounds, start=1):
        m = 2 ** (l - j)
        if code.kind is Kind.BRAVYI_HAAH:
            c *= bh_factor(code.param, m)
        else:
            c *= 7 * 4**m
    return c
