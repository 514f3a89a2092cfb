"""Gauge-measurement realization of the block protocols.

Stabilizer measurements of the large Bravyi-Haah X-checks are split into
weight-4 gauge measurements (rows of ``G_perp``) plus one long row measured
with a cat-state ancilla.  This module builds those matrices, the classical
correction data, a colored CNOT schedule and the block timing.

Qubit indices are 0-based throughout; docstrings quoting qubit labels use
the 1-based labels of the printed construction.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

from .gf2 import BinaryMatrix, NoSolution, in_row_span, rank, solve_linear

Vertex = Hashable
Edge = tuple[Vertex, Vertex]


class DepthExceeded(RuntimeError):
    """No proper coloring with the requested number of colors was found."""

    def __init__(self, message: str, best: "ColoredSchedule | None" = None):
        super().__init__(message)
        self.best = best


def _check_k(k: int) -> None:
    if not isinstance(k, int) or k < 2 or k % 4 != 2:
        raise ValueError(f"Bravyi-Haah parameter must satisfy k = 2 mod 4 and k >= 2, got {k!r}")


# ---------------------------------------------------------------------------
# G_perp families


def bh_g_perp_supports(k: int) -> list[list[int]]:
    """1-based supports of the rows of ``G_perp`` in printed order."""
    _check_k(k)
    rows = [[1, 4, 6, 7], [2, 4, 5, 7], [3, 4, 5, 6], [5, 8, 9, 10], [6, 8, 9, 11], [7, 8, 10, 11]]
    for j in range(1, k):
        b = 3 * j
        rows.append([6 + b, 7 + b, 9 + b, 10 + b])
        rows.append([7 + b, 8 + b, 10 + b, 11 + b])
    rows.append([3, 7] + [6 + 3 * j for j in range(1, k + 1)])
    return rows


@functools.lru_cache(maxsize=None)
def build_g_perp(k: int) -> BinaryMatrix:
    """``(2k+5) x (3k+8)`` gauge matrix: weight-4 chain rows and one row of weight ``k+2``."""
    return BinaryMatrix.from_support(
        [[q - 1 for q in row] for row in bh_g_perp_supports(k)], 3 * k + 8
    )


def w_matrix(k: int) -> BinaryMatrix:
    """``W_j`` has ones on qubits 1, 2 and on the output qubit ``6+3j``."""
    _check_k(k)
    return BinaryMatrix.from_support([[0, 1, 5 + 3 * j] for j in range(1, k + 1)], 3 * k + 8)


def derive_rmq(k: int) -> tuple[BinaryMatrix, BinaryMatrix, BinaryMatrix]:
    """Witnesses ``R, M, Q`` with ``G_perp R = 1``, ``M G_perp = G0`` and ``G1 = W + Q G_perp``."""
    from .codes import bravyi_haah

    gp = build_g_perp(k)
    code = bravyi_haah(k)
    r = solve_linear(gp, BinaryMatrix.identity(gp.rows), side="right")
    m = solve_linear(gp, code.g0, side="left")
    q = solve_linear(gp, code.g1 + w_matrix(k), side="left")
    return r, m, q


# ---------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class ColoredSchedule:
    """Entangling gates grouped into time slots; ``colors[i]`` is the slot of ``edges[i]``."""

    edges: tuple[Edge, ...]
    colors: tuple[int, ...]
    ancilla_count: int
    flagged: bool = False

    @property
    def depth(self) -> int:
        return max(self.colors) + 1 if self.colors else 0

    def slots(self) -> list[list[Edge]]:
        out: list[list[Edge]] = [[] for _ in range(self.depth)]
        for e, c in zip(self.edges, self.colors):
            out[c].append(e)
        return out

    def is_proper(self) -> bool:
        for slot in self.slots():
            seen: set = set()
            for u, v in slot:
                if u in seen or v in seen or u == v:
                    return False
                seen.update((u, v))
        return True

    def listing(self) -> list[tuple[int, str, str]]:
        """(slot, vertex, vertex) rows sorted by slot for export."""
        rows = [(c, _vname(u), _vname(v)) for (u, v), c in zip(self.edges, self.colors)]
        return sorted(rows)


def _vname(v: Vertex) -> str:
    if isinstance(v, tuple):
        return "".join(str(p) for p in v)
    return str(v)


def _greedy(edges: Sequence[Edge], adj: dict) -> list[int]:
    col = [-1] * len(edges)
    for i, (u, v) in enumerate(edges):
        used = {col[j] for j in adj[u] + adj[v] if col[j] >= 0}
        c = 0
        while c in used:
            c += 1
        col[i] = c
    return col


def edge_color_schedule(
    edges: Iterable[Edge], target_depth: int, ancilla_count: int = 0, node_limit: int = 2_000_000
) -> ColoredSchedule:
    """Proper edge coloring with at most ``target_depth`` colors.

    Backtracking that always extends the edge with the fewest free colors.
    On failure raises :class:`DepthExceeded` carrying a greedy coloring
    (marked ``flagged``) as the best schedule found.
    """
    edges = tuple(edges)
    adj: dict = {}
    for i, (u, v) in enumerate(edges):
        adj.setdefault(u, []).append(i)
        adj.setdefault(v, []).append(i)
    col = [-1] * len(edges)
    nodes = [0]

    def used(i: int) -> set[int]:
        u, v = edges[i]
        return {col[j] for j in adj[u] + adj[v] if col[j] >= 0}

    def extend(left: int) -> bool:
        nodes[0] += 1
        if nodes[0] > node_limit:
            raise TimeoutError
        if left == 0:
            return True
        best, best_used = -1, None
        for i in range(len(edges)):
            if col[i] < 0:
                u = used(i)
                if best_used is None or len(u) > len(best_used):
                    best, best_used = i, u
                    if len(u) >= target_depth - 1:
                        break
        for c in range(target_depth):
            if c not in best_used:
                col[best] = c
                if extend(left - 1):
                    return True
                col[best] = -1
        return False

    degree = max((len(a) for a in adj.values()), default=0)
    ok = False
    if degree <= target_depth:
        try:
            ok = extend(len(edges))
        except TimeoutError:
            ok = False
    if ok:
        return ColoredSchedule(edges, tuple(col), ancilla_count)
    fallback = ColoredSchedule(edges, tuple(_greedy(edges, adj)), ancilla_count, flagged=True)
    raise DepthExceeded(f"no coloring with {target_depth} colors (max degree {degree})", fallback)


def measurement_graph(rows: BinaryMatrix, cat_rows: dict[int, int] | None = None) -> tuple[list[Edge], int]:
    """Ancilla/data CNOT graph for measuring every row of ``rows``.

    A row listed in ``cat_rows`` (row -> number of cat qubits) is measured
    through a cat state whose qubits share its data edges round robin; the
    cat is built by merges between neighbouring cat qubits, and those merge
    gates are edges too.
    """
    cat_rows = cat_rows or {}
    edges: list[Edge] = []
    anc = 0
    for i in range(rows.rows):
        sup = rows.support(i)
        width = cat_rows.get(i, 1)
        cat = [("a", anc + c) for c in range(width)]
        for t, q in enumerate(sup):
            edges.append((cat[t * width // len(sup)], ("d", q)))
        for a, b in zip(cat, cat[1:]):
            edges.append((a, b))
        anc += width
    return edges, anc


def bh_z_stage_graph(k: int) -> tuple[list[Edge], int]:
    gp = build_g_perp(k)
    return measurement_graph(gp, {gp.rows - 1: k + 2})


@functools.lru_cache(maxsize=None)
def bh_schedule(k: int) -> ColoredSchedule:
    edges, anc = bh_z_stage_graph(k)
    return edge_color_schedule(edges, 4, anc)


@functools.lru_cache(maxsize=None)
def rm_schedule() -> ColoredSchedule:
    from .codes import load_golden

    edges, anc = measurement_graph(load_golden("gperp_rm"))
    return edge_color_schedule(edges, 5, anc)


def toffoli_z_checks() -> BinaryMatrix:
    """Four independent weight-4 codewords of the (self-dual) Toffoli code with the smallest column load."""
    from .codes import toffoli_code

    code = toffoli_code()
    basis = list(code.g.packed_rows)
    words = set()
    for bits in range(1, 16):
        v = 0
        for i in range(4):
            if (bits >> i) & 1:
                v ^= basis[i]
        if v.bit_count() == 4:
            words.add(v)
    best = None
    for combo in itertools.combinations(sorted(words), 4):
        m = BinaryMatrix.from_ints(combo, 8)
        if rank(m) < 4:
            continue
        load = max(m.col_weights())
        if best is None or load < best[0]:
            best = (load, m)
    return best[1]


@functools.lru_cache(maxsize=None)
def toffoli_schedules() -> tuple[ColoredSchedule, ColoredSchedule]:
    """(Z stage, X stage); the X check uses a two-qubit cat state."""
    z_edges, z_anc = measurement_graph(toffoli_z_checks())
    x_edges, x_anc = measurement_graph(BinaryMatrix.from_ints([0xFF], 8), {0: 2})
    return edge_color_schedule(z_edges, 4, z_anc), edge_color_schedule(x_edges, 5, x_anc)


# ---------------------------------------------------------------------------
# the gauge protocol plan


@dataclass(frozen=True)
class PlanStep:
    step: int
    operation: str
    qubits: tuple[int, ...]
    note: str = ""


@dataclass(frozen=True)
class RealizationPlan:
    k: int
    g_perp: BinaryMatrix
    r: BinaryMatrix
    m: BinaryMatrix
    q: BinaryMatrix
    w: BinaryMatrix
    out_set: tuple[int, ...]
    x_set: tuple[int, ...]
    z_set: tuple[int, ...]
    h_z: BinaryMatrix
    h_x: BinaryMatrix
    schedule: ColoredSchedule
    steps: tuple[PlanStep, ...] = field(repr=False)

    def correction_vector(self, mu: int) -> int:
        """Packed ``w = R mu`` selecting the correcting operator after the Z-type round."""
        return self.r.apply(mu)

    def classical_outcome(self, x: int) -> tuple[bool, int]:
        """Run the plan on a packed Z-error pattern ``x``.

        The X-type gauge outcomes are ``gamma = G_perp x``; success needs
        ``M gamma = 0``; the output error is ``x_O + H_X x_X + Q gamma``.
        """
        gamma = self.g_perp.apply(x)
        passed = self.m.apply(gamma) == 0
        x_o = sum(((x >> q) & 1) << j for j, q in enumerate(self.out_set))
        x_x = sum(((x >> q) & 1) << j for j, q in enumerate(self.x_set))
        y = x_o ^ self.h_x.apply(x_x) ^ self.q.apply(gamma)
        return passed, y

    def h_z_consistent(self) -> bool:
        """Each X-correction row, together with qubits 1 and 2, is a gauge operator."""
        n = self.g_perp.cols
        for j in range(self.k):
            v = 0b11
            for t in self.h_z.support(j):
                v |= 1 << self.z_set[t]
            if v >> n or not in_row_span(self.g_perp, v):
                return False
        return True


def _h_matrices(k: int, z_set: Sequence[int]) -> tuple[BinaryMatrix, BinaryMatrix]:
    pos = {q: i for i, q in enumerate(z_set)}
    rows = []
    for j in range(1, k + 1):
        # qubits 5..8 plus the pair 7+3j, 8+3j (1-based)
        qs = [4, 5, 6, 7, 6 + 3 * j, 7 + 3 * j]
        rows.append([pos[q] for q in qs])
    h_z = BinaryMatrix.from_support(rows, len(z_set))
    h_x = BinaryMatrix.from_support([[0, 1]] * k, 3)
    return h_z, h_x


@functools.lru_cache(maxsize=None)
def gauge_msd_plan(k: int) -> RealizationPlan:
    _check_k(k)
    gp = build_g_perp(k)
    r, m, q = derive_rmq(k)
    n = gp.cols
    out_set = tuple(5 + 3 * j for j in range(1, k + 1))
    x_set = (0, 1, 2)
    z_set = tuple(sorted(set(range(n)) - set(out_set) - set(x_set)))
    h_z, h_x = _h_matrices(k, z_set)
    steps = (
        PlanStep(1, "prepare |+> on all qubits and apply transversal T", tuple(range(n))),
        PlanStep(2, f"measure Z[f] for all {gp.rows} gauge rows -> mu", tuple(range(n)), "schedule colors"),
        PlanStep(3, "apply A[w] with w = R mu", (), "identity when mu = 0"),
        PlanStep(4, f"measure X[f] for all {gp.rows} gauge rows -> gamma", tuple(range(n)), "schedule colors"),
        PlanStep(5, f"declare SUCCESS iff M gamma = 0 ({m.rows} parity checks)", ()),
        PlanStep(6, "measure X on set X and Z on set Z -> m_X, m_Z", x_set + z_set),
        PlanStep(7, "apply X[H_Z m_Z] Z[H_X m_X + Q gamma] on outputs", out_set),
    )
    return RealizationPlan(k, gp, r, m, q, w_matrix(k), out_set, x_set, z_set, h_z, h_x, bh_schedule(k), steps)


# ---------------------------------------------------------------------------
# timing and qubit counts


@dataclass(frozen=True)
class TimingParams:
    d: int
    t_sc: float
    t_g: float = 0.0
    t_a: float = 0.0
    t_prep: float = 0.0
    t_measure: float = 0.0

    def __post_init__(self):
        if self.d < 1 or self.t_sc <= 0 or min(self.t_g, self.t_a, self.t_prep, self.t_measure) < 0:
            raise ValueError("durations must be non-negative and t_sc, d positive")

    @property
    def t_cnot(self) -> float:
        return self.t_g + self.d * self.t_sc


# CNOT time steps per block: Z stage plus X stage
CNOT_STEPS = {"bh": 8, "rm": 10, "toffoli": 9}
# data plus ancilla logical qubits per block, without the BH parameter term
LOGICAL_QUBITS = {"rm": 25, "toffoli": 12}


def _kind_name(kind) -> str:
    return getattr(kind, "value", kind)


def block_time(params: TimingParams, kind="bh") -> float:
    """``steps * t_cnot + t_A + 2 t_prep + 3 t_measure`` (8 CNOT steps for BH)."""
    steps = CNOT_STEPS[_kind_name(kind)]
    return steps * params.t_cnot + params.t_a + 2 * params.t_prep + 3 * params.t_measure


def block_time_asymptotic(d: int, t_sc: float, kind="bh") -> float:
    return CNOT_STEPS[_kind_name(kind)] * d * t_sc


def logical_qubits(kind="bh", k: int | None = None) -> int:
    """Logical qubits of one block: BH ``(3k+8)`` data plus ``3k+6`` ancillas."""
    name = _kind_name(kind)
    if name == "bh":
        if k is None:
            raise ValueError("BH block needs k")
        return 6 * k + 14
    return LOGICAL_QUBITS[name]


def bh_ancilla_count(k: int) -> int:
    """One ancilla per weight-4 gauge row plus a cat of ``k+2`` qubits."""
    _check_k(k)
    return 2 * k + 4 + k + 2


def physical_qubits(kind, d: int, k: int | None = None) -> int:
    return logical_qubits(kind, k) * d * d


def block_spacetime(kind, d: int, k: int | None = None) -> int:
    """Leading-order qubit-rounds of one block, ``n_tot * steps * d^3``."""
    return logical_qubits(kind, k) * CNOT_STEPS[_kind_name(kind)] * d**3


__all__ = [
    "ColoredSchedule",
    "DepthExceeded",
    "NoSolution",
    "PlanStep",
    "RealizationPlan",
    "TimingParams",
    "bh_ancilla_count",
    "bh_g_perp_supports",
    "bh_schedule",
    "bh_z_stage_graph",
    "block_spacetime",
    "block_time",
    "block_time_asymptotic",
    "build_g_perp",
    "derive_rmq",
    "edge_color_schedule",
    "gauge_msd_plan",
    "logical_qubits",
    "measurement_graph",
    "physical_qubits",
    "rm_schedule",
    "toffoli_schedules",
    "toffoli_z_checks",
    "w_matrix",
]
