"""Surface-code cost of distillation factories.

Units: time in surface-code cycles ``t_sc`` unless a name says seconds;
spacetime volume in physical-qubit x cycle ("qubit-rounds").

Round ``i`` (1-based) of an ``r``-round factory contains ``M_i * B_i``
blocks, where ``B_i = k_1 ... k_(i-1)`` is the branch width it consumes and
``M_i = n_(i+1) ... n_r`` counts its modules.  One factory iteration
delivers ``K = k_1 ... k_r`` states and costs

    V = sum_i Q_i c_i d_i^3 t_i / (K prod_i P_i)

with ``Q_i`` logical qubits in the round, ``c_i d_i`` its duration per
attempt (``c`` = 11, 12, 13 for BH, Toffoli, Reed-Muller) and ``P_i`` the
chance that ``t_i`` attempts per slot yield enough outputs.
"""
from __future__ import annotations

import functools
import itertools
import math
import warnings
from dataclasses import dataclass, fields, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit
from scipy.stats import binom

from .codes import Kind, ProtocolCode, bravyi_haah, reed_muller_code, success_probability, toffoli_code
from .factory import FactorySpec, Round
from .realization import logical_qubits
from .tracking import track_block_checked, track_module_checked, union_bound_factor


class Unachievable(ValueError):
    """The logical error model does not converge at this gate error."""


class FactoryInvalid(ValueError):
    """The factory cannot reach the requested output error."""


class NoValidFactory(ValueError):
    """No candidate in the search space reaches the target."""


CYCLES_PER_D = {Kind.BRAVYI_HAAH: 11, Kind.TOFFOLI: 12, Kind.REED_MULLER: 13}
BH_KS = tuple([2] + list(range(6, 51, 4)))
ATTEMPTS = (1, 2, 3, 4)
SECONDS = {"hours": 3600.0, "days": 86400.0, "weeks": 7 * 86400.0, "years": 365.25 * 86400.0}


@dataclass(frozen=True)
class ResourceParams:
    p_g: float = 1e-3
    t_sc: float = 1e-3
    meas_ff_ratio: float = 0.1
    eps_in_factor: float = 0.4
    p_suc_alg: float = 0.9
    toffoli_copies: int = 1   # parallel copies of a block distilling Toffoli states

    def __post_init__(self):
        if not 0 < self.p_g < 1 or self.t_sc <= 0 or not 0 < self.p_suc_alg < 1 or self.toffoli_copies < 1:
            raise ValueError("invalid resource parameters")

    @property
    def eps_in(self) -> float:
        return self.eps_in_factor * self.p_g

    @property
    def t_meas_ff(self) -> float:
        return self.meas_ff_ratio * self.t_sc

    def to_text(self) -> str:
        return "".join(f"{f.name}={getattr(self, f.name)!r}\n" for f in fields(self))

    @classmethod
    def from_text(cls, text: str) -> "ResourceParams":
        """Plain ``key=value`` lines; ``#`` starts a comment."""
        kw = {}
        names = {f.name for f in fields(cls)}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key = key.strip()
            if not sep or key not in names:
                raise ValueError(f"bad parameter line {raw!r}")
            kw[key] = int(val) if key == "toffoli_copies" else float(val)
        return cls(**kw)


# ---------------------------------------------------------------------------
# surface-code error model


def logical_error(d: int, p_g: float) -> float:
    """Failure of one logical qubit over ``d`` cycles: ``d (100 p_g)^((d+1)/2)``."""
    return d * (100 * p_g) ** ((d + 1) / 2)


def required_distance(p_target: float, p_g: float, d_max: int = 10_001) -> int:
    """Smallest odd ``d >= 3`` with ``logical_error(d, p_g) <= p_target``."""
    if p_g >= 1e-2:
        raise Unachievable(f"p_g={p_g} is at or above threshold")
    if not p_target > 0:
        raise Unachievable("target must be positive")
    # solve the smooth inequality in logs, then step to the odd integer
    lr = math.log(100 * p_g)
    d = 3
    guess = int(2 * math.log(p_target) / lr) - 1
    if guess > 3:
        d = guess - (guess % 2 == 0) - 4
        d = max(3, d)
    while d * math.exp(lr * (d + 1) / 2) > p_target:
        d += 2
        if d > d_max:
            raise Unachievable("distance search exceeded limit")
    while d > 3 and (d - 2) * math.exp(lr * (d - 1) / 2) <= p_target:
        d -= 2
    return d


def epsilon_target(p_suc_alg: float, n_iterations: float) -> float:
    """``1 - P^(1/N)``, computed without cancellation."""
    if not 0 < p_suc_alg <= 1 or n_iterations < 1:
        raise ValueError("need p_suc_alg in (0, 1] and n_iterations >= 1")
    return -math.expm1(math.log(p_suc_alg) / n_iterations)


def round_success_probability(slots: int, attempts: int, p_attempt: float) -> float:
    """Chance that ``slots * attempts`` independent tries give at least ``slots`` successes."""
    if slots < 1 or attempts < 1:
        raise ValueError("slots and attempts must be positive")
    if p_attempt >= 1:
        return 1.0
    return float(binom.sf(slots - 1, slots * attempts, p_attempt))


# ---------------------------------------------------------------------------
# per-structure physics (independent of the number of states requested)


def block_logical_qubits(code: ProtocolCode) -> int:
    return logical_qubits(code.kind, code.param)


def round_logical_qubits(codes: Sequence[ProtocolCode], toffoli_copies: int = 1) -> list[int]:
    """Logical qubits per block of each round; rounds fed Toffoli states get ``toffoli_copies``."""
    out, seen_tof = [], False
    for c in codes:
        fed_tof = seen_tof and c.kind is not Kind.TOFFOLI
        out.append(block_logical_qubits(c) * (toffoli_copies if fed_tof else 1))
        seen_tof = seen_tof or c.kind is Kind.TOFFOLI
    return out


@dataclass(frozen=True)
class Structure:
    codes: tuple[ProtocolCode, ...]
    mode: str
    eps_out: float                    # global error of one iteration
    round_error: tuple[float, ...]    # module: eps_glo per level; block: per-state error per level
    p_attempt: tuple[float, ...]
    slots: tuple[int, ...]
    blocks: tuple[int, ...]
    k_out: int

    @property
    def label(self) -> str:
        return "-".join(c.label for c in self.codes)


def _counts(codes: Sequence[ProtocolCode]) -> tuple[list[int], list[int], list[int]]:
    r = len(codes)
    widths, modules, blocks = [], [], []
    for i in range(r):
        b = math.prod(c.states_out for c in codes[:i])
        m = math.prod(c.n for c in codes[i + 1:])
        widths.append(b)
        modules.append(m)
        blocks.append(m * b)
    return widths, modules, blocks


@functools.lru_cache(maxsize=None)
def build_structure(codes: tuple[ProtocolCode, ...], mode: str, eps_in: float) -> Structure:
    _, modules, blocks = _counts(codes)
    k_out = math.prod(c.states_out for c in codes)
    if mode == "module":
        reps = track_module_checked(codes, eps_in)
        return Structure(codes, mode, reps[-1].eps_g, tuple(r.eps_g for r in reps),
                         tuple(r.p_suc for r in reps), tuple(modules), tuple(blocks), k_out)
    reps = track_block_checked(codes, eps_in)
    p_in = [eps_in] + [r.per_state_error for r in reps[:-1]]
    p_att = tuple(success_probability(c, p) for c, p in zip(codes, p_in))
    return Structure(codes, mode, reps[-1].eps_g, tuple(r.per_state_error for r in reps),
                     p_att, tuple(blocks), tuple(blocks), k_out)


def balanced_investment(structure: Structure, p_g: float, eps_target: float, toffoli_copies: int = 1) -> list[int]:
    """Per-round code distances.

    The final round keeps a block's encoding failure below ``0.1 eps_target / K``.
    Module checking sizes earlier rounds to ``0.1 eps_glo^(i) / (k_1...k_i)``;
    block checking walks back from the top with ``p_(i-1) = (p_i / s)^(1/order)``.
    """
    if structure.eps_out > eps_target:
        raise FactoryInvalid(f"{structure.label} ({structure.mode}) reaches {structure.eps_out:.3e} > {eps_target:.3e}")
    codes = structure.codes
    r = len(codes)
    vol = [q * CYCLES_PER_D[c.kind] for q, c in zip(round_logical_qubits(codes, toffoli_copies), codes)]
    targets = [0.0] * r
    if structure.mode == "module":
        width = 1
        for i in range(r - 1):
            width *= codes[i].states_out
            targets[i] = 0.1 * structure.round_error[i] / width
        targets[-1] = 0.1 * eps_target / structure.k_out
    else:
        p = eps_target / structure.k_out
        for i in range(r - 1, -1, -1):
            targets[i] = 0.1 * p
            s, order = union_bound_factor(codes[i])
            p = (p / s) ** (1 / order)
    d = [required_distance(t / v, p_g) for t, v in zip(targets, vol)]
    # later rounds suppress earlier encoding faults, so no round needs more than its successor
    for i in range(r - 2, -1, -1):
        d[i] = min(d[i], d[i + 1])
    return d


@dataclass(frozen=True)
class FactoryLayout:
    codes: tuple[str, ...]
    mode: str
    attempts: tuple[int, ...]
    distances: tuple[int, ...]
    logical_qubits: tuple[int, ...]
    round_cycles: tuple[int, ...]      # T_i = c_i d_i t_i, in t_sc
    round_success: tuple[float, ...]
    k_out: int
    volume: float                      # qubit-rounds per output state
    physical_qubits: int               # sum Q_i d_i^2 data qubits
    eps_out: float
    eps_target: float
    output: str = "T"

    @property
    def rounds(self) -> int:
        return len(self.codes)

    @property
    def rate_per_cycle(self) -> float:
        """Outputs per ``t_sc`` with rounds pipelined behind the slowest one."""
        return self.k_out * math.prod(self.round_success) / max(self.round_cycles)

    @property
    def label(self) -> str:
        return "-".join(self.codes) + f" [{self.mode}] t={','.join(map(str, self.attempts))}"

    def spec(self) -> FactorySpec:
        from .codes import protocol_from_name

        return FactorySpec(tuple(Round(protocol_from_name(c), self.mode, t) for c, t in zip(self.codes, self.attempts)))

    def report_items(self) -> list[tuple[str, str]]:
        return [
            ("factory", "-".join(self.codes)), ("mode", self.mode), ("output", self.output),
            ("attempts", ",".join(map(str, self.attempts))), ("distances", ",".join(map(str, self.distances))),
            ("logical_qubits", ",".join(map(str, self.logical_qubits))),
            ("round_cycles", ",".join(map(str, self.round_cycles))),
            ("round_success", ",".join(f"{p:.6e}" for p in self.round_success)),
            ("k_out", str(self.k_out)), ("volume", f"{self.volume:.6e}"),
            ("physical_qubits", str(self.physical_qubits)), ("physical_qubits_with_ancilla", str(2 * self.physical_qubits)),
            ("eps_out", f"{self.eps_out:.6e}"), ("eps_target", f"{self.eps_target:.6e}"),
        ]


def spacetime_volume(q: Sequence[int], c: Sequence[int], d: Sequence[int], t: Sequence[int],
                     k_out: int, p_round: Sequence[float]) -> float:
    """``sum_i Q_i c_i d_i^3 t_i / (K prod P_i)``."""
    num = sum(qi * ci * di**3 * ti for qi, ci, di, ti in zip(q, c, d, t))
    den = k_out * math.prod(p_round)
    return math.inf if den <= 0 else num / den


def _layout_arrays(structure: Structure, distances: Sequence[int], toffoli_copies: int = 1):
    qs = round_logical_qubits(structure.codes, toffoli_copies)
    q = np.array([b * q for b, q in zip(structure.blocks, qs)], dtype=float)
    cyc = np.array([CYCLES_PER_D[c.kind] for c in structure.codes], dtype=float)
    d = np.array(distances, dtype=float)
    return q, cyc, d, _success_table(structure)


@functools.lru_cache(maxsize=None)
def _success_table(structure: Structure) -> np.ndarray:
    """``P_i`` for every round and every attempt count in :data:`ATTEMPTS`."""
    slots = np.array(structure.slots, dtype=float)[:, None]
    p = np.minimum(np.array(structure.p_attempt, dtype=float), 1.0)[:, None]
    att = np.array(ATTEMPTS, dtype=float)[None, :]
    return binom.sf(slots - 1, slots * att, p)


def evaluate_layout(structure: Structure, params: ResourceParams, eps_target: float,
                    attempts: Sequence[int], output: str = "T") -> FactoryLayout:
    d = balanced_investment(structure, params.p_g, eps_target, params.toffoli_copies)
    q, cyc, dd, _ = _layout_arrays(structure, d, params.toffoli_copies)
    p_round = [round_success_probability(s, t, p) for s, t, p in zip(structure.slots, attempts, structure.p_attempt)]
    vol = spacetime_volume(q, cyc, dd, attempts, structure.k_out, p_round)
    return FactoryLayout(
        tuple(c.label for c in structure.codes), structure.mode, tuple(attempts), tuple(d),
        tuple(int(x) for x in q), tuple(int(ci * di * ti) for ci, di, ti in zip(cyc, d, attempts)),
        tuple(p_round), structure.k_out, vol, int(sum(qi * di * di for qi, di in zip(q, d))),
        structure.eps_out, eps_target, output,
    )


# ---------------------------------------------------------------------------
# search


def candidate_codes(kind: str) -> list[tuple[ProtocolCode, ...]]:
    """Round sequences: 1-3 rounds of BH/RM for T states; Toffoli output needs exactly one Toffoli round, first or last."""
    base = [bravyi_haah(k) for k in BH_KS] + [reed_muller_code()]
    tof = toffoli_code()
    out = []
    if kind == "T":
        for r in (1, 2, 3):
            out.extend(itertools.product(base, repeat=r))
    elif kind == "Toffoli":
        out.append((tof,))
        for r in (1, 2):
            for rest in itertools.product(base, repeat=r):
                out.append((tof,) + rest)
                out.append(rest + (tof,))
    else:
        raise ValueError("magic kind must be 'T' or 'Toffoli'")
    return out


def _structures(kind: str, eps_in: float) -> list[Structure]:
    out = []
    for codes in candidate_codes(kind):
        for mode in ("module", "block"):
            if mode == "module" and any(c.kind is Kind.REED_MULLER for c in codes):
                continue
            if len(codes) == 1 and mode == "block" and codes[0].kind is not Kind.REED_MULLER:
                continue  # one round: both modes coincide
            out.append(build_structure(codes, mode, eps_in))
    return out


@functools.lru_cache(maxsize=64)
def _structures_cached(kind: str, eps_in: float) -> tuple[Structure, ...]:
    return tuple(_structures(kind, eps_in))


def _grid(r: int) -> np.ndarray:
    return np.array(list(itertools.product(ATTEMPTS, repeat=r)), dtype=int)


@dataclass
class _Scored:
    structure: Structure
    distances: list[int]
    attempts: tuple[int, ...]
    volume: float
    footprint: float
    rate: float


@dataclass
class _Block:
    """All attempt combinations of one structure at one target."""

    structure: Structure
    distances: list[int]
    grid: np.ndarray
    volume: np.ndarray
    rate: np.ndarray
    footprint: float

    def pick(self, idx: int) -> _Scored:
        return _Scored(self.structure, self.distances, tuple(int(x) for x in self.grid[idx]),
                       float(self.volume[idx]), self.footprint, float(self.rate[idx]))


def _score(structure: Structure, params: ResourceParams, eps_target: float) -> _Block | None:
    try:
        d = balanced_investment(structure, params.p_g, eps_target, params.toffoli_copies)
    except FactoryInvalid:
        return None
    q, cyc, dd, table = _layout_arrays(structure, d, params.toffoli_copies)
    grid = _grid(len(d))
    p = np.prod(table[np.arange(len(d)), grid - 1], axis=1)
    with np.errstate(divide="ignore", over="ignore"):
        vol = (grid * (q * cyc * dd**3)).sum(axis=1) / (structure.k_out * p)
        period = (grid * (cyc * dd)).max(axis=1)
        rate = structure.k_out * p / period
    return _Block(structure, d, grid, vol, rate, float((q * dd**2).sum()))


def _to_layout(s: _Scored, params: ResourceParams, eps_target: float, output: str) -> FactoryLayout:
    return evaluate_layout(s.structure, params, eps_target, s.attempts, output)


def _search(params: ResourceParams, n_states: float, output: str) -> list[_Block]:
    out = []
    for st in _structures_cached(output, params.eps_in):
        n_iter = max(1.0, n_states / st.k_out)
        blk = _score(st, params, epsilon_target(params.p_suc_alg, n_iter))
        if blk is not None:
            out.append(blk)
    return out


def _best(blocks: list[_Block], key=lambda b: b.volume) -> _Scored:
    """Minimum of ``key`` over all blocks; ties go to fewer qubits, then fewer rounds."""
    best, best_key = None, None
    for b in blocks:
        vals = key(b)
        idx = int(np.argmin(vals))
        k = (float(vals[idx]), b.footprint, len(b.distances))
        if math.isfinite(k[0]) and (best_key is None or k < best_key):
            best, best_key = b.pick(idx), k
    if best is None:
        raise NoValidFactory("no candidate factory reaches the target")
    return best


def optimize_factory(params: ResourceParams, n_states: float, kind: str = "T",
                     allow_t_route: bool = True) -> FactoryLayout:
    """Minimum spacetime volume per requested state.

    For Toffoli states both routes are searched: a factory with a Toffoli
    round, and seven T states per Toffoli from a T factory.  The volume of
    the returned layout is per requested state (the T route is scaled by 7).
    """
    if kind not in ("T", "Toffoli"):
        raise ValueError("magic kind must be 'T' or 'Toffoli'")
    best_layout, best_v = None, math.inf
    routes = [("Toffoli", n_states, 1)] if kind == "Toffoli" else [("T", n_states, 1)]
    if kind == "Toffoli" and allow_t_route:
        routes.append(("T", 7 * n_states, 7))
    for output, count, mult in routes:
        scored = _search(params, count, output)
        if not scored:
            continue
        s = _best(scored)
        if s.volume * mult < best_v:
            n_iter = max(1.0, count / s.structure.k_out)
            lay = _to_layout(s, params, epsilon_target(params.p_suc_alg, n_iter), output)
            best_layout, best_v = replace(lay, volume=lay.volume * mult), s.volume * mult
    if best_layout is None:
        raise NoValidFactory("no candidate factory reaches the target")
    return best_layout


def best_by_mode(params: ResourceParams, n_states: float, kind: str = "T") -> dict[str, FactoryLayout | None]:
    """Best layout restricted to each checking mode."""
    output = "Toffoli" if kind == "Toffoli" else "T"
    scored = _search(params, n_states, output)
    out: dict[str, FactoryLayout | None] = {}
    for mode in ("module", "block"):
        sub = [b for b in scored if b.structure.mode == mode]
        if not sub:
            out[mode] = None
            continue
        s = _best(sub)
        n_iter = max(1.0, n_states / s.structure.k_out)
        out[mode] = _to_layout(s, params, epsilon_target(params.p_suc_alg, n_iter), output)
    return out


def grid_neighbours(layout: FactoryLayout, params: ResourceParams, n_states: float) -> list[FactoryLayout]:
    """Layouts differing from ``layout`` by one step in one attempt count."""
    from .codes import protocol_from_name

    codes = tuple(protocol_from_name(c) for c in layout.codes)
    st = build_structure(codes, layout.mode, params.eps_in)
    eps_t = epsilon_target(params.p_suc_alg, max(1.0, n_states / st.k_out))
    out = []
    for i in range(layout.rounds):
        for step in (-1, 1):
            t = list(layout.attempts)
            t[i] += step
            if t[i] in ATTEMPTS:
                out.append(evaluate_layout(st, params, eps_t, t, layout.output))
    return out


# ---------------------------------------------------------------------------
# Shor benchmark


@dataclass(frozen=True)
class ShorTask:
    bits: int

    @property
    def toffoli_count(self) -> int:
        return 40 * self.bits**3

    @property
    def toffoli_depth(self) -> int:
        return 40 * self.bits**3


@dataclass(frozen=True)
class TimeOptimal:
    layout: FactoryLayout
    copies: int
    physical_qubits: int
    runtime_s: float
    route: str


def runtime_seconds(task: ShorTask, params: ResourceParams) -> float:
    """Sequential Toffolis at one per measure/feed-forward: ``40 N^3 t_meas_ff``."""
    return task.toffoli_depth * params.t_meas_ff


def human_duration(seconds: float) -> tuple[float, str]:
    """Pick hours, days, weeks or years the way a table would print them."""
    if seconds < 2 * SECONDS["days"]:
        unit = "hours"
    elif seconds < 2 * SECONDS["weeks"]:
        unit = "days"
    elif seconds < 104 * SECONDS["weeks"]:
        unit = "weeks"
    else:
        unit = "years"
    return seconds / SECONDS[unit], unit


def time_optimal_sizing(task: ShorTask, params: ResourceParams) -> TimeOptimal:
    """Smallest factory (data qubits) keeping up with one Toffoli per ``t_meas_ff``.

    A design runs its rounds as a pipeline so its output rate is
    ``K prod P_i / max_i(c_i d_i t_i)``; enough copies are placed to reach
    the required rate (7 T states per Toffoli on the T route).
    """
    need = 1.0 / params.meas_ff_ratio  # Toffolis per t_sc
    best = None
    for output, count, mult in (("Toffoli", task.toffoli_count, 1), ("T", 7 * task.toffoli_count, 7)):
        for b in _search(params, count, output):
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                copies = np.ceil(need * mult / b.rate)
                total = copies * b.footprint
            idx = int(np.argmin(total))
            if not math.isfinite(total[idx]):
                continue
            key = (float(total[idx]), float(b.volume[idx]), len(b.distances))
            if best is None or key < best[0]:
                best = (key, b.pick(idx), int(copies[idx]), output, count)
    if best is None:
        raise NoValidFactory("no candidate factory reaches the target")
    _, s, copies, output, count = best
    eps_t = epsilon_target(params.p_suc_alg, max(1.0, count / s.structure.k_out))
    lay = _to_layout(s, params, eps_t, output)
    return TimeOptimal(lay, copies, int(copies * lay.physical_qubits), runtime_seconds(task, params), output)


# ---------------------------------------------------------------------------
# scaling with the number of states


CNOT_PATCHES = 2


def cnot_volume(d: int) -> float:
    """Transversal CNOT: two patches held for one ``d``-cycle step."""
    return CNOT_PATCHES * float(d) ** 3


def algorithm_distance(params: ResourceParams, n_states: float) -> int:
    """Smallest distance whose two-patch CNOT step fails below the per-gate target."""
    return required_distance(epsilon_target(params.p_suc_alg, n_states) / CNOT_PATCHES, params.p_g)


def _log_fit_form(x, log_a, b, c):
    return np.log(np.exp(log_a) * np.log(x) ** b + c)


@dataclass(frozen=True)
class ScalingFit:
    n: tuple[float, ...]
    volume: tuple[float, ...]
    t_cnot_ratio: tuple[float, ...]
    a: float
    b: float
    c: float

    def predict(self, n: float) -> float:
        return self.a * math.log(n) ** self.b + self.c


def fit_scaling(ns: Sequence[float], volumes: Sequence[float]) -> tuple[float, float, float]:
    """Fit ``V = a ln(N)^b + c`` on relative residuals with ``a, c >= 0``.

    The volumes span more than a decade, so absolute residuals would let
    the largest points dominate.
    """
    x, y = np.asarray(ns, float), np.asarray(volumes, float)
    if len(x) < 3:
        raise ValueError("need at least three points to fit a, b, c")
    p0 = (math.log(y[0] / math.log(x[0]) ** 3), 3.0, 0.1 * y[0])
    with warnings.catch_warnings():
        # the covariance is unused; three points leave it undefined
        warnings.simplefilter("ignore", OptimizeWarning)
        popt, _ = curve_fit(_log_fit_form, x, np.log(y), p0=p0,
                            bounds=([-60.0, 0.0, 0.0], [60.0, 10.0, np.inf]), maxfev=20000)
    return math.exp(popt[0]), float(popt[1]), float(popt[2])


def scaling_curve(params: ResourceParams, n_values: Iterable[float]) -> ScalingFit:
    """Best T-state volume against the number of states, with the fitted curve.

    ``N < 2`` has no meaningful target and is skipped.
    """
    ns, vs, ratios = [], [], []
    for n in n_values:
        if n < 2:
            continue
        lay = optimize_factory(params, n, "T")
        ns.append(float(n))
        vs.append(lay.volume)
        ratios.append(lay.volume / cnot_volume(algorithm_distance(params, n)))
    a, b, c = fit_scaling(ns, vs)
    return ScalingFit(tuple(ns), tuple(vs), tuple(ratios), a, b, c)


# ---------------------------------------------------------------------------
# yield curves


def yield_curve(eps_in: float, targets: Sequence[float], kind: str = "T") -> list[dict]:
    """Fewest raw states per output reaching each target, per checking mode."""
    rows = []
    sts = _structures_cached("Toffoli" if kind == "Toffoli" else "T", eps_in)
    for target in targets:
        rec = {"target": target}
        for mode in ("module", "block"):
            best = math.inf
            for st in sts:
                if st.mode == mode or (len(st.codes) == 1 and mode == "block"):
                    if st.eps_out <= target:
                        best = min(best, _cost_cached(st.codes, eps_in, st.mode))
            rec[mode] = best
        rows.append(rec)
    return rows


@functools.lru_cache(maxsize=None)
def _cost_cached(codes, eps_in, mode) -> float:
    from .tracking import cost

    return cost(list(codes), eps_in, "block" if mode == "block" else "module")
