"""Command-line front end.

Every subcommand writes CSV (and sometimes key=value text) into ``--out``
plus ``<command>_manifest.json`` holding the argv, the parameters and a
sha256 of each output.  Replaying the recorded argv reproduces the files
byte for byte.

Exit codes: 0 ok, 2 usage, 3 infeasible target, 4 invariant failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .codes import (
    bravyi_haah, closed_form_sum_eta_power, code_invariant_violations, eta,
    reed_muller_code, sum_eta_power, toffoli_code,
)
from .factory import FactorySpec
from .realization import DepthExceeded, bh_schedule, build_g_perp, gauge_msd_plan, rm_schedule, toffoli_schedules
from .resources import (
    FactoryInvalid, NoValidFactory, ResourceParams, ShorTask, Unachievable, best_by_mode, human_duration,
    optimize_factory, scaling_curve, time_optimal_sizing, yield_curve,
)
from .simulate import InvalidPreselection, SimConfig, estimate, simulate
from .tracking import (
    leading_coefficient, serialize_reports, special_k2_value, table2_rows, track_block_checked,
    track_module_checked,
)

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_INVARIANT = 0, 2, 3, 4

# published Table I values: per-Toffoli volume and time-optimal factory size
TABLE1_VOLUME = {1e-3: (1.41e7, 1.66e7, 1.94e7), 1e-4: (5.35e5, 5.71e5, 6.12e5)}
TABLE1_FACTORY = {1e-3: (1.73e8, 2.18e8, 2.50e8), 1e-4: (6.30e6, 6.97e6, 7.69e6)}
TABLE1_RUNTIME = {1e-3: ("6.6 weeks", "53 weeks", "8 years"), 1e-5: ("11 hours", "3.7 days", "4.2 weeks")}
TABLE1_BITS = (1000, 2000, 4000)


class InvariantFailure(RuntimeError):
    pass


def fmt(x) -> str:
    """Six significant digits in scientific notation; ints and text pass through."""
    if isinstance(x, bool) or isinstance(x, str):
        return str(x)
    if isinstance(x, int):
        return str(x)
    if x is None:
        return ""
    x = float(x)
    if math.isinf(x) or math.isnan(x):
        return str(x)
    return f"{x:.5e}"


class Outputs:
    """Tracks written files so a failed run can remove them."""

    def __init__(self, out_dir: str):
        self.dir = Path(out_dir)
        self.paths: list[Path] = []

    def path(self, name: str) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        p = self.dir / name
        self.paths.append(p)
        return p

    def csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence]) -> Path:
        p = self.path(name)
        with open(p, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([fmt(v) for v in r])
        return p

    def text(self, name: str, body: str) -> Path:
        p = self.path(name)
        p.write_text(body, encoding="utf-8")
        return p

    def cleanup(self) -> None:
        for p in self.paths:
            if p.exists():
                p.unlink()

    def manifest(self, command: str, argv: Sequence[str], params: dict, seed: int | None) -> Path:
        digests = {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in self.paths}
        body = dict(command=command, argv=list(argv), parameters=params, seed=seed, version=__version__,
                    outputs=digests)
        p = self.path(f"{command}_manifest.json")
        p.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return p


def _protocol(args):
    kind = args.protocol
    if kind == "bh":
        if args.k is None:
            raise ValueError("--k is required for bh")
        return bravyi_haah(args.k)
    if kind == "toffoli":
        return toffoli_code()
    if kind == "rm":
        return reed_muller_code()
    raise ValueError(f"unknown protocol {kind!r}")


def _params(args) -> ResourceParams:
    return ResourceParams(p_g=args.pg, t_sc=args.tsc)


def _bits(y: int, k: int) -> str:
    return "".join(str((y >> j) & 1) for j in range(k))


# ---------------------------------------------------------------------------
# subcommands; each returns (params for the manifest, seed, stdout lines)


def cmd_eta(args, out: Outputs):
    code = _protocol(args)
    bad = code_invariant_violations(code)
    if bad:
        raise InvariantFailure("; ".join(bad))
    e = eta(code)
    rows = [(_bits(y, code.k), e.weight, c) for y, c in sorted(e.counts.items()) if c]
    out.csv("eta.csv", ["y", "input_weight", "eta"], rows)
    sums = []
    for m in (1, 2, 4, 8):
        got = sum_eta_power(code, m)
        ref = closed_form_sum_eta_power(code, m)
        if ref is not None and ref != got:
            raise InvariantFailure(f"sum eta^{m} = {got} but closed form gives {ref}")
        sums.append((m, got, "" if ref is None else ref))
    out.csv("eta_sums.csv", ["m", "sum_eta_power", "closed_form"], sums)
    lines = [f"{code.label}: {len(rows)} nonzero entries, sum eta = {e.total()}"]
    return dict(protocol=args.protocol, k=args.k), None, lines


def _rounds(args):
    if not args.rounds:
        raise ValueError("--rounds is required, e.g. bh:10,bh:10")
    return FactorySpec.parse(args.rounds, args.mode).codes


def cmd_track(args, out: Outputs):
    codes = _rounds(args)
    if args.mode == "module":
        reps = track_module_checked(codes, args.eps)
    else:
        reps = track_block_checked(codes, args.eps)
    header = {"rounds": args.rounds, "mode": args.mode, "eps": fmt(args.eps)}
    out.text("track.txt", serialize_reports(reps, header))
    out.csv("track.csv", ["level", "p_suc", "eps_g", "branch_width", "per_state_error", "method"],
            [(r.level, r.p_suc, r.eps_g, r.branch_width, r.per_state_error, r.method) for r in reps])
    lines = [f"level {r.level}: p_suc={fmt(r.p_suc)} eps_g={fmt(r.eps_g)}" for r in reps]
    return dict(rounds=args.rounds, mode=args.mode, eps=args.eps), None, lines


def cmd_simulate(args, out: Outputs):
    if args.seed is None:
        raise ValueError("--seed is required for simulate")
    codes = _rounds(args)
    cfg = SimConfig(tuple(codes), args.eps, args.trials, args.seed, args.method)
    counts = simulate(cfg)
    est = estimate(counts)
    theory = track_module_checked(codes, args.eps)[-1]
    ratio = est.eps_glo / theory.eps_g if theory.eps_g > 0 else math.nan
    if counts.firewall_violations:
        raise InvariantFailure(f"{counts.firewall_violations} modules passed with unequal corrupt branches")
    out.csv("simulate.csv",
            ["rounds", "eps", "trials", "seed", "method", "p_suc", "eps_glo", "stderr", "upper_bound",
             "theorem_eps_glo", "ratio", "firewall_checked", "firewall_violations"],
            [(args.rounds, args.eps, args.trials, args.seed, args.method, est.p_suc, est.eps_glo, est.stderr,
              est.upper_bound, theory.eps_g, ratio, counts.firewall_checked, counts.firewall_violations)])
    lines = [f"eps_glo={fmt(est.eps_glo)} +- {fmt(est.stderr)} (analytic {fmt(theory.eps_g)}, ratio {ratio:.4f})"]
    params = dict(rounds=args.rounds, eps=args.eps, trials=args.trials, method=args.method, config=cfg.digest())
    return params, args.seed, lines


def cmd_realize(args, out: Outputs):
    proto = args.protocol
    if proto == "bh":
        if args.k is None:
            raise ValueError("--k is required for bh")
        plan = gauge_msd_plan(args.k)
        sched = bh_schedule(args.k)
        if not plan.h_z_consistent():
            raise InvariantFailure("X-correction rows are not gauge operators")
        out.text("g_perp.txt", build_g_perp(args.k).to_text() + "\n")
        out.csv("plan.csv", ["step", "operation", "qubits"],
                [(s.step, s.operation, " ".join(str(q + 1) for q in s.qubits)) for s in plan.steps])
        schedules = [("z_stage", sched)]
    elif proto == "rm":
        schedules = [("checks", rm_schedule())]
    elif proto == "toffoli":
        a, b = toffoli_schedules()
        schedules = [("z_checks", a), ("x_check", b)]
    else:
        raise ValueError(f"unknown protocol {proto!r}")
    rows = []
    for name, s in schedules:
        if not s.is_proper():
            raise InvariantFailure(f"{name}: two gates share a qubit in one time step")
        rows.extend((name, slot, a, b) for slot, a, b in s.listing())
    out.csv("schedule.csv", ["stage", "slot", "ancilla", "qubit"], rows)
    lines = [f"{name}: depth {s.depth}, {len(s.edges)} gates, {s.ancilla_count} ancillas" for name, s in schedules]
    return dict(protocol=proto, k=args.k), None, lines


_LAYOUT_HEADER = ["factory", "mode", "output", "attempts", "distances", "logical_qubits", "round_cycles",
                  "round_success", "k_out", "volume", "physical_qubits", "physical_qubits_with_ancilla",
                  "eps_out", "eps_target"]


def cmd_optimize(args, out: Outputs):
    params = _params(args)
    if args.mode:
        lay = best_by_mode(params, args.states, args.kind)[args.mode]
        if lay is None:
            raise NoValidFactory(f"no {args.mode}-checked factory reaches the target")
    else:
        lay = optimize_factory(params, args.states, args.kind)
    items = dict(lay.report_items())
    out.csv("optimize.csv", _LAYOUT_HEADER, [[items[h] for h in _LAYOUT_HEADER]])
    lines = [f"{lay.label}: volume {fmt(lay.volume)} qubit-rounds per state, distances {lay.distances}"]
    return dict(pg=args.pg, tsc=args.tsc, states=args.states, kind=args.kind, mode=args.mode), None, lines


def cmd_table1(args, out: Outputs):
    pgs = [args.pg] if args.pg_given else sorted(TABLE1_VOLUME, reverse=True)
    vol_rows, size_rows, time_rows = [], [], []
    for pg in pgs:
        params = ResourceParams(p_g=pg)
        for i, bits in enumerate(TABLE1_BITS):
            task = ShorTask(bits)
            lay = optimize_factory(params, task.toffoli_count, "Toffoli")
            ref = TABLE1_VOLUME.get(pg, (None,) * 3)[i]
            vol_rows.append((bits, pg, math.log10(task.toffoli_count), ref, lay.volume,
                             lay.volume / ref if ref else None, lay.label))
            opt = time_optimal_sizing(task, params)
            ref = TABLE1_FACTORY.get(pg, (None,) * 3)[i]
            size_rows.append((bits, pg, ref, opt.physical_qubits, opt.physical_qubits / ref if ref else None,
                              opt.copies, opt.layout.label))
    for tsc, refs in TABLE1_RUNTIME.items():
        for bits, ref in zip(TABLE1_BITS, refs):
            task = ShorTask(bits)
            value, unit = human_duration(task.toffoli_depth * 0.1 * tsc)
            time_rows.append((bits, tsc, ref, f"{value:.2g} {unit}"))
    out.csv("table1_volume.csv", ["bits", "p_g", "log10_toffolis", "reference", "computed", "ratio", "factory"],
            vol_rows)
    out.csv("table1_factory.csv", ["bits", "p_g", "reference", "computed", "ratio", "copies", "factory"], size_rows)
    out.csv("table1_runtime.csv", ["bits", "t_sc", "reference", "computed"], time_rows)
    lines = [f"{b}-bit p_g={pg:g}: volume {fmt(v)} vs {fmt(r)} (x{q:.2f})" for b, pg, _, r, v, q, _ in vol_rows]
    lines += [f"{b}-bit p_g={pg:g}: factory {fmt(v)} vs {fmt(r)} (x{q:.2f})" for b, pg, r, v, q, _, _ in size_rows]
    lines += [f"{b}-bit t_sc={t:g}: {c} (reference {r})" for b, t, r, c in time_rows]
    return dict(pg=pgs), None, lines


def cmd_table2(args, out: Outputs):
    rows = []
    for row in table2_rows():
        for k in (2, 6, 10, 14):
            ks = (k,) * row["nbh"]
            codes = row["build"](ks)
            got = leading_coefficient(codes)
            ref = special_k2_value(codes) if k == 2 else row["printed"](ks)
            match = "yes" if got == ref else "no"
            rows.append((row["label"], k, int(ref), got, match))
    out.csv("table2.csv", ["rounds", "k", "reference", "computed", "exact match"], rows)
    bad = [r for r in rows if r[-1] != "yes"]
    if bad:
        raise InvariantFailure(f"{len(bad)} leading coefficients differ from the table")
    return {}, None, [f"{len(rows)} coefficients, all exact"]


def cmd_curves(args, out: Outputs):
    params = _params(args)
    lines = []
    if args.curve in ("scaling", "all"):
        ns = [10.0 ** e for e in range(10, 31, 2)]
        fit = scaling_curve(params, ns)
        out.csv("curves_scaling.csv", ["n_states", "volume", "t_cnot_ratio"],
                list(zip(fit.n, fit.volume, fit.t_cnot_ratio)))
        out.csv("curves_scaling_fit.csv", ["a", "b", "c"], [(fit.a, fit.b, fit.c)])
        lines.append(f"fit a={fmt(fit.a)} b={fit.b:.3f} c={fmt(fit.c)}")
    if args.curve in ("yield", "all"):
        targets = [10.0 ** -e for e in range(6, 31, 2)]
        rows = yield_curve(params.eps_in, targets)
        out.csv("curves_yield.csv", ["target", "module_cost", "block_cost", "block_over_module"],
                [(r["target"], r["module"], r["block"], r["block"] / r["module"]) for r in rows])
        lines.append(f"{len(rows)} yield points")
    return dict(pg=args.pg, tsc=args.tsc, curve=args.curve), None, lines


COMMANDS: dict[str, Callable] = dict(eta=cmd_eta, track=cmd_track, simulate=cmd_simulate, realize=cmd_realize,
                                     optimize=cmd_optimize, table1=cmd_table1, table2=cmd_table2,
                                     curves=cmd_curves)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="msdfactory", description="Magic state factory analysis")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--out", default=".", help="output directory")
        return p

    p = add("eta", "undetected-error counts of one protocol")
    p.add_argument("--protocol", choices=["bh", "toffoli", "rm"], required=True)
    p.add_argument("--k", type=int)

    for name, help_ in (("track", "analytic error tracking"), ("simulate", "Monte Carlo of a module-checked factory")):
        p = add(name, help_)
        p.add_argument("--rounds", required=True, help="comma list such as bh:10,bh:10,tof")
        p.add_argument("--eps", type=float, required=True)
        if name == "track":
            p.add_argument("--mode", choices=["module", "block"], default="module")
        else:
            p.set_defaults(mode="module")
            p.add_argument("--trials", type=int, default=100_000)
            p.add_argument("--seed", type=int)
            p.add_argument("--method", choices=["rare", "brute"], default="rare")

    p = add("realize", "measurement schedule of one block")
    p.add_argument("--protocol", choices=["bh", "toffoli", "rm"], default="bh")
    p.add_argument("--k", type=int)

    for name, help_ in (("optimize", "cheapest factory for a number of states"),
                        ("table1", "factoring benchmark"), ("curves", "scaling and yield data")):
        p = add(name, help_)
        p.add_argument("--pg", type=float, default=None)
        p.add_argument("--tsc", type=float, default=1e-3)
        if name == "optimize":
            p.add_argument("--states", type=float, required=True)
            p.add_argument("--kind", choices=["T", "Toffoli"], default="T")
            p.add_argument("--mode", choices=["module", "block"])
        if name == "curves":
            p.add_argument("--curve", choices=["scaling", "yield", "all"], default="all")

    add("table2", "leading coefficients of multi-round factories")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if hasattr(args, "pg"):
        args.pg_given = args.pg is not None
        if args.pg is None:
            args.pg = 1e-3
    out = Outputs(args.out)
    try:
        params, seed, lines = COMMANDS[args.command](args, out)
        out.manifest(args.command, argv, params, seed)
    except (NoValidFactory, FactoryInvalid, Unachievable) as exc:
        out.cleanup()
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InvariantFailure, DepthExceeded, InvalidPreselection) as exc:
        out.cleanup()
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        out.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BaseException:
        out.cleanup()
        raise
    for line in lines:
        print(line)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
