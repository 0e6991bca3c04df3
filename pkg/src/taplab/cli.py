"""Experiment harness.

Subcommands: ``run`` (one scheduler on one instance, JSON record),
``sweep`` (scheduler x instance matrix, CSV), ``gen`` (write instances),
``duel`` (scheduler versus adaptive adversary), ``oracle`` (offline
bounds), ``verify`` (acceptance battery).  All outputs are deterministic
given inputs and seeds; rationals are serialized in lowest terms.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor

from .adversary import (
    GenParams,
    GoldenAdversary,
    NonPreemptiveAdversary,
    gen_c_trigger,
    gen_dtap_levels,
    gen_geometric,
    gen_mrt_cheap_expensive,
    gen_random,
    gen_random_dtap,
    gen_randlb,
)
from .core import (
    Decision,
    TAP,
    Task,
    TapError,
    instance_hash,
    metrics_from_trace,
    tap_from_json,
    tap_to_json,
)
from .engine import EngineConfig, simulate, validate_trace
from .oracle import (
    InstanceTooLargeError,
    grid_opt,
    opt_awake_exhaustive,
    opt_awake_given_decisions,
    opt_trt_lower,
)
from .rationals import Rat, ZERO, ONE, parse_rat, rat_str
from .sched_mrt import CScheduler
from .verify import SCHEDULERS, default_seed, format_results, make_scheduler, run_battery

SWEEP_COLUMNS = [
    "instance", "scheduler", "p", "n", "awake", "trt", "opt_awake", "trt_lb",
    "ratio_awake", "ratio_trt_lb", "max_ballistic_over_2sigma", "violations",
]


def _die(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _load_tap(path: str) -> TAP:
    with open(path) as fh:
        tap = tap_from_json(fh.read())
    tap.validate()
    return tap


def _build_scheduler(name: str, args) -> tuple:
    """(scheduler, EngineConfig) honoring per-scheduler defaults and flags."""
    if name not in SCHEDULERS:
        raise TapError(f"unknown scheduler {name!r}")
    _, default_factor, needs_cancel = SCHEDULERS[name]
    factor = args.budget_factor if args.budget_factor is not None else default_factor
    if needs_cancel and not args.allow_cancel:
        raise TapError(f"scheduler {name!r} requires --allow-cancel")
    if name == "csched":
        scheduler = CScheduler(inner_scale=args.inner_scale, budget_factor=factor)
    else:
        scheduler = make_scheduler(name)
    return scheduler, factor


def _config(tap: TAP, factor, args) -> EngineConfig:
    return EngineConfig(
        speed=parse_rat(args.speed),
        processor_budget=Rat(factor) * tap.p,
        allow_cancel=args.allow_cancel,
    )


def _run_record(tap: TAP, name: str, args) -> dict:
    scheduler, factor = _build_scheduler(name, args)
    config = _config(tap, factor, args)
    trace = simulate(tap, scheduler, config)
    metrics = metrics_from_trace(trace, tap)
    report = validate_trace(trace, tap, config)
    return {
        "scheduler": name,
        "instance_hash": instance_hash(tap),
        "p": tap.p,
        "speed": rat_str(config.speed),
        "budget_factor": rat_str(Rat(factor)),
        "awake": rat_str(metrics.awake),
        "trt": rat_str(metrics.trt),
        "mrt": rat_str(metrics.mrt),
        "n": tap.n,
        "cancellations": len(trace.cancellations),
        "violations": report.violations,
    }, trace


def cmd_run(args) -> int:
    try:
        tap = _load_tap(args.instance)
        record, trace = _run_record(tap, args.scheduler, args)
    except (TapError, OSError) as exc:
        return _die(str(exc))
    print(json.dumps(record, separators=(",", ":"), sort_keys=True))
    if args.dump_trace:
        dump = {
            "slices": [
                [rat_str(a), rat_str(b), {str(t): rat_str(r) for t, r in alloc.items()}]
                for a, b, alloc in trace.slices
            ],
            "completions": {str(t): rat_str(f) for t, f in trace.completions.items()},
            "cancellations": [[t, rat_str(at)] for t, at in trace.cancellations],
        }
        with open(args.dump_trace, "w") as fh:
            json.dump(dump, fh, separators=(",", ":"), sort_keys=True)
    return 0 if not record["violations"] else 1


# --- gen ---------------------------------------------------------------------

def _generate(args) -> TAP:
    name = args.generator
    seed = args.seed if args.seed is not None else default_seed()
    if name == "random":
        return gen_random(GenParams(
            p=args.p, n=args.n, seed=seed,
            ratio_distribution=args.ratio_dist, arrival_pattern=args.arrival,
        ))
    if name == "geometric":
        return gen_geometric(args.p)
    if name == "randlb":
        return gen_randlb(args.p, args.blocks, seed)
    if name == "cheap-expensive":
        return gen_mrt_cheap_expensive(args.p, seed)
    if name == "dtap-levels":
        return gen_dtap_levels(args.p, seed)
    if name == "dtap-random":
        return gen_random_dtap(GenParams(p=args.p, n=args.n, seed=seed))
    if name == "c-trigger":
        return gen_c_trigger(args.p, parse_rat(args.sigma_t))
    raise TapError(f"unknown generator {name!r}")


def cmd_gen(args) -> int:
    try:
        tap = _generate(args)
    except TapError as exc:
        return _die(str(exc))
    text = tap_to_json(tap)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


# --- sweep -------------------------------------------------------------------

def _sweep_instances(args):
    """(label, TAP) pairs in deterministic order."""
    if args.dir:
        import os

        names = sorted(
            f for f in os.listdir(args.dir) if f.endswith(".json")
        )
        for fname in names:
            yield fname, _load_tap(f"{args.dir}/{fname}")
        return
    seed = args.seed if args.seed is not None else default_seed()
    ps = [int(x) for x in args.p_list.split(",")]
    for i in range(args.count):
        params = GenParams(
            p=ps[i % len(ps)], n=args.n, seed=seed + i,
            ratio_distribution=args.ratio_dist, arrival_pattern=args.arrival,
        )
        tap = gen_random(params)
        yield f"{args.generator}-{seed + i}", tap


def _sweep_row(label: str, tap: TAP, name: str, args) -> list:
    try:
        record, trace = _run_record(tap, name, args)
    except TapError as exc:
        return [label, name, tap.p, tap.n, "", "", "", "", "", "", "", str(exc)]
    opt_awake = trt_lb = ratio_awake = ratio_trt = ""
    if args.oracle in ("exhaustive", "both"):
        try:
            opt, _ = opt_awake_exhaustive(tap, bound=args.oracle_bound)
            opt_awake = rat_str(opt)
            if opt > 0:
                ratio_awake = rat_str(parse_rat(record["awake"]) / opt)
        except InstanceTooLargeError:
            pass
    if args.oracle in ("lb", "both"):
        lb = opt_trt_lower(tap)
        trt_lb = rat_str(lb)
        if lb > 0:
            ratio_trt = rat_str(parse_rat(record["trt"]) / lb)
    ballistic = ""
    records = trace.aux.get("c_modes", [])
    ratios = [
        (r.exited - r.entered) / (2 * tap.task(r.task_id).sigma)
        for r in records
        if r.mode == "ballistic" and r.exited is not None
    ]
    if ratios:
        ballistic = rat_str(max(ratios))
    return [
        label, name, tap.p, tap.n, record["awake"], record["trt"],
        opt_awake, trt_lb, ratio_awake, ratio_trt, ballistic,
        " / ".join(record["violations"]),
    ]


def cmd_sweep(args) -> int:
    try:
        instances = list(_sweep_instances(args))
    except (TapError, OSError) as exc:
        return _die(str(exc))
    schedulers = args.schedulers.split(",")
    jobs = [
        (label, tap, name)
        for label, tap in instances
        for name in schedulers
    ]
    rows = [None] * len(jobs)

    def work(i):
        label, tap, name = jobs[i]
        rows[i] = _sweep_row(label, tap, name, args)

    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        list(pool.map(work, range(len(jobs))))
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    skipped = [r for r in rows if r[4] == "" and r[11]]
    for row in rows:
        writer.writerow(row)
    for row in skipped:
        print(f"warning: {row[0]}/{row[1]}: {row[11]}", file=sys.stderr)
    text = out.getvalue()
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


# --- duel --------------------------------------------------------------------

def cmd_duel(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    try:
        scheduler, factor = _build_scheduler(args.scheduler, args)
        if args.adversary == "golden":
            p = args.p
            adv = GoldenAdversary(p)
            base = TAP(p, ())
            config = _config(base, factor, args)
            trace = simulate(base, scheduler, config, adversary=adv)
            emitted = [t for t in adv.initial_tasks()]
            if adv.injected:
                from .rationals import PHI

                sigma = PHI - adv.inject_time
                emitted += [
                    Task(i, sigma, p * sigma, adv.inject_time)
                    for i in range(1, p)
                ]
            tap = TAP(p, tuple(emitted))
            awake = metrics_from_trace(trace, tap).awake
            opt = opt_awake_given_decisions(tap, adv.witness_decisions())
            report = {
                "adversary": "golden",
                "scheduler": args.scheduler,
                "p": p,
                "injected": adv.injected,
                "awake": rat_str(awake),
                "opt_awake": rat_str(opt),
                "ratio": rat_str(awake / opt),
            }
        elif args.adversary == "flood":
            probe = (
                _load_tap(args.probe)
                if args.probe
                else TAP(args.p, (Task(0, ONE, Rat(args.p), ZERO),))
            )
            h = opt_trt_lower(probe)
            adv = NonPreemptiveAdversary(args.R, probe, h)
            config = _config(probe, factor, args)
            trace = simulate(probe, scheduler, config, adversary=adv)
            emitted = list(probe.tasks)
            if adv.triggered:
                emitted += [
                    Task(tid, adv.tiny, adv.tiny, at)
                    for tid, at in sorted(trace.arrivals.items())
                    if tid >= adv.base_id
                ]
            tap = TAP(probe.p, tuple(emitted))
            trt = metrics_from_trace(trace, tap).trt
            lb = opt_trt_lower(tap)
            report = {
                "adversary": "flood",
                "scheduler": args.scheduler,
                "R": args.R,
                "triggered": adv.triggered,
                "trt": rat_str(trt),
                "trt_lb": rat_str(lb),
                "ratio": rat_str(trt / lb),
            }
            if not adv.triggered:
                report["inconclusive"] = True
        else:
            return _die(f"unknown adversary {args.adversary!r}")
    except (TapError, OSError) as exc:
        return _die(str(exc))
    report["seed"] = seed
    print(json.dumps(report, separators=(",", ":"), sort_keys=True))
    return 0


# --- oracle ------------------------------------------------------------------

def cmd_oracle(args) -> int:
    try:
        tap = _load_tap(args.instance)
        if args.method == "exhaustive":
            if args.objective != "awake":
                return _die("exhaustive oracle supports only the awake objective")
            value, decisions = opt_awake_exhaustive(tap, bound=args.bound)
            record = {
                "method": "exhaustive",
                "objective": "awake",
                "value": rat_str(value),
                "decisions": {
                    str(tid): d.name.lower() for tid, d in sorted(decisions.items())
                },
            }
        elif args.method == "grid":
            value = grid_opt(tap, args.objective, parse_rat(args.grid))
            record = {
                "method": "grid",
                "objective": args.objective,
                "grid": args.grid,
                "value": rat_str(value),
            }
        elif args.method == "lb":
            if args.objective != "trt":
                return _die("the lower-bound oracle supports only the trt objective")
            record = {
                "method": "lb",
                "objective": "trt",
                "value": rat_str(opt_trt_lower(tap)),
            }
        else:
            return _die(f"unknown method {args.method!r}")
    except (TapError, OSError) as exc:
        return _die(str(exc))
    record["instance_hash"] = instance_hash(tap)
    print(json.dumps(record, separators=(",", ":"), sort_keys=True))
    return 0


def cmd_verify(args) -> int:
    results = run_battery(seed=args.seed, only=args.only)
    print(format_results(results))
    return 0 if all(r.passed for r in results) else 1


# --- argument parsing --------------------------------------------------------

def _add_run_flags(sub):
    sub.add_argument("--speed", default="1", help="speed augmentation factor")
    sub.add_argument("--budget-factor", type=int, default=None,
                     help="processor budget as a multiple of p")
    sub.add_argument("--allow-cancel", action="store_true")
    sub.add_argument("--inner-scale", type=int, default=3,
                     help="work scale of csched's nested simulation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taplab",
        description="Simulation laboratory for serial/parallel scheduling",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_run = subs.add_parser("run", help="run one scheduler on one instance")
    p_run.add_argument("instance")
    p_run.add_argument("scheduler", help=",".join(sorted(SCHEDULERS)))
    p_run.add_argument("--dump-trace", metavar="FILE")
    _add_run_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_gen = subs.add_parser("gen", help="generate an instance")
    p_gen.add_argument("generator", help="random|geometric|randlb|cheap-expensive|"
                       "dtap-levels|dtap-random|c-trigger")
    p_gen.add_argument("--p", type=int, default=8)
    p_gen.add_argument("--n", type=int, default=8)
    p_gen.add_argument("--seed", type=int, default=None)
    p_gen.add_argument("--ratio-dist", default="uniform",
                       choices=["uniform", "extremes", "pow2"])
    p_gen.add_argument("--arrival", default="batch",
                       choices=["batch", "poisson", "bursty"])
    p_gen.add_argument("--blocks", type=int, default=4)
    p_gen.add_argument("--sigma-t", default="4")
    p_gen.add_argument("-o", "--output")
    p_gen.set_defaults(func=cmd_gen)

    p_sweep = subs.add_parser("sweep", help="scheduler x instance matrix to CSV")
    p_sweep.add_argument("--dir", help="directory of instance JSON files")
    p_sweep.add_argument("--generator", default="random")
    p_sweep.add_argument("--count", type=int, default=100)
    p_sweep.add_argument("--p-list", default="4,8,16")
    p_sweep.add_argument("--n", type=int, default=8)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--ratio-dist", default="uniform",
                         choices=["uniform", "extremes", "pow2"])
    p_sweep.add_argument("--arrival", default="batch",
                         choices=["batch", "poisson", "bursty"])
    p_sweep.add_argument("--schedulers", default="bal,unk")
    p_sweep.add_argument("--oracle", default="both",
                         choices=["exhaustive", "lb", "both", "none"])
    p_sweep.add_argument("--oracle-bound", type=int, default=14,
                         help="largest n the exhaustive oracle will attempt")
    p_sweep.add_argument("--jobs", type=int, default=4)
    p_sweep.add_argument("-o", "--output")
    _add_run_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_duel = subs.add_parser("duel", help="scheduler versus adaptive adversary")
    p_duel.add_argument("scheduler")
    p_duel.add_argument("adversary", help="golden|flood")
    p_duel.add_argument("--p", type=int, default=100)
    p_duel.add_argument("--R", type=int, default=10)
    p_duel.add_argument("--probe", help="probe instance file for the flood")
    p_duel.add_argument("--seed", type=int, default=None)
    _add_run_flags(p_duel)
    p_duel.set_defaults(func=cmd_duel)

    p_oracle = subs.add_parser("oracle", help="offline optimum and bounds")
    p_oracle.add_argument("instance")
    p_oracle.add_argument("--objective", default="awake", choices=["awake", "trt"])
    p_oracle.add_argument("--method", default="exhaustive",
                          choices=["exhaustive", "grid", "lb"])
    p_oracle.add_argument("--grid", default="1/4")
    p_oracle.add_argument("--bound", type=int, default=20)
    p_oracle.set_defaults(func=cmd_oracle)

    p_verify = subs.add_parser("verify", help="run the acceptance battery")
    p_verify.add_argument("--only", help="run a single criterion, e.g. A3")
    p_verify.add_argument("--seed", type=int, default=None)
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
