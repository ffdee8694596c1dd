"""Command-line front end: ``simulate``, ``verify``, ``compute`` and ``stats``.

Exit codes: 0 ok, 2 verification or oracle failure, 3 deadlock, 4 bad configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import nullcontext
from itertools import product
from pathlib import Path

from .aggregation import phase_cost, random_registers, run_computation
from .causality import build_dag, cut_k, lift, verify_strong_wave, verify_wave, verify_wavelet
from .config import encode_value, load_config, to_jsonable
from .errors import (
    ConfigError,
    Deadlock,
    GraphError,
    Incomplete,
    MissingTask,
    NotWU0,
    ParamError,
    ReplayMismatch,
    TooLarge,
    Truncated,
    UnisonError,
)
from .phase_clock import check_WU0
from .protocol import default_params
from .scheduler import (
    Daemon,
    UntilLifted,
    first_index,
    random_configuration,
    run,
    until_WU0,
)
from .topology import FAMILIES, family
from .traces import read_trace, replay, summarize, write_trace

EXIT_OK, EXIT_FAIL, EXIT_DEADLOCK, EXIT_CONFIG = 0, 2, 3, 4
DEFAULT_STEP_CAP = 200_000

CSV_COLUMNS = (
    "family",
    "n",
    "K",
    "alpha",
    "delta",
    "daemon",
    "seed",
    "rounds_to_WU",
    "rounds_to_WU0",
    "na_per_phase",
    "reads_per_phase",
)


def _emit(doc: dict) -> None:
    print(json.dumps(to_jsonable(doc), indent=2, allow_nan=False))


def _open_out(path: str | None):
    if path is None or path == "-":
        return nullcontext(sys.stdout)
    return open(path, "w")


# --- simulate ------------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, seed=args.seed)
    max_steps = args.max_steps if args.max_steps is not None else cfg.max_steps
    g, params = cfg.graph, cfg.params
    daemon = cfg.make_daemon()
    conf0 = cfg.initial_configuration()
    if max_steps is None:
        stop, cap = until_WU0(g, params), DEFAULT_STEP_CAP
    else:
        stop, cap = None, max_steps
    deadlock = None
    try:
        ex = run(g, params, conf0, daemon, max_steps=cap, stop=stop)
    except Deadlock as exc:
        ex, deadlock = exc.execution, exc
    summary = summarize(ex)
    if args.out:
        with _open_out(args.out) as fh:
            write_trace(fh, ex, daemon.describe(), summary)
    _emit({"effective": cfg.effective(), "summary": summary})
    if deadlock is not None:
        print(deadlock, file=sys.stderr)
        return EXIT_DEADLOCK
    return EXIT_OK


# --- verify --------------------------------------------------------------------


def _parse_segment(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError:
        raise ConfigError(f"--segment expects k1:k2, got {text!r}") from None
    if not 0 <= lo <= hi:
        raise ConfigError(f"--segment needs 0 <= k1 <= k2, got {text!r}")
    return lo, hi


def cmd_verify(args) -> int:
    k1, k2 = _parse_segment(args.segment)
    if args.trace:
        ex = replay(read_trace(args.trace))
    elif args.config:
        cfg = load_config(args.config, seed=args.seed)
        cap = args.max_steps or cfg.max_steps or DEFAULT_STEP_CAP
        tracker = UntilLifted(cfg.graph, cfg.params, lambda base: base + k2)
        ex = run(cfg.graph, cfg.params, cfg.initial_configuration(), cfg.make_daemon(),
                 max_steps=cap, stop=tracker)
    else:
        raise ConfigError("verify needs --trace or --config")
    g, params = ex.graph, ex.params
    start = first_index(ex, lambda c: check_WU0(g, params.sys, c.clocks))
    if start is None:
        raise NotWU0("the execution never reaches WU0")
    dag = build_dag(ex, start)
    lifted = lift(ex, dag)
    c1 = cut_k(lifted, lifted.base + k1)
    c2 = cut_k(lifted, lifted.base + k2)
    decide = c2.events(dag)
    k = args.k if args.k is not None else params.delta
    if args.kind == "wavelet":
        verdict = verify_wavelet(dag, c1, c2, decide, k)
    elif args.kind == "wave":
        verdict = verify_wave(dag, c1, c2, decide)
    else:
        verdict = verify_strong_wave(dag, c1, c2, decide)
    out = {
        "kind": args.kind,
        "segment": [k1, k2],
        "base": lifted.base,
        "window_start": start,
        "ok": verdict.ok,
        "failures": verdict.failures,
    }
    if args.kind == "wavelet":
        out["k"] = k
    _emit(out)
    return EXIT_OK if verdict.ok else EXIT_FAIL


# --- compute -------------------------------------------------------------------


def cmd_compute(args) -> int:
    cfg = load_config(args.config, seed=args.seed)
    task = cfg.make_task()
    phases = args.phases if args.phases is not None else cfg.phases
    conf0 = None
    if cfg.init == "in-unison" or (isinstance(cfg.init, dict) and "clocks" in cfg.init):
        conf0 = random_registers(cfg.initial_configuration(), task.op, cfg.init_seed + 1)
    report = run_computation(
        cfg.graph,
        cfg.params,
        task,
        cfg.make_daemon(),
        phases,
        conf0=conf0,
        seed=cfg.init_seed,
        max_steps=args.max_steps or cfg.max_steps or DEFAULT_STEP_CAP,
    )
    print(f"# task={task.kind} op={task.op.name} delta={cfg.params.delta} "
          f"stabilized_at_step={report.stabilized_at} rounds={report.stabilization_rounds}")
    print("phase\tcomplete\tprocess\tresult\toracle\tmatch")
    for ph in report.phases:
        for p, (got, want) in enumerate(zip(ph.values, ph.expected)):
            print(f"{ph.U}\t{int(ph.complete)}\t{p}\t{encode_value(got)}\t"
                  f"{encode_value(want)}\t{int(got == want)}")
    if args.out:
        doc = {
            "effective": cfg.effective(),
            "ok": report.ok,
            "stabilized_at": report.stabilized_at,
            "stabilization_rounds": report.stabilization_rounds,
            "phases": [
                {
                    "U": ph.U,
                    "complete": ph.complete,
                    "values": ph.values,
                    "expected": ph.expected,
                    "match": ph.match,
                    "intermediate_ok": ph.intermediate_ok,
                    "na_events": ph.na_events,
                    "reads": ph.reads,
                }
                for ph in report.phases
            ],
        }
        Path(args.out).write_text(json.dumps(to_jsonable(doc), indent=2, allow_nan=False))
    return EXIT_OK if report.ok else EXIT_FAIL


# --- stats ---------------------------------------------------------------------


def stats_trial(fam: str, n: int, seed: int, daemon_kind: str, delta: int) -> dict:
    """One sweep row: stabilize, then measure one full phase."""
    g = family(fam, n, seed)
    params = default_params(g, delta=delta)
    conf0 = random_configuration(g, params, seed)
    tracker = UntilLifted(g, params, lambda base: (base // delta + 2) * delta - 1)
    ex = run(g, params, conf0, Daemon(daemon_kind, seed=seed), max_steps=DEFAULT_STEP_CAP,
             stop=tracker)
    summary = summarize(ex)
    na = reads = None
    if tracker.reached:
        lifted = lift(ex, build_dag(ex, tracker.start))
        na, reads = phase_cost(lifted, ex, tracker.base // delta + 1)
    return {
        "family": fam,
        "n": g.n,
        "K": params.K,
        "alpha": params.alpha,
        "delta": delta,
        "daemon": daemon_kind,
        "seed": seed,
        "rounds_to_WU": summary["rounds_to_WU"],
        "rounds_to_WU0": summary["rounds_to_WU0"],
        "na_per_phase": na,
        "reads_per_phase": reads,
    }


def _parse_sizes(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def cmd_stats(args) -> int:
    sweep = {}
    if args.config:
        sweep = load_config(args.config).sweep
    families = args.families.split(",") if args.families else sweep.get("families", ["ring"])
    sizes = _parse_sizes(args.sizes) if args.sizes else sweep.get("sizes", list(range(3, 9)))
    seeds = args.seeds if args.seeds is not None else sweep.get("seeds", 10)
    daemons = args.daemons.split(",") if args.daemons else sweep.get("daemons", ["synchronous"])
    delta = args.delta if args.delta is not None else sweep.get("delta", 1)
    for fam in families:
        if fam not in FAMILIES:
            raise ConfigError(f"unknown family {fam!r}")
    base_seed = args.seed or 0
    trials = [
        (fam, n, base_seed + s, d, delta)
        for fam, n, d, s in product(families, sizes, daemons, range(seeds))
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(stats_trial, *zip(*trials)))
    else:
        rows = [stats_trial(*t) for t in trials]
    out = Path(args.out)
    with out.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    written = [str(out)]
    if not args.no_figures:
        from .report import render

        written += [str(p) for p in render(rows, out)]
    print("\n".join(written))
    return EXIT_OK


# --- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unison-waves",
        description="Simulate the self-stabilizing barrier synchronizer and check its waves.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="run-config JSON file")
        p.add_argument("--seed", type=int, help="override every seed in the config")
        p.add_argument("--max-steps", type=int, help="step limit")

    p = sub.add_parser("simulate", help="run the protocol and write a JSON-lines trace")
    common(p)
    p.add_argument("--out", help="trace output path ('-' for stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="check a lifted segment [C_k1, C_k2] as a wavelet or wave")
    common(p, config_required=False)
    p.add_argument("--trace", help="trace written by 'simulate'")
    p.add_argument("--segment", required=True, help="k1:k2, offsets above the lifted base")
    p.add_argument("--kind", choices=("wavelet", "wave", "strong-wave"), default="wave")
    p.add_argument("--k", type=int, help="wavelet radius (default: delta)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compute", help="run an aggregation task and diff against the oracle")
    common(p)
    p.add_argument("--phases", type=int, help="full phases to run after stabilization")
    p.add_argument("--out", help="JSON report path")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("stats", help="sweep families and seeds; write CSV and figures")
    p.add_argument("--config", help="config file with a 'sweep' section")
    p.add_argument("--families", help="comma list, e.g. ring,path")
    p.add_argument("--sizes", help="e.g. 3-8 or 3,5,7")
    p.add_argument("--seeds", type=int, help="seeds per (family, size, daemon)")
    p.add_argument("--daemons", help="comma list of daemon kinds")
    p.add_argument("--delta", type=int, help="phase length")
    p.add_argument("--seed", type=int, help="first seed")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", default="stats.csv", help="CSV path; figures go next to it")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Deadlock as exc:
        print(exc, file=sys.stderr)
        return EXIT_DEADLOCK
    except (ConfigError, ParamError, MissingTask, GraphError, ReplayMismatch, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NotWU0, Incomplete, Truncated, TooLarge) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except UnisonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
