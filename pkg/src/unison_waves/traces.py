"""JSON-lines execution traces: writing, reading, replay and summaries.

A trace is a ``header`` record (graph, effective parameters, daemon, initial
clocks), one ``step`` record per transition and a closing ``summary`` record.
The summary can always be recomputed by replaying the steps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

from .config import SCHEMA_VERSION, validate
from .errors import ConfigError
from .phase_clock import check_WU, check_WU0
from .protocol import Configuration, ProtocolParams, enabled_set
from .scheduler import Daemon, Execution, Transition, round_ends, rounds_until, run
from .topology import Graph, parse_graph


def header_record(ex: Execution, daemon: dict) -> dict:
    return {
        "type": "header",
        "version": SCHEMA_VERSION,
        "graph": ex.graph.to_dict(),
        "params": ex.params.to_dict(),
        "daemon": daemon,
        "initial": list(ex.initial.clocks),
    }


def step_record(index: int, tr: Transition) -> dict:
    return {
        "type": "step",
        "step": index,
        "chosen": list(tr.chosen),
        "events": [
            {
                "p": e.p,
                "action": e.action.value,
                "cs": e.cs.value if e.cs is not None else None,
                "r_before": e.r_before,
                "r_after": e.r_after,
            }
            for e in tr.events
        ],
    }


def summarize(ex: Execution) -> dict:
    """Rounds spanned, rounds to WU and WU0 (``None`` if never reached) and the deadlock flag.

    A round still in progress at the end of the execution counts as one.
    """
    g, sys = ex.graph, ex.params.sys
    ends = round_ends(ex)
    first_wu = first_wu0 = None
    for i, conf in enumerate(ex.configs):
        clocks = conf.clocks
        if first_wu is None and check_WU(g, sys, clocks):
            first_wu = i
        if check_WU0(g, sys, clocks):
            first_wu0 = i
            break
    return {
        "type": "summary",
        "steps": len(ex.steps),
        "rounds": rounds_until(ex, len(ex.steps), ends),
        "rounds_to_WU": None if first_wu is None else rounds_until(ex, first_wu, ends),
        "rounds_to_WU0": None if first_wu0 is None else rounds_until(ex, first_wu0, ends),
        "deadlock": not enabled_set(g, ex.params, ex.final.clocks),
    }


def write_trace(out: IO[str], ex: Execution, daemon: dict, summary: dict | None = None) -> dict:
    summary = summarize(ex) if summary is None else summary
    out.write(json.dumps(header_record(ex, daemon)) + "\n")
    for i, tr in enumerate(ex.steps, start=1):
        out.write(json.dumps(step_record(i, tr)) + "\n")
    out.write(json.dumps(summary) + "\n")
    return summary


@dataclass
class Trace:
    header: dict
    steps: list[dict]
    summary: dict | None

    @property
    def graph(self) -> Graph:
        return parse_graph([tuple(e) for e in self.header["graph"]["edges"]], self.header["graph"]["n"])

    @property
    def params(self) -> ProtocolParams:
        return ProtocolParams(**self.header["params"])

    def schedule(self) -> list[tuple[int, ...]]:
        return [tuple(s["chosen"]) for s in self.steps]


def parse_trace(lines: Iterable[str]) -> Trace:
    header = None
    steps = []
    summary = None
    for n, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"trace line {n}: {exc}") from None
        validate(rec, "trace")
        kind = rec["type"]
        if kind == "header":
            if header is not None:
                raise ConfigError(f"trace line {n}: second header")
            header = rec
        elif header is None:
            raise ConfigError(f"trace line {n}: record before header")
        elif kind == "step":
            steps.append(rec)
        else:
            summary = rec
    if header is None:
        raise ConfigError("trace has no header")
    return Trace(header, steps, summary)


def read_trace(path: str | Path) -> Trace:
    with open(path) as fh:
        return parse_trace(fh)


def replay(trace: Trace) -> Execution:
    """Re-run the recorded chosen sets from the recorded initial clocks."""
    schedule = trace.schedule()
    g, params = trace.graph, trace.params
    conf0 = Configuration.from_clocks(trace.header["initial"])
    daemon = Daemon("replay", schedule=schedule)
    return run(g, params, conf0, daemon, max_steps=len(schedule))
