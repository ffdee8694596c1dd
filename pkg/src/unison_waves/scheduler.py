"""Daemons, execution driving and round accounting."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .errors import Deadlock, EmptyChoice, ParamError, ReplayMismatch
from .phase_clock import check_WU, check_WU0, delay_potential
from .protocol import (
    Configuration,
    CsHandlers,
    EventRecord,
    ProtocolParams,
    enabled_action,
    enabled_set,
    step,
)
from .topology import Graph

DAEMON_KINDS = ("synchronous", "random-subset", "single-min", "single-random", "replay")


@dataclass
class Daemon:
    """Scheduler choosing a nonempty subset of the enabled processes each step.

    ``random-subset`` keeps each enabled process with probability ``bias`` (one is
    drawn uniformly if none survives). ``single-min`` always picks the enabled
    process with the smallest raw clock, lowest index on ties.
    """

    kind: str
    seed: int = 0
    bias: float = 0.5
    schedule: list[tuple[int, ...]] | None = None
    _rng: random.Random = field(init=False, repr=False)
    _pos: int = field(init=False, default=0, repr=False)

    def __post_init__(self):
        if self.kind not in DAEMON_KINDS:
            raise ParamError(f"unknown daemon kind {self.kind!r}")
        if self.kind == "replay" and self.schedule is None:
            raise ParamError("replay daemon needs a schedule")
        if not 0.0 < self.bias <= 1.0:
            raise ParamError("bias must lie in (0, 1]")
        self._rng = random.Random(self.seed)

    def choose(self, enabled: Sequence[int], clocks: Sequence[int]) -> tuple[int, ...]:
        if not enabled:
            raise EmptyChoice("no enabled process to choose from")
        kind = self.kind
        if kind == "synchronous":
            return tuple(enabled)
        if kind == "single-min":
            return (min(enabled, key=lambda p: (clocks[p], p)),)
        if kind == "single-random":
            return (enabled[self._rng.randrange(len(enabled))],)
        if kind == "random-subset":
            picked = tuple(p for p in enabled if self._rng.random() < self.bias)
            return picked or (enabled[self._rng.randrange(len(enabled))],)
        if self._pos >= len(self.schedule):
            raise ReplayMismatch(f"schedule exhausted after {self._pos} steps")
        recorded = self.schedule[self._pos]
        self._pos += 1
        allowed = set(enabled)
        picked = tuple(p for p in recorded if p in allowed)
        if not picked:
            raise ReplayMismatch(
                f"step {self._pos}: recorded choice {list(recorded)} has no enabled process"
            )
        return picked

    def describe(self) -> dict:
        out = {"kind": self.kind, "seed": self.seed}
        if self.kind == "random-subset":
            out["bias"] = self.bias
        return out


@dataclass(frozen=True)
class Transition:
    chosen: tuple[int, ...]
    events: tuple[EventRecord, ...]


@dataclass
class Execution:
    """Configurations ``configs[0..T]`` and the ``T`` transitions between them."""

    graph: Graph
    params: ProtocolParams
    configs: list[Configuration]
    steps: list[Transition] = field(default_factory=list)
    deadlock: bool = False

    @property
    def initial(self) -> Configuration:
        return self.configs[0]

    @property
    def final(self) -> Configuration:
        return self.configs[-1]

    def __len__(self) -> int:
        return len(self.steps)

    def events(self):
        for tr in self.steps:
            yield from tr.events

    def schedule(self) -> list[tuple[int, ...]]:
        return [tr.chosen for tr in self.steps]


StopFn = Callable[[Execution], bool]


def until_WU(g: Graph, params: ProtocolParams) -> StopFn:
    sys = params.sys
    return lambda ex: check_WU(g, sys, ex.configs[-1].clocks)


def until_WU0(g: Graph, params: ProtocolParams) -> StopFn:
    sys = params.sys
    return lambda ex: check_WU0(g, sys, ex.configs[-1].clocks)


class UntilLifted:
    """Stop predicate: wait for WU0, then until every process has reached a lifted target.

    ``target`` maps the lifted base (the largest clock in the first WU0
    configuration, unwound along the delay potential) to the value every
    process must reach. ``start`` and ``base`` are set once WU0 is seen.
    """

    def __init__(self, g: Graph, params: ProtocolParams, target: Callable[[int], int]):
        self.g, self.params, self.target = g, params, target
        self.start: int | None = None
        self.base: int | None = None
        self.remaining: list[int] = []
        self._seen = 0

    @property
    def reached(self) -> bool:
        return self.start is not None and max(self.remaining) <= 0

    def __call__(self, ex: Execution) -> bool:
        if self.start is None:
            g, sys = self.g, self.params.sys
            clocks = ex.configs[-1].clocks
            if not check_WU0(g, sys, clocks):
                return False
            pot = delay_potential(g, sys, clocks)
            anchor = max(range(g.n), key=lambda p: (pot[p], -p))
            self.base = clocks[anchor]
            goal = self.target(self.base)
            self.start = len(ex.configs) - 1
            self._seen = len(ex.steps)
            self.remaining = [goal - (self.base + pot[p] - pot[anchor]) for p in range(g.n)]
        for tr in ex.steps[self._seen:]:
            for e in tr.events:
                self.remaining[e.p] -= 1
        self._seen = len(ex.steps)
        return self.reached


def run(
    g: Graph,
    params: ProtocolParams,
    conf0: Configuration,
    daemon: Daemon,
    max_steps: int | None = None,
    stop: StopFn | None = None,
    handlers: CsHandlers | None = None,
) -> Execution:
    """Drive the protocol until ``stop`` holds, ``max_steps`` is reached, or deadlock.

    ``stop`` is checked on the initial configuration too. Raises :class:`Deadlock`
    (with the partial execution attached) when no process is enabled.
    """
    if max_steps is None and stop is None:
        raise ParamError("run needs max_steps or a stop predicate")
    if conf0.n != g.n:
        raise ParamError(f"configuration has {conf0.n} processes, graph has {g.n}")
    ex = Execution(g, params, [conf0])
    M, alpha, adj = params.period, params.alpha, g.adj
    clocks = conf0.clocks
    enabled = {
        p for p in range(g.n) if enabled_action(clocks[p], [clocks[q] for q in adj[p]], M, alpha)
    }
    conf = conf0
    t = 0
    while True:
        if stop is not None and stop(ex):
            return ex
        if max_steps is not None and len(ex.steps) >= max_steps:
            return ex
        if not enabled:
            ex.deadlock = True
            raise Deadlock(conf, ex)
        chosen = daemon.choose(sorted(enabled), clocks)
        t += 1
        conf, events = step(g, params, conf, chosen, handlers, t=t)
        clocks = conf.clocks
        ex.configs.append(conf)
        ex.steps.append(Transition(tuple(chosen), tuple(events)))
        touched = set(chosen)
        for p in chosen:
            touched.update(adj[p])
        for p in touched:
            if enabled_action(clocks[p], [clocks[q] for q in adj[p]], M, alpha) is None:
                enabled.discard(p)
            else:
                enabled.add(p)


def round_ends(ex: Execution) -> list[int]:
    """Configuration indices at which each complete round ends.

    A round ends once every process enabled at its start has either executed or
    been neutralized (found disabled in some later configuration).
    """
    g, params = ex.graph, ex.params
    ends = []
    pending = set(enabled_set(g, params, ex.configs[0].clocks))
    if not pending:
        return ends
    for i, tr in enumerate(ex.steps):
        enabled_now = set(enabled_set(g, params, ex.configs[i + 1].clocks))
        pending.difference_update(tr.chosen)
        pending &= enabled_now
        if not pending:
            ends.append(i + 1)
            pending = enabled_now
            if not pending:
                break
    return ends


def count_rounds(ex: Execution) -> int:
    return len(round_ends(ex))


def rounds_until(ex: Execution, index: int, ends: list[int] | None = None) -> int:
    """Rounds needed to reach configuration ``index`` (a round in progress counts as one)."""
    if index <= 0:
        return 0
    ends = round_ends(ex) if ends is None else ends
    done = sum(1 for e in ends if e < index)
    return done + 1


def first_index(ex: Execution, predicate: Callable[[Configuration], bool]) -> int | None:
    for i, conf in enumerate(ex.configs):
        if predicate(conf):
            return i
    return None


# --- initial configurations --------------------------------------------------


def random_configuration(g: Graph, params: ProtocolParams, seed: int) -> Configuration:
    rng = random.Random(seed)
    return Configuration.from_clocks(
        rng.randint(-params.alpha, params.period - 1) for _ in range(g.n)
    )


def unison_configuration(g: Graph, value: int = 0) -> Configuration:
    return Configuration.from_clocks([value] * g.n)


# --- schedule replay format --------------------------------------------------


def load_schedule(path: str | Path) -> list[tuple[int, ...]]:
    """Read a JSON-lines schedule: one array of process indices per line.

    Lines that are trace step records (objects with a ``chosen`` field) are also
    accepted; any other object line is skipped.
    """
    schedule = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        if isinstance(rec, list):
            schedule.append(tuple(int(p) for p in rec))
        elif isinstance(rec, dict) and "chosen" in rec:
            schedule.append(tuple(int(p) for p in rec["chosen"]))
    return schedule


def dump_schedule(schedule: Sequence[Sequence[int]], path: str | Path) -> None:
    Path(path).write_text("".join(json.dumps(list(s)) + "\n" for s in schedule))
