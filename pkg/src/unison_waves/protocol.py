"""Guarded-action state machine of the self-stabilizing barrier synchronizer.

Each process holds a clock ``r`` over ``{-alpha, ..., delta*K - 1}`` plus opaque
computation registers. Three mutually exclusive actions:

* ``NA`` (normal step): run a critical section, then increment the clock.
  The section is ``CS2`` when the clock is at the last tick of a phase
  (``r % delta == delta - 1``) and ``CS1`` otherwise.
* ``CA`` (convergence step): climb one notch up the reset tail.
* ``RA`` (reset): jump to the bottom of the tail, ``-alpha``.

A daemon step applies several actions at once; every chosen process reads the
pre-step configuration.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Any, Callable, Iterable, NamedTuple, Sequence

from .errors import EmptyChoice, NotEnabled, ParamError
from .phase_clock import IncSystem
from .topology import Graph, cyclomatic_upper_bound


class Action(str, Enum):
    NA = "NA"
    CA = "CA"
    RA = "RA"


class CsTag(str, Enum):
    CS1 = "CS1"
    CS2 = "CS2"


@dataclass(frozen=True, slots=True)
class ProcessState:
    r: int
    v0: Any = None
    v1: Any = None
    v2: Any = None
    res: Any = None


@dataclass(frozen=True)
class Configuration:
    states: tuple[ProcessState, ...]

    @classmethod
    def from_clocks(cls, clocks: Iterable[int]) -> "Configuration":
        return cls(tuple(ProcessState(int(r)) for r in clocks))

    @cached_property
    def clocks(self) -> tuple[int, ...]:
        return tuple(s.r for s in self.states)

    @property
    def n(self) -> int:
        return len(self.states)

    def __getitem__(self, p: int) -> ProcessState:
        return self.states[p]

    def relabel(self, perm: Sequence[int]) -> "Configuration":
        out: list[ProcessState | None] = [None] * len(self.states)
        for p, s in enumerate(self.states):
            out[perm[p]] = s
        return Configuration(tuple(out))


@dataclass(frozen=True)
class ProtocolParams:
    """Phase count ``K``, tail depth ``alpha``, phase length ``delta``, barrier radius ``rho``.

    The underlying unison runs a clock of period ``delta * K``.
    """

    K: int
    alpha: int
    delta: int = 1
    rho: int = 1

    def __post_init__(self):
        if self.delta < 1 or self.rho < 1:
            raise ParamError("delta and rho must be >= 1")
        if self.K < 2 or self.alpha < 1:
            raise ParamError("K must be >= 2 and alpha >= 1")

    @cached_property
    def sys(self) -> IncSystem:
        return IncSystem(self.K * self.delta, self.alpha)

    @property
    def period(self) -> int:
        return self.K * self.delta

    def validate(self, g: Graph) -> None:
        """Raise :class:`ParamError` unless ``delta >= rho`` and ``delta*K`` exceeds the C_G bound."""
        if self.delta < self.rho:
            raise ParamError(f"delta={self.delta} must be >= rho={self.rho}")
        cg = cyclomatic_upper_bound(g)
        if self.period <= cg:
            raise ParamError(
                f"clock period delta*K={self.period} must exceed the cyclomatic bound {cg}"
            )

    def to_dict(self) -> dict:
        return {"K": self.K, "alpha": self.alpha, "delta": self.delta, "rho": self.rho}


def default_params(
    g: Graph,
    K: int | None = None,
    alpha: int | None = None,
    delta: int | None = None,
    rho: int | None = None,
) -> ProtocolParams:
    """Fill unspecified parameters: ``K = n + 1``, ``alpha = n``, ``delta = rho``.

    ``K`` is raised (never lowered) until ``delta * K`` exceeds the cyclomatic bound.
    """
    rho = 1 if rho is None else rho
    delta = rho if delta is None else delta
    alpha = g.n if alpha is None else alpha
    K = max(3, g.n + 1 if K is None else K)
    cg = cyclomatic_upper_bound(g)
    while delta * K <= cg:
        K += 1
    return ProtocolParams(K=K, alpha=alpha, delta=delta, rho=rho)


class Guards(NamedTuple):
    normal: bool
    convergence: bool
    reset: bool
    locally_correct: bool


def guards(g: Graph, params: ProtocolParams, conf: Configuration, p: int) -> Guards:
    """Evaluate the four guard predicates of ``p`` literally.

    ``init`` for the reset guard is the whole tail ``{-alpha, ..., 0}``: a process
    already on the ramp waits for its neighbors instead of resetting again.
    """
    M, alpha = params.period, params.alpha
    clocks = conf.clocks
    rp = clocks[p]
    nv = [clocks[q] for q in g.adj[p]]
    p_stab = 0 <= rp < M
    nxt = (rp + 1) % M if p_stab else rp + 1
    normal = p_stab and all(v == rp or v == nxt for v in nv)
    convergence = -alpha <= rp < 0 and all(-alpha <= v <= 0 and rp <= v for v in nv)
    locally_correct = p_stab and all(
        0 <= v < M and (v == rp or v == nxt or (v + 1) % M == rp) for v in nv
    )
    reset = not locally_correct and not (-alpha <= rp <= 0)
    return Guards(normal, convergence, reset, locally_correct)


def enabled_action(r: int, nbr_clocks: Iterable[int], period: int, alpha: int) -> Action | None:
    """Fast path of :func:`guards`: the single enabled action, if any."""
    if r >= 0:
        nxt = r + 1 if r + 1 < period else 0
        prv = r - 1 if r > 0 else period - 1
        normal = True
        correct = True
        for v in nbr_clocks:
            if v != r and v != nxt:
                normal = False
                if v != prv or v < 0:
                    correct = False
                    break
        if normal:
            return Action.NA
        if not correct and r != 0:
            return Action.RA
        return None
    for v in nbr_clocks:
        if v > 0 or v < r:
            return None
    return Action.CA


def enabled_set(g: Graph, params: ProtocolParams, clocks: Sequence[int]) -> list[int]:
    M, alpha = params.period, params.alpha
    adj = g.adj
    return [
        p
        for p in range(g.n)
        if enabled_action(clocks[p], [clocks[q] for q in adj[p]], M, alpha) is not None
    ]


CsHandler = Callable[[Graph, Configuration, int], ProcessState]


class CsHandlers(NamedTuple):
    """Critical sections run by ``NA``; each maps the pre-step configuration to ``p``'s new state."""

    cs2: CsHandler
    cs1: CsHandler


@dataclass(frozen=True, slots=True)
class EventRecord:
    """One executed action: the event ``(p, t)`` with ``t`` the resulting configuration index."""

    p: int
    t: int
    action: Action
    cs: CsTag | None
    r_before: int
    r_after: int
    reads: int


def _with_clock(s: ProcessState, r: int) -> ProcessState:
    return ProcessState(r, s.v0, s.v1, s.v2, s.res)


def _apply(
    g: Graph,
    params: ProtocolParams,
    conf: Configuration,
    p: int,
    handlers: CsHandlers | None,
) -> tuple[ProcessState, Action, CsTag | None]:
    state = conf.states[p]
    rp = state.r
    M = params.period
    action = enabled_action(rp, [conf.clocks[q] for q in g.adj[p]], M, params.alpha)
    if action is None:
        raise NotEnabled(p)
    if action is Action.NA:
        cs = CsTag.CS2 if rp % params.delta == params.delta - 1 else CsTag.CS1
        if handlers is not None:
            state = (handlers.cs2 if cs is CsTag.CS2 else handlers.cs1)(g, conf, p)
        return _with_clock(state, (rp + 1) % M), action, cs
    if action is Action.CA:
        return _with_clock(state, rp + 1), action, None
    return _with_clock(state, -params.alpha), action, None


def apply(
    g: Graph,
    params: ProtocolParams,
    conf: Configuration,
    p: int,
    handlers: CsHandlers | None = None,
) -> tuple[Configuration, Action, CsTag | None]:
    """Execute ``p``'s enabled action alone; raises :class:`NotEnabled`."""
    new_state, action, cs = _apply(g, params, conf, p, handlers)
    states = list(conf.states)
    states[p] = new_state
    return Configuration(tuple(states)), action, cs


def step(
    g: Graph,
    params: ProtocolParams,
    conf: Configuration,
    chosen: Iterable[int],
    handlers: CsHandlers | None = None,
    t: int = 1,
) -> tuple[Configuration, list[EventRecord]]:
    """One daemon step: all ``chosen`` processes act against the pre-step ``conf``.

    ``t`` is the index of the resulting configuration and stamps the events.
    """
    chosen = sorted(set(chosen))
    if not chosen:
        raise EmptyChoice("the daemon must choose at least one process")
    states = list(conf.states)
    events = []
    for p in chosen:
        new_state, action, cs = _apply(g, params, conf, p, handlers)
        states[p] = new_state
        reads = len(g.adj[p]) if action is Action.NA else 0
        events.append(EventRecord(p, t, action, cs, conf.states[p].r, new_state.r, reads))
    return Configuration(tuple(states)), events
