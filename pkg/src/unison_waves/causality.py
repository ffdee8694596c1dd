"""Causal DAG of an execution, lifted clocks, cuts, walks and wave verifiers.

Events are ``(p, t)`` pairs: every process has an initial event at the window
start ``t0``, and ``(p, t)`` for each action ``p`` performs on the transition
into configuration ``t``. Each non-initial event has one incoming edge from
the latest earlier event of its own process and one from the latest earlier
event of each neighbor.

Reachability is kept as Python-int bitsets over event indices.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

from .errors import Incomplete, NotWU0, Truncated, UnisonError
from .phase_clock import check_WU, delay_potential
from .protocol import Action
from .scheduler import Execution
from .topology import Graph, ball, diameter, exhaustive_limit

Walk = tuple[int, ...]


@dataclass(frozen=True, slots=True)
class Event:
    p: int
    t: int
    action: Action | None
    r: int


@dataclass
class CausalDag:
    graph: Graph
    t0: int
    events: list[Event]
    parents: list[tuple[int, ...]]
    index: dict[tuple[int, int], int]
    proc_events: list[list[int]]

    def __len__(self) -> int:
        return len(self.events)

    def event_id(self, p: int, t: int) -> int:
        try:
            return self.index[(p, t)]
        except KeyError:
            raise UnisonError(f"({p}, {t}) is not an event") from None

    def label(self, i: int) -> str:
        e = self.events[i]
        return f"{e.p}@{e.t}"

    @cached_property
    def ancestors(self) -> list[int]:
        """Bitset of events ``⪯`` each event (reflexive)."""
        anc = [0] * len(self.events)
        for i, ps in enumerate(self.parents):
            acc = 1 << i
            for j in ps:
                acc |= anc[j]
            anc[i] = acc
        return anc

    @cached_property
    def covers(self) -> list[int]:
        """Bitset of processes covered by each event's past cone."""
        cov = [0] * len(self.events)
        for i, ps in enumerate(self.parents):
            acc = 1 << self.events[i].p
            for j in ps:
                acc |= cov[j]
            cov[i] = acc
        return cov

    def precedes(self, a: int, b: int) -> bool:
        """``a ⪯ b`` on event indices."""
        return bool(self.ancestors[b] >> a & 1)

    def strictly_precedes(self, a: int, b: int) -> bool:
        return a != b and self.precedes(a, b)

    def edges(self) -> Iterable[tuple[int, int]]:
        for i, ps in enumerate(self.parents):
            for j in ps:
                yield j, i

    def latest_event(self, p: int, t: int) -> int:
        """Index of ``p``'s latest event at or before time ``t``."""
        pos = bisect_right(self.proc_times[p], t)
        if pos == 0:
            raise UnisonError(f"process {p} has no event at or before t={t}")
        return self.proc_events[p][pos - 1]

    @cached_property
    def proc_times(self) -> list[list[int]]:
        return [[self.events[i].t for i in evs] for evs in self.proc_events]

    def to_json(self) -> dict:
        """Edge-list export; event ids are ``"p@t"``."""
        return {
            "t0": self.t0,
            "events": [
                {"id": self.label(i), "p": e.p, "t": e.t,
                 "action": e.action.value if e.action else None, "r": e.r}
                for i, e in enumerate(self.events)
            ],
            "edges": [[self.label(a), self.label(b)] for a, b in self.edges()],
        }

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1))


def build_dag(ex: Execution, start: int = 0, stop: int | None = None) -> CausalDag:
    """Causal DAG of configurations ``start..stop`` of ``ex`` (``stop`` inclusive)."""
    g = ex.graph
    stop = len(ex.configs) - 1 if stop is None else stop
    if not 0 <= start <= stop < len(ex.configs):
        raise UnisonError(f"bad window [{start}, {stop}] for {len(ex.configs)} configurations")
    events: list[Event] = []
    parents: list[tuple[int, ...]] = []
    index: dict[tuple[int, int], int] = {}
    proc_events: list[list[int]] = [[] for _ in range(g.n)]
    last = [0] * g.n
    init = ex.configs[start].clocks
    for p in range(g.n):
        i = len(events)
        events.append(Event(p, start, None, init[p]))
        parents.append(())
        index[(p, start)] = i
        proc_events[p].append(i)
        last[p] = i
    for t in range(start + 1, stop + 1):
        fresh = []
        for rec in ex.steps[t - 1].events:
            p = rec.p
            i = len(events)
            events.append(Event(p, t, rec.action, rec.r_after))
            parents.append((last[p],) + tuple(last[q] for q in g.adj[p]))
            index[(p, t)] = i
            proc_events[p].append(i)
            fresh.append((p, i))
        for p, i in fresh:
            last[p] = i
    return CausalDag(g, start, events, parents, index, proc_events)


def cover(dag: CausalDag, event: int) -> frozenset[int]:
    """Processes with some event in the past cone of ``event``."""
    mask = dag.covers[event]
    return frozenset(q for q in range(dag.graph.n) if mask >> q & 1)


# --- cuts ------------------------------------------------------------------


@dataclass(frozen=True)
class Cut:
    """One event per process; ``times[p]`` is the time of ``p``'s cut event."""

    times: tuple[int, ...]

    def events(self, dag: CausalDag) -> list[int]:
        return [dag.event_id(p, t) for p, t in enumerate(self.times)]

    def __le__(self, other: "Cut") -> bool:
        return all(a <= b for a, b in zip(self.times, other.times))


def past_mask(dag: CausalDag, cut: Cut) -> int:
    mask = 0
    for p, t in enumerate(cut.times):
        for i in dag.proc_events[p]:
            if dag.events[i].t > t:
                break
            mask |= 1 << i
    return mask


def is_coherent(dag: CausalDag, cut: Cut) -> bool:
    """Everything causally before a cut event lies in the cut's past."""
    past = past_mask(dag, cut)
    return all(dag.ancestors[i] & ~past == 0 for i in cut.events(dag))


# --- lifting ---------------------------------------------------------------


@dataclass
class LiftedClocks:
    """Unbounded clock value after each event, anchored at a precedence-maximal process."""

    dag: CausalDag
    values: list[int]
    base: int
    anchor: int
    initial: tuple[int, ...]
    delta: int = 1

    def value_at(self, p: int, t: int) -> int:
        return self.values[self.dag.latest_event(p, t)]

    @property
    def max_complete(self) -> int:
        """Largest ``k`` with ``C_k`` present in the window."""
        return min(self.values[evs[-1]] for evs in self.dag.proc_events)

    def event_reaching(self, p: int, k: int) -> int:
        offset = k - self.initial[p]
        evs = self.dag.proc_events[p]
        if offset < 0 or offset >= len(evs):
            raise Incomplete(k, f" (process {p} spans {self.initial[p]}..{self.values[evs[-1]]})")
        return evs[offset]


def lift(ex: Execution, dag: CausalDag | None = None) -> LiftedClocks:
    """Unwind the bounded clocks of a window that starts in WU0."""
    dag = build_dag(ex) if dag is None else dag
    g, params = ex.graph, ex.params
    sys = params.sys
    clocks0 = ex.configs[dag.t0].clocks
    pot = delay_potential(g, sys, clocks0) if check_WU(g, sys, clocks0) else None
    if pot is None:
        raise NotWU0(f"configuration {dag.t0} is not in WU0: {list(clocks0)}")
    anchor = max(range(g.n), key=lambda p: (pot[p], -p))
    base = clocks0[anchor]
    initial = tuple(base + pot[p] - pot[anchor] for p in range(g.n))
    values = [0] * len(dag.events)
    current = list(initial)
    for i, e in enumerate(dag.events):
        if e.action is None:
            values[i] = current[e.p]
            continue
        if e.action is Action.RA:
            raise NotWU0(f"reset by process {e.p} at t={e.t} inside the lifted window")
        current[e.p] += 1
        values[i] = current[e.p]
    return LiftedClocks(dag, values, base, anchor, initial, params.delta)


def clock_step_violations(lifted: LiftedClocks) -> list[tuple[int, int]]:
    """Causal edges along which the lifted value does not grow by 0 or 1."""
    vals = lifted.values
    return [(a, b) for a, b in lifted.dag.edges() if vals[b] - vals[a] not in (0, 1)]


def cut_k(lifted: LiftedClocks, k: int) -> Cut:
    """``C_k``: each process's earliest event with lifted value ``k``."""
    if k < lifted.base:
        raise Incomplete(k, f" (below the base value {lifted.base})")
    dag = lifted.dag
    cut = Cut(tuple(dag.events[lifted.event_reaching(p, k)].t for p in range(dag.graph.n)))
    if not is_coherent(dag, cut):
        raise UnisonError(f"cut C_{k} is not coherent")
    return cut


def barrier_violations(lifted: LiftedClocks, rho: int) -> list[str]:
    """Distance-``rho`` barrier check over every complete phase of the window.

    For each phase ``U`` and each pair at distance ``<= rho``, ``p``'s entry into
    phase ``U+1`` must be causally after ``q``'s entry into phase ``U``, ``q``
    must be no more than ``d(p, q) - 1`` ticks behind at that moment, and ``p``'s
    entry must not causally precede ``q``'s last event of phase ``U``.
    """
    dag = lifted.dag
    g = dag.graph
    delta = lifted.delta
    dist = g._dist
    out = []
    U = -(-lifted.base // delta)
    while (U + 1) * delta <= lifted.max_complete:
        for p in range(g.n):
            e_p = lifted.event_reaching(p, (U + 1) * delta)
            t_p = dag.events[e_p].t
            for q in range(g.n):
                d = dist[p][q]
                if d > rho:
                    continue
                start_q = lifted.event_reaching(q, U * delta)
                last_q = lifted.event_reaching(q, U * delta + delta - 1)
                if not dag.precedes(start_q, e_p):
                    out.append(f"U={U}: {dag.label(e_p)} not after {dag.label(start_q)}")
                if dag.strictly_precedes(e_p, last_q):
                    out.append(f"U={U}: {dag.label(e_p)} precedes {dag.label(last_q)}")
                if p != q and t_p > dag.t0 and lifted.value_at(q, t_p - 1) < (U + 1) * delta - d:
                    out.append(f"U={U}: {q} too far behind when {p} entered phase {U + 1}")
        U += 1
    return out


# --- walks -----------------------------------------------------------------


def is_walk(g: Graph, m: Sequence[int]) -> bool:
    return len(m) > 0 and all(a == b or g.has_edge(a, b) for a, b in zip(m, m[1:]))


def is_simple(m: Sequence[int]) -> bool:
    return len(set(m)) == len(m)


def is_circular(m: Sequence[int]) -> bool:
    return len(m) > 2 and m[0] == m[-1]


def is_elementary(m: Sequence[int]) -> bool:
    """Repeated letters only occur in consecutive runs."""
    seen = set()
    prev = None
    for q in m:
        if q != prev:
            if q in seen:
                return False
            seen.add(q)
        prev = q
    return True


def destutter(m: Sequence[int]) -> Walk:
    out: list[int] = []
    for q in m:
        if not out or out[-1] != q:
            out.append(q)
    return tuple(out)


def reduction_successors(m: Sequence[int]) -> set[Walk]:
    """Every ``m1 head(u) m2`` obtained by contracting one factor ``u`` with equal ends.

    Stutters (``aa``) count as contractible so that the minimal walks are exactly
    the repetition-free ones.
    """
    m = tuple(m)
    out = set()
    for i in range(len(m)):
        for j in range(i + 1, len(m)):
            if m[i] == m[j]:
                out.add(m[: i + 1] + m[j + 1 :])
    return out


def reduce_walk(m: Sequence[int]) -> Walk:
    """Contract the leftmost shortest closed factor until the walk is simple."""
    m = tuple(m)
    while True:
        best = None
        for i in range(len(m)):
            for j in range(i + 1, len(m)):
                if m[i] == m[j]:
                    if best is None or j - i < best[1] - best[0]:
                        best = (i, j)
                    break
        if best is None:
            return m
        i, j = best
        m = m[: i + 1] + m[j + 1 :]


def reduces_to(m: Sequence[int], target: Sequence[int]) -> bool:
    """``m →* target`` (reflexive), by exhaustive search over contractions."""
    m, target = tuple(m), tuple(target)
    frontier, seen = [m], {m}
    while frontier:
        w = frontier.pop()
        if w == target:
            return True
        for s in reduction_successors(w):
            if s not in seen and len(s) >= len(target):
                seen.add(s)
                frontier.append(s)
    return False


def simple_walks_ending_at(
    g: Graph, p: int, max_len: int | None = None, limit: int | None = None
) -> list[Walk]:
    """All repetition-free walks ending at ``p`` with at most ``max_len`` edges."""
    out: list[Walk] = []
    cap = limit

    def extend(w: list[int], seen: int):
        out.append(tuple(reversed(w)))
        if cap is not None and len(out) > cap:
            raise Truncated(f"more than {cap} simple walks end at {p}")
        if max_len is not None and len(w) - 1 >= max_len:
            return
        for q in g.adj[w[-1]]:
            if not seen >> q & 1:
                w.append(q)
                extend(w, seen | 1 << q)
                w.pop()

    extend([p], 1 << p)
    return out


# --- segments, walk covers and wave verifiers --------------------------------


@dataclass
class Segment:
    """Induced causal DAG ``[C1, C2]``.

    With ``isolate_lower`` the events of ``C1`` keep no incoming edges, so they
    act as sources even when one of them causally follows another.
    """

    dag: CausalDag
    lo: Cut
    hi: Cut
    isolate_lower: bool = False
    members: list[int] = field(init=False)

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise UnisonError("segment bounds are not ordered: C1 is not <= C2")
        dag = self.dag
        self._in = bytearray(len(dag.events))
        for i, e in enumerate(dag.events):
            if self.lo.times[e.p] <= e.t <= self.hi.times[e.p]:
                self._in[i] = 1
        self.members = [i for i in range(len(dag.events)) if self._in[i]]

    def __contains__(self, i: int) -> bool:
        return bool(self._in[i])

    def parents(self, i: int) -> list[int]:
        if self.isolate_lower:
            e = self.dag.events[i]
            if e.t == self.lo.times[e.p]:
                return []
        return [j for j in self.dag.parents[i] if self._in[j]]

    @cached_property
    def covers(self) -> dict[int, int]:
        cov: dict[int, int] = {}
        for i in self.members:
            acc = 1 << self.dag.events[i].p
            for j in self.parents(i):
                acc |= cov[j]
            cov[i] = acc
        return cov

    def cover(self, i: int) -> frozenset[int]:
        mask = self.covers[i]
        return frozenset(q for q in range(self.dag.graph.n) if mask >> q & 1)


def walk_cover(seg: Segment, event: int, max_walks: int = 20000) -> set[Walk]:
    """Walks of all causality chains inside ``seg`` that end at ``event``."""
    if event not in seg:
        raise UnisonError(f"event {seg.dag.label(event)} is outside the segment")
    memo: dict[int, set[Walk]] = {}
    events = seg.dag.events
    for i in seg.members:
        if i > event:
            break
        acc = {(events[i].p,)}
        for j in seg.parents(i):
            acc.update(w + (events[i].p,) for w in memo[j])
            if len(acc) > max_walks:
                raise Truncated(f"walk cover of {seg.dag.label(i)} exceeds {max_walks} walks")
        memo[i] = acc
    return memo[event]


def simple_realizations(seg: Segment, event: int, limit: int | None = None) -> set[Walk]:
    """Simple walks ``m0`` such that some chain ending at ``event`` has an
    elementary walk reducing to ``m0`` (i.e. whose de-stuttered walk is ``m0``)."""
    limit = 100 * exhaustive_limit() ** 3 if limit is None else limit
    memo: dict[int, set[Walk]] = {}
    events = seg.dag.events
    for i in seg.members:
        if i > event:
            break
        p = events[i].p
        acc = {(p,)}
        for j in seg.parents(i):
            for w in memo[j]:
                if w[-1] == p:
                    acc.add(w)
                elif p not in w:
                    acc.add(w + (p,))
            if len(acc) > limit:
                raise Truncated(f"more than {limit} simple realizations at {seg.dag.label(i)}")
        memo[i] = acc
    return memo[event]


@dataclass
class Verdict:
    ok: bool
    failures: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def _decide_ids(seg: Segment, decide: Iterable) -> list[int]:
    ids = []
    for d in decide:
        i = seg.dag.event_id(*d) if isinstance(d, tuple) else int(d)
        ids.append(i)
    return ids


def verify_wavelet(dag: CausalDag, c1: Cut, c2: Cut, decide: Iterable, k: int) -> Verdict:
    """``[c1, c2]`` is a ``k``-wavelet for the given decide events.

    ``decide`` holds event indices or ``(p, t)`` pairs.
    """
    failures = []
    for name, c in (("C1", c1), ("C2", c2)):
        if not is_coherent(dag, c):
            failures.append(f"{name} is not coherent")
    if failures:
        return Verdict(False, failures)
    seg = Segment(dag, c1, c2)
    ids = _decide_ids(seg, decide)
    if not ids:
        return Verdict(False, ["no decide event"])
    g = dag.graph
    for i in ids:
        if i not in seg:
            failures.append(f"decide event {dag.label(i)} lies outside the segment")
            continue
        missing = ball(g, dag.events[i].p, k) - seg.cover(i)
        if missing:
            failures.append(f"{dag.label(i)} does not cover {sorted(missing)}")
    return Verdict(not failures, failures)


def verify_wave(dag: CausalDag, c1: Cut, c2: Cut, decide: Iterable) -> Verdict:
    return verify_wavelet(dag, c1, c2, decide, diameter(dag.graph))


def verify_strong_wave(
    dag: CausalDag, c1: Cut, c2: Cut, decide: Iterable, limit: int | None = None
) -> Verdict:
    """Wave check plus: every simple walk ending at a decide event's process is
    realized by an elementary causality chain in the segment."""
    decide = list(decide)
    base = verify_wave(dag, c1, c2, decide)
    if not base:
        return base
    g = dag.graph
    limit = exhaustive_limit() if limit is None else limit
    if g.n > limit:
        raise Truncated(f"strong-wave verification limited to n <= {limit}")
    seg = Segment(dag, c1, c2)
    failures = []
    walks_at = {}
    for i in _decide_ids(seg, decide):
        p = dag.events[i].p
        if p not in walks_at:
            walks_at[p] = simple_walks_ending_at(g, p)
        got = simple_realizations(seg, i)
        missing = [w for w in walks_at[p] if w not in got]
        if missing:
            failures.append(f"{dag.label(i)} misses simple walks {missing[:3]}")
    return Verdict(not failures, failures)
