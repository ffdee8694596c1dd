"""Idempotent aggregation on top of the barrier synchronizer.

Three tasks ride on the phase structure (a phase is ``delta`` consecutive
ticks; the first tick runs ``CS2``, the others ``CS1``):

* ``global-infimum``: fold of every input, needs ``delta >= D + 1``.
* ``ball-infimum``: fold over the ``rho``-ball of each process, ``delta = rho + 1``.
  Two registers ``v1``/``v2`` hold the folds over radius ``a - 1`` and ``a``
  after the ``a``-th tick, and a neighbor is read through the slot matching
  its clock (same clock: ``v2``, one tick ahead: ``v1``).
* ``r-operator``: fold, over every simple walk ending at ``p``, of the walk's
  composed edge functions applied to the head's input. Needs ``delta`` at
  least one more than the longest simple path.

Results are read at the last tick of each phase.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from functools import reduce
from typing import Any, Callable, Iterable, Mapping, Sequence

from .causality import (
    LiftedClocks,
    Segment,
    build_dag,
    cut_k,
    lift,
    simple_walks_ending_at,
    walk_cover,
)
from .errors import DeltaTooSmall, ParamError, TooLarge, UnisonError
from .protocol import (
    Action,
    Configuration,
    CsHandlers,
    ProcessState,
    ProtocolParams,
)
from .scheduler import Daemon, Execution, UntilLifted, random_configuration, rounds_until, run
from .topology import Graph, ball, diameter, exhaustive_limit, longest_simple_path_length

INF = math.inf


@dataclass(frozen=True)
class InfimumOp:
    """Associative, commutative, idempotent ``combine`` with top element ``identity``."""

    name: str
    combine: Callable[[Any, Any], Any]
    identity: Any
    sample: Callable[[random.Random], Any]

    def leq(self, x, y) -> bool:
        """``x <=_⊕ y`` iff ``x ⊕ y == x``."""
        return self.combine(x, y) == x

    def __call__(self, x, y):
        return self.combine(x, y)


def fold(op: InfimumOp, values: Iterable) -> Any:
    return reduce(op.combine, values, op.identity)


def _sample_int(lo: int, hi: int) -> Callable[[random.Random], int]:
    return lambda rng: rng.randint(lo, hi)


def _sample_gcd(rng: random.Random) -> int:
    return rng.choice((2, 3, 4, 6, 8, 9, 12)) * rng.randint(1, 10)


def _sample_subset(rng: random.Random) -> frozenset:
    return frozenset(i for i in range(6) if rng.random() < 0.7)


MIN = InfimumOp("min", min, INF, _sample_int(0, 99))
MAX = InfimumOp("max", max, -INF, _sample_int(0, 99))
GCD = InfimumOp("gcd", math.gcd, 0, _sample_gcd)
AND = InfimumOp("bitwise-and", lambda x, y: x & y, 0xFF, _sample_int(0, 0xFF))
INTERSECTION = InfimumOp(
    "set-intersection", lambda x, y: x & y, frozenset(range(6)), _sample_subset
)

CATALOG: dict[str, InfimumOp] = {op.name: op for op in (MIN, MAX, GCD, AND, INTERSECTION)}


def operator(name: str) -> InfimumOp:
    try:
        return CATALOG[name]
    except KeyError:
        raise ParamError(f"unknown operator {name!r}; catalog: {', '.join(CATALOG)}") from None


def table_operator(name: str, table: Mapping[Any, Mapping[Any, Any]], identity: Any) -> InfimumOp:
    """Infimum on a small finite carrier given by its full Cayley table."""
    elements = list(table)
    frozen = {a: dict(row) for a, row in table.items()}

    def combine(x, y):
        return frozen[x][y]

    return InfimumOp(name, combine, identity, lambda rng: rng.choice(elements))


@dataclass(frozen=True)
class RSystem:
    """An infimum plus one r-function per directed edge ``(q, p)``; ``r(p, p)`` is the identity."""

    op: InfimumOp
    functions: Mapping[tuple[int, int], Callable[[Any], Any]]
    name: str = "custom"

    def r(self, q: int, p: int) -> Callable[[Any], Any]:
        if q == p:
            return _identity
        return self.functions[(q, p)]

    def eval(self, walk: Sequence[int], inputs: Sequence) -> Any:
        """Compose the edge functions along ``walk`` and apply them to its head's input."""
        x = inputs[walk[0]]
        for a, b in zip(walk, walk[1:]):
            x = self.r(a, b)(x)
        return x


def _identity(x):
    return x


def _plus(w):
    return lambda x: x + w


def min_plus(g: Graph, weights: Mapping[tuple[int, int], float] | None = None) -> RSystem:
    """Shortest-path r-system: ``r_{q,p}(x) = x + w(q, p)`` over ``min``.

    ``weights`` maps edges to nonnegative weights; a pair given in one
    direction applies to both. Missing edges weigh 1.
    """
    weights = dict(weights or {})
    funcs = {}
    for u, v in g.edges:
        for q, p in ((u, v), (v, u)):
            w = weights.get((q, p), weights.get((p, q), 1))
            if w < 0:
                raise ParamError(f"negative weight on edge ({q}, {p})")
            funcs[(q, p)] = _plus(w)
    return RSystem(MIN, funcs, "min-plus")


def identity_rsystem(g: Graph, op: InfimumOp) -> RSystem:
    funcs = {(q, p): _identity for u, v in g.edges for q, p in ((u, v), (v, u))}
    return RSystem(op, funcs, f"{op.name}-identity")


@dataclass
class LawReport:
    checked: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_laws(sys: RSystem | InfimumOp, sample: Sequence, limit: int = 50) -> LawReport:
    """Check the infimum laws on ``sample`` and, for an r-system, endomorphism and
    idempotence (``x <=_⊕ r(x)``) of every r-function. Stops listing after ``limit``."""
    if isinstance(sys, InfimumOp):
        op, funcs = sys, {}
    else:
        op, funcs = sys.op, dict(sys.functions)
    rep = LawReport()
    comb = op.combine

    def bad(msg):
        if len(rep.violations) < limit:
            rep.violations.append(msg)

    for x in sample:
        rep.checked += 1
        if comb(x, x) != x:
            bad(f"not idempotent at {x!r}")
        if comb(x, op.identity) != x:
            bad(f"identity fails at {x!r}")
        for y in sample:
            if comb(x, y) != comb(y, x):
                bad(f"not commutative at ({x!r}, {y!r})")
            for z in sample:
                if comb(comb(x, y), z) != comb(x, comb(y, z)):
                    bad(f"not associative at ({x!r}, {y!r}, {z!r})")
    for edge, r in funcs.items():
        for x in sample:
            if not op.leq(x, r(x)):
                bad(f"r{edge} not idempotent: {x!r} vs r(x)={r(x)!r}")
            for y in sample:
                if r(comb(x, y)) != comb(r(x), r(y)):
                    bad(f"r{edge} not an endomorphism at ({x!r}, {y!r})")
    return rep


# --- tasks -----------------------------------------------------------------

TASK_KINDS = ("global-infimum", "ball-infimum", "r-operator")


def required_delta(kind: str, g: Graph, rho: int = 1) -> int:
    """Smallest admissible phase length (for ``ball-infimum`` the only one).

    One tick of every phase goes to ``CS2``; the remaining ``delta - 1`` ticks
    must carry information across the diameter, the ball radius, or the
    longest simple path.
    """
    if kind == "global-infimum":
        return diameter(g) + 1
    if kind == "ball-infimum":
        return rho + 1
    if kind == "r-operator":
        return longest_simple_path_length(g) + 1
    raise ParamError(f"unknown task kind {kind!r}")


@dataclass(frozen=True)
class TaskSpec:
    kind: str
    op: InfimumOp
    inputs: tuple
    rho: int = 1
    rsystem: RSystem | None = None

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ParamError(f"unknown task kind {self.kind!r}")
        if self.kind == "r-operator" and self.rsystem is None:
            raise ParamError("r-operator task needs an r-system")
        if self.rho < 1:
            raise ParamError("rho must be >= 1")

    @property
    def result_register(self) -> str:
        return "v2" if self.kind == "ball-infimum" else "res"

    def required_delta(self, g: Graph) -> int:
        return required_delta(self.kind, g, self.rho)

    def check(self, g: Graph, params: ProtocolParams) -> None:
        if len(self.inputs) != g.n:
            raise ParamError(f"task has {len(self.inputs)} inputs for {g.n} processes")
        need = self.required_delta(g)
        if self.kind == "ball-infimum" and params.delta != need:
            raise DeltaTooSmall(f"ball-infimum with rho={self.rho} needs delta = {need}")
        if params.delta < need:
            raise DeltaTooSmall(f"{self.kind} needs delta >= {need}, got {params.delta}")

    def oracle(self, g: Graph) -> list:
        if self.kind == "global-infimum":
            total = fold(self.op, self.inputs)
            return [total] * g.n
        if self.kind == "ball-infimum":
            return oracle_ball_infimum(g, self.op, self.inputs, self.rho)
        return oracle_r_operator(g, self.rsystem, self.inputs)


def cs_handlers(task: TaskSpec, g: Graph, params: ProtocolParams | None = None) -> CsHandlers:
    """Critical sections for ``task``; both read only the pre-step configuration."""
    if params is not None:
        task.check(g, params)
    inputs = task.inputs
    op = task.op
    comb = op.combine
    adj = g.adj

    if task.kind == "ball-infimum":

        def cs2(g_, conf: Configuration, p: int) -> ProcessState:
            x = inputs[p]
            return replace(conf.states[p], v0=x, v1=x, v2=x, res=x)

        def cs1(g_, conf: Configuration, p: int) -> ProcessState:
            # NA only fires when every neighbor is level with p or one tick ahead.
            me = conf.states[p]
            acc = me.v0
            for q in adj[p]:
                other = conf.states[q]
                acc = comb(acc, other.v2 if other.r == me.r else other.v1)
            return replace(me, v1=me.v2, v2=acc, res=acc)

        return CsHandlers(cs2, cs1)

    def init(g_, conf: Configuration, p: int) -> ProcessState:
        x = inputs[p]
        return replace(conf.states[p], v0=x, res=x)

    if task.kind == "global-infimum":

        def cs1(g_, conf: Configuration, p: int) -> ProcessState:
            me = conf.states[p]
            acc = me.v0
            for q in adj[p]:
                acc = comb(acc, conf.states[q].res)
            return replace(me, res=acc)

        return CsHandlers(init, cs1)

    rsys = task.rsystem

    def cs1(g_, conf: Configuration, p: int) -> ProcessState:
        me = conf.states[p]
        acc = comb(me.v0, me.res)
        for q in adj[p]:
            acc = comb(acc, rsys.r(q, p)(conf.states[q].res))
        return replace(me, res=acc)

    return CsHandlers(init, cs1)


# --- oracles ---------------------------------------------------------------


def oracle_ball_infimum(g: Graph, op: InfimumOp, v0: Sequence, rho: int) -> list:
    return [fold(op, (v0[q] for q in sorted(ball(g, p, rho)))) for p in range(g.n)]


def oracle_r_operator(g: Graph, rsys: RSystem, v0: Sequence, limit: int | None = None) -> list:
    """Fold of ``eval`` over all simple walks ending at each process (brute force)."""
    limit = exhaustive_limit(10) if limit is None else limit
    if g.n > limit:
        raise TooLarge(f"simple-walk enumeration limited to n <= {limit}, got {g.n}")
    out = []
    for p in range(g.n):
        out.append(fold(rsys.op, (rsys.eval(w, v0) for w in simple_walks_ending_at(g, p))))
    return out


# --- end-to-end computation --------------------------------------------------


@dataclass
class PhaseResult:
    U: int
    values: list
    expected: list
    complete: bool
    intermediate_ok: bool = True
    na_events: int = 0
    reads: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def match(self) -> bool:
        return self.values == self.expected


@dataclass
class ComputationReport:
    task: str
    stabilized_at: int
    stabilization_rounds: int
    base: int
    phases: list[PhaseResult]
    execution: Execution | None = None

    @property
    def complete_phases(self) -> list[PhaseResult]:
        return [ph for ph in self.phases if ph.complete]

    @property
    def ok(self) -> bool:
        done = self.complete_phases
        return bool(done) and all(ph.match and ph.intermediate_ok for ph in done)


def random_registers(conf: Configuration, op: InfimumOp, seed: int) -> Configuration:
    """Fill every register with arbitrary carrier values (transient-fault garbage)."""
    rng = random.Random(seed)
    return Configuration(
        tuple(
            ProcessState(s.r, op.sample(rng), op.sample(rng), op.sample(rng), op.sample(rng))
            for s in conf.states
        )
    )


def run_computation(
    g: Graph,
    params: ProtocolParams,
    task: TaskSpec,
    daemon: Daemon,
    phases: int,
    conf0: Configuration | None = None,
    seed: int = 0,
    max_steps: int = 200_000,
    check_walk_cover: bool = False,
    keep_execution: bool = False,
) -> ComputationReport:
    """Stabilize from ``conf0`` (random clocks and garbage registers by default),
    run ``phases`` full phases and compare each decide cut with the oracle.

    The phase under way when WU0 is first reached is reported as incomplete.
    """
    if phases < 1:
        raise ParamError("phases must be >= 1")
    params.validate(g)
    handlers = cs_handlers(task, g, params)
    if conf0 is None:
        conf0 = random_registers(random_configuration(g, params, seed), task.op, seed + 1)
    delta = params.delta
    tracker = UntilLifted(g, params, lambda base: (base // delta + 1 + phases) * delta - 1)
    ex = run(g, params, conf0, daemon, max_steps=max_steps, stop=tracker, handlers=handlers)
    if not tracker.reached:
        raise UnisonError(f"computation did not finish within {max_steps} steps")
    start = tracker.start
    first_U = tracker.base // delta + 1
    dag = build_dag(ex, start)
    lifted = lift(ex, dag)
    expected = task.oracle(g)
    reg = task.result_register
    out = []
    for U in range(first_U - 1, first_U + phases):
        complete = U >= first_U
        k_end = U * delta + delta - 1
        if k_end < lifted.base:
            continue
        cut = cut_k(lifted, k_end)
        values = [getattr(ex.configs[t].states[p], reg) for p, t in enumerate(cut.times)]
        ph = PhaseResult(U, values, list(expected), complete)
        if complete:
            ph.na_events, ph.reads = phase_cost(lifted, ex, U)
            if task.kind == "ball-infimum":
                _check_ball_intermediates(ph, g, task, lifted, ex, U, delta)
            if check_walk_cover and task.kind == "r-operator":
                _check_walk_cover(ph, task, lifted, ex, U, delta)
        out.append(ph)
    return ComputationReport(
        task.kind,
        start,
        rounds_until(ex, start),
        lifted.base,
        out,
        ex if keep_execution else None,
    )


def phase_cost(lifted: LiftedClocks, ex: Execution, U: int) -> tuple[int, int]:
    """NA events and neighbor-register reads spent on phase ``U`` (ticks ``U*delta .. U*delta+delta-1``)."""
    delta = lifted.delta
    lo, hi = U * delta, U * delta + delta - 1
    reads = {(e.p, e.t): e.reads for e in ex.events()}
    na = total = 0
    for i, e in enumerate(lifted.dag.events):
        if e.action is Action.NA and lo <= lifted.values[i] <= hi:
            na += 1
            total += reads[(e.p, e.t)]
    return na, total


def _check_ball_intermediates(ph, g, task, lifted, ex, U, delta) -> None:
    op, v0 = task.op, task.inputs
    for a in range(0, task.rho + 1):
        cut = cut_k(lifted, U * delta + a)
        want1 = oracle_ball_infimum(g, op, v0, max(a - 1, 0))
        want2 = oracle_ball_infimum(g, op, v0, a)
        for p, t in enumerate(cut.times):
            s = ex.configs[t].states[p]
            if s.v1 != want1[p] or s.v2 != want2[p]:
                ph.intermediate_ok = False
                ph.notes.append(f"C_{U * delta + a} at {p}: v1={s.v1!r} v2={s.v2!r}")


def _check_walk_cover(ph, task, lifted, ex, U, delta) -> None:
    """``res`` equals the fold of ``eval`` over the walk cover at every event of the phase."""
    lo = cut_k(lifted, U * delta)
    hi = cut_k(lifted, U * delta + delta - 1)
    seg = Segment(lifted.dag, lo, hi, isolate_lower=True)
    rsys, v0 = task.rsystem, task.inputs
    for i in seg.members:
        e = lifted.dag.events[i]
        want = fold(rsys.op, (rsys.eval(w, v0) for w in walk_cover(seg, i)))
        got = ex.configs[e.t].states[e.p].res
        if got != want:
            ph.intermediate_ok = False
            ph.notes.append(f"walk cover fails at {lifted.dag.label(i)}: {got!r} != {want!r}")
