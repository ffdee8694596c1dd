import math
import random

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unison_waves.aggregation import (
    AND,
    CATALOG,
    GCD,
    INF,
    INTERSECTION,
    MIN,
    RSystem,
    TaskSpec,
    check_laws,
    cs_handlers,
    fold,
    identity_rsystem,
    min_plus,
    operator,
    oracle_ball_infimum,
    oracle_r_operator,
    random_registers,
    required_delta,
    run_computation,
    table_operator,
)
from unison_waves.causality import is_elementary, reduce_walk, reduction_successors
from unison_waves.errors import DeltaTooSmall, ParamError, TooLarge
from unison_waves.protocol import ProtocolParams, default_params
from unison_waves.scheduler import Daemon, unison_configuration
from unison_waves.topology import complete, diameter, path, random_connected, ring, star

from .conftest import DAEMONS


def euclid(a, b):
    while b:
        a, b = b, a % b
    return a


# --- operators and laws ------------------------------------------------------


def test_fold_examples():
    assert fold(MIN, [5, 2, 9]) == 2
    assert fold(MIN, []) == INF
    assert fold(GCD, []) == 0
    assert fold(GCD, [12, 18, 30]) == euclid(euclid(12, 18), 30) == 6
    assert fold(AND, [0b1100, 0b1010]) == 0b1000


def test_catalog_lookup():
    assert operator("min") is MIN
    with pytest.raises(ParamError):
        operator("sum")


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_operators_obey_the_laws(name):
    op = CATALOG[name]
    rnd = random.Random(1)
    sample = [op.sample(rnd) for _ in range(12)] + [op.identity]
    report = check_laws(op, sample)
    assert report.ok, report.violations


def test_min_plus_laws():
    g = path(2)
    sample = [0, 1, 5, 17, INF]
    assert check_laws(min_plus(g, {(0, 1): 1}), sample).ok
    assert check_laws(min_plus(g, {(0, 1): 0}), sample).ok


def test_decreasing_r_function_is_not_idempotent():
    sys = RSystem(MIN, {(0, 1): lambda x: x - 1})
    report = check_laws(sys, [0, 3, 8])
    assert not report.ok
    assert all("not idempotent" in v for v in report.violations)


def test_mask_and_is_an_endomorphism():
    mask = 0b0110
    op = table_operator(
        "and4", {a: {b: a & b for b in range(16)} for a in range(16)}, 0b1111
    )
    sys = RSystem(op, {(0, 1): lambda x: x & mask})
    report = check_laws(sys, list(range(16)), limit=10_000)
    assert not any("endomorphism" in v for v in report.violations)
    assert any("idempotent" in v for v in report.violations)


def test_table_operator_detects_broken_laws():
    good = table_operator("chain", {a: {b: min(a, b) for b in "abc"} for a in "abc"}, "c")
    assert check_laws(good, list("abc")).ok
    table = {a: {b: min(a, b) for b in "abc"} for a in "abc"}
    table["a"]["b"] = "b"
    broken = table_operator("broken", table, "c")
    assert not check_laws(broken, list("abc")).ok


def test_min_plus_rejects_negative_weights():
    with pytest.raises(ParamError):
        min_plus(path(2), {(0, 1): -1})


def eval_walk(sys, walk, v0):
    return sys.eval(walk, v0)


@settings(max_examples=150, deadline=None)
@given(st.randoms(use_true_random=False))
def test_walk_reduction_is_monotone(rnd):
    g = complete(4)
    weights = {e: rnd.randint(0, 6) for e in g.edges}
    sys = min_plus(g, weights)
    v0 = [rnd.randint(0, 20) for _ in range(g.n)]
    w = [rnd.randrange(4)]
    for _ in range(rnd.randrange(0, 7)):
        w.append(rnd.choice(g.adj[w[-1]] + (w[-1],)))
    m = tuple(w)
    for reduced in reduction_successors(m) | {reduce_walk(m)}:
        assert MIN.leq(eval_walk(sys, reduced, v0), eval_walk(sys, m, v0))
    if is_elementary(m):
        assert eval_walk(sys, reduce_walk(m), v0) == eval_walk(sys, m, v0)


# --- oracles -------------------------------------------------------------------


def test_ball_oracle_examples():
    v0 = (5, 2, 9, 7)
    g = path(4)
    assert oracle_ball_infimum(g, MIN, v0, 0) == list(v0)
    assert oracle_ball_infimum(g, MIN, v0, 1) == [2, 2, 2, 7]
    assert oracle_ball_infimum(g, MIN, v0, diameter(g)) == [2] * 4


def test_r_operator_oracle_examples():
    edge = path(2)
    assert oracle_r_operator(edge, min_plus(edge, {(0, 1): 3}), (0, 10)) == [0, 3]
    tri = complete(3)
    assert oracle_r_operator(tri, min_plus(tri), (0, INF, INF)) == [0, 1, 1]
    g = random_connected(6, seed=4)
    v0 = (4, 8, 1, 9, 3, 7)
    assert oracle_r_operator(g, identity_rsystem(g, MIN), v0) == [1] * 6
    with pytest.raises(TooLarge):
        oracle_r_operator(ring(8), min_plus(ring(8)), [0] * 8, limit=6)


def test_r_operator_oracle_is_shortest_distance():
    rnd = random.Random(8)
    for seed in range(10):
        g = random_connected(6, extra=0.5, seed=seed)
        weights = {e: rnd.randint(1, 9) for e in g.edges}
        sources = {rnd.randrange(6): rnd.randint(0, 5) for _ in range(2)}
        v0 = [sources.get(p, INF) for p in range(6)]
        h = nx.Graph()
        h.add_weighted_edges_from((u, v, w) for (u, v), w in weights.items())
        want = [min(s + nx.dijkstra_path_length(h, src, p) for src, s in sources.items())
                for p in range(6)]
        assert oracle_r_operator(g, min_plus(g, weights), v0) == want


# --- task constraints ------------------------------------------------------------


def test_required_delta():
    g = path(5)
    assert required_delta("global-infimum", g) == diameter(g) + 1
    assert required_delta("ball-infimum", g, rho=2) == 3
    assert required_delta("r-operator", g) == 5
    with pytest.raises(ParamError):
        required_delta("sum", g)


def test_delta_too_small():
    g = ring(4)
    task = TaskSpec("global-infimum", MIN, (5, 2, 9, 7))
    with pytest.raises(DeltaTooSmall):
        cs_handlers(task, g, default_params(g, delta=2))
    ball = TaskSpec("ball-infimum", MIN, (5, 2, 9, 7), rho=1)
    with pytest.raises(DeltaTooSmall):
        cs_handlers(ball, g, default_params(g, delta=3))
    with pytest.raises(ParamError):
        TaskSpec("r-operator", MIN, (1, 2, 3, 4))
    short = TaskSpec("global-infimum", MIN, (1, 2))
    with pytest.raises(ParamError):
        short.check(g, default_params(g, delta=3))


# --- end-to-end computations ---------------------------------------------------------


def compute(g, task, kind="random-subset", seed=0, phases=2, **kw):
    params = default_params(g, delta=task.required_delta(g), rho=task.rho)
    return run_computation(g, params, task, Daemon(kind, seed=seed), phases, seed=seed, **kw)


def test_global_infimum_example():
    report = compute(ring(4), TaskSpec("global-infimum", MIN, (5, 2, 9, 7)))
    assert report.ok
    assert all(ph.values == [2] * 4 for ph in report.complete_phases)


def test_ball_infimum_example():
    report = compute(path(4), TaskSpec("ball-infimum", MIN, (5, 2, 9, 7), rho=1))
    assert report.ok
    assert all(ph.values == [2, 2, 2, 7] for ph in report.complete_phases)
    assert all(ph.intermediate_ok for ph in report.complete_phases)


def test_r_operator_example():
    g = path(3)
    task = TaskSpec("r-operator", MIN, (0, INF, INF), rsystem=min_plus(g))
    report = compute(g, task)
    assert report.ok
    assert all(ph.values == [0, 1, 2] for ph in report.complete_phases)


def test_constant_inputs_give_constant_output():
    g = random_connected(6, seed=1)
    for kind in ("global-infimum", "ball-infimum"):
        report = compute(g, TaskSpec(kind, GCD, (12,) * 6, rho=2), seed=3)
        assert all(ph.values == [12] * 6 for ph in report.complete_phases)


def test_set_intersection_ball():
    g = star(4)
    rnd = random.Random(4)
    inputs = tuple(INTERSECTION.sample(rnd) for _ in range(g.n))
    report = compute(g, TaskSpec("ball-infimum", INTERSECTION, inputs, rho=1), seed=2)
    assert report.ok


def test_garbage_only_affects_the_partial_phase():
    g = path(4)
    task = TaskSpec("global-infimum", MIN, (40, 41, 42, 43))
    params = default_params(g, delta=task.required_delta(g))
    start = unison_configuration(g, 0)
    garbage = random_registers(start, MIN, seed=0)
    garbage = garbage.__class__(tuple(s.__class__(s.r, 0, 0, 0, 0) for s in garbage.states))
    report = run_computation(g, params, task, Daemon("synchronous"), 2, conf0=garbage)
    assert report.ok
    partial = [ph for ph in report.phases if not ph.complete]
    assert partial and partial[0].values != partial[0].expected


def test_phases_must_be_positive():
    g = path(3)
    task = TaskSpec("global-infimum", MIN, (1, 2, 3))
    with pytest.raises(ParamError):
        compute(g, task, phases=0)


@pytest.mark.parametrize("kind", DAEMONS)
def test_walk_cover_holds_at_every_event(kind):
    rnd = random.Random(6)
    for g in (path(3), complete(3), star(3), ring(4)):
        weights = {e: rnd.randint(0, 4) for e in g.edges}
        v0 = tuple(rnd.choice((0, 3, 7, INF)) for _ in range(g.n))
        task = TaskSpec("r-operator", MIN, v0, rsystem=min_plus(g, weights))
        report = compute(g, task, kind=kind, seed=5, check_walk_cover=True)
        assert report.ok, [ph.notes[:3] for ph in report.phases]


def test_phase_cost_counts():
    g = random_connected(6, seed=2)
    task = TaskSpec("global-infimum", MIN, tuple(range(6)))
    report = compute(g, task, kind="synchronous", phases=3)
    delta = task.required_delta(g)
    for ph in report.complete_phases:
        assert ph.na_events == g.n * delta
        assert ph.reads == 2 * delta * g.m


def test_handlers_are_pure_on_pre_step_state():
    g = path(3)
    task = TaskSpec("ball-infimum", MIN, (3, 1, 2), rho=1)
    params = ProtocolParams(K=4, alpha=3, delta=2, rho=1)
    h = cs_handlers(task, g, params)
    conf = unison_configuration(g, 1)
    before = conf.states
    out = [h.cs2(g, conf, p) for p in range(3)]
    assert conf.states == before
    assert [s.v0 for s in out] == [3, 1, 2]
    assert all(math.isclose(s.r, 1) for s in out)
