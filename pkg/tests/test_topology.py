import itertools

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unison_waves.errors import BadIndex, Disconnected, GraphError, SelfLoop, TooLarge
from unison_waves.topology import (
    ball,
    bfs_tree,
    complete,
    cyclomatic_upper_bound,
    diameter,
    distance,
    family,
    fundamental_cycles,
    is_tree,
    longest_simple_path_length,
    metrics,
    parse_graph,
    path,
    random_connected,
    read_edge_list,
    ring,
    star,
    write_edge_list,
)

from .conftest import CORPUS


def to_nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges)
    return h


def exact_cyclomatic(g):
    """Minimum over cycle bases of the longest basis cycle (greedy is optimal on a matroid)."""
    if is_tree(g):
        return 2
    index = {e: i for i, e in enumerate(g.edges)}
    cycles = []
    for cyc in nx.simple_cycles(to_nx(g)):
        mask = 0
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            mask |= 1 << index[(min(a, b), max(a, b))]
        cycles.append((len(cyc), mask))
    cycles.sort()
    rank_needed = g.m - g.n + 1
    basis = {}
    longest = 0
    for length, mask in cycles:
        while mask:
            top = mask.bit_length() - 1
            if top not in basis:
                basis[top] = mask
                longest = length
                break
            mask ^= basis[top]
        if len(basis) == rank_needed:
            break
    return longest


def small_graphs():
    yield from CORPUS.values()
    yield complete(4)
    yield complete(5)
    for seed in range(12):
        yield random_connected(7, extra=0.5, seed=seed)


# --- parsing ---------------------------------------------------------------


def test_parse_triangle_and_edge():
    tri = parse_graph([(0, 1), (1, 2), (2, 0)], 3)
    assert tri.m == 3 and all(tri.degree(p) == 2 for p in range(3))
    edge = parse_graph([(0, 1)], 2)
    assert edge.neighbors(0) == (1,) and edge.neighbors(1) == (0,)


def test_parse_errors():
    with pytest.raises(Disconnected):
        parse_graph([(0, 1), (2, 3)], 4)
    with pytest.raises(SelfLoop):
        parse_graph([(0, 0), (0, 1)], 2)
    with pytest.raises(BadIndex):
        parse_graph([(0, 5)], 3)
    with pytest.raises(GraphError):
        parse_graph([], 2)
    with pytest.raises(GraphError):
        parse_graph([(0, 1)], 1)


def test_duplicate_edges_collapse():
    g = parse_graph([(0, 1), (1, 0), (1, 2)], 3)
    assert g.m == 2


def test_edge_list_round_trip(tmp_path):
    g = random_connected(7, seed=2)
    f = tmp_path / "g.txt"
    write_edge_list(g, f)
    assert read_edge_list(f) == g
    f.write_text("# a comment\n3\n0 1\n\n1 2  # trailing\n")
    assert read_edge_list(f) == path(3)


# --- distances and balls -----------------------------------------------------


def test_distance_examples():
    g = path(3)
    assert distance(g, 0, 2) == 2
    assert all(distance(g, p, p) == 0 for p in range(3))
    assert distance(ring(6), 0, 3) == 3


def test_ball_examples():
    g = path(3)
    assert ball(g, 1, 0) == {1}
    assert ball(g, 1, 1) == {0, 1, 2}
    for g in CORPUS.values():
        assert all(ball(g, p, diameter(g)) == set(range(g.n)) for p in range(g.n))


def test_diameter_examples():
    assert diameter(path(2)) == 1
    assert diameter(ring(5)) == 2
    assert diameter(star(4)) == 2


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_distances_match_networkx(name):
    g = CORPUS[name]
    lengths = dict(nx.all_pairs_shortest_path_length(to_nx(g)))
    for p, q in itertools.product(range(g.n), repeat=2):
        assert distance(g, p, q) == lengths[p][q]
    assert diameter(g) == nx.diameter(to_nx(g))


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_metric_laws(name):
    g = CORPUS[name]
    for p, q, r in itertools.product(range(g.n), repeat=3):
        assert distance(g, p, q) == distance(g, q, p)
        assert distance(g, p, r) <= distance(g, p, q) + distance(g, q, r)
    for p in range(g.n):
        balls = [ball(g, p, k) for k in range(g.n)]
        assert all(a <= b for a, b in zip(balls, balls[1:]))
        assert balls[-1] == set(range(g.n))


# --- BFS trees and cycles ------------------------------------------------------


def test_bfs_tree_depths_are_distances():
    g = random_connected(8, seed=5)
    parent, depth = bfs_tree(g, 3)
    assert parent[3] == -1
    for p in range(g.n):
        assert depth[p] == distance(g, 3, p)
        if p != 3:
            assert g.has_edge(p, parent[p]) and depth[parent[p]] == depth[p] - 1


def test_fundamental_cycles_are_closed_cycles():
    g = family("grid", 9)
    cycles = fundamental_cycles(g, 0)
    assert len(cycles) == g.m - g.n + 1
    for cyc in cycles:
        assert cyc[0] == cyc[-1]
        assert len(set(cyc[:-1])) == len(cyc) - 1
        assert all(g.has_edge(a, b) for a, b in zip(cyc, cyc[1:]))


def test_cyclomatic_examples():
    for g in (path(5), star(4), path(2)):
        assert cyclomatic_upper_bound(g) == 2
    for n in range(3, 8):
        assert cyclomatic_upper_bound(ring(n)) == n
        assert exact_cyclomatic(ring(n)) == n
    assert cyclomatic_upper_bound(complete(3)) == 3


def test_cyclomatic_bound_against_exhaustive_oracle():
    for g in small_graphs():
        if g.n > 7:
            continue
        assert cyclomatic_upper_bound(g) >= exact_cyclomatic(g)


def test_cyclomatic_bound_against_diameter():
    # Odd cycles reach 2D + 1 (ring of 5 has C_G = 5 and D = 2).
    for g in small_graphs():
        if not is_tree(g):
            assert cyclomatic_upper_bound(g) <= 2 * diameter(g) + 1
    assert exact_cyclomatic(ring(5)) == 2 * diameter(ring(5)) + 1


# --- longest simple path -------------------------------------------------------


def brute_lsp(g):
    h = to_nx(g)
    best = 0
    for s, t in itertools.combinations(range(g.n), 2):
        for p in nx.all_simple_paths(h, s, t):
            best = max(best, len(p) - 1)
    return best


def test_lsp_examples():
    assert longest_simple_path_length(path(4)) == 3
    assert longest_simple_path_length(complete(3)) == 2
    assert longest_simple_path_length(complete(4)) == 3


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_lsp_matches_enumeration(name):
    g = CORPUS[name]
    assert longest_simple_path_length(g) == brute_lsp(g)


def test_lsp_limit(monkeypatch):
    with pytest.raises(TooLarge):
        longest_simple_path_length(ring(9), limit=8)
    monkeypatch.setenv("UNISON_EXHAUSTIVE_LIMIT", "5")
    with pytest.raises(TooLarge):
        longest_simple_path_length(ring(6))


def test_metrics_invariants():
    for g in CORPUS.values():
        m = metrics(g)
        assert m.diameter <= m.lsp <= g.n - 1
        assert m.cg_upper >= 2


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 9), st.floats(0, 1), st.integers(0, 10_000))
def test_random_connected_is_connected(n, extra, seed):
    g = random_connected(n, extra=extra, seed=seed)
    assert nx.is_connected(to_nx(g))
    assert g.n == n and g.m >= n - 1


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 8), st.randoms(use_true_random=False))
def test_relabel_preserves_metrics(n, rnd):
    g = random_connected(n, seed=rnd.randint(0, 999))
    perm = list(range(n))
    rnd.shuffle(perm)
    h = g.relabel(perm)
    assert diameter(h) == diameter(g)
    assert longest_simple_path_length(h) == longest_simple_path_length(g)
    for p, q in itertools.combinations(range(n), 2):
        assert distance(h, perm[p], perm[q]) == distance(g, p, q)
