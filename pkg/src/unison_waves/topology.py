"""Anonymous network graphs and the structural metrics that size the protocol.

Processes are the integers ``0..n-1``. The indices exist only for bookkeeping
in the simulator; nothing in the protocol guards reads them.
"""

from __future__ import annotations

import os
import random
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable

from .errors import BadIndex, Disconnected, GraphError, SelfLoop, TooLarge

DEFAULT_EXHAUSTIVE_LIMIT = 12


def exhaustive_limit(default: int = DEFAULT_EXHAUSTIVE_LIMIT) -> int:
    """Size cap for exponential routines, overridable by ``UNISON_EXHAUSTIVE_LIMIT``."""
    raw = os.environ.get("UNISON_EXHAUSTIVE_LIMIT")
    return int(raw) if raw else default


@dataclass(frozen=True)
class Graph:
    """Undirected connected graph; ``adj[p]`` is the sorted neighbor tuple of ``p``."""

    n: int
    adj: tuple[tuple[int, ...], ...]

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple((u, v) for u in range(self.n) for v in self.adj[u] if u < v)

    @property
    def m(self) -> int:
        return len(self.edges)

    def neighbors(self, p: int) -> tuple[int, ...]:
        return self.adj[p]

    def degree(self, p: int) -> int:
        return len(self.adj[p])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adj[u]

    @cached_property
    def _dist(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(_bfs(self.adj, s)) for s in range(self.n))

    def relabel(self, perm: list[int]) -> "Graph":
        """Graph with process ``p`` renamed ``perm[p]``."""
        return parse_graph([(perm[u], perm[v]) for u, v in self.edges], self.n)

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}


def _bfs(adj, source: int) -> list[int]:
    dist = [-1] * len(adj)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def parse_graph(edge_list: Iterable[tuple[int, int]], n: int) -> Graph:
    """Build a validated :class:`Graph` from unordered pairs.

    Duplicate pairs are merged. Raises :class:`BadIndex`, :class:`SelfLoop` or
    :class:`Disconnected`.
    """
    edges = [tuple(e) for e in edge_list]
    if n < 2:
        raise GraphError(f"a network needs at least 2 processes, got n={n}")
    if not edges:
        raise GraphError("edge list is empty")
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for e in edges:
        if len(e) != 2:
            raise GraphError(f"edge {e!r} is not a pair")
        u, v = int(e[0]), int(e[1])
        if not (0 <= u < n and 0 <= v < n):
            raise BadIndex(f"edge ({u}, {v}) has an index outside 0..{n - 1}")
        if u == v:
            raise SelfLoop(f"self-loop on process {u}")
        nbrs[u].add(v)
        nbrs[v].add(u)
    adj = tuple(tuple(sorted(s)) for s in nbrs)
    if min(_bfs(adj, 0)) < 0:
        raise Disconnected("graph is not connected")
    return Graph(n, adj)


def read_edge_list(path: str | Path) -> Graph:
    """Read the flat text format: first line ``n``, then one ``u v`` pair per line."""
    lines = [ln.split("#", 1)[0].strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise GraphError(f"{path}: empty edge-list file")
    n = int(lines[0])
    edges = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise GraphError(f"{path}: malformed edge line {ln!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return parse_graph(edges, n)


def write_edge_list(g: Graph, path: str | Path) -> None:
    body = "\n".join(f"{u} {v}" for u, v in g.edges)
    Path(path).write_text(f"{g.n}\n{body}\n")


# --- metrics ---------------------------------------------------------------


def distance(g: Graph, p: int, q: int) -> int:
    return g._dist[p][q]


def distance_table(g: Graph) -> tuple[tuple[int, ...], ...]:
    return g._dist


def ball(g: Graph, p: int, k: int) -> frozenset[int]:
    """Processes within ``k`` hops of ``p``."""
    row = g._dist[p]
    return frozenset(q for q in range(g.n) if row[q] <= k)


def eccentricity(g: Graph, p: int) -> int:
    return max(g._dist[p])


def diameter(g: Graph) -> int:
    return max(max(row) for row in g._dist)


def is_tree(g: Graph) -> bool:
    return g.m == g.n - 1


def bfs_tree(g: Graph, root: int) -> tuple[list[int], list[int]]:
    """Parent and depth arrays of the BFS tree (smallest-index neighbor first)."""
    parent = [-1] * g.n
    depth = [-1] * g.n
    depth[root] = 0
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in g.adj[u]:
            if depth[v] < 0:
                depth[v] = depth[u] + 1
                parent[v] = u
                queue.append(v)
    return parent, depth


def fundamental_cycles(g: Graph, root: int = 0) -> list[list[int]]:
    """Fundamental cycle basis w.r.t. the BFS tree rooted at ``root``.

    Each cycle is returned as a closed vertex list ``[u, ..., v, u]`` that walks the
    tree path from ``u`` to ``v`` and then closes through the non-tree edge.
    """
    parent, depth = bfs_tree(g, root)
    cycles = []
    for u, v in g.edges:
        if parent[u] == v or parent[v] == u:
            continue
        left, right = [u], [v]
        a, b = u, v
        while depth[a] > depth[b]:
            a = parent[a]
            left.append(a)
        while depth[b] > depth[a]:
            b = parent[b]
            right.append(b)
        while a != b:
            a, b = parent[a], parent[b]
            left.append(a)
            right.append(b)
        cycles.append(left + right[-2::-1] + [u])
    return cycles


def cyclomatic_upper_bound(g: Graph) -> int:
    """Upper bound on the cyclomatic characteristic.

    2 for trees; otherwise the smallest, over BFS trees rooted at every vertex,
    of the longest fundamental cycle. Never below the true value.
    """
    if is_tree(g):
        return 2
    best = None
    for root in range(g.n):
        longest = max(len(c) - 1 for c in fundamental_cycles(g, root))
        best = longest if best is None else min(best, longest)
    return best


def longest_simple_path_length(g: Graph, limit: int | None = None) -> int:
    """Number of edges of a longest repetition-free walk (exhaustive DFS)."""
    limit = exhaustive_limit() if limit is None else limit
    if g.n > limit:
        raise TooLarge(f"longest simple path search limited to n <= {limit}, got n={g.n}")
    full = g.n - 1
    best = 0

    def dfs(u: int, seen: int, length: int) -> bool:
        nonlocal best
        if length > best:
            best = length
            if best == full:
                return True
        for v in g.adj[u]:
            if not seen >> v & 1 and dfs(v, seen | 1 << v, length + 1):
                return True
        return False

    for s in range(g.n):
        if dfs(s, 1 << s, 0):
            break
    return best


@dataclass(frozen=True)
class GraphMetrics:
    diameter: int
    cg_upper: int
    lsp: int | None
    distances: tuple[tuple[int, ...], ...]

    def d(self, p: int, q: int) -> int:
        return self.distances[p][q]


def metrics(g: Graph) -> GraphMetrics:
    try:
        lsp = longest_simple_path_length(g)
    except TooLarge:
        lsp = None
    return GraphMetrics(diameter(g), cyclomatic_upper_bound(g), lsp, g._dist)


# --- graph families --------------------------------------------------------


def ring(n: int) -> Graph:
    if n < 3:
        raise GraphError("a ring needs n >= 3")
    return parse_graph([(i, (i + 1) % n) for i in range(n)], n)


def path(n: int) -> Graph:
    return parse_graph([(i, i + 1) for i in range(n - 1)], n)


def star(leaves: int) -> Graph:
    return parse_graph([(0, i) for i in range(1, leaves + 1)], leaves + 1)


def complete(n: int) -> Graph:
    return parse_graph([(i, j) for i in range(n) for j in range(i + 1, n)], n)


def grid(rows: int, cols: int) -> Graph:
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return parse_graph(edges, rows * cols)


def random_connected(n: int, extra: float = 0.3, seed: int = 0) -> Graph:
    """Random spanning tree plus each remaining pair with probability ``extra``."""
    rng = random.Random(seed)
    order = list(range(n))
    rng.shuffle(order)
    edges = {tuple(sorted((order[i], order[rng.randrange(i)]))) for i in range(1, n)}
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in edges and rng.random() < extra:
                edges.add((i, j))
    return parse_graph(sorted(edges), n)


FAMILIES = ("ring", "path", "star", "complete", "grid", "random")


def family(name: str, n: int, seed: int = 0) -> Graph:
    """Member of a named family with ``n`` processes (grid: ``n`` rounded to a square)."""
    if name == "ring":
        return ring(n)
    if name == "path":
        return path(n)
    if name == "star":
        return star(n - 1)
    if name == "complete":
        return complete(n)
    if name == "grid":
        side = max(2, round(n ** 0.5))
        return grid(side, side)
    if name == "random":
        return random_connected(n, seed=seed)
    raise GraphError(f"unknown graph family {name!r}; choose from {', '.join(FAMILIES)}")
