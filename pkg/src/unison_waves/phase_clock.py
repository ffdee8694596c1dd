"""Finite incrementing system and the delay algebra on clock values.

Clock values live in ``{-alpha, ..., 0, ..., K-1}``. The nonnegative part is a
cyclic counter modulo ``K``; the negative tail is a reset ramp climbing to 0.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .errors import NotLocallyComparable, NotWU0, OutOfDomain, ParamError
from .topology import Graph


@dataclass(frozen=True)
class IncSystem:
    K: int
    alpha: int

    def __post_init__(self):
        if self.K < 2:
            raise ParamError(f"period K must be >= 2, got {self.K}")
        if self.alpha < 1:
            raise ParamError(f"tail depth alpha must be >= 1, got {self.alpha}")

    def in_domain(self, x: int) -> bool:
        return -self.alpha <= x < self.K

    def in_stab(self, x: int) -> bool:
        return 0 <= x < self.K

    def in_tail(self, x: int) -> bool:
        return -self.alpha <= x <= 0

    def in_tail_star(self, x: int) -> bool:
        return -self.alpha <= x < 0

    def values(self) -> range:
        return range(-self.alpha, self.K)


def phi(sys: IncSystem, x: int) -> int:
    if not sys.in_domain(x):
        raise OutOfDomain(f"{x} is outside [{-sys.alpha}, {sys.K - 1}]")
    if x >= 0:
        return (x + 1) % sys.K
    return x + 1


def torus_distance(K: int, a: int, b: int) -> int:
    return min((a - b) % K, (b - a) % K)


def locally_comparable(K: int, a: int, b: int) -> bool:
    return torus_distance(K, a, b) <= 1


def local_leq(K: int, a: int, b: int) -> bool:
    """``a <=_l b``: ``b`` equals ``a`` or is one step ahead of it on the torus."""
    return (b - a) % K <= 1


def local_minus(K: int, b: int, a: int) -> int:
    """``b ⊖ a`` for locally comparable residues; one of -1, 0, 1."""
    if not locally_comparable(K, a, b):
        raise NotLocallyComparable(a, b)
    if local_leq(K, a, b):
        return (b - a) % K
    return -((a - b) % K)


def path_delay(K: int, values: Sequence[int]) -> int:
    """Local variation of a clock sequence: sum of consecutive ``⊖`` steps."""
    total = 0
    for i in range(len(values) - 1):
        a, b = values[i], values[i + 1]
        if not locally_comparable(K, a, b):
            raise NotLocallyComparable(a, b, index=i)
        total += local_minus(K, b, a)
    return total


def check_WU(g: Graph, sys: IncSystem, clocks: Sequence[int]) -> bool:
    """All clocks in the stable part, neighbors at torus distance <= 1."""
    K = sys.K
    for p in range(g.n):
        rp = clocks[p]
        if not 0 <= rp < K:
            return False
        for q in g.adj[p]:
            if q > p and (rp - clocks[q]) % K not in (0, 1, K - 1):
                return False
    return True


def delay_potential(g: Graph, sys: IncSystem, clocks: Sequence[int]) -> list[int] | None:
    """Clock potential relative to process 0, or ``None`` if delay is not intrinsic.

    Propagates ``⊖`` along a BFS tree, then checks every non-tree edge; this is
    the same as checking zero delay around each fundamental cycle.
    Assumes ``check_WU`` holds.
    """
    K = sys.K

    def minus(b: int, a: int) -> int:
        # Under WU the difference is 0, 1 or K - 1 (that is, -1).
        d = (b - a) % K
        if d > 1:
            if d != K - 1:
                raise NotLocallyComparable(a, b)
            return -1
        return d

    pot: list[int | None] = [None] * g.n
    pot[0] = 0
    queue = deque([0])
    adj = g.adj
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if pot[v] is None:
                pot[v] = pot[u] + minus(clocks[v], clocks[u])
                queue.append(v)
    for u, v in g.edges:
        if pot[v] - pot[u] != minus(clocks[v], clocks[u]):
            return None
    return pot


def check_WU0(g: Graph, sys: IncSystem, clocks: Sequence[int]) -> bool:
    return check_WU(g, sys, clocks) and delay_potential(g, sys, clocks) is not None


def intrinsic_delay(g: Graph, sys: IncSystem, clocks: Sequence[int], p: int, q: int) -> int:
    """Delay from ``p`` to ``q`` along any path; requires a WU0 configuration."""
    pot = delay_potential(g, sys, clocks) if check_WU(g, sys, clocks) else None
    if pot is None:
        raise NotWU0("delay is not intrinsic in this configuration")
    return pot[q] - pot[p]
