"""Maximum-cardinality bipartite matching."""

from __future__ import annotations

from collections import deque
from typing import Callable, Sequence

_INF = float("inf")


def hopcroft_karp(adjacency: Sequence[Sequence[int]], n_right: int) -> list[int]:
    """Maximum matching of a bipartite graph given as left-vertex adjacency lists.

    Returns ``match`` where ``match[u]`` is the right vertex paired with left
    vertex ``u``, or -1. Neighbours are tried in list order, so sorted
    adjacency lists give a deterministic matching.
    """
    n_left = len(adjacency)
    match_l = [-1] * n_left
    match_r = [-1] * n_right
    dist = [_INF] * n_left

    def bfs() -> bool:
        queue = deque()
        for u in range(n_left):
            if match_l[u] == -1:
                dist[u] = 0
                queue.append(u)
            else:
                dist[u] = _INF
        found = False
        while queue:
            u = queue.popleft()
            for v in adjacency[u]:
                w = match_r[v]
                if w == -1:
                    found = True
                elif dist[w] == _INF:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return found

    def dfs(root: int, cursor: list[int], chosen: list[int]) -> bool:
        # iterative so long augmenting paths cannot hit the recursion limit
        stack = [root]
        while stack:
            u = stack[-1]
            edges = adjacency[u]
            descended = False
            while cursor[u] < len(edges):
                v = edges[cursor[u]]
                cursor[u] += 1
                w = match_r[v]
                if w == -1:
                    chosen[u] = v
                    for x in stack:
                        match_l[x] = chosen[x]
                        match_r[chosen[x]] = x
                    return True
                if dist[w] == dist[u] + 1:
                    chosen[u] = v
                    stack.append(w)
                    descended = True
                    break
            if not descended:
                dist[u] = _INF
                stack.pop()
        return False

    while bfs():
        cursor = [0] * n_left
        chosen = [-1] * n_left
        for u in range(n_left):
            if match_l[u] == -1:
                dfs(u, cursor, chosen)
    return match_l


def brute_force_matching(
    n_left: int, n_right: int, edge: Callable[[int, int], bool]
) -> list[tuple[int, int]]:
    """Exhaustive maximum matching over every subset of right vertices.

    Exponential in ``n_right``; meant as an oracle for tiny instances.
    """
    memo: dict[tuple[int, int], tuple[int, tuple]] = {}

    def best(u: int, used: int) -> tuple[int, tuple]:
        if u == n_left:
            return 0, ()
        key = (u, used)
        if key in memo:
            return memo[key]
        size, pairs = best(u + 1, used)
        for v in range(n_right):
            if used & (1 << v) or not edge(u, v):
                continue
            sub_size, sub_pairs = best(u + 1, used | (1 << v))
            if sub_size + 1 > size:
                size, pairs = sub_size + 1, ((u, v),) + sub_pairs
        memo[key] = (size, pairs)
        return memo[key]

    return list(best(0, 0)[1])
