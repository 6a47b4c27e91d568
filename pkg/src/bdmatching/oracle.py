"""Exact offline references: maximality check, maximum matching, stream replay."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .stream import INSERT, Edge, StreamSpec, adjacency, canonical


@dataclass(frozen=True)
class Verdict:
    is_valid_matching: bool
    is_maximal: bool
    witness: Edge | None = None
    max_matching_size: int | None = None


def check_maximal(graph: dict[int, set[int]], matching: Iterable[Edge], with_maximum: bool = False) -> Verdict:
    """Is ``matching`` a matching of ``graph`` that no edge of ``graph`` extends?

    The witness is the canonically smallest edge with both endpoints free.
    """
    edges = [canonical(*e) for e in matching]
    used: set[int] = set()
    valid = True
    for u, v in edges:
        if v not in graph.get(u, ()) or u in used or v in used:
            valid = False
        used.update((u, v))
    witness = None
    for u in sorted(graph):
        if u in used:
            continue
        free = [v for v in graph[u] if v > u and v not in used]
        if free:
            witness = (u, min(free))
            break
    size = len(max_matching(graph)) if with_maximum else None
    return Verdict(valid, valid and witness is None, witness, size)


def max_matching(graph: dict[int, set[int]], initial: Iterable[Edge] = ()) -> list[Edge]:
    """Maximum cardinality matching of a general graph (Edmonds' blossoms).

    Starts from ``initial`` (or a greedy matching) and augments along shortest
    alternating paths found by BFS with blossom contraction, O(V^3).
    """
    verts = sorted(graph)
    index = {v: i for i, v in enumerate(verts)}
    nv = len(verts)
    adj = [[index[w] for w in graph[v] if w in index] for v in verts]
    match = [-1] * nv
    seed = list(initial) or [(u, v) for u in verts for v in sorted(graph[u]) if u < v]
    for u, v in seed:
        a, b = index[u], index[v]
        if match[a] == -1 and match[b] == -1:
            match[a], match[b] = b, a

    def lca(a: int, b: int, base: list[int], parent: list[int]) -> int:
        seen = [False] * nv
        while True:
            a = base[a]
            seen[a] = True
            if match[a] == -1:
                break
            a = parent[match[a]]
        while True:
            b = base[b]
            if seen[b]:
                return b
            b = parent[match[b]]

    def mark_path(v: int, b: int, child: int, base, parent, blossom) -> None:
        while base[v] != b:
            blossom[base[v]] = blossom[base[match[v]]] = True
            parent[v] = child
            child = match[v]
            v = parent[match[v]]

    def find_path(root: int) -> tuple[int, list[int]]:
        used = [False] * nv
        parent = [-1] * nv
        base = list(range(nv))
        used[root] = True
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for to in adj[v]:
                if base[v] == base[to] or match[v] == to:
                    continue
                if to == root or (match[to] != -1 and parent[match[to]] != -1):
                    cur = lca(v, to, base, parent)
                    blossom = [False] * nv
                    mark_path(v, cur, to, base, parent, blossom)
                    mark_path(to, cur, v, base, parent, blossom)
                    for i in range(nv):
                        if blossom[base[i]]:
                            base[i] = cur
                            if not used[i]:
                                used[i] = True
                                queue.append(i)
                elif parent[to] == -1:
                    parent[to] = v
                    if match[to] == -1:
                        return to, parent
                    used[match[to]] = True
                    queue.append(match[to])
        return -1, parent

    for root in range(nv):
        if match[root] != -1:
            continue
        v, parent = find_path(root)
        while v != -1:
            pv = parent[v]
            nxt = match[pv]
            match[v], match[pv] = pv, v
            v = nxt
    return sorted(canonical(verts[a], verts[match[a]]) for a in range(nv) if match[a] > a)


def replay_reference(spec: StreamSpec) -> dict[int, set[int]]:
    """Final graph by naive multiset replay (independent of ``stream.final_graph``)."""
    count: dict[Edge, int] = {}
    for ev in spec.events:
        count[ev.edge] = count.get(ev.edge, 0) + (1 if ev.kind == INSERT else -1)
        if count[ev.edge] not in (0, 1):
            raise ValueError(f"seq {ev.seq}: edge {ev.edge} count leaves {{0, 1}}")
    if sum(1 for ev in spec.events if ev.kind != INSERT) > spec.K:
        raise ValueError("deletion budget exceeded")
    return adjacency(spec.n, (e for e, c in count.items() if c))
