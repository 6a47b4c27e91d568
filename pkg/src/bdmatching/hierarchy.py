"""Hierarchical greedy matchings over the insertion substream.

``HierarchicalMatching`` keeps levels ``M_1, M_2, ...`` (``levels[0]`` is
``M_1``). An inserted edge goes to the lowest level where it fits; an edge that
is already stored in a level fits there again and only its multiplicity grows,
so every copy of a repeatedly inserted edge lives on one level.

Two modes exist. With a fixed number of levels an edge that fits nowhere is
discarded. With an edge budget ``B`` a new level is opened instead, and once
the structure holds ``B + 1`` edges the newest edge of the top level is
evicted (the top level disappears when it empties).
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Iterator

from .stream import Edge


class Matching:
    """Vertex-disjoint edge set with a mate map and per-edge multiplicities."""

    __slots__ = ("_mate", "_mult")

    def __init__(self, edges: Iterable[Edge] = ()):
        self._mate: dict[int, int] = {}
        self._mult: dict[Edge, int] = {}
        for e in edges:
            self.add(e)

    def __contains__(self, edge: object) -> bool:
        return edge in self._mult

    def __len__(self) -> int:
        return len(self._mult)

    def __iter__(self) -> Iterator[Edge]:
        return iter(self._mult)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Matching):
            return NotImplemented
        return self._mult == other._mult

    def __repr__(self) -> str:
        return f"Matching({sorted(self._mult)})"

    def mate(self, v: int) -> int | None:
        return self._mate.get(v)

    def is_free(self, v: int) -> bool:
        return v not in self._mate

    def vertices(self) -> set[int]:
        return set(self._mate)

    def multiplicity(self, edge: Edge) -> int:
        return self._mult.get(edge, 0)

    def admits(self, edge: Edge) -> bool:
        u, v = edge
        return edge in self._mult or (u not in self._mate and v not in self._mate)

    def add(self, edge: Edge) -> None:
        if edge in self._mult:
            self._mult[edge] += 1
            return
        u, v = edge
        if u in self._mate or v in self._mate:
            raise ValueError(f"{edge} conflicts with the matching")
        self._mate[u] = v
        self._mate[v] = u
        self._mult[edge] = 1

    def remove(self, edge: Edge) -> None:
        """Drop every copy of ``edge``."""
        del self._mult[edge]
        del self._mate[edge[0]]
        del self._mate[edge[1]]

    def drop_copy(self, edge: Edge) -> None:
        if self._mult[edge] > 1:
            self._mult[edge] -= 1
        else:
            self.remove(edge)

    def newest(self) -> Edge:
        return next(reversed(self._mult))

    def edges(self) -> list[Edge]:
        return sorted(self._mult)

    def copy(self) -> "Matching":
        out = Matching()
        out._mate = dict(self._mate)
        out._mult = dict(self._mult)
        return out

    def check(self) -> None:
        seen: set[int] = set()
        for (u, v), k in self._mult.items():
            assert u < v and k >= 1, (u, v, k)
            assert u not in seen and v not in seen, f"vertex reused by {(u, v)}"
            assert self._mate.get(u) == v and self._mate.get(v) == u
            seen.update((u, v))
        assert len(seen) == len(self._mate)


class HierarchicalMatching:
    def __init__(self, levels: int | None = None, budget: int | None = None):
        if (levels is None) == (budget is None):
            raise ValueError("give exactly one of levels or budget")
        if levels is not None and levels < 1:
            raise ValueError("need at least one level")
        if budget is not None and budget < 1:
            raise ValueError("budget must be positive")
        self.max_levels = levels
        self.budget = budget
        self.levels: list[Matching] = [Matching() for _ in range(levels or 1)]
        self.discarded = 0
        # level indices that lost an edge to the budget, in order
        self.evictions: list[int] = []
        self.stored = 0
        self.peak_stored = 0

    @property
    def budgeted(self) -> bool:
        return self.budget is not None

    def __len__(self) -> int:
        return len(self.levels)

    def insert(self, edge: Edge) -> int | None:
        """Place one insertion; returns the level index used (``None`` if dropped)."""
        idx = self._insert_budgeted(edge) if self.budgeted else self._insert_fixed(edge)
        self.peak_stored = max(self.peak_stored, self.stored)
        return idx

    def _insert_fixed(self, edge: Edge) -> int | None:
        for idx, level in enumerate(self.levels):
            if level.admits(edge):
                self._place(level, edge)
                return idx
        self.discarded += 1
        return None

    def _insert_budgeted(self, edge: Edge) -> int | None:
        for idx, level in enumerate(self.levels):
            if level.admits(edge):
                break
        else:
            self.levels.append(Matching())
            idx = len(self.levels) - 1
        self._place(self.levels[idx], edge)
        if self.stored == self.budget + 1:
            top = self.levels[-1]
            top.remove(top.newest())
            self.stored -= 1
            self.discarded += 1
            self.evictions.append(len(self.levels) - 1)
            if not top and len(self.levels) > 1:
                self.levels.pop()
            if idx >= len(self.levels) or edge not in self.levels[idx]:
                return None
        return idx

    def _place(self, level: Matching, edge: Edge) -> None:
        if edge not in level:
            self.stored += 1
        level.add(edge)

    def nonempty_levels(self) -> int:
        return sum(1 for level in self.levels if level)

    def apply_deletions(self, deletions: Iterable[Edge]) -> list[Matching]:
        return apply_deletions(self.levels, deletions)

    def check(self) -> None:
        for level in self.levels:
            level.check()
        assert self.stored == sum(len(level) for level in self.levels)
        if self.max_levels is not None:
            assert len(self.levels) == self.max_levels
        if self.budget is not None:
            assert self.stored <= self.budget


def apply_deletions(levels: list[Matching], deletions: Iterable[Edge]) -> list[Matching]:
    """Copies of ``levels`` with each deletion removing one copy from the lowest
    level that still holds the edge, in arrival order. Unknown edges are ignored."""
    primed = [level.copy() for level in levels]
    for edge in deletions:
        for level in primed:
            if edge in level:
                level.drop_copy(edge)
                break
    return primed


def extend_downward(matching: Matching, sources: Iterable[Iterable[Edge]]) -> Matching:
    """Greedily add edges from ``sources`` (in order, each in canonical order)."""
    out = Matching(matching.edges())
    for source in sources:
        for edge in sorted(source):
            if out.is_free(edge[0]) and out.is_free(edge[1]):
                out.add(edge)
    return out


def dump_matching(matching: Iterable[Edge]) -> str:
    """Sorted ``u v`` lines."""
    return "".join(f"{u} {v}\n" for u, v in sorted(matching))


def load_matching(text: str) -> Matching:
    return Matching(tuple(sorted(map(int, line.split()))) for line in text.splitlines() if line.strip())


def write_levels(levels: list[Matching], directory: str | Path) -> list[Path]:
    """One file per level, ``level_1.txt`` holding ``M_1``."""
    folder = Path(directory)
    folder.mkdir(parents=True, exist_ok=True)
    paths = []
    for idx, level in enumerate(levels, 1):
        path = folder / f"level_{idx}.txt"
        path.write_text(dump_matching(level))
        paths.append(path)
    return paths
