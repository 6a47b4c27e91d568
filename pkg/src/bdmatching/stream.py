"""Bounded-deletion edge streams: model, validation, replay, generators, file IO.

A stream over vertices ``0..n-1`` is an ordered sequence of edge insertions and
at most ``K`` edge deletions. Every prefix must describe a simple graph, so an
edge may only be inserted while absent and deleted while present. An edge can
be inserted, deleted and inserted again; the insertion and deletion substreams
are therefore multisets.

Randomness comes exclusively from numpy's ``PCG64`` bit generator seeded with
the configured integer seed, so generated fixtures are identical across
platforms.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

import numpy as np

Edge = tuple[int, int]

INSERT = "+"
DELETE = "-"


def ceil_sqrt(k: int) -> int:
    return math.isqrt(k - 1) + 1 if k > 0 else 0


def canonical(u: int, v: int) -> Edge:
    """Return the edge ``{u, v}`` with its smaller endpoint first."""
    if u == v:
        raise ValueError(f"self-loop on vertex {u}")
    return (u, v) if u < v else (v, u)


class EdgeEvent(NamedTuple):
    seq: int
    kind: str
    edge: Edge

    @property
    def is_insert(self) -> bool:
        return self.kind == INSERT


@dataclass(frozen=True)
class StreamSpec:
    n: int
    K: int
    events: tuple[EdgeEvent, ...] = ()

    @classmethod
    def from_ops(cls, n: int, K: int, ops: Iterable[tuple[str, int, int]]) -> "StreamSpec":
        """Build a stream from ``(kind, u, v)`` triples, numbering events from 1."""
        events = tuple(
            EdgeEvent(i, kind, canonical(u, v)) for i, (kind, u, v) in enumerate(ops, start=1)
        )
        return cls(n, K, events)

    @property
    def num_deletions(self) -> int:
        return sum(1 for ev in self.events if ev.kind == DELETE)

    def stream(self) -> "OnePass":
        return OnePass(self.events)


class OnePass:
    """Iterator over a stream that refuses to be traversed a second time."""

    def __init__(self, events: Iterable[EdgeEvent]):
        self._events = events
        self._used = False

    def __iter__(self) -> Iterator[EdgeEvent]:
        if self._used:
            raise RuntimeError("stream already consumed; algorithms get a single pass")
        self._used = True
        return iter(self._events)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    seq: int | None = None
    reason: str | None = None
    edges: frozenset[Edge] = field(default_factory=frozenset)

    def __bool__(self) -> bool:
        return self.ok


class InvalidStream(ValueError):
    pass


def validate_stream(spec: StreamSpec) -> ValidationReport:
    """Replay ``spec`` and report the first violation of the stream model.

    Checked per event: vertex range, canonical form, strictly increasing
    sequence numbers, no duplicate insertion, no deletion of an absent edge,
    and the deletion budget ``K``. On success the final edge set is attached.
    """
    present: set[Edge] = set()
    deletions = 0
    last_seq = None
    for ev in spec.events:
        u, v = ev.edge
        if last_seq is not None and ev.seq <= last_seq:
            return ValidationReport(False, ev.seq, "sequence numbers not increasing")
        last_seq = ev.seq
        if not (0 <= u < v < spec.n):
            return ValidationReport(False, ev.seq, f"edge {ev.edge} not canonical over [0, {spec.n})")
        if ev.kind == INSERT:
            if ev.edge in present:
                return ValidationReport(False, ev.seq, f"duplicate insert of {ev.edge}")
            present.add(ev.edge)
        elif ev.kind == DELETE:
            if ev.edge not in present:
                return ValidationReport(False, ev.seq, f"delete of absent edge {ev.edge}")
            deletions += 1
            if deletions > spec.K:
                return ValidationReport(False, ev.seq, f"deletion budget K={spec.K} exceeded")
            present.remove(ev.edge)
        else:
            return ValidationReport(False, ev.seq, f"unknown event kind {ev.kind!r}")
    return ValidationReport(True, edges=frozenset(present))


def final_graph(spec: StreamSpec) -> dict[int, set[int]]:
    """Adjacency sets of the graph left after applying every event of ``spec``."""
    report = validate_stream(spec)
    if not report:
        raise InvalidStream(f"seq {report.seq}: {report.reason}")
    return adjacency(spec.n, report.edges)


def adjacency(n: int, edges: Iterable[Edge]) -> dict[int, set[int]]:
    adj: dict[int, set[int]] = {v: set() for v in range(n)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    return adj


def edge_set(adj: dict[int, set[int]]) -> set[Edge]:
    return {(u, v) for u, nbrs in adj.items() for v in nbrs if u < v}


# ---------------------------------------------------------------------------
# text format


def dumps(spec: StreamSpec) -> str:
    lines = [f"{spec.n} {spec.K}"]
    lines.extend(f"{ev.kind} {ev.edge[0]} {ev.edge[1]}" for ev in spec.events)
    return "\n".join(lines) + "\n"


def loads(text: str) -> StreamSpec:
    rows = [line.split() for line in text.splitlines() if line.strip()]
    if not rows or len(rows[0]) != 2:
        raise InvalidStream("missing 'n K' header")
    n, K = int(rows[0][0]), int(rows[0][1])
    ops = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3 or row[0] not in (INSERT, DELETE):
            raise InvalidStream(f"line {lineno}: expected '+ u v' or '- u v'")
        ops.append((row[0], int(row[1]), int(row[2])))
    return StreamSpec.from_ops(n, K, ops)


def write_stream(spec: StreamSpec, path: str | Path) -> None:
    Path(path).write_bytes(dumps(spec).encode("ascii"))


def read_stream(path: str | Path) -> StreamSpec:
    return loads(Path(path).read_text(encoding="ascii"))


# ---------------------------------------------------------------------------
# generators

ERDOS_RENYI = "erdos_renyi"
MATCHING_KILLER = "matching_killer"
BLOCK_BIPARTITE = "block_bipartite"
GENERATOR_KINDS = (ERDOS_RENYI, MATCHING_KILLER, BLOCK_BIPARTITE)


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters for :func:`generate`.

    ``n`` is ignored for ``block_bipartite``, where the vertex count is
    ``blocks * block_size``. ``reinsert`` is the probability that an
    erdos_renyi deletion is followed later by a re-insertion of the same edge.
    """

    kind: str
    n: int = 0
    K: int = 0
    p: float = 0.5
    seed: int = 0
    blocks: int = 2
    block_size: int = 10
    reinsert: float = 0.0


def make_rng(seed: int, *stream_ids: int) -> np.random.Generator:
    """PCG64 generator keyed by ``seed`` and optional sub-stream ids."""
    return np.random.Generator(np.random.PCG64([seed & (2**64 - 1), *stream_ids]))


def generate(config: GeneratorConfig) -> StreamSpec:
    if config.kind not in GENERATOR_KINDS:
        raise ValueError(f"unknown generator kind {config.kind!r}")
    if config.K < 0 or not (0.0 <= config.p <= 1.0):
        raise ValueError("need K >= 0 and 0 <= p <= 1")
    rng = make_rng(config.seed, GENERATOR_KINDS.index(config.kind))
    if config.kind == ERDOS_RENYI:
        spec = _erdos_renyi(config, rng)
    elif config.kind == MATCHING_KILLER:
        spec = _matching_killer(config, rng)
    else:
        spec = _block_bipartite(config, rng)
    report = validate_stream(spec)
    assert report, report.reason
    return spec


def _random_edges(n: int, p: float, rng: np.random.Generator) -> list[Edge]:
    if n < 2:
        return []
    us, vs = np.triu_indices(n, k=1)
    keep = rng.random(us.size) < p
    order = rng.permutation(int(keep.sum()))
    us, vs = us[keep][order], vs[keep][order]
    return list(zip(us.tolist(), vs.tolist()))


def _erdos_renyi(config: GeneratorConfig, rng: np.random.Generator) -> StreamSpec:
    inserted = _random_edges(config.n, config.p, rng)
    if config.K > len(inserted):
        raise ValueError(f"K={config.K} exceeds the {len(inserted)} insertable edges")
    m = len(inserted)
    # (time, tiebreak, kind, edge); deletions land after their insertion
    timeline = [(float(t), 0, INSERT, e) for t, e in enumerate(inserted)]
    victims = rng.choice(m, size=config.K, replace=False) if config.K else []
    for idx in victims:
        idx = int(idx)
        t_del = rng.uniform(idx, m)
        timeline.append((t_del, 1, DELETE, inserted[idx]))
        if rng.random() < config.reinsert:
            timeline.append((rng.uniform(t_del, m + 1), 2, INSERT, inserted[idx]))
    timeline.sort(key=lambda item: (item[0], item[1]))
    return StreamSpec.from_ops(config.n, config.K, [(k, *e) for _, _, k, e in timeline])


def greedy_levels(edges: Iterable[Edge], levels: int) -> list[list[Edge]]:
    """Hierarchical greedy placement used by the generators (no multiplicities)."""
    mates: list[set[int]] = [set() for _ in range(levels)]
    placed: list[list[Edge]] = [[] for _ in range(levels)]
    for u, v in edges:
        for busy, out in zip(mates, placed):
            if u not in busy and v not in busy:
                busy.update((u, v))
                out.append((u, v))
                break
    return placed


def _matching_killer(config: GeneratorConfig, rng: np.random.Generator) -> StreamSpec:
    """Insert a random graph, then delete edges the hierarchical greedy matched.

    Victims are drawn round-robin over the ``ceil(sqrt(K))`` greedy levels so
    that every level loses about ``sqrt(K)`` edges, which forces the repair
    phase to work on the least damaged level. All deletions come last.
    """
    inserted = _random_edges(config.n, config.p, rng)
    if config.K > len(inserted):
        raise ValueError(f"K={config.K} exceeds the {len(inserted)} insertable edges")
    levels = greedy_levels(inserted, max(1, ceil_sqrt(config.K)))
    pools = [list(rng.permutation(len(lvl))) for lvl in levels]
    victims: list[Edge] = []
    while len(victims) < config.K and any(pools):
        for lvl, pool in zip(levels, pools):
            if pool and len(victims) < config.K:
                victims.append(lvl[int(pool.pop())])
    if len(victims) < config.K:
        chosen = set(victims)
        rest = [e for e in inserted if e not in chosen]
        extra = rng.choice(len(rest), size=config.K - len(victims), replace=False)
        victims.extend(rest[int(i)] for i in extra)
    victims = [victims[int(i)] for i in rng.permutation(len(victims))]
    ops = [(INSERT, *e) for e in inserted] + [(DELETE, *e) for e in victims]
    return StreamSpec.from_ops(config.n, config.K, ops)


def _block_bipartite(config: GeneratorConfig, rng: np.random.Generator) -> StreamSpec:
    """Disjoint union of random bipartite blocks; deletions hit one block.

    Each block has ``block_size // 2`` vertices per side and every cross pair
    is an edge with probability ``p``. The damaged block keeps a random
    perfect pairing and loses up to ``K`` of its other edges at the end.
    """
    if config.blocks < 1 or config.block_size < 2 or config.block_size % 2:
        raise ValueError("need blocks >= 1 and an even block_size >= 2")
    half = config.block_size // 2
    n = config.blocks * config.block_size
    per_block: list[list[Edge]] = []
    for b in range(config.blocks):
        base = b * config.block_size
        mask = rng.random((half, half)) < config.p
        a_idx, b_idx = np.nonzero(mask)
        per_block.append([(base + int(a), base + half + int(c)) for a, c in zip(a_idx, b_idx)])
    inserted = [e for blk in per_block for e in blk]
    inserted = [inserted[int(i)] for i in rng.permutation(len(inserted))]

    target = int(rng.integers(config.blocks))
    base = target * config.block_size
    pairing = rng.permutation(half)
    kept = {(base + a, base + half + int(pairing[a])) for a in range(half)}
    candidates = [e for e in per_block[target] if e not in kept]
    count = min(config.K, len(candidates))
    victims = [candidates[int(i)] for i in rng.choice(len(candidates), size=count, replace=False)] if count else []
    ops = [(INSERT, *e) for e in inserted] + [(DELETE, *e) for e in victims]
    return StreamSpec.from_ops(n, config.K, ops)


def replay_degrees(spec: StreamSpec) -> dict[int, int]:
    """Net degree of every vertex after the whole stream (insertions minus deletions)."""
    deg: dict[int, int] = defaultdict(int)
    for ev in spec.events:
        step = 1 if ev.kind == INSERT else -1
        deg[ev.edge[0]] += step
        deg[ev.edge[1]] += step
    return {v: deg.get(v, 0) for v in range(spec.n)}
