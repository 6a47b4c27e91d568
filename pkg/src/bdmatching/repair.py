"""Matching repair: vertex levels, per-vertex sampler banks and repair chains.

Vertex level ``V_0`` is the whole vertex set; ``V_1..V_R`` are independent
random subsets of size ``C * n / log2(n)**i``. Every ``v`` in ``V_i`` owns a
bank of ``slots * slot_size(i)`` l0-samplers fed with the edges incident on
``v``, split into ``slots = 2 * ceil(sqrt(K))`` contiguous slots. Repair chain
``j`` only ever opens slot ``j`` of a bank.

After the stream, :func:`repair` takes the least damaged hierarchical level and
rematches the endpoints of its deleted edges. A chain starting at ``u`` on
level ``i = 0`` recovers edges from ``u``'s slot and then either

* knows all of ``u``'s edges (``FULL``; ``u`` is handled by the final greedy pass),
* matches ``u`` to a free neighbour (``FREE``),
* steals a matched neighbour ``v`` whose mate ``u'`` lies in ``V_{i+1}`` and
  continues from ``u'`` on level ``i + 1`` (``SWAP``), or
* finds none of these (``EXHAUSTED``; a sampler-failure outcome).

Log base 2 is used throughout. ``R`` is rounded up so that
``log(n)**(R+2) / C' >= n``, and slot sizes are capped at ``4 n log n``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

from .hierarchy import Matching, extend_downward
from .sketch import INDEPENDENCE, LazyBank, SamplerBank, derive_key, level_count, repetitions
from .stream import Edge, EdgeEvent, ceil_sqrt, make_rng

FULL = "FullNeighborhood"
FREE = "MatchedFree"
SWAP = "Swapped"
EXHAUSTED = "Exhausted"
CASES = (FULL, FREE, SWAP, EXHAUSTED)

# bits per stored cell: count and id-sum as 64-bit words, fingerprint 128-bit
CELL_BITS = 64 + 64 + 128


@dataclass(frozen=True)
class AlgorithmConfig:
    n: int
    K: int
    C: float = 4.0
    C_prime: float = 2.0
    delta: float | None = None
    seed: int = 0
    lazy: bool = True
    # optional ceiling on samplers per slot; small values force deep repair chains
    slot_cap: int | None = None

    def __post_init__(self):
        if self.n < 1 or self.K < 0:
            raise ValueError("need n >= 1 and K >= 0")
        if not self.C > self.C_prime >= 1:
            raise ValueError("need C > C' >= 1")
        if self.delta is not None and not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.slot_cap is not None and self.slot_cap < 1:
            raise ValueError("slot_cap must be positive")

    @property
    def sampler_delta(self) -> float:
        if self.delta is not None:
            return self.delta
        return float(self.n) ** -4 if self.n > 1 else 0.5

    @property
    def log_n(self) -> float:
        return max(1.0, math.log2(self.n)) if self.n > 1 else 1.0

    @property
    def slots(self) -> int:
        # K <= 1 is served by the deterministic K+1 level fallback, no samplers
        return 2 * ceil_sqrt(self.K) if self.K >= 2 else 0

    @property
    def num_levels(self) -> int:
        """``R``: index of the last vertex level."""
        log_n = self.log_n
        loglog = max(1.0, math.log2(log_n))
        raw = (log_n + math.log2(self.C_prime)) / loglog - 2
        return max(1, math.ceil(raw - 1e-9))

    def level_size(self, i: int) -> int:
        if i == 0:
            return self.n
        return min(self.n, max(1, math.ceil(self.C * self.n / self.log_n**i)))

    def slot_size(self, i: int) -> int:
        cap = math.ceil(4 * self.n * self.log_n)
        if self.slot_cap is not None:
            cap = min(cap, self.slot_cap)
        return min(cap, math.ceil(self.log_n ** (i + 3) - 1e-9))

    def bank_size(self, i: int) -> int:
        return self.slots * self.slot_size(i)


class VertexLevels:
    """The sets ``V_0 .. V_R`` drawn from the configuration's seed."""

    def __init__(self, cfg: AlgorithmConfig):
        self.R = cfg.num_levels
        rng = make_rng(cfg.seed, 0x5E7)
        self.sets: list[frozenset[int]] = [frozenset(range(cfg.n))]
        for i in range(1, self.R + 1):
            chosen = rng.choice(cfg.n, size=cfg.level_size(i), replace=False)
            self.sets.append(frozenset(int(v) for v in chosen))

    def __getitem__(self, i: int) -> frozenset[int]:
        return self.sets[i]

    def __len__(self) -> int:
        return len(self.sets)

    def contains(self, i: int, v: int) -> bool:
        return 0 <= i < len(self.sets) and v in self.sets[i]


@dataclass(frozen=True)
class ChainStep:
    chain: int
    vertex: int
    level: int
    case: str
    neighbor: int | None = None
    handoff: int | None = None

    def to_json(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass
class RepairOutcome:
    matching: Matching
    recovered: set[Edge] = field(default_factory=set)
    trace: list[ChainStep] = field(default_factory=list)
    full_neighborhoods: dict[int, set[Edge]] = field(default_factory=dict)

    def case_counts(self) -> dict[str, int]:
        counts = dict.fromkeys(CASES, 0)
        for step in self.trace:
            counts[step.case] += 1
        return counts

    @property
    def exhausted(self) -> bool:
        return any(step.case == EXHAUSTED for step in self.trace)


class RepairStructure:
    """Sampler banks for every ``(i, v)`` with ``v`` in ``V_i``.

    With ``cfg.lazy`` the banks keep each vertex's net incident-edge vector and
    build sampler cells on demand; the answers are identical to fully streamed
    banks (see :class:`~bdmatching.sketch.LazyBank`), which makes desk-scale
    experiments with millions of samplers affordable.
    """

    def __init__(self, cfg: AlgorithmConfig):
        self.cfg = cfg
        self.levels = VertexLevels(cfg)
        self._membership: dict[int, list[int]] = defaultdict(list)
        for i, members in enumerate(self.levels.sets):
            for v in members:
                self._membership[v].append(i)
        self._incidence: dict[int, dict[int, int]] = defaultdict(dict)
        self._banks: dict[tuple[int, int], SamplerBank] = {}

    def _key(self, i: int, v: int) -> int:
        return derive_key(self.cfg.seed, 0xB4, i, v)

    def bank(self, i: int, v: int) -> SamplerBank:
        if not self.levels.contains(i, v):
            raise KeyError(f"vertex {v} is not in level {i}")
        bank = self._banks.get((i, v))
        if bank is None:
            args = (v, self.cfg.n, self.cfg.bank_size(i), self._key(i, v), self.cfg.sampler_delta)
            bank = LazyBank(*args, incidence=self._incidence[v]) if self.cfg.lazy else SamplerBank(*args)
            self._banks[(i, v)] = bank
        return bank

    def ingest(self, event: EdgeEvent) -> None:
        if self.cfg.slots == 0:
            return
        step = 1 if event.is_insert else -1
        for v in event.edge:
            if self.cfg.lazy:
                # all of v's lazy banks share this vector
                self.bank(0, v).update(event.edge, step)
            else:
                for i in self._membership[v]:
                    self.bank(i, v).update(event.edge, step)

    def degree(self, v: int) -> int:
        return self.bank(0, v).degree

    def recover(self, i: int, v: int, slot: int) -> tuple[set[Edge], bool]:
        size = self.cfg.slot_size(i)
        return self.bank(i, v).recover(slot * size, (slot + 1) * size)

    def sampler_count(self) -> int:
        return sampler_count(self.cfg)


def sampler_count(cfg: AlgorithmConfig) -> int:
    """Total samplers allocated: sum over levels of ``|V_i| * slots * slot_size(i)``."""
    if cfg.slots == 0:
        return 0
    return sum(cfg.level_size(i) * cfg.bank_size(i) for i in range(cfg.num_levels + 1))


def cells_per_sampler(cfg: AlgorithmConfig) -> int:
    return repetitions(cfg.sampler_delta) * level_count(cfg.n)


def estimate_space(cfg: AlgorithmConfig, stored_edges: int, stored_deletions: int) -> dict[str, int]:
    """Counted structures and an estimated bit total for one run."""
    samplers = sampler_count(cfg)
    word = max(1, math.ceil(math.log2(max(2, cfg.n))))
    seed_bits = 64 * INDEPENDENCE
    bits = samplers * (cells_per_sampler(cfg) * CELL_BITS + seed_bits)
    bits += (stored_edges + stored_deletions) * 2 * word
    bits += cfg.n * (cfg.num_levels + 1) * 64 if samplers else 0  # degree counters
    return {
        "sampler_count": samplers,
        "stored_edges": stored_edges,
        "stored_deletions": stored_deletions,
        "estimated_bits": bits,
    }


def select_level(levels: list[Matching], primed: list[Matching], K: int) -> int:
    """Index of the lowest level that lost at most ``sqrt(K)`` edges."""
    for idx, (full, kept) in enumerate(zip(levels, primed)):
        lost = sum(1 for e in full if e not in kept)
        if lost * lost <= K:
            return idx
    raise AssertionError("no level lost at most sqrt(K) edges; more than K deletions?")


def damaged_vertices(level: Matching, primed: Matching) -> list[int]:
    return sorted({x for e in level if e not in primed for x in e})


def repair(
    rs: RepairStructure,
    level: Matching,
    primed: Matching,
    lower_primed: list[Matching],
) -> RepairOutcome:
    """Rematch the endpoints of ``level``'s deleted edges, then extend downward."""
    affected = damaged_vertices(level, primed)
    if len(affected) > rs.cfg.slots:
        raise ValueError(f"{len(affected)} damaged vertices but only {rs.cfg.slots} slots")
    matching = primed.copy()
    out = RepairOutcome(matching)
    levels = rs.levels
    for j, start in enumerate(affected):
        if not matching.is_free(start):
            continue
        u = start
        for i in range(levels.R + 1):
            assert levels.contains(i, u), "chain left its vertex level"
            edges, complete = rs.recover(i, u, j)
            out.recovered |= edges
            nbrs = sorted(a if b == u else b for a, b in edges)
            if complete:
                out.full_neighborhoods[u] = edges
                out.trace.append(ChainStep(j, u, i, FULL))
                break
            free = next((v for v in nbrs if matching.is_free(v)), None)
            if free is not None:
                matching.add(_edge(u, free))
                out.trace.append(ChainStep(j, u, i, FREE, free))
                break
            steal = None
            if i < levels.R:
                steal = next((v for v in nbrs if levels.contains(i + 1, matching.mate(v))), None)
            if steal is None:
                out.trace.append(ChainStep(j, u, i, EXHAUSTED))
                break
            mate = matching.mate(steal)
            matching.remove(_edge(mate, steal))
            matching.add(_edge(u, steal))
            out.trace.append(ChainStep(j, u, i, SWAP, steal, mate))
            u = mate
    out.matching = extend_downward(matching, [*lower_primed, out.recovered])
    return out


def _edge(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


def chain_levels_monotone(trace: list[ChainStep], levels: VertexLevels) -> bool:
    """Every swap at level ``i`` hands off to a vertex of ``V_{i+1}`` and the
    chain's next step runs at level ``i + 1`` from that vertex."""
    by_chain: dict[int, list[ChainStep]] = defaultdict(list)
    for step in trace:
        by_chain[step.chain].append(step)
    for steps in by_chain.values():
        for k, step in enumerate(steps):
            if step.level != k:
                return False
            if step.case == SWAP:
                if not levels.contains(step.level + 1, step.handoff):
                    return False
                if k + 1 >= len(steps) or steps[k + 1].vertex != step.handoff:
                    return False
    return True

