"""Single-pass drivers for the three bounded-deletion matching algorithms.

* :func:`run_randomized` keeps ``ceil(sqrt(K))`` hierarchical levels plus the
  sampler-based repair structure and outputs a maximal matching w.h.p.
* :func:`run_deterministic` keeps ``K + 1`` levels; some level is untouched by
  deletions and extends downward to a maximal matching.
* :func:`run_budgeted` caps the hierarchy at ``B = n + ceil(K / eps)`` edges and
  returns a (2 + eps)-approximate maximum matching.

Each driver reads its events through one iteration of the given stream.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable

from .hierarchy import HierarchicalMatching, Matching, apply_deletions, extend_downward
from .oracle import max_matching
from .repair import (
    AlgorithmConfig,
    ChainStep,
    RepairStructure,
    estimate_space,
    repair,
    select_level,
)
from .stream import Edge, EdgeEvent, InvalidStream, StreamSpec, adjacency, ceil_sqrt, validate_stream

RANDOMIZED = "rand"
DETERMINISTIC = "det"
BUDGETED = "budget"
ALGORITHMS = (RANDOMIZED, DETERMINISTIC, BUDGETED)


@dataclass
class RunResult:
    algorithm: str
    n: int
    matching: list[Edge]
    metrics: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    trace: list[ChainStep] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "n": self.n,
            "seed": self.config.get("seed"),
            "matching": [list(e) for e in self.matching],
            "metrics": self.metrics,
            "config": self.config,
            "trace": [step.to_json() for step in self.trace],
        }


def _checked(spec: StreamSpec) -> StreamSpec:
    report = validate_stream(spec)
    if not report:
        raise InvalidStream(f"seq {report.seq}: {report.reason}")
    return spec


def _config_echo(cfg: AlgorithmConfig | None, **extra) -> dict:
    out = asdict(cfg) if cfg is not None else {}
    out.update(extra)
    return out


def deletion_free_fallback(levels: list[Matching], primed: list[Matching]) -> Matching:
    """Lowest level that lost no edge, extended by the surviving lower levels."""
    for idx, (full, kept) in enumerate(zip(levels, primed)):
        if all(e in kept for e in full):
            return extend_downward(kept, primed[:idx])
    raise AssertionError("every level lost an edge; more deletions than levels")


def reconstruct_if_small(h: HierarchicalMatching, deletions: Iterable[Edge]) -> set[Edge] | None:
    """The exact final edge set when the hierarchy never dropped an insertion."""
    if h.discarded:
        return None
    return {e for level in apply_deletions(h.levels, deletions) for e in level}


def _ingest(events: Iterable[EdgeEvent], h: HierarchicalMatching, rs: RepairStructure | None = None) -> list[Edge]:
    deletions: list[Edge] = []
    for ev in events:
        if ev.is_insert:
            h.insert(ev.edge)
        else:
            deletions.append(ev.edge)
        if rs is not None:
            rs.ingest(ev)
    return deletions


def run_randomized(spec: StreamSpec, cfg: AlgorithmConfig | None = None) -> RunResult:
    _checked(spec)
    cfg = cfg or AlgorithmConfig(spec.n, spec.K)
    if (cfg.n, cfg.K) != (spec.n, spec.K):
        cfg = replace(cfg, n=spec.n, K=spec.K)
    return run_randomized_events(spec.n, spec.K, spec.stream(), cfg)


def run_randomized_events(n: int, K: int, events: Iterable[EdgeEvent], cfg: AlgorithmConfig) -> RunResult:
    started = time.perf_counter()
    fallback = K <= 1
    h = HierarchicalMatching(levels=K + 1 if fallback else ceil_sqrt(K))
    rs = None if fallback else RepairStructure(cfg)
    deletions = _ingest(events, h, rs)
    primed = h.apply_deletions(deletions)
    trace: list[ChainStep] = []
    counts = {}
    if fallback:
        out = deletion_free_fallback(h.levels, primed)
        chosen = None
    else:
        chosen = select_level(h.levels, primed, K)
        outcome = repair(rs, h.levels[chosen], primed[chosen], primed[:chosen])
        out, trace, counts = outcome.matching, outcome.trace, outcome.case_counts()
    metrics = estimate_space(cfg, h.peak_stored, len(deletions))
    metrics.update(
        matching_size=len(out),
        hierarchy_levels=len(h),
        selected_level=chosen,
        chain_cases=counts,
        exhausted=counts.get("Exhausted", 0),
        wall_time=time.perf_counter() - started,
    )
    return RunResult(RANDOMIZED, n, out.edges(), metrics, _config_echo(cfg), trace)


def run_deterministic(spec: StreamSpec, cfg: AlgorithmConfig | None = None) -> RunResult:
    _checked(spec)
    return run_deterministic_events(spec.n, spec.K, spec.stream(), seed=cfg.seed if cfg else None)


def run_deterministic_events(n: int, K: int, events: Iterable[EdgeEvent], seed: int | None = None) -> RunResult:
    started = time.perf_counter()
    h = HierarchicalMatching(levels=K + 1)
    deletions = _ingest(events, h)
    primed = h.apply_deletions(deletions)
    if h.nonempty_levels() == len(h):
        out = deletion_free_fallback(h.levels, primed)
        route = "deletion_free_level"
    else:
        graph = reconstruct_if_small(h, deletions)
        assert graph is not None, "a level stayed empty yet an insertion was dropped"
        out = extend_downward(Matching(), [graph])
        route = "full_graph"
    metrics = {
        "sampler_count": 0,
        "stored_edges": h.peak_stored,
        "stored_deletions": len(deletions),
        "estimated_bits": (h.peak_stored + len(deletions)) * 2 * max(1, math.ceil(math.log2(max(2, n)))),
        "matching_size": len(out),
        "hierarchy_levels": len(h),
        "route": route,
        "wall_time": time.perf_counter() - started,
    }
    return RunResult(DETERMINISTIC, n, out.edges(), metrics, {"n": n, "K": K, "seed": seed})


def budget_for(n: int, K: int, epsilon: float) -> int:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return n + math.ceil(K / epsilon)


def run_budgeted(spec: StreamSpec, epsilon: float, route: str = "maximum", seed: int | None = None) -> RunResult:
    _checked(spec)
    return run_budgeted_events(spec.n, spec.K, spec.stream(), epsilon, route, seed)


def run_budgeted_events(
    n: int,
    K: int,
    events: Iterable[EdgeEvent],
    epsilon: float,
    route: str = "maximum",
    seed: int | None = None,
) -> RunResult:
    """Budgeted hierarchy, then a matching among the surviving stored edges.

    ``route="maximum"`` returns a maximum matching of the union of surviving
    levels. ``route="downward"`` picks the lowest complete level that lost at
    most an ``epsilon`` fraction, extends it downward while still ignoring its
    own deletions, and finally drops those deleted edges.
    """
    if route not in ("maximum", "downward"):
        raise ValueError(f"unknown route {route!r}")
    started = time.perf_counter()
    budget = budget_for(n, K, epsilon)
    h = HierarchicalMatching(budget=budget)
    deletions = _ingest(events, h)
    primed = h.apply_deletions(deletions)
    survivors = {e for level in primed for e in level}
    used = "maximum"
    if route == "downward" and h.discarded:
        out = _downward_route(h.levels, primed, epsilon)
        if out is not None:
            used = "downward"
    if used == "maximum":
        greedy = extend_downward(Matching(), primed)
        out = Matching(max_matching(adjacency(n, survivors), initial=greedy.edges()))
    metrics = {
        "sampler_count": 0,
        "budget": budget,
        "stored_edges": h.peak_stored,
        "final_stored_edges": h.stored,
        "stored_deletions": len(deletions),
        "estimated_bits": (h.peak_stored + len(deletions)) * 2 * max(1, math.ceil(math.log2(max(2, n)))),
        "matching_size": len(out),
        "hierarchy_levels": len(h),
        "evictions": h.discarded,
        "route": used,
        "wall_time": time.perf_counter() - started,
    }
    config = {"n": n, "K": K, "epsilon": epsilon, "seed": seed}
    return RunResult(BUDGETED, n, out.edges(), metrics, config)


def _downward_route(levels: list[Matching], primed: list[Matching], epsilon: float) -> Matching | None:
    for j in range(len(levels) - 1):
        lost = [e for e in levels[j] if e not in primed[j]]
        if len(lost) <= epsilon * len(levels[j]):
            extended = extend_downward(levels[j], primed[:j])
            for e in lost:
                extended.remove(e)
            return extended
    return None
