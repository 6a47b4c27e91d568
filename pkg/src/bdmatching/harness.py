"""Experiment plans, per-trial metrics and CSV sweeps.

Plans and generator configs are flat ``key = value`` files. Blank lines and
``#`` comments are ignored. Grid keys accept comma-separated lists and the sweep
runs their cartesian product.

Plan keys (defaults in brackets)::

    algo        rand | det | budget, comma list           [rand]
    kind        generator kind                            [matching_killer]
    n, K        grid                                      [required]
    p           edge probability grid                     [0.5]
    epsilon     grid, budgeted only                       [0.5]
    C, C_prime  grid, randomized only                     [4, 2]
    delta       grid, randomized only                     [1/n^4]
    blocks, block_size   block_bipartite layout           [2, 10]
    trials      trials per cell                           [1]
    seed_base   trial t uses seed seed_base + t           [0]
    verify      compute verdicts and the ratio            [true]
    workers     parallel processes                        [1]
    out         CSV path                                  [sweep.csv]

CSV columns are :data:`CSV_COLUMNS`, one row per (cell, trial).
"""

from __future__ import annotations

import csv
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable

import numpy as np

from .drivers import ALGORITHMS, BUDGETED, DETERMINISTIC, RANDOMIZED, RunResult, run_budgeted, run_deterministic, run_randomized
from .oracle import check_maximal, max_matching
from .repair import CASES, AlgorithmConfig
from .stream import GENERATOR_KINDS, GeneratorConfig, StreamSpec, final_graph, generate


def parse_flat(text: str) -> dict[str, str]:
    """``key = value`` lines into a dict; later keys win."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"line {lineno}: expected key = value")
        out[key.strip()] = value.strip()
    return out


def read_flat(path: str | Path) -> dict[str, str]:
    return parse_flat(Path(path).read_text())


def _bool(value: str) -> bool:
    low = value.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def generator_config(values: dict[str, str]) -> GeneratorConfig:
    known = {f.name: f.type for f in fields(GeneratorConfig)}
    unknown = set(values) - set(known) - {"count", "out"}
    if unknown:
        raise ValueError(f"unknown generator keys: {sorted(unknown)}")
    if "kind" not in values:
        raise ValueError("generator config needs 'kind'")
    kw: dict = {}
    for key, value in values.items():
        if key in ("count", "out"):
            continue
        kw[key] = value if key == "kind" else (float(value) if known[key] == "float" else int(value))
    cfg = GeneratorConfig(**kw)
    if cfg.kind not in GENERATOR_KINDS:
        raise ValueError(f"unknown generator kind {cfg.kind!r}")
    return cfg


@dataclass
class RunMetrics:
    algo: str
    kind: str
    n: int
    K: int
    p: float
    epsilon: float | None
    C: float | None
    C_prime: float | None
    delta: float | None
    trial: int
    seed: int
    stored_edges: int = 0
    stored_deletions: int = 0
    sampler_count: int = 0
    estimated_bits: int = 0
    matching_size: int = 0
    is_maximal: bool | None = None
    max_matching_size: int | None = None
    ratio: float | None = None
    full_neighborhood: int = 0
    matched_free: int = 0
    swapped: int = 0
    exhausted: int = 0
    wall_time: float = 0.0
    error: str = ""


CSV_COLUMNS = [f.name for f in fields(RunMetrics)]
_CASE_COLUMNS = dict(zip(CASES, ("full_neighborhood", "matched_free", "swapped", "exhausted")))


@dataclass(frozen=True)
class Trial:
    algo: str
    gen: GeneratorConfig
    trial: int
    epsilon: float = 0.5
    C: float = 4.0
    C_prime: float = 2.0
    delta: float | None = None
    verify: bool = True


def run_algorithm(algo: str, spec: StreamSpec, seed: int = 0, epsilon: float = 0.5, **cfg_kw) -> RunResult:
    if algo == RANDOMIZED:
        return run_randomized(spec, AlgorithmConfig(spec.n, spec.K, seed=seed, **cfg_kw))
    if algo == DETERMINISTIC:
        return run_deterministic(spec, AlgorithmConfig(spec.n, spec.K, seed=seed))
    if algo == BUDGETED:
        return run_budgeted(spec, epsilon, seed=seed)
    raise ValueError(f"unknown algorithm {algo!r}")


def measure(result: RunResult, spec: StreamSpec | None, metrics: RunMetrics) -> RunMetrics:
    m = result.metrics
    metrics.stored_edges = m["stored_edges"]
    metrics.stored_deletions = m["stored_deletions"]
    metrics.sampler_count = m["sampler_count"]
    metrics.estimated_bits = m["estimated_bits"]
    metrics.matching_size = len(result.matching)
    for case, column in _CASE_COLUMNS.items():
        setattr(metrics, column, m.get("chain_cases", {}).get(case, 0))
    if spec is not None:
        graph = final_graph(spec)
        verdict = check_maximal(graph, result.matching)
        metrics.is_maximal = verdict.is_maximal
        metrics.max_matching_size = len(max_matching(graph))
        if metrics.matching_size:
            metrics.ratio = metrics.max_matching_size / metrics.matching_size
        elif metrics.max_matching_size == 0:
            metrics.ratio = 1.0
    return metrics


def run_trial(t: Trial) -> RunMetrics:
    seed = t.gen.seed
    metrics = RunMetrics(
        algo=t.algo,
        kind=t.gen.kind,
        n=t.gen.n,
        K=t.gen.K,
        p=t.gen.p,
        epsilon=t.epsilon if t.algo == BUDGETED else None,
        C=t.C if t.algo == RANDOMIZED else None,
        C_prime=t.C_prime if t.algo == RANDOMIZED else None,
        delta=t.delta if t.algo == RANDOMIZED else None,
        trial=t.trial,
        seed=seed,
    )
    started = time.perf_counter()
    try:
        spec = generate(t.gen)
        metrics.n = spec.n
        kw = dict(C=t.C, C_prime=t.C_prime, delta=t.delta) if t.algo == RANDOMIZED else {}
        result = run_algorithm(t.algo, spec, seed=seed, epsilon=t.epsilon, **kw)
        measure(result, spec if t.verify else None, metrics)
    except Exception as exc:  # a failed trial becomes a row, the sweep goes on
        metrics.error = f"{type(exc).__name__}: {exc}"
    metrics.wall_time = time.perf_counter() - started
    return metrics


def _floats(value: str) -> list[float]:
    return [float(x) for x in value.split(",") if x.strip()]


def _ints(value: str) -> list[int]:
    return [int(x) for x in value.split(",") if x.strip()]


@dataclass
class ExperimentPlan:
    algos: list[str]
    n: list[int]
    K: list[int]
    kind: str = "matching_killer"
    p: list[float] = field(default_factory=lambda: [0.5])
    epsilon: list[float] = field(default_factory=lambda: [0.5])
    C: list[float] = field(default_factory=lambda: [4.0])
    C_prime: list[float] = field(default_factory=lambda: [2.0])
    delta: list[float | None] = field(default_factory=lambda: [None])
    blocks: int = 2
    block_size: int = 10
    trials: int = 1
    seed_base: int = 0
    verify: bool = True
    workers: int = 1
    out: str = "sweep.csv"

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not (self.algos and self.n and self.K):
            raise ValueError("grid must be nonempty")
        bad = set(self.algos) - set(ALGORITHMS)
        if bad:
            raise ValueError(f"unknown algorithms {sorted(bad)}")
        if self.kind not in GENERATOR_KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")

    @classmethod
    def from_values(cls, values: dict[str, str]) -> "ExperimentPlan":
        kw: dict = {}
        for key, value in values.items():
            if key == "algo":
                kw["algos"] = [a.strip() for a in value.split(",") if a.strip()]
            elif key in ("n", "K"):
                kw[key] = _ints(value)
            elif key in ("p", "epsilon", "C", "C_prime", "delta"):
                kw[key] = _floats(value)
            elif key in ("blocks", "block_size", "trials", "seed_base", "workers"):
                kw[key] = int(value)
            elif key == "verify":
                kw[key] = _bool(value)
            elif key in ("kind", "out"):
                kw[key] = value
            else:
                raise ValueError(f"unknown plan key {key!r}")
        kw.setdefault("algos", [RANDOMIZED])
        for required in ("n", "K"):
            if required not in kw:
                raise ValueError(f"plan needs {required!r}")
        return cls(**kw)

    @classmethod
    def read(cls, path: str | Path) -> "ExperimentPlan":
        return cls.from_values(read_flat(path))

    def trials_iter(self) -> Iterable[Trial]:
        for algo, n, K, p in itertools.product(self.algos, self.n, self.K, self.p):
            eps_grid = self.epsilon if algo == BUDGETED else [self.epsilon[0]]
            rand_grid = (
                itertools.product(self.C, self.C_prime, self.delta)
                if algo == RANDOMIZED
                else [(self.C[0], self.C_prime[0], self.delta[0])]
            )
            for eps, (C, C_prime, delta) in itertools.product(eps_grid, list(rand_grid)):
                for t in range(self.trials):
                    gen = GeneratorConfig(
                        kind=self.kind, n=n, K=K, p=p, seed=self.seed_base + t,
                        blocks=self.blocks, block_size=self.block_size,
                    )
                    yield Trial(algo, gen, t, eps, C, C_prime, delta, self.verify)


def sweep(plan: ExperimentPlan, out: str | Path | None = None) -> list[RunMetrics]:
    trials = list(plan.trials_iter())
    if plan.workers > 1:
        with ProcessPoolExecutor(plan.workers) as pool:
            rows = list(pool.map(run_trial, trials))
    else:
        rows = [run_trial(t) for t in trials]
    write_csv(rows, out or plan.out)
    return rows


def write_csv(rows: Iterable[RunMetrics], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if v is None else v) for k, v in asdict(row).items()})


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def loglog_slope(xs: Iterable[float], ys: Iterable[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.log(np.asarray(list(xs), dtype=float))
    y = np.log(np.asarray(list(ys), dtype=float))
    if len(x) < 2:
        raise ValueError("need at least two points")
    return float(np.polyfit(x, y, 1)[0])


def mean_by(rows: Iterable[RunMetrics], key: str, value: str) -> dict[float, float]:
    groups: dict[float, list[float]] = {}
    for row in rows:
        groups.setdefault(getattr(row, key), []).append(float(getattr(row, value)))
    return {k: math.fsum(v) / len(v) for k, v in sorted(groups.items())}
