"""Maximal matching in graph streams with a bounded number of edge deletions."""

from .drivers import RunResult, run_budgeted, run_deterministic, run_randomized
from .hierarchy import HierarchicalMatching, Matching, apply_deletions, extend_downward
from .oracle import check_maximal, max_matching
from .repair import AlgorithmConfig
from .sketch import L0Sampler, SamplerBank
from .stream import EdgeEvent, GeneratorConfig, StreamSpec, final_graph, generate, validate_stream

__version__ = "0.1.0"
