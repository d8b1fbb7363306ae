"""Corpus synthesis, end-to-end restoration and the benchmark harness."""

from .bench import BenchRow, bench, run_bench
from .config import ConfigError, RunConfig, parse_strategy
from .corpus import class_counts, generate_corpus, load_corpus, make_corpus, replay
from .restore import aggregate, perceive, restore_one

__all__ = [
    "BenchRow",
    "ConfigError",
    "RunConfig",
    "aggregate",
    "bench",
    "class_counts",
    "generate_corpus",
    "load_corpus",
    "make_corpus",
    "parse_strategy",
    "perceive",
    "replay",
    "restore_one",
    "run_bench",
]
