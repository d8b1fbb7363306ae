"""Run configuration shared by the CLI subcommands."""

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from ..degrade import Kind

STRATEGY_NAMES = ("seros", "rps", "pea")
CLASS_MIXES = ("mixed", "single", "double", "triple")
DEFAULT_STRATEGIES = ("seros", "rps", "pea", "fixed:cbn", "fixed:nbc")


class ConfigError(ValueError):
    """Invalid configuration value (CLI exit code 2)."""


def parse_strategy(text):
    """Return ``("fixed", (Kind, ...))`` or ``(name, None)``."""
    text = str(text).strip().lower()
    if text in STRATEGY_NAMES:
        return text, None
    if text.startswith("fixed:"):
        letters = text[len("fixed:") :]
        if sorted(letters) != ["b", "c", "n"]:
            raise ConfigError(f"fixed order must be a permutation of c, b, n: {text!r}")
        return "fixed", tuple(Kind.parse(c) for c in letters)
    raise ConfigError(f"unknown strategy {text!r}")


@dataclass
class RunConfig:
    corpus_dir: str = "corpus"
    heads_path: str = "heads.txt"
    input_path: str = ""
    output_path: str = ""
    report_dir: str = "report"
    zeta: float = 0.45
    strategy: str = "seros"
    strategies: tuple = DEFAULT_STRATEGIES
    seed: int = 0
    corpus_size: int = 100
    class_mix: str = "mixed"
    image_size: int = 64
    epochs: int = 400
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        try:
            self.zeta = float(self.zeta)
            self.seed = int(self.seed)
            self.corpus_size = int(self.corpus_size)
            self.image_size = int(self.image_size)
            self.epochs = int(self.epochs)
            self.workers = int(self.workers)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if not 0.0 < self.zeta < 1.0:
            raise ConfigError(f"zeta must lie in (0, 1), got {self.zeta}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.corpus_size < 1:
            raise ConfigError("corpus_size must be positive")
        if self.image_size < 16:
            raise ConfigError("image_size must be at least 16")
        if self.class_mix not in CLASS_MIXES:
            raise ConfigError(f"class_mix must be one of {CLASS_MIXES}")
        if self.epochs < 1 or self.workers < 1:
            raise ConfigError("epochs and workers must be positive")
        if isinstance(self.strategies, str):
            self.strategies = tuple(s for s in self.strategies.split(",") if s.strip())
        self.strategies = tuple(str(s).strip().lower() for s in self.strategies)
        if not self.strategies:
            raise ConfigError("strategy list is empty")
        for s in (self.strategy, *self.strategies):
            parse_strategy(s)
        self.strategy = str(self.strategy).strip().lower()

    @classmethod
    def from_file(cls, path, **overrides):
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def to_dict(self):
        d = asdict(self)
        d["strategies"] = list(self.strategies)
        return d
