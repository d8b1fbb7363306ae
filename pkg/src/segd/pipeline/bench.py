"""Benchmark harness: every strategy over a corpus, with text/CSV reports."""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..evidential import DegradationHeads
from ..metrics import mae, psnr, ssim
from ..restore_ops import path_label
from .config import ConfigError
from .corpus import CLASS_NAMES, load_corpus
from .restore import aggregate, build_candidates, perceive

CSV_HEADER = "class,strategy,count,psnr,ssim,mae"
CLASS_ORDER = tuple(CLASS_NAMES[k] for k in sorted(CLASS_NAMES))
# the two readings of an overall average, both reported
ALL_IMAGE_MEAN = "all(image-mean)"
ALL_CLASS_MEAN = "all(class-mean)"

TEXT_NAME = "bench.txt"
CSV_NAME = "bench.csv"
DIAG_NAME = "diagnostics.jsonl"


@dataclass(frozen=True)
class BenchRow:
    degradation_class: str
    strategy: str
    psnr: float
    ssim: float
    mae: float
    count: int

    def csv(self):
        return (
            f"{self.degradation_class},{self.strategy},{self.count},"
            f"{self.psnr:.6f},{self.ssim:.6f},{self.mae:.6f}"
        )


@dataclass(frozen=True)
class ImageResult:
    index: int
    degradation_class: str
    scores: dict  # strategy -> (psnr, ssim, mae)
    diagnostics: dict


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def evaluate_entry(entry, heads, strategies, zeta, seed):
    """Restore one corpus entry under each strategy and score it."""
    gates, strengths, diag = perceive(entry.degraded, heads, zeta)
    cands = build_candidates(entry.degraded, gates, strengths) if gates.active else None
    diag["paths"] = {}
    if cands is not None:
        for order, im in zip(*cands):
            diag["paths"][path_label(order)] = {"psnr": psnr(im, entry.clean), "ssim": ssim(im, entry.clean)}
    diag["input"] = {"psnr": psnr(entry.degraded, entry.clean), "ssim": ssim(entry.degraded, entry.clean)}
    scores, per_strategy = {}, {}
    for strat in strategies:
        out, info = aggregate(
            entry.degraded, gates, strengths, strat, seed=seed, index=entry.index, candidates=cands
        )
        scores[strat] = (psnr(out, entry.clean), ssim(out, entry.clean), mae(out, entry.clean))
        per_strategy[strat] = info
    diag["strategies"] = per_strategy
    return ImageResult(entry.index, entry.degradation_class, scores, _jsonable(diag))


def _evaluate_star(args):
    return evaluate_entry(*args)


def summarize(results, strategies):
    """Class rows, then the two overall rows, for every strategy."""
    rows = []
    present = [c for c in CLASS_ORDER if any(r.degradation_class == c for r in results)]
    class_means = {}
    for cls in present:
        members = [r for r in results if r.degradation_class == cls]
        for strat in strategies:
            m = np.array([r.scores[strat] for r in members]).mean(axis=0)
            class_means[cls, strat] = m
            rows.append(BenchRow(cls, strat, float(m[0]), float(m[1]), float(m[2]), len(members)))
    for strat in strategies:
        m = np.array([r.scores[strat] for r in results]).mean(axis=0)
        rows.append(BenchRow(ALL_IMAGE_MEAN, strat, float(m[0]), float(m[1]), float(m[2]), len(results)))
    for strat in strategies:
        m = np.mean([class_means[c, strat] for c in present], axis=0)
        rows.append(BenchRow(ALL_CLASS_MEAN, strat, float(m[0]), float(m[1]), float(m[2]), len(results)))
    return rows


def format_table(rows):
    header = ("class", "strategy", "count", "psnr", "ssim", "mae")
    body = [
        (r.degradation_class, r.strategy, str(r.count), f"{r.psnr:.3f}", f"{r.ssim:.4f}", f"{r.mae:.4f}")
        for r in rows
    ]
    widths = [max(len(x[i]) for x in [header, *body]) for i in range(len(header))]
    lines = []
    for k, cells in enumerate([header, *body]):
        left = [c.ljust(w) for c, w in zip(cells[:2], widths[:2])]
        right = [c.rjust(w) for c, w in zip(cells[2:], widths[2:])]
        lines.append("  ".join(left + right).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def format_csv(rows):
    return "\n".join([CSV_HEADER, *(r.csv() for r in rows)]) + "\n"


def run_bench(entries, heads, strategies, *, zeta=0.45, seed=0, workers=1):
    """Score ``entries`` under ``strategies``; returns (rows, per-image results).

    With ``workers > 1`` images are processed in a pool; results are gathered
    in corpus order so output does not depend on completion order.
    """
    strategies = tuple(strategies)
    if not strategies:
        raise ConfigError("strategy list is empty")
    if not entries:
        raise ConfigError("corpus is empty")
    jobs = [(e, heads, strategies, zeta, seed) for e in entries]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_star, jobs))
    else:
        results = [_evaluate_star(j) for j in jobs]
    results.sort(key=lambda r: r.index)
    return summarize(results, strategies), results


def bench(cfg):
    """Run the harness described by ``cfg`` and write the report files.

    Returns ``(rows, paths)`` where ``paths`` maps report kind to file.
    """
    if not cfg.strategies:
        raise ConfigError("strategy list is empty")
    corpus = Path(cfg.corpus_dir)
    if not (corpus / "manifest.json").is_file():
        raise FileNotFoundError(f"no corpus manifest under {corpus}")
    heads = DegradationHeads.loads(Path(cfg.heads_path).read_text())
    _, entries = load_corpus(corpus)
    rows, results = run_bench(
        entries, heads, cfg.strategies, zeta=cfg.zeta, seed=cfg.seed, workers=cfg.workers
    )
    out = Path(cfg.report_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"text": out / TEXT_NAME, "csv": out / CSV_NAME, "diagnostics": out / DIAG_NAME}
    paths["text"].write_text(format_table(rows))
    paths["csv"].write_text(format_csv(rows))
    with open(paths["diagnostics"], "w") as fh:
        for r in results:
            rec = {"index": r.index, "class": r.degradation_class, **r.diagnostics}
            rec["scores"] = {s: dict(zip(("psnr", "ssim", "mae"), v)) for s, v in r.scores.items()}
            fh.write(json.dumps(_jsonable(rec), sort_keys=True) + "\n")
    return rows, paths
