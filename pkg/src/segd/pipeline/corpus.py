"""Synthetic clean/degraded corpus generation with replayable recipes."""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..degrade import DegradationRecipe, Kind, synthesize
from ..evidential import TYPE_ORDER, TrainingSample, compute_stats, intensity_label
from ..images import load_image, rng_stream, save_image
from .scenes import make_scene

CLASS_NAMES = {1: "single", 2: "double", 3: "triple"}
CLASS_SHARES = (0.2, 0.3)  # single, double; triple takes the rest
SEVERITY_RANGE = (0.3, 1.0)
_TAG_CORPUS = 0xC0
# 16-bit storage keeps quantization far below any degradation of interest
STORE_BITS = 16


def class_counts(size):
    """Number of (single, double, triple) images in a mixed corpus of ``size``."""
    single = int(np.floor(size * CLASS_SHARES[0] + 0.5))
    double = int(np.floor(size * CLASS_SHARES[1] + 0.5))
    single = min(single, size)
    double = min(double, size - single)
    return single, double, size - single - double


def class_plan(size, mix="mixed"):
    """Number of degradation steps for each corpus index."""
    if mix == "mixed":
        s, d, t = class_counts(size)
        return [1] * s + [2] * d + [3] * t
    return [{"single": 1, "double": 2, "triple": 3}[mix]] * size


def quantize(img, bits=STORE_BITS):
    levels = (1 << bits) - 1
    return np.round(np.clip(img, 0.0, 1.0) * levels) / levels


@dataclass
class CorpusEntry:
    index: int
    scene: str
    clean: np.ndarray
    degraded: np.ndarray
    recipe: DegradationRecipe
    applied: tuple
    intensity: float  # 1 - SSIM(degraded, clean)

    @property
    def n_steps(self):
        return len(self.recipe.steps)

    @property
    def degradation_class(self):
        return CLASS_NAMES[self.n_steps]

    @property
    def labels(self):
        return tuple(int(k in self.recipe.kinds) for k in TYPE_ORDER)

    def training_sample(self):
        y = tuple(self.intensity if lab else float("nan") for lab in self.labels)
        return TrainingSample(compute_stats(self.degraded), self.labels, y)


def make_entry(seed, index, n_steps, size=64):
    """Deterministically draw entry ``index`` of the corpus keyed by ``seed``."""
    rng = rng_stream(seed, _TAG_CORPUS, index)
    scene, clean = make_scene(rng, size)
    clean = quantize(clean)
    kinds = [TYPE_ORDER[i] for i in rng.permutation(3)[:n_steps]]
    steps = tuple((k, float(rng.uniform(*SEVERITY_RANGE))) for k in kinds)
    recipe = DegradationRecipe(steps, int(rng.integers(0, 2**63)), order_randomized=True)
    degraded, applied = synthesize(clean, recipe)
    degraded = quantize(degraded)
    intensity = intensity_label(degraded, clean)
    return CorpusEntry(index, scene, clean, degraded, recipe, applied, intensity)


def generate_corpus(size, seed, mix="mixed", image_size=64):
    return [make_entry(seed, i, n, image_size) for i, n in enumerate(class_plan(size, mix))]


# ------------------------------------------------------------- on disk


def _entry_record(entry):
    stem = f"{entry.index:05d}"
    return {
        "index": entry.index,
        "class": entry.degradation_class,
        "scene": entry.scene,
        "clean": f"clean/{stem}.pgm",
        "degraded": f"degraded/{stem}.pgm",
        "recipe": f"recipes/{stem}.json",
        "applied_order": "".join(k.value for k in entry.applied),
        "labels": dict(zip((k.value for k in TYPE_ORDER), entry.labels)),
        "intensity": entry.intensity,
    }


def write_corpus(entries, out_dir, seed, mix="mixed"):
    """Write images, recipe sidecars and ``manifest.json``; returns the manifest."""
    out = Path(out_dir)
    for sub in ("clean", "degraded", "recipes"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    records = []
    for e in entries:
        rec = _entry_record(e)
        save_image(out / rec["clean"], e.clean, bits=STORE_BITS)
        save_image(out / rec["degraded"], e.degraded, bits=STORE_BITS)
        (out / rec["recipe"]).write_text(e.recipe.dumps())
        records.append(rec)
    manifest = {"seed": seed, "class_mix": mix, "size": len(entries), "entries": records}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def make_corpus(cfg):
    entries = generate_corpus(cfg.corpus_size, cfg.seed, cfg.class_mix, cfg.image_size)
    return write_corpus(entries, cfg.corpus_dir, cfg.seed, cfg.class_mix)


def load_corpus(corpus_dir):
    """Read a corpus written by :func:`write_corpus` back into entries."""
    root = Path(corpus_dir)
    manifest = json.loads((root / "manifest.json").read_text())
    entries = []
    for rec in manifest["entries"]:
        recipe = DegradationRecipe.loads((root / rec["recipe"]).read_text())
        entries.append(
            CorpusEntry(
                index=rec["index"],
                scene=rec["scene"],
                clean=load_image(root / rec["clean"]),
                degraded=load_image(root / rec["degraded"]),
                recipe=recipe,
                applied=tuple(Kind.parse(c) for c in rec["applied_order"]),
                intensity=float(rec["intensity"]),
            )
        )
    return manifest, entries


def replay(corpus_dir, record):
    """Re-synthesize one manifest entry from its clean image and recipe sidecar."""
    root = Path(corpus_dir)
    clean = load_image(root / record["clean"])
    recipe = DegradationRecipe.loads((root / record["recipe"]).read_text())
    degraded, _ = synthesize(clean, recipe)
    return quantize(degraded)
