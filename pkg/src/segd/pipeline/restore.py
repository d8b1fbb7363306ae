"""End-to-end restoration of one image under a chosen order strategy."""

import itertools

import numpy as np

from ..degrade import Kind
from ..evidential import DEFAULT_ZETA, GateDecision, compute_stats, modulation
from ..images import as_image, rng_stream
from ..restore_ops import apply_path, path_label
from ..seros import CandidateSet, run_seros
from .config import parse_strategy

# candidate enumeration order: cbn, cnb, bcn, bnc, ncb, nbc
CANONICAL_ORDER = (Kind.CONTRAST, Kind.BLUR, Kind.NOISE)
_TAG_RPS = 0x525053


def candidate_orders(active):
    """All permutations of the active kinds, in canonical lexicographic order."""
    kinds = [k for k in CANONICAL_ORDER if k in active]
    return list(itertools.permutations(kinds))


def build_candidates(img, gates, strengths):
    """Run every restoration order over ``img``; returns (orders, images)."""
    orders = candidate_orders(gates.active)
    images = [apply_path(img, order, gates, strengths)[0] for order in orders]
    return orders, images


def _restrict(order, active):
    return tuple(k for k in order if k in active)


def aggregate(img, gates, strengths, strategy, *, seed=0, index=0, candidates=None):
    """Apply ``strategy`` given fixed gates and strengths.

    ``candidates`` may carry a precomputed ``build_candidates`` result so
    several strategies can share one set of restoration paths.  Returns
    ``(image, info)``; ``info`` records the candidates considered and how the
    output was formed.
    """
    name, fixed = parse_strategy(strategy)
    img = as_image(img)
    if not gates.active:
        return img.copy(), {"candidates": [], "chosen": [], "weights": []}
    orders, images = candidates or build_candidates(img, gates, strengths)
    labels = [path_label(o) for o in orders]
    info = {"candidates": labels}
    if name == "fixed":
        pick = labels.index(path_label(_restrict(fixed, gates.active)))
        info.update(chosen=[labels[pick]], weights=[1.0])
        return images[pick], info
    if name == "rps":
        pick = int(rng_stream(seed, _TAG_RPS, index).integers(len(images)))
        info.update(chosen=[labels[pick]], weights=[1.0])
        return images[pick], info
    if name == "pea":
        out = np.mean(np.stack(images), axis=0)
        info.update(chosen=labels, weights=[1.0 / len(images)] * len(images))
        return np.clip(out, 0.0, 1.0), info
    res = run_seros(CandidateSet(labels, images))
    info.update(
        unique=list(res.labels),
        groups=[[labels[i] for i in grp] for grp in res.groups],
        partition=[[res.labels[v] for v in part] for part in res.partition.parts],
        contributions=[float(c) for c in res.contributions],
        chosen=[res.labels[v] for v in res.selected],
        weights=[float(w) for w in res.weights],
        entropy=float(res.entropy),
    )
    if res.graph is not None:
        info["graph"] = res.graph.weights.tolist()
    return res.image, info


def perceive(img, heads, zeta=DEFAULT_ZETA):
    """Stats -> logits -> gates -> evidence -> per-kind strengths."""
    stats = compute_stats(img)
    logits, gates, evidence = heads.predict(stats, zeta)
    strengths = {k: (modulation(evidence[k]) if gates[k] else 0.0) for k in Kind}
    diag = {
        "stats": [stats.noise_score, stats.blur_score, stats.contrast_score],
        "logits": {"n": logits.pi_n, "b": logits.pi_b, "c": logits.pi_c},
        "gates": {"n": gates.d_n, "b": gates.d_b, "c": gates.d_c},
        "p": {k.value: evidence[k].p for k in Kind},
        "S": {k.value: evidence[k].S for k in Kind},
        "strengths": {k.value: strengths[k] for k in Kind},
    }
    return gates, strengths, diag


def restore_one(img, heads, cfg, *, index=0, strategy=None):
    """Restore one image with trained heads; returns ``(image, diagnostics)``."""
    gates, strengths, diag = perceive(img, heads, cfg.zeta)
    out, info = aggregate(img, gates, strengths, strategy or cfg.strategy, seed=cfg.seed, index=index)
    diag.update(info)
    return out, diag


def oracle_gates(kinds, zeta=DEFAULT_ZETA):
    return GateDecision.from_kinds(kinds, zeta)
