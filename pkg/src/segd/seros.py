"""Structural-entropy-guided selection and aggregation of candidate restorations.

Candidates (one per restoration order) become vertices of a complete graph
weighted by clipped cosine similarity.  A flat partition minimizing the
two-dimensional structural entropy is found by greedy merging; within
each part the vertex whose removal raises the entropy most is kept, and the
kept candidates are blended with softmax weights over those increases.

All logarithms are base 2.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .images import as_image

LOG_BASE = 2
MERGE_TOL = 1e-12
TIE_TOL = 1e-12
MAX_FEATURE_DIMS = 4096


class DegenerateGraphWarning(UserWarning):
    """The graph has zero volume; entropies are defined as 0."""


# ------------------------------------------------------------------ types


@dataclass(frozen=True)
class SimilarityGraph:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weights must be a square matrix")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if not np.array_equal(w, w.T):
            raise ValueError("weights must be symmetric")
        if np.any(np.diag(w) != 0):
            raise ValueError("diagonal must be zero")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self):
        return self.weights.shape[0]

    @property
    def degrees(self):
        return self.weights.sum(axis=1)

    @property
    def volume(self):
        return float(self.degrees.sum())


@dataclass(frozen=True)
class Partition:
    """Disjoint, non-empty parts covering vertices ``0..n-1``.

    Parts are stored canonically: each sorted, ordered by smallest vertex.
    """

    parts: tuple

    def __post_init__(self):
        parts = [tuple(sorted(int(v) for v in p)) for p in self.parts]
        if any(len(p) == 0 for p in parts):
            raise ValueError("parts must be non-empty")
        flat = sorted(v for p in parts for v in p)
        if flat != list(range(len(flat))):
            raise ValueError("parts must be disjoint and cover 0..n-1")
        object.__setattr__(self, "parts", tuple(sorted(parts)))

    @classmethod
    def singletons(cls, n):
        return cls(tuple((i,) for i in range(n)))

    @classmethod
    def from_assignment(cls, assignment):
        groups = {}
        for v, pid in enumerate(assignment):
            groups.setdefault(pid, []).append(v)
        return cls(tuple(groups.values()))

    @property
    def n(self):
        return sum(len(p) for p in self.parts)

    @property
    def assignment(self):
        out = [0] * self.n
        for pid, part in enumerate(self.parts):
            for v in part:
                out[v] = pid
        return tuple(out)

    def part_of(self, x):
        for part in self.parts:
            if x in part:
                return part
        raise KeyError(f"vertex {x} is not in the partition")


@dataclass(frozen=True)
class CandidateSet:
    """Candidate restorations keyed by path label (e.g. ``"cbn"``)."""

    labels: tuple
    images: tuple

    def __post_init__(self):
        labels = tuple(str(l) for l in self.labels)
        images = tuple(as_image(im) for im in self.images)
        if not 1 <= len(images) <= 6:
            raise ValueError(f"expected 1-6 candidates, got {len(images)}")
        if len(labels) != len(images):
            raise ValueError("one label per candidate")
        if len(set(labels)) != len(labels):
            raise ValueError("candidate labels must be distinct")
        if len({im.shape for im in images}) != 1:
            raise ValueError("candidates must share one shape")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "images", images)

    def __len__(self):
        return len(self.images)

    def features(self, max_dims=MAX_FEATURE_DIMS):
        return [feature_vector(im, max_dims) for im in self.images]


# ------------------------------------------------------------- features


def block_downsample(img, max_dims=MAX_FEATURE_DIMS):
    h, w = img.shape
    if h * w <= max_dims:
        return img
    f = int(math.ceil(math.sqrt(h * w / max_dims)))
    while (h // f) * (w // f) > max_dims:
        f += 1
    hh, ww = (h // f) * f, (w // f) * f
    return img[:hh, :ww].reshape(hh // f, f, ww // f, f).mean(axis=(1, 3))


def feature_vector(img, max_dims=MAX_FEATURE_DIMS):
    """Mean-centered, flattened, block-averaged pixel vector."""
    v = block_downsample(np.asarray(img, dtype=np.float64), max_dims).ravel()
    return v - v.mean()


def cosine_weight(u, v):
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return min(1.0, max(0.0, float(np.dot(u, v)) / (nu * nv)))


def build_graph(features):
    """Complete graph with ``w_ij = max(cos(f_i, f_j), 0)``.

    ``features`` is a sequence of equal-length vectors or a CandidateSet.
    """
    if isinstance(features, CandidateSet):
        features = features.features()
    vecs = [np.asarray(f, dtype=np.float64).ravel() for f in features]
    if len(vecs) < 2:
        raise ValueError("need at least 2 candidates to build a graph")
    if len({v.size for v in vecs}) != 1:
        raise ValueError("feature vectors differ in length")
    n = len(vecs)
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            w[i, j] = w[j, i] = cosine_weight(vecs[i], vecs[j])
    return SimilarityGraph(w)


# -------------------------------------------------------------- entropy


def _log2_ratio(num, den):
    """log2(num / den), or 0 when either side is zero (0 * log 0 := 0)."""
    if num <= 0.0 or den <= 0.0:
        return 0.0
    return math.log2(num / den)


def _cut(w, part):
    idx = list(part)
    vol = float(w[idx].sum())
    inner = float(w[np.ix_(idx, idx)].sum())
    return max(0.0, vol - inner), vol


def part_entropy(g, part):
    """Contribution of one part to the 2D structural entropy."""
    vg = g.volume
    if vg <= 0.0:
        return 0.0
    o = g.degrees
    cut, vol = _cut(g.weights, part)
    if vol <= 0.0:
        return 0.0
    h = (cut / vg) * _log2_ratio(vol, vg)
    for x in part:
        ox = float(o[x])
        if ox > 0.0:
            h += (ox / vg) * math.log2(ox / vol)
    return -h


def two_d_se(g, p):
    """Two-dimensional structural entropy of ``g`` under partition ``p``."""
    if p.n != g.n:
        raise ValueError("partition does not match the graph size")
    if g.volume <= 0.0:
        warnings.warn("graph volume is zero; 2D-SE defined as 0", DegenerateGraphWarning)
        return 0.0
    return sum(part_entropy(g, part) for part in p.parts)


class _PartCache:
    """Memoized per-part entropy terms keyed by vertex set."""

    def __init__(self, g):
        self.g = g
        self._terms = {}

    def __call__(self, part):
        key = frozenset(part)
        term = self._terms.get(key)
        if term is None:
            term = self._terms[key] = part_entropy(self.g, tuple(sorted(key)))
        return term

    def total(self, parts):
        return sum(self(p) for p in parts)


def _greedy_merge(term, parts):
    """Best-merge agglomeration until no merge gains more than MERGE_TOL."""
    parts = [tuple(p) for p in parts]
    while len(parts) > 1:
        best = None
        best_delta = -MERGE_TOL
        for a in range(len(parts)):
            for b in range(a + 1, len(parts)):
                delta = term(parts[a] + parts[b]) - term(parts[a]) - term(parts[b])
                if delta < best_delta:
                    best, best_delta = (a, b), delta
        if best is None:
            break
        a, b = best
        parts[a] = tuple(sorted(parts[a] + parts[b]))
        del parts[b]
    return parts


def _best_local_step(term, parts):
    """Best strictly improving merge, vertex move or vertex swap, or None."""
    best = None
    best_delta = -MERGE_TOL
    terms = [term(p) for p in parts]
    k = len(parts)
    for a in range(k):
        for b in range(a + 1, k):
            delta = term(parts[a] + parts[b]) - terms[a] - terms[b]
            if delta < best_delta:
                best, best_delta = ("merge", a, b), delta
    for a in range(k):
        if len(parts[a]) == 1:
            continue
        for x in parts[a]:
            rest = tuple(v for v in parts[a] if v != x)
            base = term(rest) - terms[a]
            for b in range(k):
                if b != a:
                    delta = base + term(parts[b] + (x,)) - terms[b]
                    if delta < best_delta:
                        best, best_delta = ("move", a, x, b), delta
            delta = base + term((x,))
            if delta < best_delta:
                best, best_delta = ("move", a, x, None), delta
    for a in range(k):
        for b in range(a + 1, k):
            for x in parts[a]:
                for y in parts[b]:
                    new_a = tuple(v for v in parts[a] if v != x) + (y,)
                    new_b = tuple(v for v in parts[b] if v != y) + (x,)
                    delta = term(new_a) + term(new_b) - terms[a] - terms[b]
                    if delta < best_delta:
                        best, best_delta = ("swap", a, b, x, y), delta
    return best


def _move(parts, a, x, b):
    parts[a] = tuple(v for v in parts[a] if v != x)
    if b is None:
        parts.append((x,))
    else:
        parts[b] = tuple(sorted(parts[b] + (x,)))
    return [p for p in parts if p]


def _local_search(term, parts):
    parts = [tuple(sorted(p)) for p in parts]
    while True:
        step = _best_local_step(term, parts)
        if step is None:
            return parts
        if step[0] == "merge":
            _, a, b = step
            parts[a] = tuple(sorted(parts[a] + parts[b]))
            del parts[b]
        elif step[0] == "move":
            parts = _move(parts, *step[1:])
        else:
            _, a, b, x, y = step
            parts[a] = tuple(sorted(tuple(v for v in parts[a] if v != x) + (y,)))
            parts[b] = tuple(sorted(tuple(v for v in parts[b] if v != y) + (x,)))


def _kl_pass(term, parts):
    """One Kernighan-Lin sweep over single-vertex moves.

    Every vertex is moved once, always along the best available move even if
    it raises the entropy; the best prefix of the sweep is returned.
    """
    parts = [tuple(p) for p in parts]
    best_parts = list(parts)
    current = best_h = term.total(parts)
    moved = set()
    while True:
        choice = None
        choice_delta = math.inf
        for a, part in enumerate(parts):
            base_a = term(part)
            for x in part:
                if x in moved:
                    continue
                rest = tuple(v for v in part if v != x)
                base = (term(rest) if rest else 0.0) - base_a
                for b in range(len(parts)):
                    if b == a:
                        continue
                    delta = base + term(parts[b] + (x,)) - term(parts[b])
                    if delta < choice_delta:
                        choice, choice_delta = (a, x, b), delta
                if rest:
                    delta = base + term((x,))
                    if delta < choice_delta:
                        choice, choice_delta = (a, x, None), delta
        if choice is None:
            return best_parts
        moved.add(choice[1])
        parts = _move(parts, *choice)
        current += choice_delta
        if current < best_h - MERGE_TOL:
            best_h, best_parts = current, list(parts)


def _refine(term, parts):
    parts = _local_search(term, parts)
    while True:
        candidate = _kl_pass(term, parts)
        if term.total(candidate) < term.total(parts) - MERGE_TOL:
            parts = _local_search(term, candidate)
        else:
            return parts


def minimize_partition(g):
    """Minimize the 2D structural entropy over flat partitions of ``g``.

    Phase one is greedy agglomeration from singletons: repeatedly apply the
    merge with the largest entropy decrease (ties go to the smallest part-id
    pair) until no merge lowers it by more than 1e-12.  Phase two refines
    that result with best-improvement merges, vertex moves and vertex swaps
    interleaved with Kernighan-Lin sweeps; the same refinement is also run
    from the one-part partition and the lower-entropy result is kept (the
    agglomerative one on ties).
    """
    n = g.n
    if n == 0:
        raise ValueError("empty graph")
    if g.volume <= 0.0:
        return Partition.singletons(n)
    term = _PartCache(g)
    merged = _refine(term, _greedy_merge(term, [(i,) for i in range(n)]))
    whole = _refine(term, [tuple(range(n))])
    if term.total(whole) < term.total(merged) - MERGE_TOL:
        merged = whole
    return Partition(tuple(merged))


def greedy_merge_partition(g):
    """Phase one of :func:`minimize_partition` alone (no refinement)."""
    if g.volume <= 0.0:
        return Partition.singletons(g.n)
    return Partition(tuple(_greedy_merge(_PartCache(g), [(i,) for i in range(g.n)])))


def node_contribution(g, p, x):
    """Entropy increase when ``x`` leaves its part for a fresh singleton.

    Uses the closed form, which touches only the part containing ``x``.
    """
    if not 0 <= x < g.n:
        raise KeyError(f"vertex {x} is not in the partition")
    part = p.part_of(x)
    vg = g.volume
    if len(part) == 1 or vg <= 0.0:
        return 0.0
    w = g.weights
    ox = float(g.degrees[x])
    cut, vol = _cut(w, part)
    rest = tuple(v for v in part if v != x)
    cut_rest, vol_rest = _cut(w, rest)
    dh = -(cut_rest / vg) * _log2_ratio(vol_rest, vg)
    dh += (cut / vg) * _log2_ratio(vol, vg)
    dh -= (ox / vg) * _log2_ratio(vol, vg)
    if vol_rest > 0.0:
        dh -= (vol_rest / vg) * math.log2(vol / vol_rest)
    return dh


def node_contributions(g, p):
    return np.array([node_contribution(g, p, x) for x in range(g.n)])


def softmax(values):
    v = np.asarray(values, dtype=np.float64)
    e = np.exp(v - v.max())
    return e / e.sum()


def select_vertices(p, contributions):
    """Per part, the vertex with maximal contribution (ties -> lowest index).

    Values within TIE_TOL count as ties: in a two-vertex part both removals
    give the same partition, so the contributions agree up to rounding only.
    """
    selected = []
    for part in p.parts:
        best = part[0]
        for v in part[1:]:
            if contributions[v] > contributions[best] + TIE_TOL:
                best = v
        selected.append(best)
    return selected


def select_and_aggregate(cands, g, p, contributions=None):
    """Returns ``(selected, weights, aggregate)``."""
    if contributions is None:
        contributions = node_contributions(g, p)
    selected = select_vertices(p, contributions)
    weights = softmax([contributions[v] for v in selected])
    images = cands.images if isinstance(cands, CandidateSet) else cands
    agg = np.zeros_like(np.asarray(images[selected[0]], dtype=np.float64))
    for wgt, v in zip(weights, selected):
        agg += wgt * np.asarray(images[v], dtype=np.float64)
    return selected, weights, np.clip(agg, 0.0, 1.0)


@dataclass
class SerosResult:
    """Aggregate plus everything needed to audit how it was formed."""

    image: np.ndarray
    labels: tuple
    groups: list = field(default_factory=list)
    graph: SimilarityGraph = None
    partition: Partition = None
    contributions: np.ndarray = None
    selected: list = field(default_factory=list)
    weights: np.ndarray = None
    entropy: float = 0.0


def dedupe(images):
    """Group byte-identical images; returns a list of index lists."""
    groups = {}
    for i, im in enumerate(images):
        arr = np.ascontiguousarray(im, dtype=np.float64)
        groups.setdefault((arr.shape, arr.tobytes()), []).append(i)
    return sorted(groups.values())


def run_seros(cands):
    """Full selection over a CandidateSet, returning a :class:`SerosResult`.

    Byte-identical candidates are merged before graph construction; graph
    vertices index the representatives (first member of each group).
    """
    groups = dedupe(cands.images)
    reps = [cands.images[g[0]] for g in groups]
    labels = tuple(cands.labels[g[0]] for g in groups)
    if len(reps) == 1:
        return SerosResult(
            image=np.array(reps[0]),
            labels=labels,
            groups=groups,
            partition=Partition.singletons(1),
            contributions=np.zeros(1),
            selected=[0],
            weights=np.ones(1),
        )
    graph = build_graph([feature_vector(im) for im in reps])
    part = minimize_partition(graph)
    contrib = node_contributions(graph, part)
    selected, weights, image = select_and_aggregate(reps, graph, part, contrib)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateGraphWarning)
        entropy = two_d_se(graph, part)
    return SerosResult(
        image=image,
        labels=labels,
        groups=groups,
        graph=graph,
        partition=part,
        contributions=contrib,
        selected=selected,
        weights=weights,
        entropy=entropy,
    )


def seros_pipeline(cands):
    """Graph -> partition -> contributions -> aggregate; returns the image."""
    return run_seros(cands).image


# ------------------------------------------------------------- text I/O


def dump_graph(g):
    lines = [f"n {g.n} base {LOG_BASE}"]
    for i in range(g.n):
        for j in range(i + 1, g.n):
            if g.weights[i, j] != 0.0:
                lines.append(f"{i} {j} {g.weights[i, j]:.17g}")
    return "\n".join(lines) + "\n"


def load_graph(text):
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not rows or rows[0][0] != "n" or len(rows[0]) != 4 or rows[0][2] != "base":
        raise ValueError("graph header must read 'n <count> base 2'")
    if int(rows[0][3]) != LOG_BASE:
        raise ValueError(f"unsupported log base {rows[0][3]}")
    n = int(rows[0][1])
    w = np.zeros((n, n))
    for row in rows[1:]:
        if len(row) != 3:
            raise ValueError(f"bad edge line: {' '.join(row)}")
        i, j, wt = int(row[0]), int(row[1]), float(row[2])
        if i == j or not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"bad edge endpoints {i} {j}")
        w[i, j] = w[j, i] = wt
    return SimilarityGraph(w)


def dump_partition(p):
    return "".join(f"{v} {pid}\n" for v, pid in enumerate(p.assignment))


def load_partition(text):
    pairs = [tuple(int(t) for t in ln.split()) for ln in text.splitlines() if ln.strip()]
    pairs.sort()
    if [v for v, _ in pairs] != list(range(len(pairs))):
        raise ValueError("partition must list every vertex once")
    return Partition.from_assignment([pid for _, pid in pairs])
