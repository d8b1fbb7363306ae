"""Degradation type and intensity estimation with Beta evidence heads.

Handcrafted image statistics feed small linear heads: a type head producing
one logit per degradation kind (noise, blur, contrast) that is thresholded
into on/off gates, and one evidence head per kind producing Beta(alpha,
beta) parameters whose mean is the estimated intensity and whose total is
the confidence.  Heads are fit by full-batch gradient descent on binary
cross-entropy plus the Beta evidential loss.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .degrade import Kind
from .images import as_image, rng_stream, same_shape
from .metrics import ssim
from .specialfn import digamma, log_beta, trigamma

# kinds in logit order (noise, blur, contrast)
TYPE_ORDER = (Kind.NOISE, Kind.BLUR, Kind.CONTRAST)
DEFAULT_ZETA = 0.45
EVIDENCE_FLOOR = 1e-6
LABEL_EPS = 1e-4
MAD_SCALE = 1.4826

_MEAN3 = np.full((3, 3), 1.0 / 9.0)
_LAPLACE3 = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])
MEAN_FLOOR = 1e-6
EDGE_PERCENTILE = 99.5


# --------------------------------------------------------------- helpers


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def softplus(x):
    """log(1 + e^x) without overflow: max(x, 0) + log1p(e^-|x|)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))
    return out if out.ndim else float(out)


def logit(p):
    return math.log(p / (1.0 - p))


# ---------------------------------------------------------------- stats


@dataclass(frozen=True)
class DegradationStats:
    noise_score: float
    blur_score: float
    contrast_score: float
    edge_blur_score: float = 0.0

    def as_array(self):
        return np.array([self.noise_score, self.blur_score, self.contrast_score, self.edge_blur_score])


def edge_steepness(img):
    """Smallest, over four directions, of the 99.5th-percentile directional
    derivative of the 3x3-median-filtered image, divided by its p1-p99 range.

    Motion blur only softens edges across its direction, so the minimum over
    directions responds to it as well as to isotropic blur.
    """
    m = ndimage.median_filter(img, size=3, mode="reflect")
    lo, hi = np.percentile(m, [1.0, 99.0])
    if hi - lo < 1e-6:
        return 0.0
    diffs = (
        np.abs(np.diff(m, axis=1)),
        np.abs(np.diff(m, axis=0)),
        np.abs(m[1:, 1:] - m[:-1, :-1]) / math.sqrt(2.0),
        np.abs(m[1:, :-1] - m[:-1, 1:]) / math.sqrt(2.0),
    )
    return min(float(np.percentile(d, EDGE_PERCENTILE)) for d in diffs) / float(hi - lo)


def laplacian_energy(img):
    """Variance of the 3x3 Laplacian divided by the mean intensity."""
    lap = ndimage.correlate(img, _LAPLACE3, mode="reflect")
    return float(np.var(lap)) / max(float(np.mean(img)), MEAN_FLOOR)


def compute_stats(img):
    """Noise, blur and contrast statistics of a single image.

    noise_score: 1.4826 * MAD of the residual after a 3x3 box filter.
    blur_score: minus :func:`laplacian_energy`.
    contrast_score: 1 - (p99 - p1).
    edge_blur_score: minus :func:`edge_steepness`.
    """
    img = as_image(img)
    resid = img - ndimage.correlate(img, _MEAN3, mode="reflect")
    noise = MAD_SCALE * float(np.median(np.abs(resid - np.median(resid))))
    lo, hi = np.percentile(img, [1.0, 99.0])
    return DegradationStats(noise, -laplacian_energy(img), 1.0 - float(hi - lo), -edge_steepness(img))


# ---------------------------------------------------------- type gating


@dataclass(frozen=True)
class TypeLogits:
    pi_n: float
    pi_b: float
    pi_c: float

    def as_array(self):
        return np.array([self.pi_n, self.pi_b, self.pi_c])

    def __getitem__(self, kind):
        return {Kind.NOISE: self.pi_n, Kind.BLUR: self.pi_b, Kind.CONTRAST: self.pi_c}[Kind.parse(kind)]


@dataclass(frozen=True)
class GateDecision:
    d_n: int
    d_b: int
    d_c: int
    zeta: float = DEFAULT_ZETA

    def __getitem__(self, kind):
        return {Kind.NOISE: self.d_n, Kind.BLUR: self.d_b, Kind.CONTRAST: self.d_c}[Kind.parse(kind)]

    @property
    def active(self):
        return frozenset(k for k in TYPE_ORDER if self[k])

    def as_tuple(self):
        """Flags in (noise, blur, contrast) order."""
        return (self.d_n, self.d_b, self.d_c)

    @classmethod
    def from_kinds(cls, kinds, zeta=DEFAULT_ZETA):
        kinds = {Kind.parse(k) for k in kinds}
        return cls(int(Kind.NOISE in kinds), int(Kind.BLUR in kinds), int(Kind.CONTRAST in kinds), zeta)


def _check_zeta(zeta):
    zeta = float(zeta)
    if not 0.0 < zeta < 1.0:
        raise ValueError(f"zeta must lie in (0, 1), got {zeta}")
    return zeta


def gate(logits, zeta=DEFAULT_ZETA):
    """d_l = 1 iff sigmoid(pi_l) >= zeta."""
    zeta = _check_zeta(zeta)
    probs = sigmoid(logits.as_array())
    return GateDecision(*(int(p >= zeta) for p in probs), zeta=zeta)


def bce_with_logits(logits, labels):
    """Mean over the three kinds of softplus(pi) - y * pi."""
    pi = logits.as_array() if isinstance(logits, TypeLogits) else np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if y.shape != pi.shape or not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0/1 flags, one per logit")
    return float(np.mean(softplus(pi) - y * pi))


# ------------------------------------------------------ Beta evidence


@dataclass(frozen=True)
class BetaEvidence:
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < EVIDENCE_FLOOR:
                raise ValueError(f"{name} must be finite and >= {EVIDENCE_FLOOR}, got {v}")
            object.__setattr__(self, name, v)

    @classmethod
    def from_raw(cls, z_alpha, z_beta):
        """Softplus link with a 1e-6 floor so both parameters stay positive."""
        return cls(softplus(z_alpha) + EVIDENCE_FLOOR, softplus(z_beta) + EVIDENCE_FLOOR)

    @property
    def p(self):
        return self.alpha / (self.alpha + self.beta)

    @property
    def S(self):
        return self.alpha + self.beta


def intensity_label(degraded, clean):
    """1 - SSIM(degraded, clean), clamped to [0, 1]."""
    same_shape(degraded, clean)
    return min(1.0, max(0.0, 1.0 - ssim(degraded, clean)))


def edl_terms(alpha, beta, y, tau):
    """Vectorized Beta evidential loss; returns ``(loss, d/d_alpha, d/d_beta)`` arrays."""
    a = np.asarray(alpha, dtype=np.float64)
    b = np.asarray(beta, dtype=np.float64)
    if np.any(a <= 0.0) or np.any(b <= 0.0):
        raise ValueError("alpha and beta must be positive")
    y = np.clip(np.asarray(y, dtype=np.float64), LABEL_EPS, 1.0 - LABEL_EPS)
    ly, l1y = np.log(y), np.log1p(-y)
    lb = log_beta(a, b)
    psi_a, psi_b, psi_s = digamma(a), digamma(b), digamma(a + b)
    nll = -((a - 1.0) * ly + (b - 1.0) * l1y - lb)
    g_a = -ly + psi_a - psi_s
    g_b = -l1y + psi_b - psi_s
    if tau == 0.0:
        return nll, g_a, g_b
    kl = -lb + (a - 1.0) * psi_a + (b - 1.0) * psi_b + (2.0 - a - b) * psi_s
    tri_s = trigamma(a + b)
    g_a = g_a + tau * ((a - 1.0) * trigamma(a) + (2.0 - a - b) * tri_s)
    g_b = g_b + tau * ((b - 1.0) * trigamma(b) + (2.0 - a - b) * tri_s)
    return nll + tau * kl, g_a, g_b


def edl_loss(ev, y, tau):
    """Beta evidential loss and its gradient with respect to (alpha, beta).

    loss = -[(a-1) ln y + (b-1) ln(1-y) - ln B(a,b)] + tau * KL(Beta(a,b) || U)

    ``y`` is clamped to [1e-4, 1 - 1e-4] first.  Returns
    ``(loss, d_loss/d_alpha, d_loss/d_beta)``.
    """
    tau = float(tau)
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    loss, g_a, g_b = edl_terms(float(ev.alpha), float(ev.beta), float(y), tau)
    return float(loss), float(g_a), float(g_b)


def modulation(ev):
    """Restoration strength from evidence: clamp(sigmoid(logit(p) + 0.1 ln S), 0.1, 1)."""
    p = min(max(ev.p, 1e-12), 1.0 - 1e-12)
    m = float(sigmoid(logit(p) + 0.1 * math.log(ev.S)))
    return min(1.0, max(0.1, m))


# ----------------------------------------------------------------- heads

NOISE_LOG_OFFSET = 1e-4
FEATURE_NAMES = ("log_noise_score", "blur_score", "contrast_score", "edge_blur_score")
HEADS_FORMAT = "segd-heads/1"


def feature_matrix(stats):
    """Stack stats into an (N, 4) matrix; the noise score enters as a log."""
    rows = [st.as_array() for st in stats]
    x = np.array(rows, dtype=np.float64).reshape(-1, len(FEATURE_NAMES))
    x[:, 0] = np.log(x[:, 0] + NOISE_LOG_OFFSET)
    return x


@dataclass
class LinearHead:
    """Affine map from standardized features to ``out`` raw outputs."""

    weights: np.ndarray  # (out, n_features)
    bias: np.ndarray  # (out,)

    def __call__(self, z):
        return z @ self.weights.T + self.bias


@dataclass
class DegradationHeads:
    """Type head plus one Beta evidence head per degradation kind."""

    feature_mean: np.ndarray
    feature_scale: np.ndarray
    type_head: LinearHead
    evidence_heads: dict
    final_loss: float = float("nan")
    history: list = field(default_factory=list, repr=False)

    def standardize(self, stats):
        return (feature_matrix(stats) - self.feature_mean) / self.feature_scale

    def type_logits(self, stats):
        return TypeLogits(*self.type_head(self.standardize([stats]))[0])

    def evidence(self, stats, kind):
        raw = self.evidence_heads[Kind.parse(kind)](self.standardize([stats]))[0]
        return BetaEvidence.from_raw(raw[0], raw[1])

    def predict(self, stats, zeta=DEFAULT_ZETA):
        """Returns ``(logits, gates, {kind: BetaEvidence})``."""
        logits = self.type_logits(stats)
        evidence = {k: self.evidence(stats, k) for k in TYPE_ORDER}
        return logits, gate(logits, zeta), evidence

    # -------- text format: one "key = comma,separated,floats" per line

    def dumps(self):
        def vec(v):
            return ",".join(repr(float(t)) for t in np.ravel(v))

        lines = [
            f"format = {HEADS_FORMAT}",
            f"features = {','.join(FEATURE_NAMES)}",
            f"feature_mean = {vec(self.feature_mean)}",
            f"feature_scale = {vec(self.feature_scale)}",
        ]
        for i, row in enumerate(self.type_head.weights):
            lines.append(f"type.weights.{TYPE_ORDER[i].name.lower()} = {vec(row)}")
        lines.append(f"type.bias = {vec(self.type_head.bias)}")
        for kind in TYPE_ORDER:
            head = self.evidence_heads[kind]
            name = kind.name.lower()
            lines.append(f"evidence.{name}.weights.alpha = {vec(head.weights[0])}")
            lines.append(f"evidence.{name}.weights.beta = {vec(head.weights[1])}")
            lines.append(f"evidence.{name}.bias = {vec(head.bias)}")
        lines.append(f"final_loss = {self.final_loss!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text):
        kv = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"malformed heads line: {line!r}")
            kv[key.strip()] = value.strip()
        if kv.get("format") != HEADS_FORMAT:
            raise ValueError(f"unsupported heads format {kv.get('format')!r}")

        def vec(key):
            try:
                return np.array([float(t) for t in kv[key].split(",")])
            except KeyError:
                raise ValueError(f"heads file is missing {key!r}") from None

        type_w = np.array([vec(f"type.weights.{k.name.lower()}") for k in TYPE_ORDER])
        evidence = {}
        for kind in TYPE_ORDER:
            name = kind.name.lower()
            w = np.array([vec(f"evidence.{name}.weights.alpha"), vec(f"evidence.{name}.weights.beta")])
            evidence[kind] = LinearHead(w, vec(f"evidence.{name}.bias"))
        return cls(
            feature_mean=vec("feature_mean"),
            feature_scale=vec("feature_scale"),
            type_head=LinearHead(type_w, vec("type.bias")),
            evidence_heads=evidence,
            final_loss=float(kv.get("final_loss", "nan")),
        )


@dataclass(frozen=True)
class TrainingSample:
    """Stats of one degraded image, its 0/1 type labels and per-kind intensity.

    ``labels`` and ``intensity`` are ordered (noise, blur, contrast); an
    intensity is ignored where the label is 0.
    """

    stats: DegradationStats
    labels: tuple
    intensity: tuple


@dataclass(frozen=True)
class EpochRecord:
    tau: float
    loss_before: float
    loss_after: float
    step: float


def _unpack(theta, n_feat):
    k = 3 * n_feat
    type_w = theta[:k].reshape(3, n_feat)
    type_b = theta[k : k + 3]
    off = k + 3
    ev = []
    for _ in TYPE_ORDER:
        w = theta[off : off + 2 * n_feat].reshape(2, n_feat)
        b = theta[off + 2 * n_feat : off + 2 * n_feat + 2]
        ev.append((w, b))
        off += 2 * n_feat + 2
    return type_w, type_b, ev


def _objective(theta, z, labels, intensity, present, tau):
    """L_BCE (mean over samples and kinds) + sum over kinds of mean L_EDL."""
    n, n_feat = z.shape
    type_w, type_b, ev = _unpack(theta, n_feat)
    grad = np.zeros_like(theta)
    g_type_w, g_type_b, g_ev = _unpack(grad, n_feat)

    logits = z @ type_w.T + type_b
    loss = float(np.mean(softplus(logits) - labels * logits))
    d_logits = (sigmoid(logits) - labels) / labels.size
    g_type_w += d_logits.T @ z
    g_type_b += d_logits.sum(axis=0)

    for l in range(len(TYPE_ORDER)):
        mask = present[:, l]
        count = int(mask.sum())
        if count == 0:
            continue
        w, b = ev[l]
        zl = z[mask]
        raw = zl @ w.T + b
        alpha = softplus(raw[:, 0]) + EVIDENCE_FLOOR
        beta = softplus(raw[:, 1]) + EVIDENCE_FLOOR
        terms, g_a, g_b = edl_terms(alpha, beta, intensity[mask, l], tau)
        loss += float(terms.sum()) / count
        d_raw = np.column_stack([g_a * sigmoid(raw[:, 0]), g_b * sigmoid(raw[:, 1])]) / count
        gw, gb = g_ev[l]
        gw += d_raw.T @ zl
        gb += d_raw.sum(axis=0)
    return loss, grad


def train_heads(samples, *, epochs=400, step=0.5, seed=0, anneal=True, max_halvings=40):
    """Fit the type and evidence heads by full-batch gradient descent.

    Each epoch takes one step of size ``step`` on BCE + EDL.  A step that
    would raise the loss (at that epoch's tau) is rejected and the step size
    halved until it does not.  tau rises linearly from 0 to 1 over the epochs
    when ``anneal`` is set, otherwise it stays at 1.
    """
    samples = list(samples)
    if len(samples) < 50:
        raise ValueError(f"need at least 50 training samples, got {len(samples)}")
    labels = np.array([s.labels for s in samples], dtype=np.float64)
    if labels.shape[1:] != (3,) or not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be three 0/1 flags per sample")
    if np.any(labels.min(axis=0) == labels.max(axis=0)):
        raise ValueError("degenerate corpus: some kind is always present or always absent")
    intensity = np.array([s.intensity for s in samples], dtype=np.float64)
    present = labels == 1
    intensity = np.where(present, intensity, 0.5)
    if not np.all(np.isfinite(intensity)):
        raise ValueError("intensity labels must be finite where the kind is present")

    x = feature_matrix([s.stats for s in samples])
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    if np.any(np.ptp(x, axis=0) == 0.0) or not np.all(np.isfinite(x)):
        raise ValueError("degenerate corpus: a feature is constant or non-finite")
    z = (x - mean) / scale

    n_feat = z.shape[1]
    size = 3 * n_feat + 3 + len(TYPE_ORDER) * (2 * n_feat + 2)
    theta = rng_stream(seed, 0x4EAD).normal(0.0, 0.01, size=size)

    history = []
    for epoch in range(epochs):
        tau = (epoch / max(1, epochs - 1)) if anneal else 1.0
        before, grad = _objective(theta, z, labels, intensity, present, tau)
        after = before
        for _ in range(max_halvings):
            trial = theta - step * grad
            after, _ = _objective(trial, z, labels, intensity, present, tau)
            if after <= before:
                theta = trial
                break
            step *= 0.5
        else:
            after = before
        history.append(EpochRecord(tau, before, after, step))

    type_w, type_b, ev = _unpack(theta, n_feat)
    final_tau = 1.0
    final_loss, _ = _objective(theta, z, labels, intensity, present, final_tau)
    return DegradationHeads(
        feature_mean=mean,
        feature_scale=scale,
        type_head=LinearHead(type_w.copy(), type_b.copy()),
        evidence_heads={k: LinearHead(w.copy(), b.copy()) for k, (w, b) in zip(TYPE_ORDER, ev)},
        final_loss=float(final_loss),
        history=history,
    )


def f1_score(truth, predicted):
    truth = np.asarray(truth, dtype=bool)
    predicted = np.asarray(predicted, dtype=bool)
    tp = int(np.sum(truth & predicted))
    fp = int(np.sum(~truth & predicted))
    fn = int(np.sum(truth & ~predicted))
    if tp == 0:
        return 0.0
    return 2.0 * tp / (2.0 * tp + fp + fn)
