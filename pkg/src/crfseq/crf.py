"""Linear-chain CRF: scoring, log-space forward-backward, batch maximum
likelihood training with L2 regularization, and Viterbi decoding.

A labeling y of a sentence with per-position feature-id vectors is scored

    score(y) = sum_t emit(t, y_t) + w_start[y_1]
             + sum_{t>1} w_trans[y_{t-1}, y_t] + w_end[y_n]

with emit(t, l) = sum over the active feature ids f at t of w_emit[f, l].
The conditional probability of y is exp(score(y)) normalized by the
partition sum over all labelings, which forward-backward computes in log
space. Training minimizes the regularized negative log likelihood

    sum_sentences (log Z - score(gold)) + l2/2 * ||w||^2

whose gradient is (model-expected feature counts - gold counts) + l2 * w.
"""

from __future__ import annotations

import base64
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .conll import LabelSchema
from .errors import DataError, InternalError
from .features import FeatureIndex, FeatureTemplateConfig

MODEL_MAGIC = "CRFSEQ1"
MODEL_VERSION = 1

# fixed work-unit size for gradient accumulation: summation order (and hence
# the result, bit for bit) is the same for every thread count
_GRAD_CHUNK = 64


@dataclass
class CrfModel:
    """Label schema, frozen feature index, and the weight blocks.

    ``schema``/``index`` may be None for bare numeric models (handy in
    tests); saving requires both. ``w_trans[a, b]`` scores transition a->b.
    """

    schema: LabelSchema | None
    index: FeatureIndex | None
    w_emit: np.ndarray  # (F, L)
    w_trans: np.ndarray  # (L, L)
    w_start: np.ndarray  # (L,)
    w_end: np.ndarray  # (L,)
    feature_config: FeatureTemplateConfig | None = None

    def __post_init__(self):
        f, l = self.w_emit.shape
        if self.w_trans.shape != (l, l) or self.w_start.shape != (l,) or self.w_end.shape != (l,):
            raise InternalError("inconsistent weight block shapes")
        if self.schema is not None and len(self.schema) != l:
            raise InternalError(f"schema has {len(self.schema)} labels, weights have {l}")
        if self.index is not None and len(self.index) != f:
            raise InternalError(f"index has {len(self.index)} features, weights have {f}")

    @property
    def num_features(self) -> int:
        return self.w_emit.shape[0]

    @property
    def num_labels(self) -> int:
        return self.w_emit.shape[1]

    @classmethod
    def zeros(
        cls,
        schema: LabelSchema,
        index: FeatureIndex,
        feature_config: FeatureTemplateConfig | None = None,
    ) -> "CrfModel":
        f, l = len(index), len(schema)
        return cls(
            schema=schema,
            index=index,
            w_emit=np.zeros((f, l)),
            w_trans=np.zeros((l, l)),
            w_start=np.zeros(l),
            w_end=np.zeros(l),
            feature_config=feature_config,
        )


def emissions(model: CrfModel, feature_vectors: list[np.ndarray]) -> np.ndarray:
    """Per-position emission scores, shape (n, L)."""
    out = np.zeros((len(feature_vectors), model.num_labels))
    for t, ids in enumerate(feature_vectors):
        if len(ids):
            if ids.max() >= model.num_features or ids.min() < 0:
                raise DataError(f"feature id out of range at position {t}")
            out[t] = model.w_emit[ids].sum(axis=0)
    return out


def _check_labels(model: CrfModel, labels: np.ndarray, n: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (n,):
        raise DataError(f"expected {n} labels, got shape {labels.shape}")
    if n and (labels.min() < 0 or labels.max() >= model.num_labels):
        raise DataError("label id out of range")
    return labels


def sequence_score(
    model: CrfModel, feature_vectors: list[np.ndarray], labels
) -> float:
    """Unnormalized score of one labeling (the log-linear exponent)."""
    n = len(feature_vectors)
    if n == 0:
        raise DataError("cannot score an empty sequence")
    labels = _check_labels(model, labels, n)
    em = emissions(model, feature_vectors)
    return _gold_score(model, em, labels)


def _gold_score(model: CrfModel, em: np.ndarray, labels: np.ndarray) -> float:
    n = em.shape[0]
    score = model.w_start[labels[0]] + model.w_end[labels[-1]]
    score += em[np.arange(n), labels].sum()
    if n > 1:
        score += model.w_trans[labels[:-1], labels[1:]].sum()
    return float(score)


@dataclass
class Lattice:
    """Forward-backward tables for one sentence.

    ``log_alpha[t, l]`` sums all prefixes ending in label l at t (emission at
    t included); ``log_beta[t, l]`` sums all completions given label l at t
    (emission at t excluded), so logsumexp(log_alpha[t] + log_beta[t]) equals
    ``log_z`` at every position.
    """

    emissions: np.ndarray  # (n, L)
    transitions: np.ndarray  # (L, L)
    log_alpha: np.ndarray  # (n, L)
    log_beta: np.ndarray  # (n, L)
    log_z: float

    def marginals(self) -> np.ndarray:
        """P(y_t = l | x), shape (n, L); each row sums to 1."""
        return np.exp(self.log_alpha + self.log_beta - self.log_z)

    def pairwise_marginals(self) -> np.ndarray:
        """P(y_t = a, y_{t+1} = b | x), shape (n-1, L, L)."""
        n, l = self.log_alpha.shape
        out = np.empty((max(n - 1, 0), l, l))
        for t in range(n - 1):
            out[t] = np.exp(
                self.log_alpha[t][:, None]
                + self.transitions
                + (self.emissions[t + 1] + self.log_beta[t + 1])[None, :]
                - self.log_z
            )
        return out


def forward_backward(model: CrfModel, feature_vectors: list[np.ndarray]) -> Lattice:
    """Log-space forward-backward; cannot overflow for finite weights."""
    em = emissions(model, feature_vectors)
    n, l = em.shape
    if n == 0:
        raise DataError("cannot run forward-backward on an empty sequence")
    trans = model.w_trans
    log_alpha = np.empty((n, l))
    log_alpha[0] = model.w_start + em[0]
    for t in range(1, n):
        log_alpha[t] = logsumexp(log_alpha[t - 1][:, None] + trans, axis=0) + em[t]
    log_z = float(logsumexp(log_alpha[-1] + model.w_end))
    log_beta = np.empty((n, l))
    log_beta[-1] = model.w_end
    for t in range(n - 2, -1, -1):
        log_beta[t] = logsumexp(trans + (em[t + 1] + log_beta[t + 1])[None, :], axis=1)
    return Lattice(em, trans, log_alpha, log_beta, log_z)


@dataclass
class Gradients:
    """Gradient blocks shaped exactly like the model weights."""

    emit: np.ndarray
    trans: np.ndarray
    start: np.ndarray
    end: np.ndarray

    @classmethod
    def zeros(cls, f: int, l: int) -> "Gradients":
        return cls(np.zeros((f, l)), np.zeros((l, l)), np.zeros(l), np.zeros(l))

    def add_(self, other: "Gradients") -> None:
        self.emit += other.emit
        self.trans += other.trans
        self.start += other.start
        self.end += other.end

    def pack(self) -> np.ndarray:
        return np.concatenate(
            [self.emit.ravel(), self.trans.ravel(), self.start, self.end]
        )


def pack_weights(model: CrfModel) -> np.ndarray:
    return np.concatenate(
        [model.w_emit.ravel(), model.w_trans.ravel(), model.w_start, model.w_end]
    )


def set_weights(model: CrfModel, vec: np.ndarray) -> None:
    f, l = model.w_emit.shape
    if vec.shape != (f * l + l * l + 2 * l,):
        raise InternalError(f"weight vector has wrong size {vec.shape}")
    a = f * l
    b = a + l * l
    model.w_emit = vec[:a].reshape(f, l).copy()
    model.w_trans = vec[a:b].reshape(l, l).copy()
    model.w_start = vec[b : b + l].copy()
    model.w_end = vec[b + l :].copy()


def _sentence_nll_grad(
    model: CrfModel, feature_vectors: list[np.ndarray], labels: np.ndarray, g: Gradients
) -> float:
    """Add one sentence's gradient into ``g``; return its NLL term."""
    lat = forward_backward(model, feature_vectors)
    marg = lat.marginals()
    n = len(feature_vectors)
    y = labels
    nll = lat.log_z - _gold_score(model, lat.emissions, y)
    for t in range(n):
        ids = feature_vectors[t]
        if len(ids):
            g.emit[ids] += marg[t]
            g.emit[ids, y[t]] -= 1.0
    if n > 1:
        g.trans += lat.pairwise_marginals().sum(axis=0)
        np.add.at(g.trans, (y[:-1], y[1:]), -1.0)
    g.start += marg[0]
    g.start[y[0]] -= 1.0
    g.end += marg[-1]
    g.end[y[-1]] -= 1.0
    return nll


def nll_and_gradient(
    model: CrfModel,
    batch: list[tuple[list[np.ndarray], np.ndarray]],
    l2: float = 0.0,
    threads: int = 1,
) -> tuple[float, Gradients]:
    """Exact regularized NLL and gradient over a batch.

    Sentences are accumulated in fixed-size chunks combined in corpus order,
    so the result is bit-identical for any ``threads`` value.
    """
    f, l = model.w_emit.shape
    checked = [
        (fvs, _check_labels(model, labels, len(fvs))) for fvs, labels in batch
    ]
    chunks = [checked[i : i + _GRAD_CHUNK] for i in range(0, len(checked), _GRAD_CHUNK)]

    def work(chunk):
        g = Gradients.zeros(f, l)
        nll = 0.0
        for fvs, labels in chunk:
            nll += _sentence_nll_grad(model, fvs, labels, g)
        return nll, g

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(c) for c in chunks]

    total = Gradients.zeros(f, l)
    objective = 0.0
    for nll, g in results:
        objective += nll
        total.add_(g)
    if l2:
        objective += 0.5 * l2 * (
            float((model.w_emit**2).sum())
            + float((model.w_trans**2).sum())
            + float((model.w_start**2).sum())
            + float((model.w_end**2).sum())
        )
        total.emit += l2 * model.w_emit
        total.trans += l2 * model.w_trans
        total.start += l2 * model.w_start
        total.end += l2 * model.w_end
    return objective, total


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of batch maximum-likelihood training."""

    l2: float = 1.0
    max_iterations: int = 200
    tolerance: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        if self.l2 < 0:
            raise DataError(f"l2 must be >= 0, got {self.l2}")
        if self.max_iterations < 1:
            raise DataError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.tolerance <= 0:
            raise DataError(f"tolerance must be > 0, got {self.tolerance}")


@dataclass
class TrainResult:
    model: CrfModel
    objectives: list[float]  # initial objective, then one per accepted iteration
    converged: bool
    message: str

    @property
    def iterations(self) -> int:
        return max(len(self.objectives) - 1, 0)


def train(
    batch: list[tuple[list[np.ndarray], np.ndarray]],
    schema: LabelSchema,
    index: FeatureIndex,
    config: TrainConfig | None = None,
    feature_config: FeatureTemplateConfig | None = None,
    threads: int = 1,
) -> TrainResult:
    """Minimize the regularized NLL from zero-initialized weights.

    Deterministic batch L-BFGS with a line search that only accepts
    decreasing steps; stops when the relative objective decrease falls below
    ``config.tolerance`` or after ``config.max_iterations`` accepted
    iterations. The objective is convex, so the seed only matters to callers
    that shuffle or subsample upstream.
    """
    if not batch:
        raise DataError("cannot train on an empty corpus")
    if not index.frozen:
        raise InternalError("the feature index must be frozen before training")
    config = config or TrainConfig()
    model = CrfModel.zeros(schema, index, feature_config)
    objectives: list[float] = []
    last_f = [np.nan]

    def fun(vec: np.ndarray):
        set_weights(model, vec)
        obj, grad = nll_and_gradient(model, batch, config.l2, threads)
        if not np.isfinite(obj):
            raise InternalError(f"non-finite objective at iteration {len(objectives)}")
        if not objectives:
            objectives.append(obj)  # objective at the zero start point
        last_f[0] = obj
        return obj, grad.pack()

    def record(_xk):
        # L-BFGS-B invokes the callback right after evaluating the accepted
        # iterate, so last_f holds the objective at _xk
        objectives.append(last_f[0])

    f, l = len(index), len(schema)
    x0 = np.zeros(f * l + l * l + 2 * l)
    res = minimize(
        fun,
        x0,
        jac=True,
        method="L-BFGS-B",
        callback=record,
        options={
            "maxiter": config.max_iterations,
            "ftol": config.tolerance,
            "gtol": 1e-12,
            "maxls": 50,
        },
    )
    set_weights(model, res.x)
    message = res.message.decode() if isinstance(res.message, bytes) else str(res.message)
    return TrainResult(model=model, objectives=objectives, converged=bool(res.success), message=message)


def bio_transition_masks(schema: LabelSchema) -> tuple[np.ndarray, np.ndarray]:
    """(start, transition) masks that are -inf on illegal BIO2 moves, else 0."""
    labels = schema.labels
    l = len(labels)
    start = np.zeros(l)
    trans = np.zeros((l, l))
    for b, lab in enumerate(labels):
        if lab.startswith("I-"):
            typ = lab[2:]
            start[b] = -np.inf
            legal = {f"B-{typ}", f"I-{typ}"}
            for a, prev in enumerate(labels):
                if prev not in legal:
                    trans[a, b] = -np.inf
    return start, trans


def viterbi(
    model: CrfModel, feature_vectors: list[np.ndarray], bio_mask: bool = False
) -> tuple[list[int], float]:
    """Highest-scoring labeling and its score.

    Ties break toward the smaller label id at every backtrace decision.
    With ``bio_mask`` the decoder never proposes an I-X that does not
    continue a B-X/I-X of the same type.
    """
    em = emissions(model, feature_vectors)
    n, l = em.shape
    if n == 0:
        raise DataError("cannot decode an empty sequence")
    trans = model.w_trans
    start = model.w_start
    if bio_mask:
        if model.schema is None:
            raise InternalError("bio_mask requires a model with a label schema")
        start_mask, trans_mask = bio_transition_masks(model.schema)
        start = start + start_mask
        trans = trans + trans_mask
    delta = start + em[0]
    backptr = np.zeros((n, l), dtype=np.int64)
    for t in range(1, n):
        scores = delta[:, None] + trans  # (previous, current)
        backptr[t] = scores.argmax(axis=0)  # first max = smallest previous id
        delta = scores[backptr[t], np.arange(l)] + em[t]
    final = delta + model.w_end
    last = int(final.argmax())
    best = float(final[last])
    path = [last]
    for t in range(n - 1, 0, -1):
        path.append(int(backptr[t, path[-1]]))
    path.reverse()
    return path, best


def save_model(model: CrfModel, path) -> None:
    """Write a model as a CRFSEQ1 container (magic line + one JSON line).

    Weight blocks are base64-encoded little-endian float64 in row-major
    order; the encoding is canonical, so identical models produce
    byte-identical files.
    """
    if model.schema is None or model.index is None:
        raise InternalError("saving requires a model with a schema and feature index")
    header = {
        "version": MODEL_VERSION,
        "entity_types": list(model.schema.entity_types),
        "label_count": model.num_labels,
        "feature_count": model.num_features,
        "feature_config": (
            model.feature_config.to_dict() if model.feature_config is not None else None
        ),
        "features": model.index.feature_strings(),
        "w_emit": _encode(model.w_emit),
        "w_trans": _encode(model.w_trans),
        "w_start": _encode(model.w_start),
        "w_end": _encode(model.w_end),
    }
    text = (
        MODEL_MAGIC
        + "\n"
        + json.dumps(header, ensure_ascii=False, sort_keys=True, separators=(",", ":"))
        + "\n"
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def load_model(path) -> CrfModel:
    """Load a CRFSEQ1 container; predictions round-trip exactly."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read model file {path}: {exc}") from exc
    lines = text.split("\n")
    if not lines or lines[0] != MODEL_MAGIC:
        raise DataError(
            f"{path} is not a model file: expected magic string {MODEL_MAGIC!r}"
        )
    if len(lines) < 2 or not lines[1].strip():
        raise DataError(f"model file {path} is truncated (missing header)")
    try:
        header = json.loads(lines[1])
    except json.JSONDecodeError as exc:
        raise DataError(f"model file {path} is corrupt: {exc}") from exc
    if header.get("version") != MODEL_VERSION:
        raise DataError(
            f"model file {path} has unsupported version {header.get('version')!r}"
        )
    try:
        schema = LabelSchema(tuple(header["entity_types"]))
        f, l = int(header["feature_count"]), int(header["label_count"])
        features = header["features"]
        cfg = header["feature_config"]
        blocks = {k: header[k] for k in ("w_emit", "w_trans", "w_start", "w_end")}
    except (KeyError, TypeError) as exc:
        raise DataError(f"model file {path} is missing fields: {exc}") from exc
    if len(schema) != l:
        raise DataError(f"model file {path}: schema yields {len(schema)} labels, header says {l}")
    if len(features) != f:
        raise DataError(f"model file {path}: {len(features)} feature strings, header says {f}")
    index = FeatureIndex(features).freeze()
    model = CrfModel(
        schema=schema,
        index=index,
        w_emit=_decode(blocks["w_emit"], (f, l), path),
        w_trans=_decode(blocks["w_trans"], (l, l), path),
        w_start=_decode(blocks["w_start"], (l,), path),
        w_end=_decode(blocks["w_end"], (l,), path),
        feature_config=FeatureTemplateConfig.from_dict(cfg) if cfg is not None else None,
    )
    return model


def _encode(arr: np.ndarray) -> str:
    return base64.b64encode(
        np.ascontiguousarray(arr, dtype="<f8").tobytes()
    ).decode("ascii")


def _decode(text: str, shape: tuple[int, ...], path) -> np.ndarray:
    try:
        raw = base64.b64decode(text, validate=True)
    except (ValueError, TypeError) as exc:
        raise DataError(f"model file {path}: bad weight block: {exc}") from exc
    expected = 8 * int(np.prod(shape))
    if len(raw) != expected:
        raise DataError(
            f"model file {path}: weight block has {len(raw)} bytes, expected {expected}"
        )
    return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)
