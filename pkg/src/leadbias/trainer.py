"""Policy-gradient training of the extractive scorer.

Each step samples B candidate summaries for one document, rewards them
with average ROUGE against the reference, subtracts the batch-mean
baseline, and descends the surrogate loss

    L = -(1/B) * sum_b (R_b - baseline) * log Prob(sample_b) + beta * L_aux

with plain SGD. The auxiliary term depends on the regime: none (base,
pretrain), the KL divergence from the reference-derived sentence
distribution to the model's normalized affinities (kl, pretrain_kl), or
the negated entropy of the model distribution (entropy). Pretrain
regimes consume sentence-shuffled documents for the first
`pretrain_epochs` epochs, reshuffled once per epoch, before fine-tuning
on the original order.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus, Document, Perturbation, derive_seed, perturb, shuffle_indices
from .oracle import OracleRecord, TripletScorer, target_distribution
from .policy import (
    FEATURE_VERSION,
    ScorerParams,
    featurize,
    greedy_decode,
    model_distribution,
    sample_summary,
    score,
)

REGIMES = ("base", "entropy", "kl", "pretrain", "pretrain_kl")

_AUX = {"base": None, "pretrain": None, "entropy": "entropy", "kl": "kl", "pretrain_kl": "kl"}

_CONFIG_FIELDS = {
    "alpha": float,
    "beta": float,
    "epochs_total": int,
    "pretrain_epochs": int,
    "samples_per_doc": int,
    "regime": str,
    "seed": int,
}


@dataclass
class TrainerConfig:
    alpha: float = 1e-4
    beta: float = 0.0095
    epochs_total: int = 4
    pretrain_epochs: int = 0
    samples_per_doc: int = 20
    regime: str = "base"
    seed: int = 0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.epochs_total < 0:
            raise ValueError("epochs_total must be non-negative")
        if not 0 <= self.pretrain_epochs <= self.epochs_total:
            raise ValueError("pretrain_epochs must lie in [0, epochs_total]")
        if self.samples_per_doc < 1:
            raise ValueError("samples_per_doc must be at least 1")
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}, got {self.regime!r}")


@dataclass
class TrainState:
    params: ScorerParams
    step: int = 0
    epoch: int = 0
    curve: list[tuple[int, float]] = field(default_factory=list)
    data_sources: list[str] = field(default_factory=list)


@dataclass
class LossBreakdown:
    policy_loss: float
    aux_loss: float
    reward_mean: float


def kl_loss(p_r, p_m) -> float:
    """KL divergence sum p_r * ln(p_r / p_m) in nats, with 0 ln 0 = 0."""
    p_r = np.asarray(p_r, dtype=np.float64)
    p_m = np.asarray(p_m, dtype=np.float64)
    if len(p_r) != len(p_m):
        raise ValueError(f"length mismatch: {len(p_r)} vs {len(p_m)}")
    mask = p_r > 0
    return float(np.sum(p_r[mask] * np.log(p_r[mask] / p_m[mask])))


def entropy_loss(p_m) -> float:
    """Negated entropy sum p ln p; minimizing it pushes toward uniform."""
    p_m = np.asarray(p_m, dtype=np.float64)
    return float(np.sum(p_m * np.log(p_m)))


def _extended(features: np.ndarray) -> np.ndarray:
    """Features with a trailing 1 column so the bias rides along in theta."""
    return np.hstack([features, np.ones((len(features), 1))])


def _theta(params: ScorerParams) -> np.ndarray:
    return np.concatenate([params.weights, [params.bias]])


def _log_prob_and_grad(X: np.ndarray, affinities: np.ndarray, indices) -> tuple[float, np.ndarray]:
    """log Prob of an ordered without-replacement sample and its theta-gradient."""
    g = affinities * (1.0 - affinities)
    remaining = float(affinities.sum())
    grad_pool = X.T @ g
    logp = 0.0
    grad = np.zeros(X.shape[1])
    for i in indices:
        logp += float(np.log(affinities[i])) - float(np.log(remaining))
        grad += (1.0 - affinities[i]) * X[i] - grad_pool / remaining
        remaining -= float(affinities[i])
        grad_pool = grad_pool - g[i] * X[i]
    return logp, grad


def _log_prob(affinities: np.ndarray, indices) -> float:
    remaining = float(affinities.sum())
    logp = 0.0
    for i in indices:
        logp += float(np.log(affinities[i])) - float(np.log(remaining))
        remaining -= float(affinities[i])
    return logp


def _surrogate(params, features, samples, rewards, target, cfg, want_grad=True):
    """Loss (and optionally gradient) of the frozen-sample surrogate."""
    X = _extended(np.asarray(features, dtype=np.float64))
    affinities = score(params, features)
    rewards = np.asarray(rewards, dtype=np.float64)
    baseline = float(rewards.mean())
    advantages = rewards - baseline

    policy_loss = 0.0
    grad = np.zeros(X.shape[1]) if want_grad else None
    for adv, indices in zip(advantages, samples):
        logp, g = (
            _log_prob_and_grad(X, affinities, indices)
            if want_grad
            else (_log_prob(affinities, indices), None)
        )
        policy_loss -= adv * logp
        if want_grad:
            grad -= adv * g
    policy_loss /= len(samples)
    if want_grad:
        grad /= len(samples)

    aux_kind = _AUX[cfg.regime]
    aux_loss = 0.0
    if aux_kind is not None:
        p_m = model_distribution(affinities)
        g_vec = affinities * (1.0 - affinities)
        total_affinity = float(affinities.sum())
        if aux_kind == "kl":
            aux_loss = kl_loss(target, p_m)
            if want_grad and cfg.beta != 0.0:
                aux_grad = -X.T @ (target * (1.0 - affinities)) + (X.T @ g_vec) / total_affinity
                grad += cfg.beta * aux_grad
        else:
            aux_loss = entropy_loss(p_m)
            if want_grad and cfg.beta != 0.0:
                log_pm = np.log(p_m)
                aux_grad = (X.T @ (g_vec * log_pm) - aux_loss * (X.T @ g_vec)) / total_affinity
                grad += cfg.beta * aux_grad
    return policy_loss, aux_loss, baseline, grad


def surrogate_loss(params, features, samples, rewards, target, cfg) -> float:
    """Total loss of the frozen-sample surrogate (policy + beta * aux)."""
    policy_loss, aux_loss, _, _ = _surrogate(
        params, features, samples, rewards, target, cfg, want_grad=False
    )
    return policy_loss + cfg.beta * aux_loss


def surrogate_gradient(params, features, samples, rewards, target, cfg) -> np.ndarray:
    """Analytic gradient of `surrogate_loss` w.r.t. (weights, bias)."""
    _, _, _, grad = _surrogate(params, features, samples, rewards, target, cfg, want_grad=True)
    return grad


def policy_gradient_step(
    state: TrainState,
    doc: Document,
    record: OracleRecord,
    cfg: TrainerConfig,
    rng: random.Random,
    scorer: TripletScorer | None = None,
    features: np.ndarray | None = None,
) -> tuple[TrainState, LossBreakdown]:
    """One SGD update from B sampled summaries of a single document."""
    scorer = scorer or TripletScorer(doc)
    if features is None:
        features = featurize(doc)
    affinities = score(state.params, features)
    samples = [sample_summary(affinities, rng).indices for _ in range(cfg.samples_per_doc)]
    rewards = [scorer.avg(s) for s in samples]
    target = None
    if _AUX[cfg.regime] == "kl":
        target = target_distribution(record.scores)
    policy_loss, aux_loss, reward_mean, grad = _surrogate(
        params=state.params,
        features=features,
        samples=samples,
        rewards=rewards,
        target=target,
        cfg=cfg,
    )
    if not np.isfinite(grad).all():
        raise FloatingPointError(f"non-finite gradient on document {doc.id!r} at step {state.step}")
    state.params.weights = state.params.weights - cfg.alpha * grad[:-1]
    state.params.bias = float(state.params.bias - cfg.alpha * grad[-1])
    state.step += 1
    return state, LossBreakdown(policy_loss=policy_loss, aux_loss=aux_loss, reward_mean=reward_mean)


def _remap_record(record: OracleRecord, perm: list[int]) -> OracleRecord:
    """Carry cached per-sentence scores through a shuffle permutation.

    A sentence's score against the reference does not depend on its
    position, so shuffled documents reuse the cache instead of
    recomputing it.
    """
    inverse = [0] * len(perm)
    for new_pos, old_pos in enumerate(perm):
        inverse[old_pos] = new_pos
    return OracleRecord(
        doc_id=record.doc_id,
        best=tuple(sorted(inverse[b] for b in record.best)),
        best_score=record.best_score,
        scores=[record.scores[old] for old in perm],
    )


def _mean_greedy_avg_rouge(params, scorers, features_list) -> float:
    total = 0.0
    for scorer, features in zip(scorers, features_list):
        selection = greedy_decode(score(params, features))
        total += scorer.avg(selection.indices)
    return total / len(scorers)


def train(
    corpus_train: Corpus,
    corpus_dev: Corpus,
    cache: dict[str, OracleRecord],
    cfg: TrainerConfig,
) -> TrainState:
    """Run the full schedule and return the final state.

    Pretrain regimes draw the first `pretrain_epochs` epochs from
    per-epoch reshuffled copies of the training documents (tagged
    "shuffled" in state.data_sources); everything else reads the
    original order. Documents are visited in a seeded shuffled order
    each epoch. After every epoch the greedy policy is scored on the dev
    corpus and appended to the curve.
    """
    missing = [doc.id for doc in corpus_train if doc.id not in cache]
    if missing:
        raise ValueError(f"cache is missing {len(missing)} training documents, e.g. {missing[0]!r}")

    state = TrainState(params=ScorerParams.zeros())
    sample_rng = random.Random(derive_seed(cfg.seed, "sampling"))

    train_docs = list(corpus_train)
    base_scorers = [TripletScorer(doc) for doc in train_docs]
    base_features = [featurize(doc) for doc in train_docs]
    base_records = [cache[doc.id] for doc in train_docs]

    dev_scorers = [TripletScorer(doc) for doc in corpus_dev]
    dev_features = [featurize(doc) for doc in corpus_dev]

    pretraining = cfg.regime in ("pretrain", "pretrain_kl")
    for epoch in range(1, cfg.epochs_total + 1):
        if pretraining and epoch <= cfg.pretrain_epochs:
            ep_seed = derive_seed(cfg.seed, "shuffle", epoch)
            p = Perturbation("random", ep_seed)
            docs = [perturb(doc, p) for doc in train_docs]
            scorers = [TripletScorer(doc) for doc in docs]
            features = [featurize(doc) for doc in docs]
            records = [
                _remap_record(rec, shuffle_indices(doc.id, len(doc.sentences), ep_seed))
                for rec, doc in zip(base_records, train_docs)
            ]
            source = "shuffled"
        else:
            docs, scorers, features, records = train_docs, base_scorers, base_features, base_records
            source = "original"

        order = list(range(len(docs)))
        random.Random(derive_seed(cfg.seed, "order", epoch)).shuffle(order)
        for i in order:
            policy_gradient_step(
                state, docs[i], records[i], cfg, sample_rng, scorer=scorers[i], features=features[i]
            )
        state.epoch = epoch
        state.curve.append((epoch, _mean_greedy_avg_rouge(state.params, dev_scorers, dev_features)))
        state.data_sources.append(source)
    return state


def emit_curve(state: TrainState, path: str | Path) -> None:
    """Write the per-epoch dev curve as CSV (header epoch,avg_rouge)."""
    lines = ["epoch,avg_rouge"]
    lines += [f"{epoch},{value!r}" for epoch, value in state.curve]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def save_checkpoint(state: TrainState, path: str | Path) -> None:
    payload = {
        "weights": [float(w) for w in state.params.weights],
        "bias": float(state.params.bias),
        "feature_version": FEATURE_VERSION,
        "step": state.step,
    }
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[ScorerParams, int]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    params = ScorerParams(
        weights=np.array(payload["weights"], dtype=np.float64), bias=float(payload["bias"])
    )
    return params, int(payload.get("step", 0))


def load_config(path: str | Path) -> TrainerConfig:
    """Parse a flat `key = value` config file into a TrainerConfig."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}: line {lineno} is not `key = value`")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in _CONFIG_FIELDS:
            raise ValueError(f"{path}: unknown config key {key!r} on line {lineno}")
        try:
            values[key] = _CONFIG_FIELDS[key](raw)
        except ValueError as exc:
            raise ValueError(f"{path}: bad value for {key!r} on line {lineno}: {raw!r}") from exc
    return TrainerConfig(**values)
