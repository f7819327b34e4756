"""Joint training of the feature scorer and transition weights.

Plain mini-batch gradient descent on summed sentence NLL, which is convex
for the linear scorer, so everything starts at zero.  The learning rate is
two-phase: a high first-epoch rate that decays once and then holds.  After
every epoch the model is scored on the dev set with strict entity F1, and
the snapshot from the best epoch (earliest on ties) is returned.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Sentence, TagSequence
from .crf import FULL_SIZE, TaggerModel, TransitionMatrix, _nll_and_gradient
from .encoder import FeatureVocabulary, LinearScorerParams
from .evaluation import entity_prf
from .tagscheme import TAG_INDEX, tags_to_entities

CorpusPairs = Sequence[tuple[Sentence, TagSequence]]


class NonFiniteLossError(RuntimeError):
    """Training produced a non-finite loss or diverged to non-finite weights."""

    def __init__(self, sentence_id: str, value: float, what: str = "loss"):
        super().__init__(f"non-finite {what} {value!r} at sentence {sentence_id!r}")
        self.sentence_id = sentence_id
        self.value = value


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 16
    lr_initial: float = 0.5
    lr_decayed: float = 0.1
    decay_epoch: int = 2
    l2: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if self.lr_initial <= 0 or self.lr_decayed <= 0:
            raise ValueError("learning rates must be positive")
        if self.decay_epoch < 1:
            raise ValueError(f"decay epoch must be >= 1, got {self.decay_epoch}")
        if self.l2 < 0:
            raise ValueError(f"l2 must be non-negative, got {self.l2}")

    def rate_for_epoch(self, epoch: int) -> float:
        """Learning rate for a 1-based epoch number."""
        return self.lr_initial if epoch < self.decay_epoch else self.lr_decayed


@dataclass(frozen=True)
class TrainReport:
    """Per-epoch mean train NLL and dev entity F1, plus the selected epoch
    (0-based index of the dev-best epoch, earliest on ties)."""

    train_nll: tuple[float, ...]
    dev_f1: tuple[float, ...]
    selected_epoch: int

    def to_dict(self) -> dict:
        return {
            "train_nll": list(self.train_nll),
            "dev_f1": list(self.dev_f1),
            "selected_epoch": self.selected_epoch,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _prepare(corpus: CorpusPairs, vocab: FeatureVocabulary):
    features = []
    golds = []
    for sentence, tags in corpus:
        if len(tags) != len(sentence):
            raise ValueError(
                f"sentence {sentence.id!r}: {len(sentence)} chars but {len(tags)} tags"
            )
        features.append(vocab.feature_ids(sentence))
        golds.append(np.array([TAG_INDEX[t] for t in tags.tags], dtype=np.intp))
    return features, golds


def _snapshot(vocab: FeatureVocabulary, weights: np.ndarray, transitions: np.ndarray) -> TaggerModel:
    return TaggerModel(
        vocab, LinearScorerParams(weights), TransitionMatrix(transitions)
    )


def evaluate_dev(model: TaggerModel, dev: CorpusPairs) -> float:
    """Strict entity F1 (0-100) of constrained decoding against dev tags."""
    pred = {}
    gold = {}
    for sentence, tags in dev:
        decoded = model.decode(sentence, constrain_bio=True)
        pred[sentence.id] = tags_to_entities(sentence, decoded)
        gold[sentence.id] = tags_to_entities(sentence, tags)
    return entity_prf(pred, gold).overall.f1


def train(
    corpus: CorpusPairs, dev: CorpusPairs, config: TrainConfig
) -> tuple[TaggerModel, TrainReport]:
    """Train on ``corpus``, select by dev F1.  Deterministic given the seed."""
    if not corpus:
        raise ValueError("empty training corpus")
    if not dev:
        raise ValueError("empty dev corpus")
    train_ids = {s.id for s, _ in corpus}
    shared = train_ids & {s.id for s, _ in dev}
    if shared:
        raise ValueError(f"dev set shares sentence ids with training set: {sorted(shared)[:5]}")

    vocab = FeatureVocabulary.build(s for s, _ in corpus)
    features, golds = _prepare(corpus, vocab)
    weights = np.zeros((vocab.size, len(TAG_INDEX)))
    transitions = np.zeros((FULL_SIZE, FULL_SIZE))

    rng = np.random.default_rng(config.seed)
    nll_history: list[float] = []
    f1_history: list[float] = []
    best_model: TaggerModel | None = None
    best_f1 = -1.0
    best_epoch = 0

    for epoch in range(1, config.epochs + 1):
        rate = config.rate_for_epoch(epoch)
        order = rng.permutation(len(corpus))
        epoch_nll = 0.0
        for lo in range(0, len(order), config.batch_size):
            batch = order[lo:lo + config.batch_size]
            grad_w = np.zeros_like(weights)
            grad_a = np.zeros_like(transitions)
            for j in batch:
                ids = features[j]
                emissions = weights[ids].sum(axis=1)
                value, grad_p, grad_a_j = _nll_and_gradient(
                    emissions, transitions, golds[j]
                )
                if not np.isfinite(value):
                    raise NonFiniteLossError(corpus[j][0].id, value)
                epoch_nll += value
                np.add.at(
                    grad_w,
                    ids.ravel(),
                    np.repeat(grad_p, ids.shape[1], axis=0),
                )
                grad_a += grad_a_j
            grad_w /= len(batch)
            grad_a /= len(batch)
            if config.l2 > 0:
                grad_w += config.l2 * weights
                grad_a += config.l2 * transitions
            weights -= rate * grad_w
            transitions -= rate * grad_a
            if not (np.isfinite(weights).all() and np.isfinite(transitions).all()):
                raise NonFiniteLossError(
                    corpus[batch[0]][0].id, float("inf"), what="parameter update"
                )

        model = _snapshot(vocab, weights, transitions)
        dev_f1 = evaluate_dev(model, dev)
        nll_history.append(epoch_nll / len(corpus))
        f1_history.append(dev_f1)
        if dev_f1 > best_f1:
            best_f1 = dev_f1
            best_model = model
            best_epoch = epoch - 1

    report = TrainReport(tuple(nll_history), tuple(f1_history), best_epoch)
    assert best_model is not None
    return best_model, report
