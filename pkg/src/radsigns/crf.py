"""Linear-chain CRF over the 7-tag set.

A tag path is scored as

    score(y) = A[start, y_1] + sum_i A[y_i, y_{i+1}] + A[y_n, end]
             + sum_i P[i, y_i]

where P is the n x 7 emission matrix and A the 9 x 9 transition matrix with
virtual start/end tags at indices 7 and 8.  The partition function, path
probabilities and marginals come from the forward-backward algorithm; all
accumulation is in log space with max-shifted logsumexp so long sentences
cannot overflow.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .corpus import NUM_TAGS, TAG_LABELS, EmissionMatrix, Sentence, TagSequence
from .encoder import FeatureVocabulary, LinearScorerParams, score_sentence
from .tagscheme import TAG_INDEX, tag_indices, tags_from_indices

START = NUM_TAGS        # virtual start tag, row START is read for entry scores
END = NUM_TAGS + 1      # virtual end tag, column END is read for exit scores
FULL_SIZE = NUM_TAGS + 2

MODEL_FORMAT = "radsigns-crf-linear/1"


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    return np.squeeze(m, axis=axis) + np.log(np.sum(np.exp(a - m), axis=axis))


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """(k+2) x (k+2) tag-to-tag scores.  Entries into start and out of end
    are never read."""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.float64)
        if matrix.shape != (FULL_SIZE, FULL_SIZE):
            raise ValueError(
                f"transition matrix must be {FULL_SIZE} x {FULL_SIZE}, "
                f"got shape {matrix.shape}"
            )
        if not np.isfinite(matrix).all():
            raise ValueError("non-finite transition score")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def start_index(self) -> int:
        return START

    @property
    def end_index(self) -> int:
        return END

    @classmethod
    def zeros(cls) -> "TransitionMatrix":
        return cls(np.zeros((FULL_SIZE, FULL_SIZE)))


def _check_length(emissions: EmissionMatrix, tags: TagSequence) -> None:
    if len(tags) != emissions.n:
        raise ValueError(
            f"emission matrix has {emissions.n} rows but tag sequence "
            f"for {tags.sentence_id!r} has {len(tags)}"
        )


def _score_path(P: np.ndarray, A: np.ndarray, y: np.ndarray) -> float:
    score = A[START, y[0]] + A[y[-1], END] + P[np.arange(len(y)), y].sum()
    if len(y) > 1:
        score += A[y[:-1], y[1:]].sum()
    return float(score)


def _forward(P: np.ndarray, A: np.ndarray) -> np.ndarray:
    n, k = P.shape
    alpha = np.empty((n, k))
    alpha[0] = A[START, :k] + P[0]
    for i in range(1, n):
        alpha[i] = _logsumexp(alpha[i - 1][:, None] + A[:k, :k], axis=0) + P[i]
    return alpha


def _backward(P: np.ndarray, A: np.ndarray) -> np.ndarray:
    n, k = P.shape
    beta = np.empty((n, k))
    beta[n - 1] = A[:k, END]
    for i in range(n - 2, -1, -1):
        beta[i] = _logsumexp(A[:k, :k] + (P[i + 1] + beta[i + 1])[None, :], axis=1)
    return beta


def _log_partition(P: np.ndarray, A: np.ndarray) -> float:
    alpha = _forward(P, A)
    return float(_logsumexp(alpha[-1] + A[:NUM_TAGS, END], axis=0))


def _nll_and_gradient(
    P: np.ndarray, A: np.ndarray, y: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    n, k = P.shape
    alpha = _forward(P, A)
    beta = _backward(P, A)
    log_z = float(_logsumexp(alpha[-1] + A[:k, END], axis=0))

    # alpha includes the emission at i, beta does not, so their sum is the
    # full log mass of paths through (i, tag)
    gamma = np.exp(alpha + beta - log_z)

    grad_p = gamma.copy()
    grad_p[np.arange(n), y] -= 1.0

    grad_a = np.zeros_like(A)
    for i in range(n - 1):
        pairwise = np.exp(
            alpha[i][:, None] + A[:k, :k] + (P[i + 1] + beta[i + 1])[None, :] - log_z
        )
        grad_a[:k, :k] += pairwise
    if n > 1:
        np.add.at(grad_a, (y[:-1], y[1:]), -1.0)
    grad_a[START, :k] += gamma[0]
    grad_a[START, y[0]] -= 1.0
    grad_a[:k, END] += gamma[-1]
    grad_a[y[-1], END] -= 1.0

    value = log_z - _score_path(P, A, y)
    return value, grad_p, grad_a


def path_score(emissions: EmissionMatrix, transitions: TransitionMatrix, tags: TagSequence) -> float:
    """Unnormalized log-score of one tag path."""
    _check_length(emissions, tags)
    y = np.asarray(tag_indices(tags), dtype=np.intp)
    return _score_path(emissions.scores, transitions.matrix, y)


def log_partition(emissions: EmissionMatrix, transitions: TransitionMatrix) -> float:
    """log of the summed exp-scores of all 7^n paths, via the forward pass."""
    return _log_partition(emissions.scores, transitions.matrix)


def log_partition_backward(emissions: EmissionMatrix, transitions: TransitionMatrix) -> float:
    """Same quantity computed with the backward recursion; cross-check only."""
    P, A = emissions.scores, transitions.matrix
    beta = _backward(P, A)
    return float(_logsumexp(A[START, :NUM_TAGS] + P[0] + beta[0], axis=0))


def nll(emissions: EmissionMatrix, transitions: TransitionMatrix, gold: TagSequence) -> float:
    """Negated log-likelihood of the gold path; non-negative."""
    _check_length(emissions, gold)
    y = np.asarray(tag_indices(gold), dtype=np.intp)
    P, A = emissions.scores, transitions.matrix
    return _log_partition(P, A) - _score_path(P, A, y)


def nll_gradient(
    emissions: EmissionMatrix, transitions: TransitionMatrix, gold: TagSequence
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of the NLL: per-position tag marginals minus gold indicators,
    and the transition analogue from pairwise marginals."""
    value, grad_p, grad_a = nll_and_gradient(emissions, transitions, gold)
    return grad_p, grad_a


def nll_and_gradient(
    emissions: EmissionMatrix, transitions: TransitionMatrix, gold: TagSequence
) -> tuple[float, np.ndarray, np.ndarray]:
    """NLL value together with both gradients (one forward-backward pass)."""
    _check_length(emissions, gold)
    y = np.asarray(tag_indices(gold), dtype=np.intp)
    return _nll_and_gradient(emissions.scores, transitions.matrix, y)


def bio_transition_mask() -> np.ndarray:
    """Boolean (k+2) x (k+2) matrix; False marks transitions into I-X from
    anything other than B-X or I-X."""
    mask = np.ones((FULL_SIZE, FULL_SIZE), dtype=bool)
    for label in TAG_LABELS:
        if not label.startswith("I-"):
            continue
        dest = TAG_INDEX[label]
        allowed = {TAG_INDEX["B-" + label[2:]], dest}
        for src in range(FULL_SIZE):
            if src not in allowed:
                mask[src, dest] = False
    return mask


def viterbi_decode(
    emissions: EmissionMatrix,
    transitions: TransitionMatrix,
    constrain_bio: bool = False,
) -> TagSequence:
    """Highest-scoring tag path; ties break toward the lowest tag index.

    With ``constrain_bio`` the masked transitions score -inf, so the decoded
    path never opens an entity with an inside tag.  Training stays
    unconstrained; the mask applies only here.
    """
    P = emissions.scores
    A = transitions.matrix
    if constrain_bio:
        A = np.where(bio_transition_mask(), A, -np.inf)
    n, k = P.shape

    delta = A[START, :k] + P[0]
    back = np.zeros((n, k), dtype=np.intp)
    for i in range(1, n):
        candidates = delta[:, None] + A[:k, :k]
        back[i] = np.argmax(candidates, axis=0)
        delta = np.max(candidates, axis=0) + P[i]
    delta = delta + A[:k, END]

    path = np.zeros(n, dtype=np.intp)
    path[-1] = int(np.argmax(delta))
    for i in range(n - 1, 0, -1):
        path[i - 1] = back[i, path[i]]
    return tags_from_indices(emissions.sentence_id, path.tolist())


@dataclass(frozen=True, eq=False)
class TaggerModel:
    """Trained feature scorer plus transition weights."""

    vocab: FeatureVocabulary
    weights: LinearScorerParams
    transitions: TransitionMatrix

    def emissions(self, sentence: Sentence) -> EmissionMatrix:
        return score_sentence(sentence, self.weights, self.vocab)

    def decode(self, sentence: Sentence, constrain_bio: bool = True) -> TagSequence:
        return viterbi_decode(self.emissions(sentence), self.transitions, constrain_bio)


def save_model(model: TaggerModel, path) -> None:
    document = {
        "format": MODEL_FORMAT,
        "tags": list(TAG_LABELS),
        "features": model.vocab.index,
        "unk_index": model.vocab.unk_index,
        "weights": model.weights.weights.tolist(),
        "transitions": model.transitions.matrix.tolist(),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(document, fh, ensure_ascii=False)
        fh.write("\n")


def load_model(path) -> TaggerModel:
    with open(path, encoding="utf-8") as fh:
        document = json.load(fh)
    if document.get("format") != MODEL_FORMAT:
        raise ValueError(
            f"{path}: unsupported model format {document.get('format')!r}"
        )
    if tuple(document.get("tags", ())) != TAG_LABELS:
        raise ValueError(f"{path}: model tag set does not match {TAG_LABELS}")
    vocab = FeatureVocabulary(document["features"], document["unk_index"])
    weights = LinearScorerParams(np.array(document["weights"]))
    if weights.weights.shape[0] != vocab.size:
        raise ValueError(f"{path}: weight rows do not match feature count")
    transitions = TransitionMatrix(np.array(document["transitions"]))
    return TaggerModel(vocab, weights, transitions)
