"""Conversions between entity spans and per-character BIO tag paths.

Decoding is total: any tag sequence over the 7-tag vocabulary yields a valid
entity set.  An I-X with no live run of the same kind opens a new entity
(orphan-I repair), and a kind switch inside a run starts a new entity at the
switch position.
"""

from __future__ import annotations

from typing import Sequence

from .corpus import NUM_TAGS, TAG_LABELS, Entity, Sentence, TagSequence

TAG_INDEX = {label: i for i, label in enumerate(TAG_LABELS)}

BEGIN_LABEL = {"P": "B-P", "D": "B-D", "Abn": "B-Abn"}
INSIDE_LABEL = {"P": "I-P", "D": "I-D", "Abn": "I-Abn"}
KIND_OF_LABEL = {label: kind for kind, label in BEGIN_LABEL.items()}
KIND_OF_LABEL.update({label: kind for kind, label in INSIDE_LABEL.items()})


def tag_indices(tags: TagSequence) -> list[int]:
    return [TAG_INDEX[t] for t in tags.tags]


def tags_from_indices(sentence_id: str, indices: Sequence[int]) -> TagSequence:
    labels = []
    for i in indices:
        if not 0 <= i < NUM_TAGS:
            raise ValueError(f"tag index {i} out of range")
        labels.append(TAG_LABELS[i])
    return TagSequence(sentence_id, tuple(labels))


def entities_to_tags(sentence: Sentence, entities: Sequence[Entity]) -> TagSequence:
    """Encode non-overlapping entities: first char B-kind, the rest I-kind."""
    n = len(sentence)
    labels = ["O"] * n
    prev_end = 0
    prev = None
    for entity in sorted(entities, key=lambda e: (e.start, e.end)):
        if entity.end > n:
            raise ValueError(
                f"entity [{entity.start}, {entity.end}) exceeds sentence "
                f"{sentence.id!r} of length {n}"
            )
        if entity.start < prev_end:
            raise ValueError(f"entities overlap: {prev} and {entity}")
        if entity.text != sentence.text[entity.start:entity.end]:
            raise ValueError(
                f"entity text {entity.text!r} does not match sentence "
                f"{sentence.id!r} at [{entity.start}, {entity.end})"
            )
        labels[entity.start] = BEGIN_LABEL[entity.kind]
        for i in range(entity.start + 1, entity.end):
            labels[i] = INSIDE_LABEL[entity.kind]
        prev_end = entity.end
        prev = entity
    return TagSequence(sentence.id, tuple(labels))


def tags_to_entities(sentence: Sentence, tags: TagSequence) -> list[Entity]:
    """Decode maximal B-X (I-X)* runs into entities, sorted by start offset.

    Inverse of :func:`entities_to_tags` on well-formed input; repairs
    malformed paths as described in the module docstring.
    """
    if len(tags) != len(sentence):
        raise ValueError(
            f"sentence {sentence.id!r} has {len(sentence)} chars "
            f"but tag sequence has {len(tags)}"
        )
    entities: list[Entity] = []
    start: int | None = None
    kind = ""

    def close(end: int):
        if start is not None:
            entities.append(Entity(kind, start, end, sentence.text[start:end]))

    for i, label in enumerate(tags.tags):
        if label == "O":
            close(i)
            start = None
        elif label.startswith("B-"):
            close(i)
            kind, start = KIND_OF_LABEL[label], i
        else:
            run_kind = KIND_OF_LABEL[label]
            if start is None or run_kind != kind:
                close(i)
                kind, start = run_kind, i
    close(len(sentence))
    return entities


def validate_path(tags: TagSequence) -> list[int]:
    """Indices whose I-X tag follows neither B-X nor I-X of the same kind."""
    violations = []
    for i, label in enumerate(tags.tags):
        if not label.startswith("I-"):
            continue
        begin = "B-" + label[2:]
        if i == 0 or tags.tags[i - 1] not in (begin, label):
            violations.append(i)
    return violations
