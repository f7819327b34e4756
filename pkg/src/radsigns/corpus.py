"""Data model and file I/O for character-level report sentences and annotations.

All offsets are 0-based Unicode scalar-value indices, never bytes.  The tag
vocabulary is fixed, with these exact spellings for interchange:

    O, B-P, I-P, B-D, I-D, B-Abn, I-Abn

File formats handled here:

* tagged corpus: one ``<char>\\t<tag>`` per line, blank line between
  sentences, UTF-8 without BOM;
* secondary-part dictionary: one term per line, ``#`` starts a comment;
* emission file: header ``<sentence_id> <n> <k>`` followed by n rows of k
  floats (one or more such blocks per file);
* quadruples and relations: JSON Lines, UTF-8.

Readers are pure functions and every returned value is immutable, so results
are safe to share across threads.
"""

from __future__ import annotations

import json
import math
import unicodedata
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

TAG_LABELS = ("O", "B-P", "I-P", "B-D", "I-D", "B-Abn", "I-Abn")
NUM_TAGS = len(TAG_LABELS)

ENTITY_KINDS = ("P", "D", "Abn")
RELATION_KINDS = ("P2Abn", "D2Abn", "P2P")


class CorpusFormatError(ValueError):
    """An input file does not follow its documented format."""


@dataclass(frozen=True)
class Sentence:
    """A report sentence as an ordered, non-empty sequence of characters."""

    id: str
    chars: tuple[str, ...]
    source_report_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "chars", tuple(self.chars))
        if not self.chars:
            raise ValueError(f"sentence {self.id!r} has no characters")
        for ch in self.chars:
            if not isinstance(ch, str) or len(ch) != 1:
                raise ValueError(
                    f"sentence {self.id!r}: {ch!r} is not a single character"
                )

    @classmethod
    def from_text(cls, sentence_id: str, text: str, source_report_id: str | None = None) -> "Sentence":
        return cls(sentence_id, tuple(text), source_report_id)

    @property
    def text(self) -> str:
        return "".join(self.chars)

    def __len__(self) -> int:
        return len(self.chars)


@dataclass(frozen=True)
class TagSequence:
    """Per-character labels for one sentence, same length as the sentence."""

    sentence_id: str
    tags: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(self.tags))
        if not self.tags:
            raise ValueError(f"tag sequence for {self.sentence_id!r} is empty")
        for tag in self.tags:
            if tag not in TAG_LABELS:
                raise ValueError(
                    f"unknown tag {tag!r} in sequence for {self.sentence_id!r}"
                )

    def __len__(self) -> int:
        return len(self.tags)


@dataclass(frozen=True)
class Entity:
    """A typed character span.  ``text`` is the covered substring."""

    kind: str
    start: int
    end: int
    text: str

    def __post_init__(self):
        if self.kind not in ENTITY_KINDS:
            raise ValueError(f"unknown entity kind {self.kind!r}")
        if not (0 <= self.start < self.end):
            raise ValueError(f"bad span [{self.start}, {self.end})")
        if len(self.text) != self.end - self.start:
            raise ValueError(
                f"text {self.text!r} does not cover span [{self.start}, {self.end})"
            )


@dataclass(frozen=True)
class Relation:
    """A typed, directed entity pair within one sentence."""

    kind: str
    head: Entity
    tail: Entity

    def __post_init__(self):
        if self.kind not in RELATION_KINDS:
            raise ValueError(f"unknown relation kind {self.kind!r}")
        expected = {"P2Abn": ("P", "Abn"), "D2Abn": ("D", "Abn"), "P2P": ("P", "P")}
        head_kind, tail_kind = expected[self.kind]
        if self.head.kind != head_kind or self.tail.kind != tail_kind:
            raise ValueError(
                f"{self.kind} relation cannot link {self.head.kind} -> {self.tail.kind}"
            )
        if self.kind == "P2P" and self.head == self.tail:
            raise ValueError("P2P relation needs two distinct body parts")


@dataclass(frozen=True)
class Quadruple:
    """A structured finding: sign plus its (nullable) part and degree attributes."""

    pp: Entity | None
    sp: Entity | None
    d: Entity | None
    abn: Entity

    def __post_init__(self):
        if self.abn.kind != "Abn":
            raise ValueError("quadruple sign slot must hold an Abn entity")
        for slot, kind in (("pp", "P"), ("sp", "P"), ("d", "D")):
            value = getattr(self, slot)
            if value is not None and value.kind != kind:
                raise ValueError(f"quadruple slot {slot} must hold a {kind} entity")


@dataclass(frozen=True)
class SecondaryPartDictionary:
    """Term set for secondary body parts; lookups are NFC-normalized."""

    terms: frozenset[str]

    def __post_init__(self):
        normalized = frozenset(unicodedata.normalize("NFC", t) for t in self.terms)
        if any(not t for t in normalized):
            raise ValueError("dictionary terms must be non-empty strings")
        object.__setattr__(self, "terms", normalized)

    def __contains__(self, term: str) -> bool:
        return unicodedata.normalize("NFC", term) in self.terms

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(sorted(self.terms))


@dataclass(frozen=True, eq=False)
class EmissionMatrix:
    """Per-character tag scores for one sentence: an n x 7 real matrix."""

    sentence_id: str
    scores: np.ndarray

    def __post_init__(self):
        scores = np.array(self.scores, dtype=np.float64)
        if scores.ndim != 2 or scores.shape[1] != NUM_TAGS:
            raise ValueError(
                f"emission matrix for {self.sentence_id!r} must be n x {NUM_TAGS}, "
                f"got shape {scores.shape}"
            )
        if scores.shape[0] == 0:
            raise ValueError(f"emission matrix for {self.sentence_id!r} has no rows")
        if not np.isfinite(scores).all():
            raise ValueError(f"non-finite emission score for {self.sentence_id!r}")
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)

    @property
    def n(self) -> int:
        return int(self.scores.shape[0])


def read_tagged_corpus(path) -> list[tuple[Sentence, TagSequence]]:
    """Read a char/tag corpus file.

    Sentence ids are positional (``s1``, ``s2``, ...), so writing a corpus
    with :func:`write_tagged_corpus` and reading it back reproduces the
    sentences exactly.
    """
    pairs: list[tuple[Sentence, TagSequence]] = []
    chars: list[str] = []
    tags: list[str] = []

    def flush():
        if chars:
            sid = f"s{len(pairs) + 1}"
            pairs.append((Sentence(sid, tuple(chars)), TagSequence(sid, tuple(tags))))
            chars.clear()
            tags.clear()

    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if line.endswith("\r"):
                line = line[:-1]
            if line == "":
                flush()
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise CorpusFormatError(
                    f"{path}:{lineno}: expected '<char>\\t<tag>', got {line!r}"
                )
            ch, tag = fields
            if len(ch) != 1:
                raise CorpusFormatError(
                    f"{path}:{lineno}: first field must be a single character, got {ch!r}"
                )
            if tag not in TAG_LABELS:
                raise CorpusFormatError(f"{path}:{lineno}: unknown tag {tag!r}")
            chars.append(ch)
            tags.append(tag)
    flush()
    if not pairs:
        raise CorpusFormatError(f"{path}: no sentences found")
    return pairs


def write_tagged_corpus(pairs: Sequence[tuple[Sentence, TagSequence]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, (sentence, tags) in enumerate(pairs):
            if len(tags) != len(sentence):
                raise ValueError(
                    f"sentence {sentence.id!r}: {len(sentence)} chars but {len(tags)} tags"
                )
            if i:
                fh.write("\n")
            for ch, tag in zip(sentence.chars, tags.tags):
                fh.write(f"{ch}\t{tag}\n")


def read_dictionary(path) -> SecondaryPartDictionary:
    terms = set()
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            terms.add(unicodedata.normalize("NFC", line))
    if not terms:
        raise CorpusFormatError(f"{path}: dictionary is empty")
    return SecondaryPartDictionary(frozenset(terms))


def read_emissions_many(path) -> list[EmissionMatrix]:
    """Read every emission block in the file, in order."""
    with open(path, encoding="utf-8") as fh:
        rows = [(lineno, line.strip()) for lineno, line in enumerate(fh, 1)]
    rows = [(lineno, line) for lineno, line in rows if line]

    matrices: list[EmissionMatrix] = []
    i = 0
    while i < len(rows):
        lineno, header = rows[i]
        fields = header.split()
        if len(fields) != 3:
            raise CorpusFormatError(
                f"{path}:{lineno}: expected header '<sentence_id> <n> <k>', got {header!r}"
            )
        sid = fields[0]
        try:
            n, k = int(fields[1]), int(fields[2])
        except ValueError:
            raise CorpusFormatError(
                f"{path}:{lineno}: header dimensions must be integers, got {header!r}"
            ) from None
        if k != NUM_TAGS:
            raise CorpusFormatError(f"{path}:{lineno}: k must be {NUM_TAGS}, got {k}")
        if n < 1:
            raise CorpusFormatError(f"{path}:{lineno}: n must be positive, got {n}")
        if i + 1 + n > len(rows):
            raise CorpusFormatError(
                f"{path}:{lineno}: header promises {n} rows for {sid!r} "
                f"but only {len(rows) - i - 1} follow"
            )
        block = np.empty((n, k))
        for r in range(n):
            row_lineno, row = rows[i + 1 + r]
            values = row.split()
            if len(values) != k:
                raise CorpusFormatError(
                    f"{path}:{row_lineno}: expected {k} values, got {len(values)}"
                )
            try:
                block[r] = [float(v) for v in values]
            except ValueError:
                raise CorpusFormatError(
                    f"{path}:{row_lineno}: non-numeric value in {row!r}"
                ) from None
            if not all(math.isfinite(v) for v in block[r]):
                raise CorpusFormatError(
                    f"{path}:{row_lineno}: non-finite value in {row!r}"
                )
        matrices.append(EmissionMatrix(sid, block))
        i += 1 + n
    if not matrices:
        raise CorpusFormatError(f"{path}: no emission blocks found")
    return matrices


def read_emissions(path) -> EmissionMatrix:
    """Read a file holding exactly one emission block."""
    matrices = read_emissions_many(path)
    if len(matrices) != 1:
        raise CorpusFormatError(
            f"{path}: expected a single emission block, found {len(matrices)}"
        )
    return matrices[0]


def write_emissions(matrices: Iterable[EmissionMatrix], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for m in matrices:
            fh.write(f"{m.sentence_id} {m.n} {NUM_TAGS}\n")
            for row in m.scores:
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def entity_to_dict(entity: Entity) -> dict:
    return {
        "kind": entity.kind,
        "start": entity.start,
        "end": entity.end,
        "text": entity.text,
    }


def entity_from_dict(data: dict) -> Entity:
    return Entity(data["kind"], data["start"], data["end"], data["text"])


def write_quadruples(
    quads: Sequence[Quadruple], path, sentence_ids: Sequence[str] | None = None
) -> None:
    """Write one JSON object per quadruple; absent attributes become null.

    ``sentence_ids`` (aligned with ``quads``) adds a ``sentence_id`` field to
    each line so downstream evaluation can key records by sentence.
    """
    if sentence_ids is not None and len(sentence_ids) != len(quads):
        raise ValueError("sentence_ids must align with quads")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, quad in enumerate(quads):
            record = {
                "pp": entity_to_dict(quad.pp) if quad.pp else None,
                "sp": entity_to_dict(quad.sp) if quad.sp else None,
                "d": entity_to_dict(quad.d) if quad.d else None,
                "abn": entity_to_dict(quad.abn),
            }
            if sentence_ids is not None:
                record["sentence_id"] = sentence_ids[i]
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def write_relations(
    relations: Sequence[Relation], path, sentence_ids: Sequence[str] | None = None
) -> None:
    if sentence_ids is not None and len(sentence_ids) != len(relations):
        raise ValueError("sentence_ids must align with relations")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, rel in enumerate(relations):
            record = {
                "kind": rel.kind,
                "head": entity_to_dict(rel.head),
                "tail": entity_to_dict(rel.tail),
            }
            if sentence_ids is not None:
                record["sentence_id"] = sentence_ids[i]
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_relations(path) -> dict[str, list[Relation]]:
    """Read a relations JSONL file into a sentence_id -> relations map."""
    by_sentence: dict[str, list[Relation]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: bad JSON: {exc}") from None
            if "sentence_id" not in record:
                raise CorpusFormatError(
                    f"{path}:{lineno}: relation record lacks a sentence_id"
                )
            try:
                relation = Relation(
                    record["kind"],
                    entity_from_dict(record["head"]),
                    entity_from_dict(record["tail"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise CorpusFormatError(f"{path}:{lineno}: bad relation: {exc}") from None
            by_sentence.setdefault(record["sentence_id"], []).append(relation)
    return by_sentence
