"""Loaders for dialogue samples, the utterance repository, stopword lists and
static word-embedding tables.

All stores are plain in-memory objects, immutable after load, and safe to
share read-only across workers.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

CONTEXT_TURNS = 3


class IngestError(Exception):
    """An input file is unusable (missing, unreadable, or structurally broken)."""


def normalize_text(text: str) -> str:
    """Utterance identity for dedup/exclusion: lowercase, collapse whitespace."""
    return " ".join(text.lower().split())


@dataclass(frozen=True)
class Utterance:
    id: str
    text: str
    source: str = "repository"


@dataclass(frozen=True)
class DialogueSample:
    """A 3-turn context plus the fourth turn as ground-truth response."""

    id: str
    context: tuple[str, ...]
    ground_truth: str

    def __post_init__(self):
        if len(self.context) != CONTEXT_TURNS:
            raise ValueError(f"context must have {CONTEXT_TURNS} turns, got {len(self.context)}")


@dataclass
class DialogueLoadResult:
    samples: list[DialogueSample]
    skipped: int = 0


def load_dialogues(path: str | Path) -> DialogueLoadResult:
    """Read dialogue records (JSON Lines, field ``turns: [string]``).

    Turns 1-3 become the context, turn 4 the ground truth; extra turns are
    ignored. Records with fewer than 4 non-empty turns are skipped and
    counted. An ``id`` field is honored when present, otherwise ids are
    assigned from the line number.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IngestError(f"cannot read dialogue file {path}: {exc}") from exc

    samples: list[DialogueSample] = []
    seen_ids: set[str] = set()
    skipped = 0
    for lineno, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            turns = record["turns"]
        except (json.JSONDecodeError, TypeError, KeyError) as exc:
            log.warning("%s line %d: malformed record (%s), skipping", path, lineno + 1, exc)
            skipped += 1
            continue
        if not isinstance(turns, list) or len(turns) < CONTEXT_TURNS + 1:
            log.warning("%s line %d: fewer than %d turns, skipping", path, lineno + 1, CONTEXT_TURNS + 1)
            skipped += 1
            continue
        turns = [str(t) for t in turns]
        if any(not t.strip() for t in turns[: CONTEXT_TURNS + 1]):
            log.warning("%s line %d: empty turn, skipping", path, lineno + 1)
            skipped += 1
            continue
        sample_id = str(record.get("id", f"d{lineno:05d}"))
        if sample_id in seen_ids:
            log.warning("%s line %d: duplicate dialogue id %r, skipping", path, lineno + 1, sample_id)
            skipped += 1
            continue
        seen_ids.add(sample_id)
        samples.append(
            DialogueSample(
                id=sample_id,
                context=tuple(turns[:CONTEXT_TURNS]),
                ground_truth=turns[CONTEXT_TURNS],
            )
        )
    return DialogueLoadResult(samples=samples, skipped=skipped)


class Repository:
    """Utterance store, deduplicated by normalized text, insertion-ordered.

    Ids are assigned densely over the kept utterances so that writing the
    store back to file and reloading reproduces it exactly.
    """

    def __init__(self, utterances: list[Utterance]):
        self._by_id: dict[str, Utterance] = {}
        self._by_norm: dict[str, str] = {}
        for utt in utterances:
            if utt.id in self._by_id:
                raise ValueError(f"duplicate utterance id {utt.id!r}")
            norm = normalize_text(utt.text)
            if norm in self._by_norm:
                raise ValueError(f"duplicate normalized text for id {utt.id!r}")
            self._by_id[utt.id] = utt
            self._by_norm[norm] = utt.id
        self.ids: list[str] = [u.id for u in utterances]

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return (self._by_id[i] for i in self.ids)

    def get(self, utterance_id: str) -> Utterance:
        return self._by_id[utterance_id]

    def contains_normalized(self, text: str) -> bool:
        return normalize_text(text) in self._by_norm

    def id_to_text(self) -> dict[str, str]:
        return {i: self._by_id[i].text for i in self.ids}

    def write(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for utt in self:
                fh.write(utt.text + "\n")


def load_repository(path: str | Path, exclusion: set[str] | None = None) -> Repository:
    """Read the utterance repository (UTF-8, one utterance per line).

    Lines whose normalized text appears in ``exclusion`` are dropped, so the
    repository never overlaps any corpus used to train the systems under
    evaluation. Duplicate lines (after normalization) keep the first
    occurrence only.
    """
    path = Path(path)
    exclusion = exclusion or set()
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IngestError(f"cannot read repository file {path}: {exc}") from exc

    utterances: list[Utterance] = []
    seen: set[str] = set()
    for line in lines:
        text = line.strip()
        if not text:
            continue
        norm = normalize_text(text)
        if norm in exclusion or norm in seen:
            continue
        seen.add(norm)
        utterances.append(Utterance(id=f"u{len(utterances):06d}", text=text))
    return Repository(utterances)


def load_exclusion(path: str | Path) -> set[str]:
    """Read a text file of utterances to exclude, one per line, normalized."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IngestError(f"cannot read exclusion file {path}: {exc}") from exc
    return {normalize_text(line) for line in lines if line.strip()}


@dataclass
class EmbeddingTable:
    """Static word vectors with a single consistent dimension."""

    dimension: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, word: str) -> np.ndarray | None:
        return self.entries.get(word)


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Parse a plain-text word-vector file (``word v1 v2 ... vd`` per line).

    The dimension is fixed by the first line; any line with a different
    vector length is a fatal error naming the offending line. Duplicate
    words keep the first occurrence.
    """
    path = Path(path)
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read embedding file {path}: {exc}") from exc

    entries: dict[str, np.ndarray] = {}
    dimension = 0
    with fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            word, values = parts[0], parts[1:]
            if dimension == 0:
                if not values:
                    raise IngestError(f"{path} line {lineno}: no vector values")
                dimension = len(values)
            elif len(values) != dimension:
                raise IngestError(
                    f"{path} line {lineno}: expected {dimension} values, got {len(values)}"
                )
            if word in entries:
                continue
            try:
                entries[word] = np.asarray([float(v) for v in values], dtype=np.float64)
            except ValueError as exc:
                raise IngestError(f"{path} line {lineno}: bad float ({exc})") from exc

    if dimension == 0:
        raise IngestError(f"{path}: empty embedding file, dimension undeterminable")
    return EmbeddingTable(dimension=dimension, entries=entries)


@dataclass
class UnigramModel:
    """Word frequencies used as the probability source for SIF weighting."""

    counts: dict[str, int]
    total: int

    @classmethod
    def from_counts(cls, counts: dict[str, int]) -> "UnigramModel":
        total = sum(counts.values())
        if total <= 0:
            raise ValueError("unigram model needs at least one token")
        return cls(counts=dict(counts), total=total)

    def probability(self, word: str) -> float:
        return self.counts.get(word, 0) / self.total


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Load a stopword list (one token per line, '#' comments); packaged
    English list when no path is given."""
    if path is None:
        text = resources.files("selecteval.data").joinpath("stopwords_en.txt").read_text("utf-8")
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise IngestError(f"cannot read stopword file {path}: {exc}") from exc
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return frozenset(words)
