"""Candidate retrieval: given a ground-truth response, find repository
utterances related to it.

Two methods feed one pool. Lexical retrieval is BM25 over content words on an
in-repo inverted index; embedding retrieval is cosine similarity of
smooth-inverse-frequency weighted sentence vectors. Everything is
deterministic: ranking ties always break by ascending utterance id.
"""

from __future__ import annotations

import logging
import math
import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import (
    DialogueSample,
    EmbeddingTable,
    Repository,
    UnigramModel,
    normalize_text,
)

log = logging.getLogger(__name__)

BM25_K1 = 1.2
BM25_B = 0.75
SIF_A = 1e-3

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_WORD_RE = re.compile(r"\w")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, split punctuation into its own tokens."""
    return _TOKEN_RE.findall(text.lower())


def is_punctuation(token: str) -> bool:
    return _WORD_RE.search(token) is None


def content_words(tokens: list[str], stopwords: frozenset[str] | set[str]) -> set[str]:
    """Deduplicated tokens minus stopwords and pure-punctuation tokens."""
    return {t for t in tokens if t not in stopwords and not is_punctuation(t)}


def content_tokens(tokens: list[str], stopwords: frozenset[str] | set[str]) -> list[str]:
    """Same filter as content_words but keeping order and multiplicity."""
    return [t for t in tokens if t not in stopwords and not is_punctuation(t)]


@dataclass
class InvertedIndex:
    """Posting lists over content-word tokens of a repository."""

    postings: dict[str, list[tuple[str, int]]]
    doc_lengths: dict[str, int]
    avg_doc_length: float
    doc_count: int


def build_index(repository: Repository, stopwords: frozenset[str] | set[str]) -> InvertedIndex:
    if len(repository) == 0:
        raise ValueError("cannot index an empty repository")
    postings: dict[str, list[tuple[str, int]]] = {}
    doc_lengths: dict[str, int] = {}
    for utt in repository:
        terms = content_tokens(tokenize(utt.text), stopwords)
        doc_lengths[utt.id] = len(terms)
        for term, freq in sorted(Counter(terms).items()):
            postings.setdefault(term, []).append((utt.id, freq))
    avg_doc_length = sum(doc_lengths.values()) / len(doc_lengths)
    return InvertedIndex(
        postings=postings,
        doc_lengths=doc_lengths,
        avg_doc_length=avg_doc_length,
        doc_count=len(doc_lengths),
    )


def lexical_retrieve(
    index: InvertedIndex,
    query: str,
    stopwords: frozenset[str] | set[str],
    k: int,
    k1: float = BM25_K1,
    b: float = BM25_B,
) -> list[tuple[str, float]]:
    """Top-k utterances by BM25 score over the query's content words.

    Only documents sharing at least one content word with the query can be
    returned. A query without content words yields an empty, flagged result.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    terms = content_words(tokenize(query), stopwords)
    if not terms:
        log.warning("lexical query has no content words: %r", query)
        return []
    if index.avg_doc_length <= 0:
        return []
    scores: dict[str, float] = {}
    for term in sorted(terms):
        plist = index.postings.get(term)
        if not plist:
            continue
        df = len(plist)
        idf = math.log(1.0 + (index.doc_count - df + 0.5) / (df + 0.5))
        for doc_id, tf in plist:
            norm = k1 * (1.0 - b + b * index.doc_lengths[doc_id] / index.avg_doc_length)
            scores[doc_id] = scores.get(doc_id, 0.0) + idf * tf * (k1 + 1.0) / (tf + norm)
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]


def sif_vector(
    text: str,
    table: EmbeddingTable,
    unigrams: UnigramModel,
    a: float = SIF_A,
) -> np.ndarray:
    """Sentence vector: mean over in-vocabulary tokens of a/(a+p(w)) * vec(w).

    All-out-of-vocabulary text yields the zero vector (flagged via log).
    """
    if a <= 0:
        raise ValueError("smoothing parameter a must be positive")
    acc = np.zeros(table.dimension, dtype=np.float64)
    n = 0
    for token in tokenize(text):
        vec = table.get(token)
        if vec is None:
            continue
        acc += (a / (a + unigrams.probability(token))) * vec
        n += 1
    if n == 0:
        log.debug("no in-vocabulary tokens in %r, zero vector", text)
        return acc
    return acc / n


@dataclass
class SentenceVectorStore:
    """Precomputed sentence vectors for every repository utterance."""

    ids: list[str]
    matrix: np.ndarray  # shape (n_docs, dimension)
    norms: np.ndarray  # shape (n_docs,)


def build_sentence_vectors(
    repository: Repository,
    table: EmbeddingTable,
    unigrams: UnigramModel,
    a: float = SIF_A,
    remove_pc: bool = False,
) -> SentenceVectorStore:
    """SIF vectors for the whole repository; optionally strip the first
    principal component of the stacked vectors."""
    ids = list(repository.ids)
    matrix = np.stack([sif_vector(repository.get(i).text, table, unigrams, a) for i in ids])
    if remove_pc and len(ids) > 1:
        nonzero = matrix[np.linalg.norm(matrix, axis=1) > 0]
        if nonzero.shape[0] > 1:
            _, _, vt = np.linalg.svd(nonzero, full_matrices=False)
            pc = vt[0]
            matrix = matrix - np.outer(matrix @ pc, pc)
    norms = np.linalg.norm(matrix, axis=1)
    return SentenceVectorStore(ids=ids, matrix=matrix, norms=norms)


def embedding_retrieve(
    store: SentenceVectorStore,
    query_vector: np.ndarray,
    k: int,
) -> list[tuple[str, float]]:
    """Top-k utterances by cosine similarity; zero-vector entries excluded."""
    if k < 1:
        raise ValueError("k must be >= 1")
    qnorm = float(np.linalg.norm(query_vector))
    if qnorm == 0.0:
        raise ValueError("query vector is zero; embedding retrieval undefined")
    valid = store.norms > 0
    sims = np.zeros(len(store.ids))
    sims[valid] = (store.matrix[valid] @ query_vector) / (store.norms[valid] * qnorm)
    order = [i for i in range(len(store.ids)) if valid[i]]
    order.sort(key=lambda i: (-sims[i], store.ids[i]))
    return [(store.ids[i], float(sims[i])) for i in order[:k]]


@dataclass(frozen=True)
class PoolCandidate:
    id: str
    text: str
    score: float
    method: str  # "lexical" or "embedding"


@dataclass
class CandidatePool:
    question_id: str
    context: tuple[str, ...]
    ground_truth: str
    candidates: list[PoolCandidate]


class Retriever:
    """Bundles the index, embedding store and parameters for pool building."""

    def __init__(
        self,
        repository: Repository,
        stopwords: frozenset[str] | set[str],
        table: EmbeddingTable | None = None,
        sif_a: float = SIF_A,
        remove_pc: bool = False,
    ):
        self.repository = repository
        self.stopwords = stopwords
        self.index = build_index(repository, stopwords)
        self.table = table
        self.sif_a = sif_a
        if table is not None:
            counts = Counter()
            for utt in repository:
                counts.update(tokenize(utt.text))
            self.unigrams = UnigramModel.from_counts(counts)
            self.vectors = build_sentence_vectors(
                repository, table, self.unigrams, a=sif_a, remove_pc=remove_pc
            )
        else:
            self.unigrams = None
            self.vectors = None

    def lexical(self, query: str, k: int) -> list[tuple[str, float]]:
        return lexical_retrieve(self.index, query, self.stopwords, k)

    def embedding(self, query: str, k: int) -> list[tuple[str, float]]:
        if self.table is None or self.vectors is None:
            return []
        qvec = sif_vector(query, self.table, self.unigrams, self.sif_a)
        try:
            return embedding_retrieve(self.vectors, qvec, k)
        except ValueError:
            log.warning("zero query vector for %r, falling back to lexical only", query)
            return []

    def retrieve_pool(self, sample: DialogueSample, m: int) -> CandidatePool:
        """Merge ceil(m/2) lexical and floor(m/2) embedding results for the
        ground-truth response into one pool.

        The ground truth itself (by normalized text) is excluded, duplicates
        keep their first (lexical) tag, and a shortfall on either side is
        backfilled from the other method's next-ranked results.
        """
        if m < 2:
            raise ValueError("pool size m must be >= 2")
        gt_norm = normalize_text(sample.ground_truth)
        fetch = 2 * m + 2  # enough to survive dedup plus ground-truth exclusion
        lex = self.lexical(sample.ground_truth, fetch)
        emb = self.embedding(sample.ground_truth, fetch)

        n_lex = math.ceil(m / 2)
        taken: dict[str, PoolCandidate] = {}

        def eligible(doc_id: str) -> bool:
            return doc_id not in taken and normalize_text(self.repository.get(doc_id).text) != gt_norm

        def take(ranked: list[tuple[str, float]], method: str, quota: int) -> list[tuple[str, float]]:
            added = 0
            rest = []
            for doc_id, score in ranked:
                if added >= quota:
                    rest.append((doc_id, score))
                elif eligible(doc_id):
                    taken[doc_id] = PoolCandidate(
                        id=doc_id, text=self.repository.get(doc_id).text, score=score, method=method
                    )
                    added += 1
            return rest

        # Fill each method's quota in rank order; a lexical shortfall widens
        # the embedding quota, an embedding shortfall is backfilled from the
        # lexical remainder.
        lex_rest = take(lex, "lexical", n_lex)
        take(emb, "embedding", m - len(taken))
        take(lex_rest, "lexical", m - len(taken))

        if len(taken) < m:
            log.warning(
                "pool for %s has %d candidates (< %d), both methods exhausted",
                sample.id, len(taken), m,
            )
        return CandidatePool(
            question_id=sample.id,
            context=tuple(sample.context),
            ground_truth=sample.ground_truth,
            candidates=list(taken.values()),
        )
