"""Built-in reference selectors that exercise the harness end to end: a
content-word TF-IDF matcher, a seeded chance selector, and a graded blend
family of the two that stands in for a population of systems of varying
quality.
"""

from __future__ import annotations

import logging
import math
import random
from collections import Counter

from .annotation import Question
from .corpus import Repository
from .retrieval import content_tokens, tokenize

log = logging.getLogger(__name__)

OVERLAP_STRENGTHS = tuple(i / 10 for i in range(10))  # 0.0 .. 0.9


class TfidfSelector:
    """Loss = 1 - cosine(tfidf(context), tfidf(candidate)) over content words.

    Term statistics are fitted on the repository: raw term frequency times
    log(N/df). Terms unseen in the repository carry zero weight.
    """

    def __init__(self, repository: Repository, stopwords: frozenset[str] | set[str]):
        self.name = "tfidf"
        self.stopwords = stopwords
        self.doc_count = len(repository)
        df: Counter = Counter()
        for utt in repository:
            df.update(set(content_tokens(tokenize(utt.text), stopwords)))
        self.idf = {term: math.log(self.doc_count / n) for term, n in df.items()}

    def vector(self, text: str) -> dict[str, float]:
        counts = Counter(content_tokens(tokenize(text), self.stopwords))
        vec = {}
        for term, tf in counts.items():
            idf = self.idf.get(term, 0.0)
            if idf > 0.0:
                vec[term] = tf * idf
        return vec

    @staticmethod
    def _cosine(a: dict[str, float], b: dict[str, float]) -> float:
        if not a or not b:
            return 0.0
        if len(b) < len(a):
            a, b = b, a
        dot = sum(w * b.get(t, 0.0) for t, w in a.items())
        if dot == 0.0:
            return 0.0
        norm_a = math.sqrt(sum(w * w for w in a.values()))
        norm_b = math.sqrt(sum(w * w for w in b.values()))
        return dot / (norm_a * norm_b)

    def losses(self, question: Question) -> list[float]:
        query = self.vector(" ".join(question.context))
        if not query:
            log.warning("question %s: context has no weighted content words", question.id)
            return [1.0] * (len(question.false_candidates) + 1)
        return [1.0 - self._cosine(query, self.vector(c)) for c in question.candidates_in_order()]


class RandomSelector:
    """Uniform random losses, seeded per question id (order-independent)."""

    def __init__(self, seed: int | str = 0, name: str = "random"):
        self.name = name
        self.seed = seed

    def losses(self, question: Question) -> list[float]:
        rng = random.Random(f"random-losses|{self.seed}|{question.id}")
        return [rng.random() for _ in range(len(question.false_candidates) + 1)]


class OverlapSelector:
    """Convex blend of TF-IDF and random losses; ``strength`` 1.0 is pure
    TF-IDF, 0.0 pure chance. A family over graded strengths gives a system
    population with a known quality order."""

    def __init__(self, tfidf: TfidfSelector, strength: float, seed: int | str = 0):
        if not 0.0 <= strength <= 1.0:
            raise ValueError("strength must be in [0, 1]")
        # filesystem-safe name so evaluate/rank ids match baseline file stems
        self.name = f"overlap_{strength:.1f}"
        self.strength = strength
        self.tfidf = tfidf
        self.random = RandomSelector(seed=f"overlap|{seed}|{strength:.1f}")

    def losses(self, question: Question) -> list[float]:
        informed = self.tfidf.losses(question)
        noise = self.random.losses(question)
        s = self.strength
        return [s * a + (1.0 - s) * b for a, b in zip(informed, noise)]


def make_overlap_family(
    tfidf: TfidfSelector,
    seed: int | str = 0,
    strengths: tuple[float, ...] = OVERLAP_STRENGTHS,
) -> dict[str, OverlapSelector]:
    """The graded system population, keyed by selector name."""
    return {sel.name: sel for sel in (OverlapSelector(tfidf, s, seed) for s in strengths)}


def strength_ranking(family: dict[str, OverlapSelector]) -> dict[str, float]:
    """Ground-truth quality ordering of the family (by blend strength)."""
    return {name: sel.strength for name, sel in family.items()}


def make_selector(
    spec: str,
    repository: Repository,
    stopwords: frozenset[str] | set[str],
    seed: int | str = 0,
):
    """Parse a selector spec: ``tfidf``, ``random``, or ``overlap:<strength>``."""
    if spec == "tfidf":
        return TfidfSelector(repository, stopwords)
    if spec == "random":
        return RandomSelector(seed=seed)
    if spec.startswith("overlap:"):
        strength = float(spec.split(":", 1)[1])
        return OverlapSelector(TfidfSelector(repository, stopwords), strength, seed=seed)
    raise ValueError(f"unknown selector {spec!r}; use tfidf, random, or overlap:<strength>")
