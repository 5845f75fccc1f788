"""Reference-overlap generation metrics used as comparison rankings:
corpus-level BLEU-1/BLEU-2, exact-match METEOR, and ROUGE-L.

METEOR is the exact-match form (no stemming or synonymy modules): unigram
precision/recall combined as 10PR/(R+9P) with the fragmentation penalty
0.5*(chunks/matches)^3. BLEU is corpus-level with clipped n-gram counts and
the standard brevity penalty, unsmoothed by default.
"""

from __future__ import annotations

import logging
import math
from collections import Counter

log = logging.getLogger(__name__)

TokenSequence = list[str]


def ngram_counts(tokens: TokenSequence, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu_n(
    hypotheses: list[TokenSequence],
    references: list[TokenSequence],
    n: int,
    smooth: bool = False,
) -> float:
    """Corpus BLEU with uniform weights over orders 1..n (n in {1, 2}).

    Zero clipped matches at any order give a score of 0 unless ``smooth``
    adds one to the numerator and denominator of that order.
    """
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    if not hypotheses or len(hypotheses) != len(references):
        raise ValueError("need equal, non-empty hypothesis and reference lists")

    matches = [0] * n
    totals = [0] * n
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for order in range(1, n + 1):
            hyp_counts = ngram_counts(hyp, order)
            ref_counts = ngram_counts(ref, order)
            matches[order - 1] += sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
            totals[order - 1] += sum(hyp_counts.values())

    log_precision = 0.0
    for m, t in zip(matches, totals):
        if smooth:
            m, t = m + 1, t + 1
        if m == 0 or t == 0:
            return 0.0
        log_precision += math.log(m / t)
    log_precision /= n

    if hyp_len == 0:
        return 0.0
    brevity = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return brevity * math.exp(log_precision)


def lcs_length(a: TokenSequence, b: TokenSequence) -> int:
    """Longest common subsequence length, O(len(a)*len(b))."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                curr.append(prev[j - 1] + 1)
            else:
                curr.append(max(prev[j], curr[j - 1]))
        prev = curr
    return prev[-1]


def rouge_l(hypothesis: TokenSequence, reference: TokenSequence) -> float:
    """LCS F-measure with beta = 1 (harmonic mean of LCS precision/recall)."""
    if not hypothesis or not reference:
        log.warning("empty %s side, ROUGE-L is 0", "hypothesis" if not hypothesis else "reference")
        return 0.0
    lcs = lcs_length(hypothesis, reference)
    if lcs == 0:
        return 0.0
    precision = lcs / len(hypothesis)
    recall = lcs / len(reference)
    return 2 * precision * recall / (precision + recall)


def _align(hypothesis: TokenSequence, reference: TokenSequence) -> list[tuple[int, int]]:
    # Leftmost-greedy exact alignment: each hyp token takes the leftmost
    # unmatched identical reference token.
    taken = [False] * len(reference)
    pairs = []
    for i, token in enumerate(hypothesis):
        for j, ref_token in enumerate(reference):
            if not taken[j] and ref_token == token:
                taken[j] = True
                pairs.append((i, j))
                break
    return pairs


def meteor(hypothesis: TokenSequence, reference: TokenSequence) -> float:
    """Exact-match METEOR: F_mean = 10PR/(R+9P), penalty = 0.5*(chunks/m)^3."""
    if not hypothesis or not reference:
        log.warning("empty %s side, METEOR is 0", "hypothesis" if not hypothesis else "reference")
        return 0.0
    pairs = _align(hypothesis, reference)
    m = len(pairs)
    if m == 0:
        return 0.0
    chunks = 1
    for (hi, ri), (hj, rj) in zip(pairs, pairs[1:]):
        if hj != hi + 1 or rj != ri + 1:
            chunks += 1
    precision = m / len(hypothesis)
    recall = m / len(reference)
    f_mean = 10 * precision * recall / (recall + 9 * precision)
    penalty = 0.5 * (chunks / m) ** 3
    return f_mean * (1.0 - penalty)


def rouge_l_corpus(hypotheses: list[TokenSequence], references: list[TokenSequence]) -> float:
    """Mean sentence-level ROUGE-L over aligned pairs."""
    if not hypotheses or len(hypotheses) != len(references):
        raise ValueError("need equal, non-empty hypothesis and reference lists")
    return sum(rouge_l(h, r) for h, r in zip(hypotheses, references)) / len(hypotheses)


def meteor_corpus(hypotheses: list[TokenSequence], references: list[TokenSequence]) -> float:
    """Mean sentence-level METEOR over aligned pairs."""
    if not hypotheses or len(hypotheses) != len(references):
        raise ValueError("need equal, non-empty hypothesis and reference lists")
    return sum(meteor(h, r) for h, r in zip(hypotheses, references)) / len(hypotheses)


METRICS = ("bleu1", "bleu2", "meteor", "rougeL")


def score_corpus(metric: str, hypotheses: list[TokenSequence], references: list[TokenSequence]) -> float:
    if metric == "bleu1":
        return bleu_n(hypotheses, references, 1)
    if metric == "bleu2":
        return bleu_n(hypotheses, references, 2)
    if metric == "meteor":
        return meteor_corpus(hypotheses, references)
    if metric == "rougeL":
        return rouge_l_corpus(hypotheses, references)
    raise ValueError(f"unknown metric {metric!r}; choose from {', '.join(METRICS)}")
