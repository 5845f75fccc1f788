import math
import random
from functools import lru_cache

import pytest

from selecteval.metrics import (
    bleu_n,
    lcs_length,
    meteor,
    meteor_corpus,
    ngram_counts,
    rouge_l,
    rouge_l_corpus,
    score_corpus,
)


def lcs_oracle(a, b):
    a, b = tuple(a), tuple(b)

    @lru_cache(maxsize=None)
    def rec(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + rec(i + 1, j + 1)
        return max(rec(i + 1, j), rec(i, j + 1))

    return rec(0, 0)


class TestBleu:
    def test_identity_is_one(self):
        hyps = [["the", "cat", "sat"], ["a", "dog"]]
        assert bleu_n(hyps, hyps, 1) == pytest.approx(1.0, abs=1e-9)
        assert bleu_n(hyps, hyps, 2) == pytest.approx(1.0, abs=1e-9)

    def test_clipped_precision_example(self):
        # "the the the" vs "the cat": clipped count 1 of 3, BP = 1 since 3 > 2
        score = bleu_n([["the", "the", "the"]], [["the", "cat"]], 1)
        assert score == pytest.approx(1 / 3, abs=1e-9)

    def test_disjoint_vocabulary_zero(self):
        assert bleu_n([["aa", "bb"]], [["cc", "dd"]], 1) == 0.0
        assert bleu_n([["aa", "bb"]], [["cc", "dd"]], 2) == 0.0

    def test_bleu2_hand_value(self):
        # unigrams 2/3, bigrams 1/2, BP 1 -> sqrt(1/3)
        score = bleu_n([["the", "cat", "sat"]], [["the", "cat"]], 2)
        assert score == pytest.approx(math.sqrt(1 / 3), abs=1e-9)

    def test_brevity_penalty(self):
        # perfect precision but half the reference length
        score = bleu_n([["a"]], [["a", "b"]], 1)
        assert score == pytest.approx(math.exp(1 - 2), abs=1e-9)

    def test_empty_corpus_error(self):
        with pytest.raises(ValueError):
            bleu_n([], [], 1)

    def test_clipped_counts_never_exceed_reference(self):
        rng = random.Random(4)
        vocab = list("abcdef")
        for _ in range(200):
            hyp = rng.choices(vocab, k=rng.randint(1, 12))
            ref = rng.choices(vocab, k=rng.randint(1, 12))
            for n in (1, 2):
                hyp_counts = ngram_counts(hyp, n)
                ref_counts = ngram_counts(ref, n)
                clipped = {g: min(c, ref_counts[g]) for g, c in hyp_counts.items()}
                assert all(clipped[g] <= ref_counts[g] for g in clipped)
                # corpus of one pair: precision equals clipped/total
                total = sum(hyp_counts.values())
                if total and sum(clipped.values()):
                    expected_p = sum(clipped.values()) / total
                    bp = 1.0 if len(hyp) > len(ref) else math.exp(1 - len(ref) / max(len(hyp), 1))
                    if n == 1:
                        assert bleu_n([hyp], [ref], 1) == pytest.approx(bp * expected_p, abs=1e-12)

    def test_corpus_order_independent(self):
        rng = random.Random(9)
        vocab = list("abcdefgh")
        pairs = [
            (rng.choices(vocab, k=rng.randint(1, 8)), rng.choices(vocab, k=rng.randint(1, 8)))
            for _ in range(30)
        ]
        hyps, refs = zip(*pairs)
        baseline = bleu_n(list(hyps), list(refs), 2)
        order = list(range(len(pairs)))
        rng.shuffle(order)
        shuffled = bleu_n([hyps[i] for i in order], [refs[i] for i in order], 2)
        assert shuffled == pytest.approx(baseline, abs=1e-12)


class TestRougeL:
    def test_identity(self):
        assert rouge_l(["a", "b", "c"], ["a", "b", "c"]) == pytest.approx(1.0, abs=1e-9)

    def test_lcs_example(self):
        # LCS = 3, P = 3/4, R = 1, F1 = 6/7
        assert rouge_l(["a", "b", "c", "d"], ["a", "c", "d"]) == pytest.approx(6 / 7, abs=1e-9)

    def test_disjoint_zero(self):
        assert rouge_l(["a", "b"], ["c", "d"]) == 0.0

    def test_empty_side_zero(self):
        assert rouge_l([], ["a"]) == 0.0
        assert rouge_l(["a"], []) == 0.0

    def test_lcs_matches_recursive_oracle(self):
        rng = random.Random(13)
        vocab = list("abcd")
        for _ in range(100):
            a = rng.choices(vocab, k=rng.randint(0, 20))
            b = rng.choices(vocab, k=rng.randint(0, 20))
            assert lcs_length(a, b) == lcs_oracle(a, b)

    def test_corpus_mean(self):
        pairs = [(["a", "b"], ["a", "b"]), (["x"], ["y"])]
        hyps, refs = zip(*pairs)
        assert rouge_l_corpus(list(hyps), list(refs)) == pytest.approx(0.5, abs=1e-12)


class TestMeteor:
    def test_single_identical_token(self):
        # m=1, chunks=1 -> F=1, penalty=0.5, score 0.5
        assert meteor(["hello"], ["hello"]) == pytest.approx(0.5, abs=1e-9)

    def test_no_overlap_zero(self):
        assert meteor(["a", "b"], ["c", "d"]) == 0.0

    def test_identity_length_eight(self):
        tokens = list("abcdefgh")
        expected = 1.0 - 0.5 * (1 / 8) ** 3
        assert meteor(tokens, tokens) == pytest.approx(expected, abs=1e-9)

    def test_fragmentation_penalty(self):
        # alignment a,b contiguous; c and d swap in the reference -> 3 chunks
        score = meteor(["a", "b", "c", "d"], ["a", "b", "d", "c"])
        expected = 1.0 * (1.0 - 0.5 * (3 / 4) ** 3)
        assert score == pytest.approx(expected, abs=1e-9)

    def test_precision_recall_weighting(self):
        # hyp [a, x], ref [a]: m=1, P=1/2, R=1, F = 10*0.5/(1+4.5), penalty 0.5
        score = meteor(["a", "x"], ["a"])
        f_mean = 10 * 0.5 * 1.0 / (1.0 + 9 * 0.5)
        assert score == pytest.approx(f_mean * 0.5, abs=1e-9)

    def test_corpus_mean(self):
        pairs = [(["a"], ["a"]), (["x"], ["y"])]
        hyps, refs = zip(*pairs)
        assert meteor_corpus(list(hyps), list(refs)) == pytest.approx(0.25, abs=1e-12)


def test_pairwise_corpus_scores_order_independent():
    rng = random.Random(17)
    vocab = list("abcde")
    pairs = [
        (rng.choices(vocab, k=rng.randint(1, 9)), rng.choices(vocab, k=rng.randint(1, 9)))
        for _ in range(40)
    ]
    hyps, refs = zip(*pairs)
    order = list(range(len(pairs)))
    rng.shuffle(order)
    for fn in (rouge_l_corpus, meteor_corpus):
        baseline = fn(list(hyps), list(refs))
        shuffled = fn([hyps[i] for i in order], [refs[i] for i in order])
        assert shuffled == pytest.approx(baseline, abs=1e-12)


def test_all_scores_in_unit_interval():
    rng = random.Random(21)
    vocab = list("abcdefg")
    for _ in range(100):
        hyp = rng.choices(vocab, k=rng.randint(1, 10))
        ref = rng.choices(vocab, k=rng.randint(1, 10))
        for metric in ("bleu1", "bleu2", "meteor", "rougeL"):
            value = score_corpus(metric, [hyp], [ref])
            assert 0.0 <= value <= 1.0


def test_unknown_metric_rejected():
    with pytest.raises(ValueError):
        score_corpus("chrf", [["a"]], [["a"]])
