"""Evaluation harness: minimum-loss response selection, accuracy, human
score aggregation, rank correlation, the randomly-sampled-candidate
baseline test sets, and the ranking stability analysis.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
import random
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Protocol, Sequence

from .annotation import Question, TestSet
from .corpus import Repository, normalize_text

log = logging.getLogger(__name__)

HUMAN_SCORES_PER_RESPONSE = 5
SCORE_CARDINALITY = 6  # judgment scores 0..5


@dataclass
class SystemRun:
    """One system's outputs: per-question candidate losses (display order)
    and an optional generated response."""

    system_id: str
    losses: dict[str, list[float]] = field(default_factory=dict)
    generated: dict[str, str] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path, system_id: str | None = None) -> "SystemRun":
        path = Path(path)
        run = cls(system_id=system_id or path.stem)
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                qid = str(rec["question_id"])
                if "losses" in rec and rec["losses"] is not None:
                    losses = [float(x) for x in rec["losses"]]
                    if any(x < 0 for x in losses):
                        log.warning("%s: negative loss for question %s", path.name, qid)
                    run.losses[qid] = losses
                if "generated" in rec and rec["generated"] is not None:
                    run.generated[qid] = str(rec["generated"])
        return run

    def write(self, path: str | Path) -> None:
        qids = sorted(set(self.losses) | set(self.generated))
        with open(path, "w", encoding="utf-8") as fh:
            for qid in qids:
                rec: dict = {"question_id": qid}
                if qid in self.losses:
                    rec["losses"] = self.losses[qid]
                rec["generated"] = self.generated.get(qid, "")
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def load_system_runs(directory: str | Path) -> dict[str, SystemRun]:
    """All ``*.jsonl`` files in a directory, keyed by file stem."""
    runs = {}
    for path in sorted(Path(directory).glob("*.jsonl")):
        runs[path.stem] = SystemRun.load(path)
    if not runs:
        raise ValueError(f"no system output files (*.jsonl) in {directory}")
    return runs


def select(losses: Sequence[float]) -> int:
    """Index of the minimum loss; ties go to the lowest index."""
    if not losses:
        raise ValueError("no losses to select from")
    best = 0
    for i, loss in enumerate(losses):
        if loss < losses[best]:
            best = i
    return best


@dataclass
class AccuracyResult:
    value: float
    scorable: int
    skipped: int


def accuracy(run: SystemRun, testset: TestSet) -> AccuracyResult:
    """Fraction of questions whose minimum-loss candidate is the ground truth.

    Questions without a complete loss vector are excluded for this system
    (with a warning), not scored as wrong.
    """
    correct = 0
    scorable = 0
    skipped = 0
    for question in testset.questions:
        losses = run.losses.get(question.id)
        expected = len(question.false_candidates) + 1
        if losses is None or len(losses) != expected:
            skipped += 1
            continue
        scorable += 1
        if select(losses) == question.ground_truth_position():
            correct += 1
    if skipped:
        log.warning("system %s: %d questions without usable losses", run.system_id, skipped)
    if scorable == 0:
        raise ValueError(f"system {run.system_id}: no scorable questions")
    return AccuracyResult(value=correct / scorable, scorable=scorable, skipped=skipped)


@dataclass(frozen=True)
class HumanScoreRecord:
    system_id: str
    question_id: str
    scores: tuple[int, ...]

    def mean(self) -> float:
        return sum(self.scores) / len(self.scores)


def read_human_scores(path: str | Path) -> list[HumanScoreRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            scores = tuple(int(s) for s in rec["scores"])
            if len(scores) != HUMAN_SCORES_PER_RESPONSE:
                raise ValueError(
                    f"{path} line {lineno}: expected {HUMAN_SCORES_PER_RESPONSE} scores, got {len(scores)}"
                )
            records.append(
                HumanScoreRecord(
                    system_id=str(rec["system_id"]),
                    question_id=str(rec["question_id"]),
                    scores=scores,
                )
            )
    return records


def human_final_score(records: Sequence[HumanScoreRecord]) -> float:
    """Mean over questions of the per-question mean of the five scores."""
    if not records:
        raise ValueError("no human score records")
    return sum(r.mean() for r in records) / len(records)


def human_final_scores(records: Sequence[HumanScoreRecord]) -> dict[str, float]:
    by_system: dict[str, list[HumanScoreRecord]] = {}
    for rec in records:
        by_system.setdefault(rec.system_id, []).append(rec)
    return {sid: human_final_score(rs) for sid, rs in sorted(by_system.items())}


def average_ranks(values: Sequence[float]) -> list[float]:
    """Ranks 1..n by ascending value, ties sharing their average rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for p in range(i, j + 1):
            ranks[order[p]] = mean_rank
        i = j + 1
    return ranks


def _pearson(x: Sequence[float], y: Sequence[float]) -> float | None:
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    if sxx == 0 or syy == 0:
        return None
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    return sxy / math.sqrt(sxx * syy)


@dataclass
class SpearmanResult:
    coefficient: float | None  # None when a ranking is constant (undefined)
    p_value: float | None
    n: int
    p_method: str = "exact"

    @property
    def defined(self) -> bool:
        return self.coefficient is not None


EXACT_PERMUTATION_LIMIT = 8
MONTE_CARLO_TRIALS = 10_000


def spearman(
    a: Mapping[str, float] | Sequence[float],
    b: Mapping[str, float] | Sequence[float],
    p_value: bool = True,
    seed: int = 0,
) -> SpearmanResult:
    """Tie-aware Spearman rank correlation between two value lists.

    Accepts aligned sequences or dicts over an identical key set. The
    p-value is a two-sided permutation test, exact up to 8 systems and
    seeded Monte Carlo beyond that. A constant ranking has no defined
    coefficient and is reported as such rather than raising.
    """
    if isinstance(a, Mapping) or isinstance(b, Mapping):
        if not (isinstance(a, Mapping) and isinstance(b, Mapping)):
            raise TypeError("pass two mappings or two sequences, not a mix")
        if set(a) != set(b):
            raise ValueError("rankings cover different system sets")
        keys = sorted(a)
        a = [a[k] for k in keys]
        b = [b[k] for k in keys]
    if len(a) != len(b):
        raise ValueError("rankings have different lengths")
    n = len(a)
    if n < 3:
        raise ValueError("need at least 3 systems to correlate rankings")

    ranks_a = average_ranks(a)
    ranks_b = average_ranks(b)
    rho = _pearson(ranks_a, ranks_b)
    if rho is None:
        return SpearmanResult(coefficient=None, p_value=None, n=n, p_method="undefined")
    if not p_value:
        return SpearmanResult(coefficient=rho, p_value=None, n=n, p_method="none")

    observed = abs(rho)
    eps = 1e-12
    if n <= EXACT_PERMUTATION_LIMIT:
        hits = 0
        total = 0
        for perm in itertools.permutations(ranks_b):
            r = _pearson(ranks_a, perm)
            total += 1
            if r is not None and abs(r) >= observed - eps:
                hits += 1
        return SpearmanResult(coefficient=rho, p_value=hits / total, n=n, p_method="exact")
    rng = random.Random(f"spearman-p|{seed}")
    shuffled = list(ranks_b)
    hits = 0
    for _ in range(MONTE_CARLO_TRIALS):
        rng.shuffle(shuffled)
        r = _pearson(ranks_a, shuffled)
        if r is not None and abs(r) >= observed - eps:
            hits += 1
    p = (hits + 1) / (MONTE_CARLO_TRIALS + 1)
    return SpearmanResult(coefficient=rho, p_value=p, n=n, p_method="monte-carlo")


def build_random_testset(
    testset: TestSet,
    repository: Repository,
    seed: int | str,
    version: str = "random",
) -> TestSet:
    """Same contexts and ground truths, false candidates replaced by uniform
    draws from the repository (never the ground truth, never duplicated).

    Draws are seeded per question id, so the result is independent of
    question order and byte-identical across runs with the same seed.
    """
    ids = repository.ids
    questions = []
    for question in testset.questions:
        k = len(question.false_candidates)
        gt_norm = normalize_text(question.ground_truth)
        eligible = len(ids) - (1 if repository.contains_normalized(question.ground_truth) else 0)
        if eligible < k:
            raise ValueError(
                f"repository too small: {eligible} eligible utterances, need {k}"
            )
        # purpose-tagged stream: must never collide with selector noise streams
        rng = random.Random(f"random-testset|{seed}|{question.id}")
        chosen: list[str] = []
        seen: set[str] = set()
        while len(chosen) < k:
            uid = ids[rng.randrange(len(ids))]
            if uid in seen:
                continue
            text = repository.get(uid).text
            if normalize_text(text) == gt_norm:
                continue
            seen.add(uid)
            chosen.append(text)
        order = list(range(k + 1))
        rng.shuffle(order)
        questions.append(
            Question(
                id=question.id,
                context=list(question.context),
                ground_truth=question.ground_truth,
                false_candidates=chosen,
                candidate_order=order,
            )
        )
    return TestSet(version=version, questions=questions, provenance={"seed": str(seed)})


class Selector(Protocol):
    name: str

    def losses(self, question: Question) -> list[float]: ...


def run_selector(selector: Selector, testset: TestSet) -> SystemRun:
    """Materialize a built-in selector as a SystemRun over a test set."""
    run = SystemRun(system_id=selector.name)
    for question in testset.questions:
        run.losses[question.id] = selector.losses(question)
    return run


def selector_accuracies(selectors: Mapping[str, Selector], testset: TestSet) -> dict[str, float]:
    return {
        name: accuracy(run_selector(sel, testset), testset).value
        for name, sel in sorted(selectors.items())
    }


@dataclass
class StabilityResult:
    coefficients: list[float | None]
    undefined_trials: int
    summary: dict[str, float]
    mean: float  # mean over defined trials; reported as the RANDOM coefficient

    def defined(self) -> list[float]:
        return [c for c in self.coefficients if c is not None]


def _five_number_summary(values: Sequence[float]) -> dict[str, float]:
    ordered = sorted(values)
    q1, median, q3 = statistics.quantiles(ordered, n=4, method="inclusive")
    return {
        "min": ordered[0],
        "q1": q1,
        "median": median,
        "q3": q3,
        "max": ordered[-1],
    }


def stability_analysis(
    testset: TestSet,
    repository: Repository,
    selectors: Mapping[str, Selector],
    truth_ranking: Mapping[str, float],
    trials: int = 100,
    seed: int = 0,
) -> StabilityResult:
    """Correlation of the randomly-sampled-candidate ranking against a ground
    truth ranking, across many resampled test sets.

    Each trial replaces the false candidates with a fresh seeded draw,
    ranks the selectors by accuracy on it, and records the Spearman
    coefficient against ``truth_ranking``. The summary quintuple feeds a
    box plot; the mean over trials is the aggregate coefficient.
    """
    if trials < 2:
        raise ValueError("need at least 2 trials")
    coefficients: list[float | None] = []
    for trial in range(trials):
        random_ts = build_random_testset(testset, repository, seed=f"{seed}/{trial}")
        accuracies = selector_accuracies(selectors, random_ts)
        result = spearman(accuracies, dict(truth_ranking), p_value=False)
        coefficients.append(result.coefficient)
    defined = [c for c in coefficients if c is not None]
    if not defined:
        raise ValueError("every trial produced an undefined coefficient")
    return StabilityResult(
        coefficients=coefficients,
        undefined_trials=len(coefficients) - len(defined),
        summary=_five_number_summary(defined),
        mean=sum(defined) / len(defined),
    )


def split_half_human_correlation(
    records: Sequence[HumanScoreRecord],
    seed: int = 0,
) -> SpearmanResult:
    """Spearman between system rankings made by two random halves (2/3 or
    3/2 annotator positions, chosen by the seed) of the human panel."""
    rng = random.Random(f"split-half|{seed}")
    size_a = rng.choice([2, 3])
    group_a = set(rng.sample(range(HUMAN_SCORES_PER_RESPONSE), size_a))
    group_b = set(range(HUMAN_SCORES_PER_RESPONSE)) - group_a

    def final_scores(group: set[int]) -> dict[str, float]:
        by_system: dict[str, list[float]] = {}
        for rec in records:
            if len(rec.scores) != HUMAN_SCORES_PER_RESPONSE:
                raise ValueError("split-half needs exactly 5 scores per record")
            group_scores = [rec.scores[i] for i in sorted(group)]
            by_system.setdefault(rec.system_id, []).append(sum(group_scores) / len(group_scores))
        return {sid: sum(v) / len(v) for sid, v in by_system.items()}

    return spearman(final_scores(group_a), final_scores(group_b))


@dataclass
class KappaResult:
    kappa: float | None  # None when expected agreement is 1 (undefined)
    observed_agreement: float
    expected_agreement: float
    n_items: int
    n_raters: int
    mode: str

    @property
    def defined(self) -> bool:
        return self.kappa is not None


def fleiss_kappa(
    ratings: Sequence[Sequence[int]],
    mode: str = "six",
    binary_threshold: int = 4,
) -> KappaResult:
    """Fleiss' kappa over items rated by a fixed-size panel.

    ``mode="six"`` treats the 0-5 scores as six categories; ``mode="binary"``
    maps score >= ``binary_threshold`` to the positive class. When every
    rating lands in one category, expected agreement is 1 and kappa is
    undefined (returned as None, not an error).
    """
    if not ratings:
        raise ValueError("no items to rate")
    n_raters = len(ratings[0])
    if n_raters < 2:
        raise ValueError("need at least 2 raters per item")
    if any(len(r) != n_raters for r in ratings):
        raise ValueError("every item must have the same number of ratings")

    if mode == "six":
        categories = list(range(SCORE_CARDINALITY))
        mapped = [list(r) for r in ratings]
    elif mode == "binary":
        categories = [0, 1]
        mapped = [[1 if s >= binary_threshold else 0 for s in r] for r in ratings]
    else:
        raise ValueError("mode must be 'six' or 'binary'")

    n_items = len(mapped)
    cat_index = {c: i for i, c in enumerate(categories)}
    table = [[0] * len(categories) for _ in range(n_items)]
    for i, item in enumerate(mapped):
        for score in item:
            if score not in cat_index:
                raise ValueError(f"rating {score} outside categories {categories}")
            table[i][cat_index[score]] += 1

    p_i = [
        (sum(c * c for c in row) - n_raters) / (n_raters * (n_raters - 1))
        for row in table
    ]
    p_bar = sum(p_i) / n_items
    p_j = [sum(table[i][j] for i in range(n_items)) / (n_items * n_raters) for j in range(len(categories))]
    p_e = sum(p * p for p in p_j)
    if p_e >= 1.0 - 1e-15:
        return KappaResult(
            kappa=None, observed_agreement=p_bar, expected_agreement=p_e,
            n_items=n_items, n_raters=n_raters, mode=mode,
        )
    kappa = (p_bar - p_e) / (1.0 - p_e)
    return KappaResult(
        kappa=kappa, observed_agreement=p_bar, expected_agreement=p_e,
        n_items=n_items, n_raters=n_raters, mode=mode,
    )
