"""Human judgment handling: task export, judgment import and validation,
the score-threshold filter rules, and final test-set assembly.

Candidates are judged on a 0-5 scale (0 = ungrammatical). A candidate is
removed as acceptable when three or more of its five annotators scored it
3 or higher, removed as ungrammatical when three or more gave 0, and kept
as a false candidate otherwise. A question is dropped entirely when three
or more annotators scored its ground-truth response 3 or lower.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import random
from collections import Counter
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .retrieval import CandidatePool

log = logging.getLogger(__name__)

SCORE_MIN = 0
SCORE_MAX = 5
ANNOTATORS_PER_CANDIDATE = 5
DEFAULT_FALSE_CANDIDATES = 3

ERROR_LABELS = (
    "Inconsistent responses with the context",
    "Responses that have insufficient information",
    "Responses that have wrong subjects",
    "Responses with wrong tense",
)
UNLABELED = "unlabeled"


def candidate_id(question_id: str, text: str) -> str:
    """Opaque per-question candidate id; identical for export and filtering,
    and indistinguishable between retrieved candidates and the ground truth."""
    digest = hashlib.sha1(f"{question_id}|{text}".encode("utf-8")).hexdigest()
    return digest[:12]


class Verdict(str, enum.Enum):
    KEPT_FALSE = "kept_false"
    REMOVED_ACCEPTABLE = "removed_acceptable"
    REMOVED_UNGRAMMATICAL = "removed_ungrammatical"


@dataclass(frozen=True)
class Judgment:
    task_id: str
    candidate_id: str
    annotator_id: str
    score: int


@dataclass(frozen=True)
class Task:
    task_id: str
    question_id: str
    context: tuple[str, ...]
    candidate_id: str
    candidate_text: str


@dataclass
class Question:
    """One test question: a context, its ground truth, k false candidates and
    a display permutation (index 0 of the canonical order is the ground truth)."""

    id: str
    context: list[str]
    ground_truth: str
    false_candidates: list[str]
    candidate_order: list[int]
    error_labels: dict[str, str] = field(default_factory=dict)

    def candidates_in_order(self) -> list[str]:
        canonical = [self.ground_truth] + self.false_candidates
        return [canonical[i] for i in self.candidate_order]

    def ground_truth_position(self) -> int:
        return self.candidate_order.index(0)


@dataclass
class TestSet:
    __test__ = False  # not a pytest class, despite the name

    version: str
    questions: list[Question]
    provenance: dict = field(default_factory=dict)


def export_tasks(pools: list[CandidatePool], seed: int) -> list[Task]:
    """One task per (question, candidate), the ground truth mixed in as an
    undistinguished candidate. Display order is shuffled per question with a
    recorded seed so repeated exports are identical."""
    tasks: list[Task] = []
    for pool in pools:
        entries = [(candidate_id(pool.question_id, c.text), c.text) for c in pool.candidates]
        entries.append((candidate_id(pool.question_id, pool.ground_truth), pool.ground_truth))
        rng = random.Random(f"tasks|{seed}|{pool.question_id}")
        rng.shuffle(entries)
        for pos, (cid, text) in enumerate(entries):
            tasks.append(
                Task(
                    task_id=f"{pool.question_id}#{pos:02d}",
                    question_id=pool.question_id,
                    context=pool.context,
                    candidate_id=cid,
                    candidate_text=text,
                )
            )
    return tasks


def write_tasks(tasks: list[Task], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for task in tasks:
            fh.write(json.dumps({
                "task_id": task.task_id,
                "question_id": task.question_id,
                "context": list(task.context),
                "candidate_id": task.candidate_id,
                "candidate_text": task.candidate_text,
            }, ensure_ascii=False) + "\n")


def read_tasks(path: str | Path) -> list[Task]:
    tasks = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            tasks.append(
                Task(
                    task_id=rec["task_id"],
                    question_id=rec["question_id"],
                    context=tuple(rec["context"]),
                    candidate_id=rec["candidate_id"],
                    candidate_text=rec["candidate_text"],
                )
            )
    return tasks


@dataclass
class RejectedJudgment:
    record: dict
    reason: str


class JudgmentStore:
    """Validated judgments with (task, candidate, annotator) uniqueness."""

    def __init__(self):
        self.judgments: list[Judgment] = []
        self.rejects: list[RejectedJudgment] = []
        self._seen: set[tuple[str, str, str]] = set()
        self.by_candidate: dict[str, list[Judgment]] = {}

    def add(self, record: dict) -> Judgment | None:
        """Validate and store one judgment record; invalid records are kept
        in ``rejects`` with a reason and are not stored."""
        try:
            score = int(record["score"])
            judgment = Judgment(
                task_id=str(record["task_id"]),
                candidate_id=str(record["candidate_id"]),
                annotator_id=str(record["annotator_id"]),
                score=score,
            )
        except (KeyError, TypeError, ValueError):
            self.rejects.append(RejectedJudgment(record, "missing or malformed field"))
            return None
        if not SCORE_MIN <= judgment.score <= SCORE_MAX:
            self.rejects.append(
                RejectedJudgment(record, f"score {judgment.score} outside [{SCORE_MIN},{SCORE_MAX}]")
            )
            return None
        key = (judgment.task_id, judgment.candidate_id, judgment.annotator_id)
        if key in self._seen:
            self.rejects.append(RejectedJudgment(record, "duplicate (task, candidate, annotator)"))
            return None
        self._seen.add(key)
        self.judgments.append(judgment)
        self.by_candidate.setdefault(judgment.candidate_id, []).append(judgment)
        return judgment

    def counts(self) -> dict[str, int]:
        return {cid: len(js) for cid, js in self.by_candidate.items()}

    def scores_for(self, cid: str) -> list[int]:
        # Stable order: sort by annotator id so score vectors are reproducible.
        return [j.score for j in sorted(self.by_candidate.get(cid, []), key=lambda j: j.annotator_id)]


def import_judgments(path: str | Path) -> JudgmentStore:
    """Load a judgment file (JSON Lines), rejecting out-of-range scores and
    duplicate (task, candidate, annotator) triples."""
    store = JudgmentStore()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                store.rejects.append(RejectedJudgment({"line": lineno}, "invalid JSON"))
                continue
            store.add(record)
    for reject in store.rejects:
        log.warning("rejected judgment %s: %s", reject.record, reject.reason)
    return store


@dataclass
class CompletenessReport:
    required: int
    incomplete: dict[str, int]  # candidate id -> judgment count, when != required

    @property
    def complete(self) -> bool:
        return not self.incomplete


def completeness(
    store: JudgmentStore,
    pools: list[CandidatePool],
    required: int = ANNOTATORS_PER_CANDIDATE,
) -> CompletenessReport:
    counts = store.counts()
    incomplete = {}
    for pool in pools:
        cids = [candidate_id(pool.question_id, c.text) for c in pool.candidates]
        cids.append(candidate_id(pool.question_id, pool.ground_truth))
        for cid in cids:
            have = counts.get(cid, 0)
            if have != required:
                incomplete[cid] = have
    return CompletenessReport(required=required, incomplete=incomplete)


class IncompleteJudgmentsError(Exception):
    def __init__(self, report: CompletenessReport):
        self.report = report
        super().__init__(
            f"{len(report.incomplete)} candidates without exactly "
            f"{report.required} judgments; rerun with allow_partial to use "
            "majority-of-available thresholds"
        )


def _majority(panel: int) -> int:
    return panel // 2 + 1


def apply_filter_rules(scores: list[int]) -> Verdict:
    """Map one candidate's score vector to its verdict.

    Ungrammatical (majority of the panel gave 0) is checked before
    acceptable (majority gave 3 or higher); anything else stays a false
    candidate. With the standard 5-annotator panel the majority is 3.
    """
    if not scores:
        return Verdict.KEPT_FALSE
    need = _majority(len(scores))
    if sum(1 for s in scores if s == 0) >= need:
        return Verdict.REMOVED_UNGRAMMATICAL
    if sum(1 for s in scores if s >= 3) >= need:
        return Verdict.REMOVED_ACCEPTABLE
    return Verdict.KEPT_FALSE


def ground_truth_dropped(scores: list[int]) -> bool:
    """A question is dropped when a majority scored its ground truth 3 or lower."""
    if not scores:
        return False
    return sum(1 for s in scores if s <= 3) >= _majority(len(scores))


@dataclass
class JudgedCandidate:
    candidate_id: str
    text: str
    retrieval_score: float
    method: str
    scores: list[int]
    verdict: Verdict


@dataclass
class JudgedQuestion:
    question_id: str
    context: tuple[str, ...]
    ground_truth: str
    ground_truth_id: str
    ground_truth_scores: list[int]
    dropped: bool
    candidates: list[JudgedCandidate]


def filter_pools(
    pools: list[CandidatePool],
    store: JudgmentStore,
    required: int = ANNOTATORS_PER_CANDIDATE,
    allow_partial: bool = False,
) -> list[JudgedQuestion]:
    """Apply the removal rules to every pool.

    Refuses to run on incomplete judgments unless ``allow_partial`` is set,
    in which case the thresholds become a majority of the available scores.
    """
    report = completeness(store, pools, required)
    if not report.complete and not allow_partial:
        raise IncompleteJudgmentsError(report)

    judged: list[JudgedQuestion] = []
    for pool in pools:
        gt_cid = candidate_id(pool.question_id, pool.ground_truth)
        gt_scores = store.scores_for(gt_cid)
        candidates = []
        for cand in pool.candidates:
            cid = candidate_id(pool.question_id, cand.text)
            scores = store.scores_for(cid)
            candidates.append(
                JudgedCandidate(
                    candidate_id=cid,
                    text=cand.text,
                    retrieval_score=cand.score,
                    method=cand.method,
                    scores=scores,
                    verdict=apply_filter_rules(scores),
                )
            )
        judged.append(
            JudgedQuestion(
                question_id=pool.question_id,
                context=pool.context,
                ground_truth=pool.ground_truth,
                ground_truth_id=gt_cid,
                ground_truth_scores=gt_scores,
                dropped=ground_truth_dropped(gt_scores),
                candidates=candidates,
            )
        )
    return judged


def write_judged(judged: list[JudgedQuestion], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for q in judged:
            rec = {
                "question_id": q.question_id,
                "context": list(q.context),
                "ground_truth": q.ground_truth,
                "ground_truth_id": q.ground_truth_id,
                "ground_truth_scores": q.ground_truth_scores,
                "dropped": q.dropped,
                "candidates": [
                    {
                        "candidate_id": c.candidate_id,
                        "text": c.text,
                        "retrieval_score": c.retrieval_score,
                        "method": c.method,
                        "scores": c.scores,
                        "verdict": c.verdict.value,
                    }
                    for c in q.candidates
                ],
            }
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def read_judged(path: str | Path) -> list[JudgedQuestion]:
    judged = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            judged.append(
                JudgedQuestion(
                    question_id=rec["question_id"],
                    context=tuple(rec["context"]),
                    ground_truth=rec["ground_truth"],
                    ground_truth_id=rec["ground_truth_id"],
                    ground_truth_scores=rec["ground_truth_scores"],
                    dropped=rec["dropped"],
                    candidates=[
                        JudgedCandidate(
                            candidate_id=c["candidate_id"],
                            text=c["text"],
                            retrieval_score=c["retrieval_score"],
                            method=c["method"],
                            scores=c["scores"],
                            verdict=Verdict(c["verdict"]),
                        )
                        for c in rec["candidates"]
                    ],
                )
            )
    return judged


@dataclass
class AssemblyResult:
    testset: TestSet
    dropped_insufficient: int  # questions with fewer than k kept false candidates
    dropped_weak_ground_truth: int
    spawned: int


def _ranked(cands: list[JudgedCandidate]) -> list[JudgedCandidate]:
    return sorted(cands, key=lambda c: (-c.retrieval_score, c.candidate_id))


def assemble_questions(
    judged: list[JudgedQuestion],
    k: int = DEFAULT_FALSE_CANDIDATES,
    seed: int = 0,
    version: str = "1",
) -> AssemblyResult:
    """Build the final test set from filtered pools.

    The base question pairs the original ground truth with the k
    highest-scored surviving false candidates. While k unused false
    candidates remain and an unused acceptable utterance exists, a new
    question is spawned with the same context, that acceptable utterance as
    ground truth, and the next k false candidates. Questions whose ground
    truth was judged weak contribute no base question (their surviving
    candidates are still available for spawning); questions with fewer than
    k surviving candidates are dropped and counted.
    """
    questions: list[Question] = []
    dropped_insufficient = 0
    dropped_weak = 0
    spawned = 0

    def make_question(qid: str, context, gt: str, falses: list[str]) -> Question:
        order = list(range(len(falses) + 1))
        random.Random(f"order|{seed}|{qid}").shuffle(order)
        return Question(
            id=qid,
            context=list(context),
            ground_truth=gt,
            false_candidates=falses,
            candidate_order=order,
        )

    for q in judged:
        kept = _ranked([c for c in q.candidates if c.verdict == Verdict.KEPT_FALSE])
        acceptable = _ranked([c for c in q.candidates if c.verdict == Verdict.REMOVED_ACCEPTABLE])
        cursor = 0
        if q.dropped:
            dropped_weak += 1
        elif len(kept) < k:
            dropped_insufficient += 1
        else:
            questions.append(
                make_question(q.question_id, q.context, q.ground_truth, [c.text for c in kept[:k]])
            )
            cursor = k
        for i, acc in enumerate(acceptable, start=1):
            if len(kept) - cursor < k:
                break
            falses = [c.text for c in kept[cursor : cursor + k]]
            cursor += k
            questions.append(make_question(f"{q.question_id}-s{i}", q.context, acc.text, falses))
            spawned += 1

    counts = Counter(q.id for q in questions)
    duplicates = sorted(qid for qid, n in counts.items() if n > 1)
    if duplicates:
        raise ValueError(f"duplicate question ids after assembly: {duplicates[:5]}")

    testset = TestSet(version=version, questions=questions, provenance={"k": k, "seed": seed})
    return AssemblyResult(
        testset=testset,
        dropped_insufficient=dropped_insufficient,
        dropped_weak_ground_truth=dropped_weak,
        spawned=spawned,
    )


def testset_from_pools(
    pools: list[CandidatePool],
    k: int = DEFAULT_FALSE_CANDIDATES,
    seed: int = 0,
    version: str = "unfiltered",
) -> TestSet:
    """Test set straight from retrieval pools, skipping human filtering.

    Useful for dry runs and retrieval experiments; candidates are taken in
    descending retrieval score order. Pools with fewer than k candidates are
    skipped.
    """
    questions = []
    for pool in pools:
        ranked = sorted(pool.candidates, key=lambda c: (-c.score, c.id))
        if len(ranked) < k:
            log.warning("pool %s has %d < %d candidates, skipped", pool.question_id, len(ranked), k)
            continue
        order = list(range(k + 1))
        random.Random(f"order|{seed}|{pool.question_id}").shuffle(order)
        questions.append(
            Question(
                id=pool.question_id,
                context=list(pool.context),
                ground_truth=pool.ground_truth,
                false_candidates=[c.text for c in ranked[:k]],
                candidate_order=order,
            )
        )
    return TestSet(version=version, questions=questions, provenance={"k": k, "seed": seed})


class UnknownLabelError(ValueError):
    def __init__(self, label: str):
        allowed = ", ".join(ERROR_LABELS + (UNLABELED,))
        super().__init__(f"unknown error label {label!r}; allowed: {allowed}")


@dataclass
class LabelReport:
    labeled: int
    total_false_candidates: int
    rejected: list[dict]


def assign_error_labels(testset: TestSet, labels: list[dict]) -> LabelReport:
    """Attach error labels to false candidates in place.

    Label records are ``{question_id, candidate, label}`` where ``candidate``
    is the exact false-candidate text. Labels outside the fixed vocabulary
    raise; unknown questions or candidates are collected as rejects.
    """
    by_id = {q.id: q for q in testset.questions}
    rejected = []
    for rec in labels:
        label = rec.get("label", UNLABELED)
        if label != UNLABELED and label not in ERROR_LABELS:
            raise UnknownLabelError(label)
        question = by_id.get(rec.get("question_id"))
        if question is None:
            rejected.append({**rec, "reason": "unknown question_id"})
            continue
        cand = rec.get("candidate")
        if cand not in question.false_candidates:
            rejected.append({**rec, "reason": "not a false candidate of this question"})
            continue
        if label == UNLABELED:
            question.error_labels.pop(cand, None)
        else:
            question.error_labels[cand] = label
    labeled = sum(len(q.error_labels) for q in testset.questions)
    total = sum(len(q.false_candidates) for q in testset.questions)
    return LabelReport(labeled=labeled, total_false_candidates=total, rejected=rejected)


def write_testset(testset: TestSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for q in testset.questions:
            fh.write(json.dumps(asdict(q), ensure_ascii=False) + "\n")


def read_testset(path: str | Path, version: str = "1") -> TestSet:
    questions = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            questions.append(
                Question(
                    id=rec["id"],
                    context=list(rec["context"]),
                    ground_truth=rec["ground_truth"],
                    false_candidates=list(rec["false_candidates"]),
                    candidate_order=list(rec["candidate_order"]),
                    error_labels=dict(rec.get("error_labels") or {}),
                )
            )
    return TestSet(version=version, questions=questions)


def write_pools(pools: list[CandidatePool], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pool in pools:
            fh.write(json.dumps({
                "question_id": pool.question_id,
                "context": list(pool.context),
                "ground_truth": pool.ground_truth,
                "candidates": [
                    {"id": c.id, "text": c.text, "score": c.score, "method": c.method}
                    for c in pool.candidates
                ],
            }, ensure_ascii=False) + "\n")


def read_pools(path: str | Path) -> list[CandidatePool]:
    from .retrieval import PoolCandidate

    pools = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            pools.append(
                CandidatePool(
                    question_id=rec["question_id"],
                    context=tuple(rec["context"]),
                    ground_truth=rec["ground_truth"],
                    candidates=[
                        PoolCandidate(id=c["id"], text=c["text"], score=c["score"], method=c["method"])
                        for c in rec["candidates"]
                    ],
                )
            )
    return pools
