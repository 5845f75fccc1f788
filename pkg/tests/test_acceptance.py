"""Acceptance suite: every criterion asserted at its stated tolerance, one
printed pass/fail line per criterion (run with ``pytest -s`` to see them).
"""

import hashlib
import itertools
import json
import random
import time
from contextlib import contextmanager
from types import SimpleNamespace

import pytest

from selecteval import cli
from selecteval.annotation import testset_from_pools as unfiltered_testset
from selecteval.annotation import (
    JudgedCandidate,
    JudgedQuestion,
    TestSet,
    Verdict,
    apply_filter_rules,
    assemble_questions,
    ground_truth_dropped,
    read_pools,
    read_tasks,
)
from selecteval.baselines import (
    RandomSelector,
    TfidfSelector,
    make_overlap_family,
    strength_ranking,
)
from selecteval.evaluation import (
    accuracy,
    build_random_testset,
    fleiss_kappa,
    run_selector,
    selector_accuracies,
    spearman,
    stability_analysis,
)
from selecteval.metrics import bleu_n, meteor, rouge_l
from selecteval.retrieval import Retriever
from test_annotation import oracle_assemble, oracle_drop, oracle_verdict
from test_evaluation import kappa_oracle, make_testset, oracle_run


@contextmanager
def criterion(number, description):
    try:
        yield
    except BaseException:
        print(f"criterion {number}: FAIL  ({description})")
        raise
    print(f"criterion {number}: PASS  ({description})")


@pytest.fixture(scope="module")
def pipeline(synth, stopwords):
    """Retrieval pools and the CHOSEN test set over the shared 600-question
    synthetic corpus, built once for criteria 7 and 8."""
    retriever = Retriever(synth.repository, stopwords, table=synth.table)
    pools = [retriever.retrieve_pool(s, 10) for s in synth.samples]
    chosen = unfiltered_testset(pools, k=3, seed=1)
    tfidf = TfidfSelector(synth.repository, stopwords)
    family = make_overlap_family(tfidf, seed=3)
    return SimpleNamespace(
        pools=pools, chosen=chosen, tfidf=tfidf,
        family=family, truth=strength_ranking(family),
    )


def test_criterion_1_filter_rules_exhaustive():
    with criterion(1, "filter rules match brute-force oracle on all 6^5 score vectors, < 1 s"):
        start = time.perf_counter()
        for scores in itertools.product(range(6), repeat=5):
            scores = list(scores)
            assert apply_filter_rules(scores) == oracle_verdict(scores)
            assert ground_truth_dropped(scores) == oracle_drop(scores)
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0, f"took {elapsed:.3f}s"


def test_criterion_2_assembly_matches_enumeration():
    with criterion(2, "assembly equals exhaustive rule enumeration on 200 random pools"):
        rng = random.Random(1002)
        for trial in range(200):
            n = rng.randint(0, 12)
            candidates = []
            for i in range(n):
                scores = [rng.randint(0, 5) for _ in range(5)]
                candidates.append(
                    JudgedCandidate(
                        candidate_id=f"c{i:03d}",
                        text=f"pool {trial} utterance {i}",
                        retrieval_score=float(rng.randint(0, 6)),
                        method=rng.choice(["lexical", "embedding"]),
                        scores=scores,
                        verdict=oracle_verdict(scores),
                    )
                )
            gt_scores = [rng.randint(0, 5) for _ in range(5)]
            question = JudgedQuestion(
                question_id=f"q{trial}",
                context=(f"ctx {trial} a", f"ctx {trial} b", f"ctx {trial} c"),
                ground_truth=f"gt {trial}",
                ground_truth_id="g",
                ground_truth_scores=gt_scores,
                dropped=oracle_drop(gt_scores),
                candidates=candidates,
            )
            produced = assemble_questions([question], k=3).testset.questions
            got = [(q.id, q.ground_truth, tuple(q.false_candidates)) for q in produced]
            assert got == oracle_assemble(question, 3)
            acceptable_texts = {
                c.text for c in candidates if c.verdict == Verdict.REMOVED_ACCEPTABLE
            }
            for q in produced:
                assert tuple(q.context) == question.context
                if q.id != question.question_id:  # spawned
                    assert q.ground_truth in acceptable_texts


def test_criterion_3_metric_golden_values():
    with criterion(3, "BLEU-1 = 1/3, ROUGE-L = 6/7, METEOR = 0.5 at 1e-9"):
        assert bleu_n([["the", "the", "the"]], [["the", "cat"]], 1) == pytest.approx(1 / 3, abs=1e-9)
        assert rouge_l(["a", "b", "c", "d"], ["a", "c", "d"]) == pytest.approx(6 / 7, abs=1e-9)
        assert meteor(["hello"], ["hello"]) == pytest.approx(0.5, abs=1e-9)


def test_criterion_4_statistics_oracles():
    with criterion(4, "Spearman 0.9 example; kappa = 1.0 and formula oracle at 1e-9"):
        rho = spearman([1, 2, 3, 4, 5], [1, 2, 3, 5, 4]).coefficient
        assert rho == pytest.approx(0.9, abs=1e-9)

        perfect = fleiss_kappa([[1, 1, 1, 1, 1], [2, 2, 2, 2, 2]], mode="six")
        assert perfect.kappa == pytest.approx(1.0, abs=1e-9)

        rng = random.Random(1004)
        for _ in range(50):
            ratings = [[rng.randint(0, 5) for _ in range(5)] for _ in range(3)]
            got = fleiss_kappa(ratings, mode="six").kappa
            expected = kappa_oracle(ratings, list(range(6)))
            if expected is None:
                assert got is None
            else:
                assert got == pytest.approx(expected, abs=1e-9)


def test_criterion_5_chance_calibration():
    with criterion(5, "random selector in [0.23, 0.27] on 10k questions; oracle exactly 1.0"):
        testset = make_testset(10_000)
        chance = accuracy(run_selector(RandomSelector(seed=1005), testset), testset).value
        assert 0.23 <= chance <= 0.27, f"chance accuracy {chance}"
        assert accuracy(oracle_run(testset), testset).value == 1.0


def test_criterion_6_directional_tfidf_reproduction(synth, stopwords):
    with criterion(6, "tfidf accuracy on CHOSEN lower than on RANDOM by >= 0.10, < 2 min"):
        start = time.perf_counter()
        retriever = Retriever(synth.repository, stopwords, table=synth.table)
        pools = [retriever.retrieve_pool(s, 10) for s in synth.samples]
        chosen = unfiltered_testset(pools, k=3, seed=1)
        assert len(chosen.questions) >= 500
        randomized = build_random_testset(chosen, synth.repository, seed=1006)

        tfidf = TfidfSelector(synth.repository, stopwords)
        on_chosen = accuracy(run_selector(tfidf, chosen), chosen).value
        on_random = accuracy(run_selector(tfidf, randomized), randomized).value
        elapsed = time.perf_counter() - start
        assert on_random - on_chosen >= 0.10, f"chosen={on_chosen:.3f} random={on_random:.3f}"
        assert elapsed < 120.0, f"took {elapsed:.1f}s"


def test_criterion_7_stability_phenomenon(synth, pipeline):
    with criterion(7, "RANDOM coefficient spread >= 0.2 over 100 trials; CHOSEN variance 0, < 5 min"):
        start = time.perf_counter()
        subset = TestSet(version="t", questions=pipeline.chosen.questions[:12])
        result = stability_analysis(
            subset, synth.repository, pipeline.family, pipeline.truth, trials=100, seed=9
        )
        spread = result.summary["max"] - result.summary["min"]
        assert spread >= 0.2, f"spread {spread:.3f}"

        chosen_runs = [
            spearman(
                selector_accuracies(pipeline.family, pipeline.chosen), pipeline.truth,
                p_value=False,
            ).coefficient
            for _ in range(2)
        ]
        assert chosen_runs[0] == chosen_runs[1]  # exactly: variance 0
        elapsed = time.perf_counter() - start
        assert elapsed < 300.0, f"took {elapsed:.1f}s"


def test_criterion_8_end_to_end_ranking_sanity(pipeline):
    with criterion(8, "family CHOSEN-accuracy ranking Spearman >= 0.7 against strength order"):
        assert len(pipeline.chosen.questions) >= 500
        accuracies = selector_accuracies(pipeline.family, pipeline.chosen)
        rho = spearman(accuracies, pipeline.truth, p_value=False).coefficient
        assert rho >= 0.7, f"rho {rho:.3f}"


# -- criterion 9: determinism across the whole CLI pipeline -------------------


def synthesize_judgments(pools_path, tasks_path, out_path):
    """Five scripted annotators; scores keyed on a content hash so verdicts
    mix acceptable/ungrammatical/kept deterministically."""
    pools = {p.question_id: p for p in read_pools(pools_path)}
    tasks = read_tasks(tasks_path)
    with open(out_path, "w", encoding="utf-8") as fh:
        for task in tasks:
            pool = pools[task.question_id]
            if task.candidate_text == pool.ground_truth:
                scores = [5, 4, 5, 4, 4]
            else:
                digest = hashlib.sha256(task.candidate_text.encode()).digest()[0] % 10
                if digest < 2:
                    scores = [4, 3, 5, 1, 2]   # acceptable -> removed
                elif digest < 3:
                    scores = [0, 0, 0, 1, 2]   # ungrammatical -> removed
                else:
                    scores = [1, 2, 1, 2, 2]   # stays a false candidate
            for i, score in enumerate(scores):
                fh.write(json.dumps({
                    "task_id": task.task_id,
                    "candidate_id": task.candidate_id,
                    "annotator_id": f"a{i + 1}",
                    "score": score,
                }) + "\n")


def run_pipeline(work, data_paths):
    """Every artifact-producing stage, fixed seeds throughout."""
    paths = {
        "pools": str(work / "pools.jsonl"),
        "tasks": str(work / "tasks.jsonl"),
        "judgments_raw": str(work / "judgments_raw.jsonl"),
        "judgments": str(work / "judgments.jsonl"),
        "verdicts": str(work / "verdicts.jsonl"),
        "testset": str(work / "testset.jsonl"),
        "labeled": str(work / "labeled.jsonl"),
        "baseline": str(work / "systems" / "tfidf.jsonl"),
        "baseline2": str(work / "systems" / "overlap_0.6.jsonl"),
        "acc_chosen": str(work / "acc_chosen.json"),
        "acc_random": str(work / "acc_random.json"),
        "gen_scores": str(work / "metric_scores.json"),
        "report": str(work / "report.json"),
        "stability": str(work / "stability.json"),
    }
    (work / "systems").mkdir(exist_ok=True)

    assert cli.main([
        "build-pools", "--dialogues", data_paths["dialogues"],
        "--repository", data_paths["repository"], "--embeddings", data_paths["embeddings"],
        "--per-question", "10", "--out", paths["pools"],
    ]) == 0
    assert cli.main(["export-tasks", "--pools", paths["pools"], "--seed", "3",
                     "--out", paths["tasks"]]) == 0
    synthesize_judgments(paths["pools"], paths["tasks"], paths["judgments_raw"])
    assert cli.main(["import-judgments", "--judgments", paths["judgments_raw"],
                     "--pools", paths["pools"], "--out", paths["judgments"]]) == 0
    assert cli.main(["filter", "--pools", paths["pools"], "--judgments", paths["judgments"],
                     "--out", paths["verdicts"]]) == 0
    assert cli.main(["assemble", "--verdicts", paths["verdicts"], "--k", "3", "--seed", "5",
                     "--out", paths["testset"]]) == 0

    testset = [json.loads(l) for l in open(paths["testset"], encoding="utf-8")]
    labels_path = str(work / "labels.jsonl")
    with open(labels_path, "w", encoding="utf-8") as fh:
        q = testset[0]
        fh.write(json.dumps({
            "question_id": q["id"],
            "candidate": q["false_candidates"][0],
            "label": "Responses that have wrong subjects",
        }) + "\n")
    assert cli.main(["label", "--testset", paths["testset"], "--labels", labels_path,
                     "--out", paths["labeled"]]) == 0

    for selector, out in (("tfidf", paths["baseline"]), ("overlap:0.6", paths["baseline2"])):
        assert cli.main(["baseline", "--selector", selector, "--testset", paths["testset"],
                         "--repository", data_paths["repository"], "--seed", "11",
                         "--out", out]) == 0
    assert cli.main(["evaluate", "--testset", paths["testset"], "--systems", str(work / "systems"),
                     "--mode", "chosen", "--name", "chosen", "--out", paths["acc_chosen"]]) == 0
    assert cli.main(["evaluate", "--testset", paths["testset"], "--systems", str(work / "systems"),
                     "--mode", "random", "--seed", "13", "--repository", data_paths["repository"],
                     "--name", "random", "--out", paths["acc_random"]]) == 0

    # generated responses: echo the first context turn (deterministic)
    gen_dir = work / "generators"
    gen_dir.mkdir(exist_ok=True)
    for system in ("echo", "truncate"):
        with open(gen_dir / f"{system}.jsonl", "w", encoding="utf-8") as fh:
            for line in open(data_paths["dialogues"], encoding="utf-8"):
                rec = json.loads(line)
                text = rec["turns"][0] if system == "echo" else rec["turns"][0][:12]
                fh.write(json.dumps({"question_id": rec["id"], "generated": text}) + "\n")
    assert cli.main(["score-generation", "--system-outputs", str(gen_dir),
                     "--dialogues", data_paths["dialogues"],
                     "--metrics", "bleu1,bleu2,meteor,rougeL", "--out", paths["gen_scores"]]) == 0

    human_path = str(work / "human.jsonl")
    with open(human_path, "w", encoding="utf-8") as fh:
        for i, system in enumerate(("overlap_0.6", "tfidf")):
            for q in testset[:4]:
                fh.write(json.dumps({
                    "system_id": system, "question_id": q["id"],
                    "scores": [min(5, 2 + i)] * 5,
                }) + "\n")
        for q in testset[:4]:
            fh.write(json.dumps({
                "system_id": "third", "question_id": q["id"], "scores": [1, 1, 2, 1, 1],
            }) + "\n")
    # rank needs matching system sets: reuse accuracies for the same three names
    acc_path = str(work / "acc_manual.json")
    with open(acc_path, "w", encoding="utf-8") as fh:
        json.dump({"name": "chosen", "accuracies": {"overlap_0.6": 0.5, "tfidf": 0.75, "third": 0.25}}, fh)
    assert cli.main(["rank", "--human", human_path, "--accuracies", acc_path, "--seed", "17",
                     "--out", paths["report"]]) == 0

    assert cli.main(["stability", "--testset", paths["testset"],
                     "--repository", data_paths["repository"], "--trials", "10", "--seed", "19",
                     "--out", paths["stability"]]) == 0
    return paths


def snapshot(work):
    out = {}
    for path in sorted(work.rglob("*")):
        if path.is_file():
            out[str(path.relative_to(work))] = path.read_bytes()
    return out


def test_criterion_9_pipeline_determinism(tmp_path):
    with criterion(9, "rerunning every stage with identical seeds is byte-identical"):
        from synthetic import SyntheticCorpus

        data_dir = tmp_path / "data"
        corpus = SyntheticCorpus(n_questions=10, n_topics=4, repo_per_topic=40, seed=99)
        data_paths = {k: str(v) for k, v in corpus.write_files(data_dir).items()}

        work = tmp_path / "run"
        work.mkdir()
        run_pipeline(work, data_paths)
        first = snapshot(work)
        assert any(name.endswith(".manifest.json") for name in first)

        run_pipeline(work, data_paths)  # same directory: same paths in manifests
        second = snapshot(work)

        assert first.keys() == second.keys()
        for name in first:
            assert first[name] == second[name], f"artifact differs across reruns: {name}"
