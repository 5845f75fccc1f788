"""Command-line entry point wiring the full pipeline:

    build-pools -> export-tasks -> serve / import-judgments -> filter
    -> assemble -> label -> baseline / evaluate -> rank -> stability

Every artifact-producing command writes a ``<out>.manifest.json`` with
parameters, seeds and input/output digests; rerunning a stage with the same
inputs and seeds reproduces identical artifacts and manifests.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__, annotation, baselines, corpus, evaluation, manifest, metrics
from .retrieval import Retriever, tokenize

log = logging.getLogger("selecteval")

ENV_DATA_DIR = "SELECTEVAL_DATA_DIR"


class CommandError(Exception):
    """Validation failure with a structured payload for the error report."""

    def __init__(self, message: str, detail: dict | None = None):
        super().__init__(message)
        self.detail = detail or {}


def _resolve(path: str | None) -> str | None:
    """Resolve relative paths under $SELECTEVAL_DATA_DIR when it is set."""
    if path is None:
        return None
    base = os.environ.get(ENV_DATA_DIR)
    if base and not os.path.isabs(path):
        return str(Path(base) / path)
    return path


def _coerce(value: str):
    lowered = value.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            continue
    return value


def _load_config(path: str) -> dict:
    overrides = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CommandError(f"config {path} line {lineno}: expected key=value")
        key, value = line.split("=", 1)
        overrides[key.strip().replace("-", "_")] = _coerce(value.strip())
    return overrides


def _stopwords(path: str | None) -> frozenset[str]:
    return corpus.load_stopwords(_resolve(path))


def _repository(path: str, exclude_from: str | None = None) -> corpus.Repository:
    exclusion = corpus.load_exclusion(_resolve(exclude_from)) if exclude_from else None
    return corpus.load_repository(_resolve(path), exclusion)


# ---------------------------------------------------------------- commands


def cmd_build_pools(args) -> int:
    stopwords = _stopwords(args.stopwords)
    repository = _repository(args.repository, args.exclude_from)
    table = corpus.load_embeddings(_resolve(args.embeddings)) if args.embeddings else None
    dialogues = corpus.load_dialogues(_resolve(args.dialogues))
    if dialogues.skipped:
        log.info("skipped %d malformed dialogue records", dialogues.skipped)
    if not dialogues.samples:
        raise CommandError("no usable dialogue samples")

    retriever = Retriever(
        repository, stopwords, table=table, sif_a=args.sif_a, remove_pc=args.remove_pc
    )
    pools = [retriever.retrieve_pool(s, args.per_question) for s in dialogues.samples]
    out = _resolve(args.out)
    annotation.write_pools(pools, out)
    manifest.write_manifest(
        out,
        command="build-pools",
        parameters={
            "per_question": args.per_question,
            "sif_a": args.sif_a,
            "remove_pc": args.remove_pc,
            "skipped_dialogues": dialogues.skipped,
        },
        inputs=[p for p in (_resolve(args.dialogues), _resolve(args.repository),
                            _resolve(args.embeddings), _resolve(args.stopwords),
                            _resolve(args.exclude_from)) if p],
        outputs=[out],
    )
    short = sum(1 for p in pools if len(p.candidates) < args.per_question)
    print(f"wrote {len(pools)} pools to {out}" + (f" ({short} short of {args.per_question})" if short else ""))
    return 0


def cmd_export_tasks(args) -> int:
    pools = annotation.read_pools(_resolve(args.pools))
    tasks = annotation.export_tasks(pools, seed=args.seed)
    out = _resolve(args.out)
    annotation.write_tasks(tasks, out)
    manifest.write_manifest(
        out,
        command="export-tasks",
        parameters={"questions": len(pools), "tasks": len(tasks)},
        inputs=[_resolve(args.pools)],
        outputs=[out],
        seeds={"shuffle": args.seed},
    )
    print(f"wrote {len(tasks)} tasks to {out}")
    return 0


def cmd_serve(args) -> int:
    from .server import DEFAULT_INSTRUCTIONS, serve

    ui_dir = _resolve(args.ui_dir)
    if ui_dir is None and Path("frontend/dist").is_dir():
        ui_dir = "frontend/dist"
    instructions = DEFAULT_INSTRUCTIONS
    if args.instructions_file:
        instructions = Path(_resolve(args.instructions_file)).read_text(encoding="utf-8").strip()
    serve(
        tasks_path=_resolve(args.tasks),
        journal_path=_resolve(args.journal),
        port=args.port,
        required=args.annotators,
        ui_dir=ui_dir,
        host=args.host,
        instructions=instructions,
    )
    return 0


def cmd_import_judgments(args) -> int:
    store = annotation.import_judgments(_resolve(args.judgments))
    out = _resolve(args.out)
    with open(out, "w", encoding="utf-8") as fh:
        for j in store.judgments:
            fh.write(json.dumps({
                "task_id": j.task_id,
                "candidate_id": j.candidate_id,
                "annotator_id": j.annotator_id,
                "score": j.score,
            }, ensure_ascii=False) + "\n")
    report = {
        "accepted": len(store.judgments),
        "rejected": [{"record": r.record, "reason": r.reason} for r in store.rejects],
        "judgments_per_candidate": store.counts(),
    }
    if args.pools:
        pools = annotation.read_pools(_resolve(args.pools))
        comp = annotation.completeness(store, pools, required=args.annotators)
        report["completeness"] = {
            "required": comp.required,
            "complete": comp.complete,
            "incomplete_candidates": comp.incomplete,
        }
    report_path = Path(out + ".report.json")
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    manifest.write_manifest(
        out,
        command="import-judgments",
        parameters={"accepted": len(store.judgments), "rejected": len(store.rejects)},
        inputs=[p for p in (_resolve(args.judgments), _resolve(args.pools)) if p],
        outputs=[out, report_path],
    )
    print(f"accepted {len(store.judgments)} judgments, rejected {len(store.rejects)}")
    return 0


def cmd_filter(args) -> int:
    pools = annotation.read_pools(_resolve(args.pools))
    store = annotation.import_judgments(_resolve(args.judgments))
    try:
        judged = annotation.filter_pools(
            pools, store, required=args.annotators, allow_partial=args.allow_partial
        )
    except annotation.IncompleteJudgmentsError as exc:
        raise CommandError(
            str(exc),
            detail={
                "required": exc.report.required,
                "incomplete_candidates": exc.report.incomplete,
            },
        ) from exc

    out = _resolve(args.out)
    annotation.write_judged(judged, out)

    # Agreement statistics over every fully judged item (candidates and
    # ground truths alike).
    vectors = [c.scores for q in judged for c in q.candidates if len(c.scores) == args.annotators]
    vectors += [q.ground_truth_scores for q in judged if len(q.ground_truth_scores) == args.annotators]
    kappa_six = evaluation.fleiss_kappa(vectors, mode="six") if vectors else None
    kappa_binary = (
        evaluation.fleiss_kappa(vectors, mode="binary", binary_threshold=args.binary_threshold)
        if vectors else None
    )
    verdict_counts = {v.value: 0 for v in annotation.Verdict}
    for q in judged:
        for c in q.candidates:
            verdict_counts[c.verdict.value] += 1
    report = {
        "questions": len(judged),
        "questions_dropped_weak_ground_truth": sum(1 for q in judged if q.dropped),
        "verdicts": verdict_counts,
        "kappa_six": kappa_six.kappa if kappa_six else None,
        "kappa_binary": kappa_binary.kappa if kappa_binary else None,
        "binary_threshold": args.binary_threshold,
    }
    report_path = Path(out + ".report.json")
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    manifest.write_manifest(
        out,
        command="filter",
        parameters={"annotators": args.annotators, "allow_partial": args.allow_partial},
        inputs=[_resolve(args.pools), _resolve(args.judgments)],
        outputs=[out, report_path],
    )
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_assemble(args) -> int:
    judged = annotation.read_judged(_resolve(args.verdicts))
    result = annotation.assemble_questions(judged, k=args.k, seed=args.seed)
    out = _resolve(args.out)
    annotation.write_testset(result.testset, out)
    manifest.write_manifest(
        out,
        command="assemble",
        parameters={
            "k": args.k,
            "questions": len(result.testset.questions),
            "spawned": result.spawned,
            "dropped_insufficient": result.dropped_insufficient,
            "dropped_weak_ground_truth": result.dropped_weak_ground_truth,
        },
        inputs=[_resolve(args.verdicts)],
        outputs=[out],
        seeds={"candidate_order": args.seed},
    )
    print(
        f"wrote {len(result.testset.questions)} questions ({result.spawned} spawned, "
        f"{result.dropped_insufficient} dropped for too few candidates, "
        f"{result.dropped_weak_ground_truth} dropped for weak ground truth)"
    )
    return 0


def cmd_label(args) -> int:
    testset = annotation.read_testset(_resolve(args.testset))
    labels = []
    with open(_resolve(args.labels), encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                labels.append(json.loads(line))
    try:
        report = annotation.assign_error_labels(testset, labels)
    except annotation.UnknownLabelError as exc:
        raise CommandError(str(exc)) from exc
    out = _resolve(args.out)
    annotation.write_testset(testset, out)
    manifest.write_manifest(
        out,
        command="label",
        parameters={
            "labeled": report.labeled,
            "total_false_candidates": report.total_false_candidates,
            "rejected": len(report.rejected),
        },
        inputs=[_resolve(args.testset), _resolve(args.labels)],
        outputs=[out],
    )
    print(f"labeled {report.labeled}/{report.total_false_candidates} false candidates")
    if report.rejected:
        print(f"rejected {len(report.rejected)} label records", file=sys.stderr)
    return 0


def cmd_baseline(args) -> int:
    testset = annotation.read_testset(_resolve(args.testset))
    stopwords = _stopwords(args.stopwords)
    repository = _repository(args.repository)
    selector = baselines.make_selector(args.selector, repository, stopwords, seed=args.seed)
    run = evaluation.run_selector(selector, testset)
    out = _resolve(args.out)
    run.write(out)
    manifest.write_manifest(
        out,
        command="baseline",
        parameters={"selector": args.selector},
        inputs=[_resolve(args.testset), _resolve(args.repository)],
        outputs=[out],
        seeds={"selector": args.seed},
    )
    print(f"wrote losses for {len(run.losses)} questions to {out}")
    return 0


def cmd_evaluate(args) -> int:
    testset = annotation.read_testset(_resolve(args.testset))
    out = _resolve(args.out)
    inputs = [_resolve(args.testset)]
    seeds: dict = {}
    outputs = [out]

    if args.mode == "random":
        if not args.repository:
            raise CommandError("--mode random requires --repository")
        repository = _repository(args.repository)
        inputs.append(_resolve(args.repository))
        seeds["random_candidates"] = args.seed
        testset = evaluation.build_random_testset(testset, repository, seed=args.seed)
        emitted = _resolve(args.emit_testset) or out + ".random_testset.jsonl"
        annotation.write_testset(testset, emitted)
        outputs.append(emitted)
        if args.systems:
            log.warning(
                "random mode rebuilt the candidates (%s); system outputs in %s "
                "are only meaningful if they were computed against that file",
                emitted, args.systems,
            )

    accuracies: dict[str, float] = {}
    scorable: dict[str, int] = {}
    skipped: dict[str, int] = {}
    if args.systems:
        runs = evaluation.load_system_runs(_resolve(args.systems))
        for name, run in sorted(runs.items()):
            result = evaluation.accuracy(run, testset)
            accuracies[name] = result.value
            scorable[name] = result.scorable
            skipped[name] = result.skipped
    if args.selectors:
        if not args.repository:
            raise CommandError("--selectors requires --repository")
        repository = _repository(args.repository)
        stopwords = _stopwords(args.stopwords)
        for spec in args.selectors.split(","):
            selector = baselines.make_selector(spec.strip(), repository, stopwords, seed=args.seed)
            run = evaluation.run_selector(selector, testset)
            result = evaluation.accuracy(run, testset)
            accuracies[selector.name] = result.value
            scorable[selector.name] = result.scorable
            skipped[selector.name] = result.skipped
    if not accuracies:
        raise CommandError("nothing to evaluate: pass --systems and/or --selectors")

    payload = {
        "name": args.name or args.mode,
        "mode": args.mode,
        "seed": args.seed if args.mode == "random" else None,
        "accuracies": accuracies,
        "scorable_questions": scorable,
        "skipped_questions": skipped,
    }
    if args.systems:
        inputs.extend(sorted(str(p) for p in Path(_resolve(args.systems)).glob("*.jsonl")))
    Path(out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    manifest.write_manifest(
        out,
        command="evaluate",
        parameters={"mode": args.mode, "systems": sorted(accuracies)},
        inputs=inputs,
        outputs=outputs,
        seeds=seeds,
    )
    print(json.dumps(payload["accuracies"], indent=2, sort_keys=True))
    return 0


def cmd_score_generation(args) -> int:
    dialogues = corpus.load_dialogues(_resolve(args.dialogues))
    references = {s.id: tokenize(s.ground_truth) for s in dialogues.samples}
    if not references:
        raise CommandError("no dialogue samples to score against")
    wanted = [m.strip() for m in args.metrics.split(",") if m.strip()]
    for m in wanted:
        if m not in metrics.METRICS:
            raise CommandError(f"unknown metric {m!r}; choose from {', '.join(metrics.METRICS)}")

    runs = evaluation.load_system_runs(_resolve(args.system_outputs))
    values: dict[str, dict[str, float]] = {m: {} for m in wanted}
    pair_counts: dict[str, int] = {}
    for name, run in sorted(runs.items()):
        ids = sorted(set(run.generated) & set(references))
        if not ids:
            raise CommandError(f"system {name} has no generated responses for these dialogues")
        missing = len(references) - len(ids)
        if missing:
            log.warning("system %s: %d dialogues without generated output", name, missing)
        hyps = [tokenize(run.generated[i]) for i in ids]
        refs = [references[i] for i in ids]
        pair_counts[name] = len(ids)
        for m in wanted:
            values[m][name] = metrics.score_corpus(m, hyps, refs)

    out = _resolve(args.out)
    payload = {"metrics": values, "pairs": pair_counts}
    Path(out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    manifest.write_manifest(
        out,
        command="score-generation",
        parameters={"metrics": wanted, "systems": sorted(runs)},
        inputs=[_resolve(args.dialogues)]
        + sorted(str(p) for p in Path(_resolve(args.system_outputs)).glob("*.jsonl")),
        outputs=[out],
    )
    print(json.dumps(payload["metrics"], indent=2, sort_keys=True))
    return 0


def cmd_rank(args) -> int:
    rankings: dict[str, dict[str, float]] = {}

    records = evaluation.read_human_scores(_resolve(args.human))
    rankings["human"] = evaluation.human_final_scores(records)

    for path in args.accuracies or []:
        payload = json.loads(Path(_resolve(path)).read_text(encoding="utf-8"))
        name = payload.get("name") or Path(path).stem
        rankings[str(name)] = {str(k): float(v) for k, v in payload["accuracies"].items()}
    if args.metrics:
        payload = json.loads(Path(_resolve(args.metrics)).read_text(encoding="utf-8"))
        for metric_name, per_system in payload["metrics"].items():
            rankings[str(metric_name)] = {str(k): float(v) for k, v in per_system.items()}

    systems = set(rankings["human"])
    for name, values in rankings.items():
        if set(values) != systems:
            raise CommandError(
                f"ranking {name!r} covers a different system set",
                detail={"expected": sorted(systems), "got": sorted(values)},
            )

    n = len(systems)
    report: dict = {"systems": sorted(systems), "rankings": {}, "spearman": {}}
    for name, values in rankings.items():
        keys = sorted(values)
        ranks = evaluation.average_ranks([values[k] for k in keys])
        report["rankings"][name] = {
            "values": values,
            "ranks": {k: n + 1 - r for k, r in zip(keys, ranks)},  # 1 = best
        }
    names = sorted(rankings)
    report["spearman"] = {name: {} for name in names}
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            result = evaluation.spearman(rankings[a], rankings[b], seed=args.seed)
            cell = {
                "coefficient": result.coefficient,
                "p_value": result.p_value,
                "p_method": result.p_method,
            }
            report["spearman"][a][b] = cell
            report["spearman"][b][a] = cell

    out = _resolve(args.out)
    Path(out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    manifest.write_manifest(
        out,
        command="rank",
        parameters={"rankings": names},
        inputs=[p for p in ([_resolve(args.human)] + [_resolve(x) for x in (args.accuracies or [])]
                            + ([_resolve(args.metrics)] if args.metrics else []))],
        outputs=[out],
        seeds={"permutation_test": args.seed},
    )
    vs_human = {
        name: report["spearman"]["human"][name]["coefficient"]
        for name in names if name != "human"
    }
    print(json.dumps({"spearman_vs_human": vs_human}, indent=2, sort_keys=True))
    return 0


def cmd_stability(args) -> int:
    testset = annotation.read_testset(_resolve(args.testset))
    stopwords = _stopwords(args.stopwords)
    repository = _repository(args.repository)
    tfidf = baselines.TfidfSelector(repository, stopwords)
    family = baselines.make_overlap_family(tfidf, seed=args.seed)
    truth = baselines.strength_ranking(family)

    chosen_acc = evaluation.selector_accuracies(family, testset)
    chosen = evaluation.spearman(chosen_acc, truth, seed=args.seed)
    result = evaluation.stability_analysis(
        testset, repository, family, truth, trials=args.trials, seed=args.seed
    )
    payload = {
        "trials": args.trials,
        "seed": args.seed,
        "systems": sorted(family),
        "coefficients": result.coefficients,
        "undefined_trials": result.undefined_trials,
        "summary": result.summary,
        "random_mean_coefficient": result.mean,
        "chosen_coefficient": chosen.coefficient,
        "chosen_p_value": chosen.p_value,
    }
    out = _resolve(args.out)
    Path(out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    manifest.write_manifest(
        out,
        command="stability",
        parameters={"trials": args.trials},
        inputs=[_resolve(args.testset), _resolve(args.repository)],
        outputs=[out],
        seeds={"stability": args.seed},
    )
    print(json.dumps({"summary": result.summary, "random_mean": result.mean,
                      "chosen": chosen.coefficient}, indent=2, sort_keys=True))
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selecteval",
        description="Construct response-selection test sets and rank systems by selection accuracy.",
    )
    parser.add_argument("--version", action="version", version=f"selecteval {__version__}")
    parser.add_argument("--config", help="key=value overrides applied as flag defaults")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-pools", help="retrieve candidate pools for every dialogue sample")
    p.add_argument("--dialogues", required=True)
    p.add_argument("--repository", required=True)
    p.add_argument("--embeddings", help="word-vector file; omit for lexical-only retrieval")
    p.add_argument("--stopwords", help="stopword list (default: packaged English list)")
    p.add_argument("--exclude-from", help="utterances to drop from the repository")
    p.add_argument("--per-question", type=int, default=10)
    p.add_argument("--sif-a", type=float, default=1e-3)
    p.add_argument("--remove-pc", action="store_true",
                   help="strip the first principal component from sentence vectors")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_pools)

    p = sub.add_parser("export-tasks", help="write annotation tasks (ground truth mixed in)")
    p.add_argument("--pools", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_tasks)

    p = sub.add_parser("serve", help="run the annotation backend + UI")
    p.add_argument("--tasks", required=True)
    p.add_argument("--journal", required=True)
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--annotators", type=int, default=annotation.ANNOTATORS_PER_CANDIDATE)
    p.add_argument("--ui-dir", help="directory with built frontend assets (default: frontend/dist if present)")
    p.add_argument("--instructions-file", help="override the annotator instruction text")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("import-judgments", help="validate a judgment file")
    p.add_argument("--judgments", required=True)
    p.add_argument("--pools", help="include a completeness report against these pools")
    p.add_argument("--annotators", type=int, default=annotation.ANNOTATORS_PER_CANDIDATE)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_import_judgments)

    p = sub.add_parser("filter", help="apply the score-threshold removal rules")
    p.add_argument("--pools", required=True)
    p.add_argument("--judgments", required=True)
    p.add_argument("--annotators", type=int, default=annotation.ANNOTATORS_PER_CANDIDATE)
    p.add_argument("--allow-partial", action="store_true",
                   help="majority-of-available thresholds instead of refusing incomplete judgments")
    p.add_argument("--binary-threshold", type=int, default=4,
                   help="kappa binarization: scores >= this count as appropriate")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("assemble", help="build the final test set from verdicts")
    p.add_argument("--verdicts", required=True)
    p.add_argument("--k", type=int, default=annotation.DEFAULT_FALSE_CANDIDATES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("label", help="attach error labels to false candidates")
    p.add_argument("--testset", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("baseline", help="run a built-in selector over a test set")
    p.add_argument("--selector", required=True, help="tfidf | random | overlap:<strength>")
    p.add_argument("--testset", required=True)
    p.add_argument("--repository", required=True)
    p.add_argument("--stopwords")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("evaluate", help="selection accuracy of systems on a test set")
    p.add_argument("--testset", required=True)
    p.add_argument("--systems", help="directory of per-system output files (*.jsonl)")
    p.add_argument("--selectors", help="comma list of built-in selector specs to evaluate too")
    p.add_argument("--mode", choices=("chosen", "random"), default="chosen")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repository", help="required for --mode random and --selectors")
    p.add_argument("--stopwords")
    p.add_argument("--emit-testset", help="where to write the randomized test set (--mode random)")
    p.add_argument("--name", help="ranking name recorded in the output (default: mode)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("score-generation", help="reference metrics over generated responses")
    p.add_argument("--system-outputs", required=True)
    p.add_argument("--dialogues", required=True)
    p.add_argument("--metrics", default=",".join(metrics.METRICS))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score_generation)

    p = sub.add_parser("rank", help="rank systems and correlate rankings")
    p.add_argument("--human", required=True, help="human score records (JSON Lines)")
    p.add_argument("--accuracies", action="append", help="accuracy file from evaluate (repeatable)")
    p.add_argument("--metrics", help="metric scores file from score-generation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("stability", help="coefficient spread across resampled random test sets")
    p.add_argument("--testset", required=True)
    p.add_argument("--repository", required=True)
    p.add_argument("--stopwords")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stability)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.config:
        overrides = _load_config(_resolve(args.config))
        for key, value in overrides.items():
            if hasattr(args, key) and f"--{key.replace('_', '-')}" not in (argv or sys.argv):
                setattr(args, key, value)
    try:
        return args.func(args)
    except CommandError as exc:
        print(json.dumps({"error": str(exc), "detail": exc.detail}, sort_keys=True), file=sys.stderr)
        return 1
    except (corpus.IngestError, ValueError, OSError) as exc:
        print(json.dumps({"error": str(exc)}, sort_keys=True), file=sys.stderr)
        return 1
    except (KeyError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": f"malformed input: {exc}"}, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
