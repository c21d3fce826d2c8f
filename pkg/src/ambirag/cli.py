"""Command-line interface: ingest, ask, run, eval, prelim, cache."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from dataclasses import replace
from pathlib import Path
from statistics import fmean

from . import kernels
from .batch import answer_or_error, run_batch
from .diversify import run_rd, vanilla_retrieve
from .errors import AmbiragError, ConfigError
from .evaluation import coverage_label, evaluate_run, load_dataset, render_table
from .gateway import CompletionCache
from .records import ErrorRecord, dumps_record, read_records, recorded_ids, trim_torn_tail
from .retrieval import CorpusIndex, ingest_corpus, load_index, save_index
from .settings import RunConfig, build_pipeline, load_config
from .types import CoverageLabel, Question, Route

EXIT_OK, EXIT_USER, EXIT_BACKEND = 0, 1, 2


class IndexNotFound(ConfigError):
    pass


def _fail(exc: BaseException) -> int:
    code = getattr(exc, "exit_code", EXIT_USER)
    print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return code


def _run_config(args) -> RunConfig:
    rc = load_config(args.config)
    overrides = {}
    for attr, key in (("corpus", "corpus_path"), ("dataset", "dataset_path"), ("index", "index_path"),
                      ("k_per", "k_per"), ("k_final", "k_final"), ("parallelism", "parallelism"),
                      ("cache_dir", "cache_dir")):
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "no_rerank", False):
        overrides["rerank"] = False
    if getattr(args, "force_route", None):
        overrides["force_route"] = Route(args.force_route)
    rc = replace(rc, **overrides)
    if getattr(args, "mock_fixtures", None):
        rc = rc.with_mock_fixtures(str(Path(args.mock_fixtures).resolve()))
    return rc


def _index(rc: RunConfig) -> CorpusIndex:
    if rc.index_path:
        if not Path(rc.index_path).exists():
            raise IndexNotFound(f"index not found: {rc.index_path}")
        return load_index(rc.index_path)
    if rc.corpus_path:
        if not Path(rc.corpus_path).exists():
            raise IndexNotFound(f"index not found: corpus {rc.corpus_path} does not exist")
        return ingest_corpus(rc.corpus_path)
    raise IndexNotFound("index not found: pass --index or --corpus")


def _dataset(rc: RunConfig):
    if not rc.dataset_path:
        raise ConfigError("no dataset given (--dataset)")
    return load_dataset(rc.dataset_path)


def cmd_ingest(args) -> int:
    index = ingest_corpus(args.corpus_file)
    if index.doc_count == 0:
        print("warning: corpus is empty", file=sys.stderr)
    if args.index_out:
        save_index(index, args.index_out)
    print(f"ingested {index.doc_count} passages")
    return EXIT_OK


def cmd_ask(args) -> int:
    rc = _run_config(args)
    index = _index(rc)
    cfg = build_pipeline(rc)
    rec, _ = answer_or_error(Question(args.id, args.question), index, cfg)
    if isinstance(rec, ErrorRecord):
        print(f"error: {rec.error_type}: {rec.message}", file=sys.stderr)
        return EXIT_BACKEND if rec.error_type in ("BackendUnavailable", "FixtureMiss", "BudgetExceeded") else EXIT_USER
    if args.trace:
        Path(args.trace).write_text(dumps_record(rec) + "\n", encoding="utf-8")
    print(f"route: {rec.response.route.value}")
    print(f"quality: {rec.report.quality.value}")
    if args.route_only:
        return EXIT_OK
    print("pseudo-interpretations:")
    labels = {v.interpretation_index: v.label.value for v in rec.report.verdicts}
    for interp in rec.rd_trace.pseudo:
        print(f"  {interp.index + 1}. [{labels.get(interp.index, '-')}] {interp.text}")
    print(f"passages: {', '.join(rec.rd_trace.final_set.ids)}")
    u = rec.usage
    print(f"usage: input_tokens={u.input_tokens} output_tokens={u.output_tokens} "
          f"llm_calls={u.llm_calls} cost={u.cost_estimate:.4f}")
    print()
    print(rec.response.text)
    return EXIT_OK


def cmd_run(args) -> int:
    rc = _run_config(args)
    dataset = _dataset(rc)
    index = _index(rc)
    cfg = build_pipeline(rc)
    questions = [g.question for g in dataset]
    if args.limit is not None:
        questions = questions[: args.limit]
    out = Path(args.records)
    if args.resume and trim_torn_tail(out):
        print(f"warning: dropped an incomplete last line from {out}", file=sys.stderr)
    done = recorded_ids(out) if args.resume else set()
    todo = [q for q in questions if q.id not in done]
    n = n_err = 0
    times = []
    with open(out, "a" if args.resume else "w", encoding="utf-8") as fh:
        for rec, seconds in run_batch(todo, index, cfg, rc.parallelism):
            fh.write(dumps_record(rec) + "\n")
            fh.flush()
            n += 1
            times.append(seconds)
            n_err += isinstance(rec, ErrorRecord)
    mean_t = fmean(times) if times else 0.0
    print(f"wrote {n} records ({n_err} errors, {len(done)} skipped) to {out}; "
          f"mean wall time per query {mean_t:.3f}s")
    return EXIT_OK


def cmd_eval(args) -> int:
    records = read_records(args.records)
    dataset = load_dataset(args.dataset)
    report = evaluate_run(records, dataset, args.k)
    print(render_table(report))
    cov = report["coverage"]
    print("coverage: " + ", ".join(f"{name}={block['count']}" for name, block in cov.items()))
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


def _distribution(labels: list[CoverageLabel]) -> dict[str, float]:
    counts = Counter(labels)
    return {c.value: (counts[c] / len(labels) if labels else 0.0) for c in CoverageLabel}


def cmd_prelim(args) -> int:
    rc = _run_config(args)
    dataset = _dataset(rc)
    index = _index(rc)
    cfg = build_pipeline(rc)
    vanilla, diversified, failed = [], [], []
    for gold in dataset:
        if not gold.gold_pairs:
            continue
        vanilla.append(coverage_label(vanilla_retrieve(gold.question, index, cfg), gold.answer_groups))
        try:
            rd, _ = run_rd(gold.question, index, cfg)
        except AmbiragError as exc:
            failed.append(gold.question.id)
            print(f"warning: {gold.question.id}: {type(exc).__name__}: {exc}", file=sys.stderr)
            continue
        diversified.append(coverage_label(rd.final_set, gold.answer_groups))
    summary = {
        "n": len(vanilla),
        "failed": failed,
        "vanilla": _distribution(vanilla),
        "diversified": _distribution(diversified),
    }
    width = max(len(c.value) for c in CoverageLabel)
    print(f"{'label'.ljust(width)}  {'vanilla':>8}  {'diversified':>11}")
    for c in CoverageLabel:
        print(f"{c.value.ljust(width)}  {100 * summary['vanilla'][c.value]:7.1f}%  "
              f"{100 * summary['diversified'][c.value]:10.1f}%")
    print(f"questions: {summary['n']} (rd failures: {len(failed)})")
    if args.records:
        report = evaluate_run(read_records(args.records), dataset, args.k)
        summary["by_coverage"] = report["by_coverage"]
        print("per-label means (records):")
        for label, means in report["by_coverage"].items():
            df1 = means["disambig_f1"]
            rl = means["rouge_l"]
            print(f"  {label.ljust(width)}  n={means['n']}  "
                  f"D-F1={'-' if df1 is None else f'{100 * df1:.1f}'}  "
                  f"R-L={'-' if rl is None else f'{100 * rl:.1f}'}")
    if args.out:
        Path(args.out).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_cache(args) -> int:
    cache = CompletionCache(args.cache_dir)
    if args.action == "clear":
        cache.clear()
        print("cache cleared")
        return EXIT_OK
    stats = cache.stats()
    print(f"entries: {stats['entries']}")
    print(f"total_tokens: {stats['total_tokens']}")
    return EXIT_OK


def cmd_info(args) -> int:
    print(f"kernels: {kernels.BACKEND}")
    return EXIT_OK


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI run configuration")
    p.add_argument("--corpus", help="JSON-lines corpus (ingested on the fly)")
    p.add_argument("--index", help="index written by 'ingest'")
    p.add_argument("--k-per", type=int, dest="k_per")
    p.add_argument("--k-final", type=int, dest="k_final")
    p.add_argument("--mock-fixtures", dest="mock_fixtures", help="scripted completions for every stage")
    p.add_argument("--cache-dir", dest="cache_dir")
    p.add_argument("--no-rerank", action="store_true", dest="no_rerank")
    p.add_argument("--force-route", choices=[r.value for r in Route], dest="force_route")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ambirag", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="index a corpus file")
    p.add_argument("corpus_file")
    p.add_argument("index_out", nargs="?")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("ask", help="answer one question")
    p.add_argument("question")
    p.add_argument("--id", default="q0", help="question id (keys scripted fixtures)")
    p.add_argument("--trace", help="write the full answer record here")
    p.add_argument("--route-only", action="store_true", dest="route_only")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_ask)

    p = sub.add_parser("run", help="answer every question of a dataset")
    p.add_argument("--dataset")
    p.add_argument("--records", required=True)
    p.add_argument("--limit", type=int)
    p.add_argument("--parallelism", type=int)
    p.add_argument("--resume", action="store_true")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="score a records file")
    p.add_argument("--records", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--k", type=int, default=5, help="MRecall@k")
    p.add_argument("--out", help="write the structured report (JSON)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("prelim", help="coverage of vanilla vs diversified retrieval")
    p.add_argument("--dataset")
    p.add_argument("--records", help="records to break metrics down by coverage label")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--out")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_prelim)

    p = sub.add_parser("cache", help="inspect or clear the completion cache")
    p.add_argument("action", choices=["stats", "clear"])
    p.add_argument("--cache-dir", required=True, dest="cache_dir")
    p.set_defaults(func=cmd_cache)

    p = sub.add_parser("info", help="show which kernel backend is loaded")
    p.set_defaults(func=cmd_info)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (AmbiragError, OSError, ValueError) as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
