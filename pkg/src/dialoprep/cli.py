"""Pipeline command-line interface.

Each stage is a subcommand so partial reruns stay cheap:

    ingest | clean | roles | augment | annotate | noise | stats | eval

Every run writes ``<out>.manifest.json`` next to its primary output,
recording the command, parameters, seed, and SHA-256 digests of the inputs,
enough to re-run the stage identically. Exit codes: 0 success, 1 data error
(message on stderr), 2 usage error.

All randomness flows from ``--seed``; no stage reads the clock or OS entropy,
so a fixed config and seed reproduce outputs byte-for-byte at any ``--jobs``
value.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__, annotate, dedup, ingest, metrics, noising, records, roles
from .errors import IdMismatchError, PipelineError


def _sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(command: str, out_path: str, inputs: list[str],
                    params: dict, seed: int | None = None,
                    corpus: records.CorpusManifest | None = None) -> None:
    manifest = {
        "schema_version": records.SCHEMA_VERSION,
        "package": f"dialoprep {__version__}",
        "command": command,
        "seed": seed,
        "params": params,
        "inputs": [{"name": Path(p).name, "sha256": _sha256(p)} for p in inputs],
        "outputs": [Path(out_path).name],
    }
    if corpus is not None:
        manifest["corpus"] = {
            "name": corpus.name,
            "examples": corpus.examples,
            "created_with_seed": corpus.created_with_seed,
            "source_datasets": list(corpus.source_datasets),
        }
    with open(f"{out_path}.manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def _sniff_kind(path: str) -> str:
    """Dialogue or parallel corpus? Decided by the first record's fields."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                return "parallel" if "summaries" in json.loads(line) else "dialogues"
    return "dialogues"


def _parallel_map(fn, items, jobs: int):
    """Order-preserving map; results are identical at any worker count."""
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_ingest(args) -> int:
    spec = ingest.IngestSpec.from_file(args.spec)
    result = ingest.ingest(args.input, spec)
    records.save_corpus(result.dialogues, args.out)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(result.report.to_dict(), fh, ensure_ascii=False, indent=2)
            fh.write("\n")
    _write_manifest(
        "ingest", args.out, [args.input, args.spec],
        params={"spec": Path(args.spec).name},
        corpus=records.corpus_manifest(Path(args.out).name, result.dialogues))
    print(f"ingest: {len(result.dialogues)} dialogues "
          f"({len(result.report.dropped_empty_dialogues)} empty, "
          f"{len(result.report.dropped_invalid_dialogues)} invalid dropped)")
    return 0


def _cmd_clean(args) -> int:
    if args.config:
        cfg = dedup.DedupConfig.from_file(args.config)
    else:
        cfg = dedup.DedupConfig(
            jaccard_threshold=args.jaccard_threshold,
            shingle_k=args.shingle_k,
            min_turns=args.min_turns,
            min_tokens=args.min_tokens,
        )
    dialogues = records.load_corpus(args.input, "dialogues")
    removals: list[dedup.RemovalRecord] = []
    kept, removed = dedup.dedup_corpus(dialogues, cfg, use_minhash=args.minhash)
    removals.extend(removed)
    if args.eval_set:
        eval_sets = [records.load_corpus(p, "dialogues") for p in args.eval_set]
        kept, removed = dedup.remove_eval_overlap(kept, eval_sets, cfg,
                                                  use_minhash=args.minhash)
        removals.extend(removed)
    kept, removed = dedup.filter_min_size(kept, cfg)
    removals.extend(removed)
    records.save_corpus(kept, args.out)
    if args.report:
        dedup.save_removal_report(removals, args.report)
    _write_manifest(
        "clean", args.out, [args.input, *(args.eval_set or [])],
        params={
            "jaccard_threshold": cfg.jaccard_threshold,
            "shingle_k": cfg.shingle_k,
            "min_turns": cfg.min_turns,
            "min_tokens": cfg.min_tokens,
            "minhash": bool(args.minhash),
        },
        corpus=records.corpus_manifest(Path(args.out).name, kept))
    print(f"clean: kept {len(kept)} of {len(dialogues)} dialogues "
          f"({len(removals)} removed)")
    return 0


def _cmd_roles(args) -> int:
    pool = (roles.NamePool.from_file(args.names) if args.names
            else roles.bundled_name_pool())
    dialogues = records.load_corpus(args.input, "dialogues")
    renamed = _parallel_map(
        lambda d: roles.assign_role_group(d, pool, args.seed, force=not args.no_force),
        dialogues, args.jobs)
    records.save_corpus(renamed, args.out)
    _write_manifest(
        "roles", args.out,
        [args.input] + ([args.names] if args.names else []),
        params={"force": not args.no_force, "pool_size": len(pool)},
        seed=args.seed,
        corpus=records.corpus_manifest(Path(args.out).name, renamed, seed=args.seed))
    print(f"roles: assigned role groups to {len(renamed)} dialogues")
    return 0


def _cmd_augment(args) -> int:
    role_map = roles.RoleMap.from_file(args.map)
    examples = records.load_corpus(args.input, "parallel")
    augmented = [roles.augment_role_replace(ex, role_map) for ex in examples]
    records.save_corpus(augmented, args.out)
    _write_manifest(
        "augment", args.out, [args.input, args.map],
        params={"map": Path(args.map).name},
        corpus=records.corpus_manifest(Path(args.out).name, augmented))
    print(f"augment: rewrote {len(augmented)} examples")
    return 0


def _cmd_annotate(args) -> int:
    if args.mock:
        endpoint = annotate.MockEndpoint(args.mock)
    elif args.endpoint:
        endpoint = annotate.HttpEndpoint(args.endpoint)
    else:
        raise PipelineError("annotate needs --endpoint URL or --mock BEHAVIOR")
    job = annotate.AnnotationJob(
        model=args.model,
        temperature=args.temperature,
        template=annotate.PromptTemplate(args.template),
        max_in_flight=args.max_in_flight,
        budget=args.budget,
    )
    policy = annotate.RetryPolicy(max_attempts=args.max_attempts,
                                  base_backoff=args.base_backoff)
    dialogues = records.load_corpus(args.input, "dialogues")
    report = annotate.annotate_batch(dialogues, job, endpoint, args.out, policy)
    failures_path = args.failures or f"{args.out}.failures.jsonl"
    annotate.save_failure_report(report, failures_path)
    _write_manifest(
        "annotate", args.out, [args.input],
        params={
            "model": job.model,
            "temperature": job.temperature,
            "template": job.template.value,
            "max_in_flight": job.max_in_flight,
            "budget": job.budget,
            "mock": args.mock,
        })
    print(f"annotate: {len(report.completed)} annotated, "
          f"{len(report.skipped_existing)} skipped, "
          f"{len(report.failures)} failed, "
          f"{len(report.not_attempted)} over budget")
    return 0


def _cmd_noise(args) -> int:
    cfg = (noising.NoisingConfig.from_file(args.config) if args.config
           else noising.NoisingConfig())
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.mix:
        mix = noising.TaskMix.from_file(args.mix)
        if args.seed is not None:
            mix = noising.TaskMix(weights=mix.weights, seed=args.seed)
    else:
        mix = noising.TaskMix.equal_reconstruction(seed=cfg.seed)
    kind = args.kind or _sniff_kind(args.input)
    items = records.load_corpus(args.input, kind)
    pairs = _parallel_map(
        lambda ordinal: noising.mixed_pair(items, mix, cfg, ordinal),
        range(args.count), args.jobs)
    noising.save_pairs(pairs, args.out)
    _write_manifest(
        "noise", args.out, [args.input] + ([args.mix] if args.mix else []),
        params={
            "count": args.count,
            "kind": kind,
            "weights": {t: mix.weights.get(t, 0.0) for t in noising.ALL_TASKS},
            "token_mask_rate": cfg.token_mask_rate,
            "token_delete_rate": cfg.token_delete_rate,
            "infill_lambda": cfg.infill_lambda,
            "infill_utterance_budget_rate": cfg.infill_utterance_budget_rate,
            "uttr_mask_rate": cfg.uttr_mask_rate,
        },
        seed=cfg.seed)
    print(f"noise: wrote {len(pairs)} pairs")
    return 0


def _cmd_stats(args) -> int:
    examples = records.load_corpus(args.input, "parallel")
    report = metrics.corpus_report(examples, summary_index=args.summary_index)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump({"tokenizer": metrics.TOKENIZER_LABEL, **report.to_dict()},
                  fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    _write_manifest(
        "stats", args.out, [args.input],
        params={"summary_index": args.summary_index,
                "tokenizer": metrics.TOKENIZER_LABEL})
    print(metrics.format_stats_table(report))
    return 0


def _load_keyed(path: str) -> dict[str, dict]:
    entries: dict[str, dict] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            entries[str(obj["id"])] = obj
    return entries


def _entry_text(obj: dict) -> str:
    if "turns" in obj:  # a dialogue record: use its rendered text
        return records.render_dialogue_text(records.dialogue_from_obj(obj))
    return str(obj["text"])


def _entry_references(obj: dict) -> list[str]:
    if "texts" in obj:
        return [str(t) for t in obj["texts"]]
    return [str(obj["text"])]


def _cmd_eval(args) -> int:
    candidates = _load_keyed(args.candidates)
    references = _load_keyed(args.references)
    only_refs = [i for i in references if i not in candidates]
    only_cands = [i for i in candidates if i not in references]
    if only_refs or only_cands:
        raise IdMismatchError(only_refs, only_cands)

    ids = sorted(candidates)
    per_example: dict[str, dict] = {}
    if args.select_train_ref:
        for example_id in ids:
            refs = _entry_references(references[example_id])
            index = metrics.select_training_reference(
                _entry_text(candidates[example_id]), refs)
            per_example[example_id] = {"selected_reference": index}
        report = {"mode": "select_train_ref", "per_example": per_example}
    else:
        f1_sums = {"rouge1": [], "rouge2": [], "rougeL": []}
        for example_id in ids:
            cand = metrics.tokenize_for_metrics(_entry_text(candidates[example_id]))
            if args.max_length:
                cand = metrics.truncate_summary(cand, args.max_length)
            refs = _entry_references(references[example_id])
            if args.multi_ref:
                scores = metrics.multi_reference_rouge(cand, refs)
            else:
                scores = metrics.score_pair(cand, refs[0])
            per_example[example_id] = {
                "rouge1": scores.rouge1.f1,
                "rouge2": scores.rouge2.f1,
                "rougeL": scores.rougeL.f1,
            }
            for key in f1_sums:
                f1_sums[key].append(per_example[example_id][key])
        mean = {key: (math.fsum(vals) / len(vals) if vals else 0.0)
                for key, vals in f1_sums.items()}
        report = {
            "mode": "multi_ref" if args.multi_ref else "single_ref",
            "max_length": args.max_length,
            "mean": mean,
            "per_example": per_example,
        }
        print("mean F1  R-1 {rouge1:.4f}  R-2 {rouge2:.4f}  R-L {rougeL:.4f}".format(**mean))
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    _write_manifest(
        "eval", args.out, [args.candidates, args.references],
        params={"multi_ref": bool(args.multi_ref),
                "select_train_ref": bool(args.select_train_ref),
                "max_length": args.max_length})
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dialoprep",
        description="Dialogue corpus construction, noising, and evaluation pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert a raw export to a dialogue corpus")
    p.add_argument("--in", dest="input", required=True,
                   help="raw source file (one utterance per line)")
    p.add_argument("--spec", required=True, help="ingest spec JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="where to write the ingest report JSON")
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("clean", help="dedup, leakage removal, and size filtering")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--eval-set", action="append", help="evaluation corpus to exclude against")
    p.add_argument("--config", help="DedupConfig JSON (overrides the flags below)")
    p.add_argument("--jaccard-threshold", type=float, default=0.8)
    p.add_argument("--shingle-k", type=int, default=1)
    p.add_argument("--min-turns", type=int, default=4)
    p.add_argument("--min-tokens", type=int, default=32)
    p.add_argument("--minhash", action="store_true",
                   help="accelerate pair search with banded MinHash")
    p.add_argument("--report", help="removal report path (line-delimited)")
    p.set_defaults(fn=_cmd_clean)

    p = sub.add_parser("roles", help="assign real-name role groups")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--names", help="name pool file (default: bundled pool)")
    p.add_argument("--no-force", action="store_true",
                   help="keep role tables already drawn from the pool")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=_cmd_roles)

    p = sub.add_parser("augment", help="role-replaced augmentation of a parallel corpus")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--map", required=True, help="role map JSON (old name -> new name)")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_augment)

    p = sub.add_parser("annotate", help="summarize dialogues via a chat endpoint")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="parallel corpus output (appended; resumable)")
    p.add_argument("--model", default="gpt-3.5-turbo-0301")
    p.add_argument("--endpoint", help="base URL of a chat-completion-compatible service")
    p.add_argument("--mock", help="offline endpoint: 'fixed:<text>' or 'head:<k>'")
    p.add_argument("--template", choices=["preceding", "instruct", "subsequent"],
                   default="instruct")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--max-in-flight", type=int, default=1)
    p.add_argument("--budget", type=int)
    p.add_argument("--max-attempts", type=int, default=3)
    p.add_argument("--base-backoff", type=float, default=1.0)
    p.add_argument("--failures", help="failure report path")
    p.set_defaults(fn=_cmd_annotate)

    p = sub.add_parser("noise", help="generate denoising pre-training pairs")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--config", help="NoisingConfig JSON")
    p.add_argument("--mix", help="TaskMix JSON")
    p.add_argument("--kind", choices=["dialogues", "parallel"],
                   help="input corpus kind (default: sniffed)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=_cmd_noise)

    p = sub.add_parser("stats", help="corpus statistics report")
    p.add_argument("--in", dest="input", required=True, help="parallel corpus")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--summary-index", type=int, default=0)
    p.set_defaults(fn=_cmd_stats)

    p = sub.add_parser("eval", help="ROUGE evaluation of candidate summaries")
    p.add_argument("--candidates", required=True, help="JSONL of {id, text}")
    p.add_argument("--references", required=True, help="JSONL of {id, text | texts}")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--multi-ref", action="store_true",
                   help="average scores over all references per example")
    p.add_argument("--select-train-ref", action="store_true",
                   help="pick the highest ROUGE-Avg reference per dialogue")
    p.add_argument("--max-length", type=int,
                   help="truncate candidates to this many tokens before scoring")
    p.set_defaults(fn=_cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
