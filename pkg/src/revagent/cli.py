"""Command-line surface: stats, build-train, review, eval, index.

Configuration lives in an INI file (sections per agent role) with secrets
supplied via environment variables; see README for a complete example. Exit
codes are stable: 0 success, 1 usage, 2 IO/schema, 3 backend, 4 unparseable
verdict, 5 empty join.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from revagent.backend import (
    AuthError,
    HttpBackend,
    MalformedResponseError,
    MockBackend,
    TransportError,
    UnparseableVerdictError,
)
from revagent.corpus import (
    CANONICAL_CATEGORIES,
    Corpus,
    CorpusIOError,
    CorpusSchemaError,
    EmptyCorpusError,
    EmptyInputError,
    IssueCategory,
    compute_stats,
    load_corpus,
    parse_diff_hunk,
    partition_by_split,
    split_corpus,
)
from revagent.evalmetrics import (
    EvalRecord,
    HttpEmbedder,
    MockEmbedder,
    evaluate,
    render_table,
)
from revagent.pipeline import PipelineConfig, ReviewMode, run_review
from revagent.retrieval import (
    CodeTokenizerConfig,
    EmptyCategoryIndexError,
    IndexFormatError,
    load_index,
    query,
    save_index,
)
from revagent.trainset import (
    CandidateMode,
    build_category_indices,
    build_commentator_corpora,
    build_critic_corpus,
    export_jsonl,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_BACKEND = 3
EXIT_VERDICT = 4
EXIT_EMPTY_JOIN = 5

class EmptyJoinError(Exception):
    pass


@dataclass
class BackendSpec:
    kind: str = "mock"  # mock | http
    model: str = "mock-model"
    endpoint: str = ""
    script: str = ""
    retries: int = 2
    backoff_seconds: float = 0.5


@dataclass
class AppConfig:
    """Everything a run needs; loads from / saves to an INI file losslessly."""

    backends: dict[str, BackendSpec] = field(default_factory=dict)
    mode: str = "standard"
    verdict_fallback: bool = False
    temperature: float = 0.0
    max_tokens: int = 512
    max_workers: int = 4
    k1: float = 1.2
    b: float = 0.75
    lowercase: bool = True
    split_identifiers: bool = True
    max_token_len: int = 64
    embedder_mode: str = "mock"  # mock | http
    embedder_endpoint: str = ""

    @classmethod
    def load(cls, path: str | Path) -> "AppConfig":
        parser = configparser.ConfigParser()
        read = parser.read(path, encoding="utf-8")
        if not read:
            raise CorpusIOError(f"cannot read config file {path}")
        config = cls()
        if parser.has_section("pipeline"):
            section = parser["pipeline"]
            config.mode = section.get("mode", config.mode)
            config.verdict_fallback = section.getboolean(
                "verdict_fallback", config.verdict_fallback
            )
            config.temperature = section.getfloat("temperature", config.temperature)
            config.max_tokens = section.getint("max_tokens", config.max_tokens)
            config.max_workers = section.getint("max_workers", config.max_workers)
        if parser.has_section("retrieval"):
            section = parser["retrieval"]
            config.k1 = section.getfloat("k1", config.k1)
            config.b = section.getfloat("b", config.b)
            config.lowercase = section.getboolean("lowercase", config.lowercase)
            config.split_identifiers = section.getboolean(
                "split_identifiers", config.split_identifiers
            )
            config.max_token_len = section.getint("max_token_len", config.max_token_len)
        if parser.has_section("embedder"):
            section = parser["embedder"]
            config.embedder_mode = section.get("mode", config.embedder_mode)
            config.embedder_endpoint = section.get("endpoint", config.embedder_endpoint)
        for section_name in parser.sections():
            if not section_name.startswith("backend."):
                continue
            role = section_name[len("backend."):]
            section = parser[section_name]
            config.backends[role] = BackendSpec(
                kind=section.get("kind", "mock"),
                model=section.get("model", "mock-model"),
                endpoint=section.get("endpoint", ""),
                script=section.get("script", ""),
                retries=section.getint("retries", 2),
                backoff_seconds=section.getfloat("backoff_seconds", 0.5),
            )
        return config

    def save(self, path: str | Path) -> None:
        parser = configparser.ConfigParser()
        parser["pipeline"] = {
            "mode": self.mode,
            "verdict_fallback": str(self.verdict_fallback).lower(),
            "temperature": repr(self.temperature),
            "max_tokens": str(self.max_tokens),
            "max_workers": str(self.max_workers),
        }
        parser["retrieval"] = {
            "k1": repr(self.k1),
            "b": repr(self.b),
            "lowercase": str(self.lowercase).lower(),
            "split_identifiers": str(self.split_identifiers).lower(),
            "max_token_len": str(self.max_token_len),
        }
        parser["embedder"] = {"mode": self.embedder_mode, "endpoint": self.embedder_endpoint}
        for role, spec in self.backends.items():
            parser[f"backend.{role}"] = {
                "kind": spec.kind,
                "model": spec.model,
                "endpoint": spec.endpoint,
                "script": spec.script,
                "retries": str(spec.retries),
                "backoff_seconds": repr(spec.backoff_seconds),
            }
        with Path(path).open("w", encoding="utf-8") as handle:
            parser.write(handle)

    def tokenizer(self) -> CodeTokenizerConfig:
        return CodeTokenizerConfig(
            lowercase=self.lowercase,
            split_identifiers=self.split_identifiers,
            max_token_len=self.max_token_len,
        )

    def make_backend(self, role: str):
        spec = self.backends.get(role)
        if spec is None:
            raise TransportError(
                f"no [backend.{role}] section in config; add one (kind=mock script=... "
                f"or kind=http endpoint=... model=...)"
            )
        if spec.kind == "mock":
            if not spec.script:
                raise TransportError(f"[backend.{role}] is a mock but names no script file")
            return MockBackend.from_script(spec.script, model_name=spec.model)
        if spec.kind == "http":
            if not spec.endpoint:
                raise TransportError(f"[backend.{role}] is http but names no endpoint")
            return HttpBackend(
                endpoint=spec.endpoint,
                model_name=spec.model,
                max_retries=spec.retries,
                backoff_seconds=spec.backoff_seconds,
            )
        raise TransportError(f"[backend.{role}] has unknown kind {spec.kind!r}")

    def make_pipeline(
        self, mode_override: str | None = None, verdict_fallback: bool | None = None
    ) -> PipelineConfig:
        mode = ReviewMode((mode_override or self.mode).lower())
        commentators = {
            c: self.make_backend(f"commentator.{c.value}") for c in CANONICAL_CATEGORIES
        }
        fusion = None
        if mode is ReviewMode.SFA:
            fusion = self.make_backend("fusion")
        fallback = self.verdict_fallback if verdict_fallback is None else verdict_fallback
        return PipelineConfig(
            commentators=commentators,
            critic=self.make_backend("critic"),
            fusion=fusion,
            mode=mode,
            verdict_fallback=fallback,
            temperature=self.temperature,
            max_tokens=self.max_tokens,
            max_workers=self.max_workers,
        )

    def make_embedder(self):
        if self.embedder_mode == "http" and self.embedder_endpoint:
            return HttpEmbedder(self.embedder_endpoint)
        return MockEmbedder()


class _Parser(argparse.ArgumentParser):
    # Usage errors (unknown flags, missing args) exit 1, not argparse's 2.
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def _train_side(corpus: Corpus, train_fraction: float, seed: int) -> Corpus:
    """Honor existing split labels; otherwise split deterministically."""
    if any(r.split is not None for r in corpus.records):
        train, _ = partition_by_split(corpus)
        return train
    train, _ = split_corpus(corpus, train_fraction, seed)
    return train


def cmd_stats(args) -> int:
    corpus = load_corpus(args.corpus)
    stats = compute_stats(corpus)
    print(f"{'Category':<14}{'Count':>8}{'Avg. Code Line':>16}{'Avg. Comment Token':>20}")
    for category in CANONICAL_CATEGORIES:
        row = stats.per_category[category]
        print(
            f"{category.value.capitalize():<14}{row.count:>8}"
            f"{row.avg_code_lines:>16.2f}{row.avg_comment_tokens:>20.2f}"
        )
    print(
        f"{'Total':<14}{stats.total.count:>8}"
        f"{stats.total.avg_code_lines:>16.2f}{stats.total.avg_comment_tokens:>20.2f}"
    )
    print(f"dropped: others={corpus.dropped_others} malformed={corpus.dropped_malformed}")
    payload = stats.to_dict()
    payload["dropped_others"] = corpus.dropped_others
    payload["dropped_malformed"] = corpus.dropped_malformed
    if args.json:
        Path(args.json).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    else:
        print(json.dumps(payload))
    return EXIT_OK


def cmd_build_train(args) -> int:
    config = AppConfig.load(args.config) if args.config else AppConfig()
    corpus = load_corpus(args.corpus)
    train = corpus if args.no_split else _train_side(corpus, args.train_fraction, args.seed)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    corpora = build_commentator_corpora(train)
    for category, instances in corpora.items():
        export_jsonl(instances, outdir / f"commentator_{category.value}.jsonl")

    mode = CandidateMode(args.mode)
    backends = None
    if mode is CandidateMode.GENERATED:
        backends = {
            c: config.make_backend(f"commentator.{c.value}") for c in CANONICAL_CATEGORIES
        }
    instances, report = build_critic_corpus(
        train,
        mode=mode,
        backends=backends,
        cfg=config.tokenizer(),
        k1=config.k1,
        b=config.b,
        temperature=config.temperature,
        max_tokens=config.max_tokens,
    )
    export_jsonl(instances, outdir / "critic.jsonl")
    (outdir / "report.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
    )
    print(
        f"wrote {len(train)} records: 5 commentator corpora + "
        f"{report.instances} critic instances ({report.ccr_fallbacks} retrieval fallbacks)"
    )
    return EXIT_OK


def _load_batch(args) -> list:
    diffs = []
    if args.diff:
        text = Path(args.diff).read_text(encoding="utf-8")
        diffs.append(parse_diff_hunk(text, hunk_id=Path(args.diff).stem))
    else:
        for line_no, line in enumerate(
            Path(args.batch).read_text(encoding="utf-8").split("\n"), start=1
        ):
            if not line.strip():
                continue
            obj = json.loads(line)
            hunk_id = str(obj.get("id", line_no))
            diffs.append(parse_diff_hunk(obj["diff"], hunk_id=hunk_id, language_tag=obj.get("lang")))
    return diffs


def cmd_review(args) -> int:
    config = AppConfig.load(args.config)
    pipeline = config.make_pipeline(args.mode, True if args.verdict_fallback else None)
    diffs = _load_batch(args)
    out = Path(args.out).open("w", encoding="utf-8") if args.out else sys.stdout

    def worker(diff):
        try:
            return run_review(diff, pipeline), None
        except (TransportError, AuthError, MalformedResponseError) as exc:
            return None, ("backend", diff.id, str(exc))
        except UnparseableVerdictError as exc:
            return None, ("verdict", diff.id, str(exc))

    backend_failures = 0
    verdict_failures = 0
    reviewed = 0
    token_sum = 0
    seconds_sum = 0.0
    workers = args.workers or config.max_workers
    try:
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            for output, failure in pool.map(worker, diffs):
                if failure is not None:
                    kind, diff_id, message = failure
                    out.write(json.dumps({"diff_id": diff_id, "error": kind, "message": message}) + "\n")
                    out.flush()
                    if kind == "backend":
                        backend_failures += 1
                    else:
                        verdict_failures += 1
                    continue
                out.write(json.dumps(output.to_dict(), ensure_ascii=False) + "\n")
                out.flush()
                reviewed += 1
                telemetry = output.telemetry
                token_sum += telemetry.total_prompt_tokens + telemetry.total_completion_tokens
                seconds_sum += telemetry.wall_seconds
    finally:
        if args.out:
            out.close()
    if reviewed:
        print(
            f"reviewed {reviewed} diffs | avg tokens {token_sum / reviewed:.1f} | "
            f"avg seconds {seconds_sum / reviewed:.3f}",
            file=sys.stderr,
        )
    if backend_failures:
        return EXIT_BACKEND
    if verdict_failures:
        return EXIT_VERDICT
    return EXIT_OK


def cmd_eval(args) -> int:
    corpus = load_corpus(args.ref)
    references = {record.id: record for record in corpus.records}
    records = []
    unmatched = 0
    for line in Path(args.pred).read_text(encoding="utf-8").split("\n"):
        if not line.strip():
            continue
        obj = json.loads(line)
        if "error" in obj:
            continue
        diff_id = str(obj["diff_id"])
        reference = references.get(diff_id)
        if reference is None:
            unmatched += 1
            continue
        verdict = obj.get("verdict", {})
        predicted = verdict.get("category")
        records.append(
            EvalRecord(
                diff_id=diff_id,
                generated_comment=verdict.get("comment", ""),
                reference_comment=reference.comment,
                gold_category=reference.category,
                predicted_category=IssueCategory.parse(predicted) if predicted else None,
            )
        )
    if unmatched:
        print(f"warning: {unmatched} predictions had no matching reference id", file=sys.stderr)
    if not records:
        raise EmptyJoinError("no prediction joined a reference record")

    embedder = MockEmbedder() if args.embedder == "mock" else HttpEmbedder(args.embedder)
    report = evaluate(records, embedder)
    print(render_table(report))
    if args.json:
        Path(args.json).write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
        )
    else:
        print(json.dumps(report.to_dict(), sort_keys=True))
    return EXIT_OK


def cmd_index_build(args) -> int:
    config = AppConfig.load(args.config) if args.config else AppConfig()
    corpus = load_corpus(args.corpus)
    indices = build_category_indices(corpus, config.tokenizer(), k1=config.k1, b=config.b)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": "BM25v1",
        "k1": config.k1,
        "b": config.b,
        "tokenizer": config.tokenizer().to_dict(),
        "categories": {},
    }
    for category in CANONICAL_CATEGORIES:
        if category not in indices:
            continue
        index, comments = indices[category]
        filename = f"bm25_{category.value}.json"
        save_index(outdir / filename, index, comments)
        manifest["categories"][category.value] = {"file": filename, "docs": len(index)}
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )
    print(f"wrote {len(manifest['categories'])} index files + manifest to {outdir}")
    return EXIT_OK


def cmd_index_query(args) -> int:
    manifest_path = Path(args.indexdir) / "manifest.json"
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise IndexFormatError(f"cannot read manifest {manifest_path}: {exc}") from exc
    category = IssueCategory.parse(args.category)
    entry = manifest.get("categories", {}).get(category.value)
    if entry is None:
        raise IndexFormatError(f"manifest lists no index for category {category.value}")
    index, comments = load_index(Path(args.indexdir) / entry["file"])
    text = Path(args.file).read_text(encoding="utf-8") if args.file else args.text
    hits = query(index, text, k=args.k)
    for hit in hits:
        print(json.dumps({
            "rank": hit.rank,
            "doc_id": hit.doc_id,
            "score": hit.score,
            "comment": comments.get(hit.doc_id, ""),
        }, ensure_ascii=False))
    if not hits:
        print("no hits", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="revagent", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_stats = sub.add_parser("stats", help="corpus statistics (counts, line/token means)")
    p_stats.add_argument("corpus")
    p_stats.add_argument("--json", help="also write the stats JSON to this path")
    p_stats.set_defaults(func=cmd_stats)

    p_train = sub.add_parser("build-train", help="emit commentator + critic training JSONL")
    p_train.add_argument("corpus")
    p_train.add_argument("outdir")
    p_train.add_argument("--mode", choices=["ccr", "generated"], default="ccr")
    p_train.add_argument("--config", help="INI config (needed for generated mode backends)")
    p_train.add_argument("--train-fraction", type=float, default=0.75)
    p_train.add_argument("--seed", type=int, default=13, help="split seed when records carry no split labels")
    p_train.add_argument("--no-split", action="store_true", help="use every record as training data")
    p_train.set_defaults(func=cmd_build_train)

    p_review = sub.add_parser("review", help="run the two-stage review pipeline")
    group = p_review.add_mutually_exclusive_group(required=True)
    group.add_argument("--diff", help="file holding one raw diff hunk")
    group.add_argument("--batch", help="JSONL of {id?, diff, lang?} objects")
    p_review.add_argument("--config", required=True)
    p_review.add_argument("--mode", choices=["standard", "sfa", "msc"])
    p_review.add_argument("--out", help="write output JSONL here instead of stdout")
    p_review.add_argument("--workers", type=int, help="batch worker count (default from config)")
    p_review.add_argument(
        "--verdict-fallback", action="store_true",
        help="after two unparseable critic replies, fall back to the refactoring candidate",
    )
    p_review.set_defaults(func=cmd_review)

    p_eval = sub.add_parser("eval", help="score predictions against reference comments")
    p_eval.add_argument("--pred", required=True, help="review output JSONL")
    p_eval.add_argument("--ref", required=True, help="reference corpus JSONL")
    p_eval.add_argument("--embedder", default="mock", help='"mock" or an embedding service URL')
    p_eval.add_argument("--json", help="also write the report JSON to this path")
    p_eval.set_defaults(func=cmd_eval)

    p_index = sub.add_parser("index", help="build or query persisted per-category indices")
    index_sub = p_index.add_subparsers(dest="index_command", required=True, parser_class=_Parser)
    p_build = index_sub.add_parser("build")
    p_build.add_argument("corpus")
    p_build.add_argument("outdir")
    p_build.add_argument("--config")
    p_build.set_defaults(func=cmd_index_build)
    p_query = index_sub.add_parser("query")
    p_query.add_argument("indexdir")
    p_query.add_argument("--category", required=True)
    query_group = p_query.add_mutually_exclusive_group(required=True)
    query_group.add_argument("--text")
    query_group.add_argument("--file")
    p_query.add_argument("-k", type=int, default=5)
    p_query.set_defaults(func=cmd_index_query)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        CorpusIOError,
        CorpusSchemaError,
        EmptyCorpusError,
        EmptyCategoryIndexError,
        EmptyInputError,
        IndexFormatError,
        OSError,
        KeyError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (TransportError, AuthError, MalformedResponseError) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except UnparseableVerdictError as exc:
        print(f"verdict error: {exc}", file=sys.stderr)
        return EXIT_VERDICT
    except EmptyJoinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY_JOIN


if __name__ == "__main__":
    sys.exit(main())
