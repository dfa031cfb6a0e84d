"""Command-line entry point: one subcommand per pipeline stage.

Every stage reads the artifacts of earlier stages from the work directory
and writes its own next to them, plus ``logs/<stage>.log``.  Exit codes:
0 success, 2 configuration error, 3 missing or mismatched upstream artifact,
4 execution failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from collections import Counter
from pathlib import Path
from typing import Callable

from . import __version__
from .align import CodeTestPair, align_pairs
from .common import Language, read_jsonl, read_jsonl_meta, short_id, write_jsonl
from .config import ConfigError, PipelineConfig, load_config
from .corpus import TrainingDocument, build_documents, compute_stats, pack_sequences, read_corpus, write_corpus
from .filterdedup import FilterRuleSet, filter_and_dedup
from .harness import EvalJob, evaluate_many, filter_generations, load_manifests, select_eval_pairs
from .ingest import IngestConfig, RepoRecord, Split, assign_split, load_files, scan_repositories
from .metrics import LexicalScores, RuntimeOutcome, aggregate, score_sample
from .promptgen import ContextMode, Task, TaskPrompt, make_prompts, read_generations, stop_callback, write_generations
from .reflm import (
    NGramModel,
    SampleConfig,
    StopMode,
    alignment_signal_experiment,
    file_multiset,
    heldout_perplexity,
    perplexity,
    sample,
    token_log_probs,
    train_lm,
)
from .scanner import UnparseableFile, outline_text
from .synthetic import signal_corpus, write_fixture_corpus
from .tokenizer import Vocabulary, train_vocab

logger = logging.getLogger("codetestlm")

EXIT_OK, EXIT_CONFIG, EXIT_UPSTREAM, EXIT_EXEC = 0, 2, 3, 4


class UpstreamError(RuntimeError):
    pass


class Context:
    def __init__(self, cfg: PipelineConfig, workdir: Path, config_path: Path | None):
        self.cfg = cfg
        self.workdir = workdir
        self.config_path = config_path
        workdir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.workdir / name

    def meta(self, stage: str, **extra) -> dict:
        return {"stage": stage, "config_digest": self.cfg.stage_digest(stage), **extra}

    def require(self, name: str, stage: str) -> Path:
        """Path of an upstream artifact, checked for existence and a matching config digest."""
        p = self.path(name)
        if not p.exists():
            raise UpstreamError(f"missing upstream artifact {p} (run the `{stage}` stage first)")
        if p.suffix == ".jsonl":
            meta = read_jsonl_meta(p)
        else:
            side = p.with_name(p.name + ".meta.json")
            meta = json.loads(side.read_text()) if side.exists() else None
            if meta is None and p.suffix == ".json":
                meta = json.loads(p.read_text()).get("_meta")
        if meta is None:
            raise UpstreamError(f"{p} carries no config digest")
        expected = self.cfg.stage_digest(meta.get("stage", stage))
        if meta.get("config_digest") != expected:
            raise UpstreamError(
                f"{p} was produced under a different configuration "
                f"(digest {str(meta.get('config_digest'))[:12]}, current {expected[:12]}); rerun `{stage}`"
            )
        return p

    def write_json(self, name: str, obj: dict, stage: str) -> Path:
        p = self.path(name)
        p.write_text(json.dumps({"_meta": self.meta(stage), **obj}, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return p

    def write_sidecar(self, artifact: str, stage: str, **extra) -> None:
        side = self.path(artifact + ".meta.json")
        side.write_text(json.dumps(self.meta(stage, **extra), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    def log(self, command: str, stage: str, started: float, **info) -> None:
        logs = self.path("logs")
        logs.mkdir(exist_ok=True)
        rec = {
            "command": command,
            "config_digest": self.cfg.digest,
            "stage_digest": self.cfg.stage_digest(stage),
            "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(started)),
            "seconds": round(time.time() - started, 3),
            **info,
        }
        (logs / f"{command}.log").write_text(json.dumps(rec, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    # shared loaders

    def corpus_root(self) -> Path:
        meta = read_jsonl_meta(self.require("files.jsonl", "ingest"))
        return Path(meta["root"])

    def repos(self) -> dict[str, RepoRecord]:
        return {r["repo_id"]: RepoRecord.from_json(r) for r in read_jsonl(self.require("repos.jsonl", "ingest"))}

    def kept_files(self):
        path = self.require("kept.jsonl", "filter")
        return load_files(path, self.corpus_root(), self.cfg.ingest.hash_algorithm)

    def pairs(self) -> list[CodeTestPair]:
        return [CodeTestPair.from_json(r) for r in read_jsonl(self.require("pairs.jsonl", "align"))]

    def vocab(self) -> Vocabulary:
        return Vocabulary.load(self.require("vocab.txt", "tokenize"))


def _split_ids(repos: dict[str, RepoRecord], split: Split) -> set[str]:
    return {rid for rid, r in repos.items() if r.split is split}


# --- stages ------------------------------------------------------------------


def cmd_ingest(ctx: Context, args) -> None:
    cfg = ctx.cfg.ingest
    root = Path(args.root).resolve()
    icfg = IngestConfig(min_stars=cfg.min_stars, hash_algorithm=cfg.hash_algorithm, workers=cfg.workers)
    repos, files = [], []
    for repo, fs in scan_repositories(root, icfg):
        repos.append(repo)
        files.extend(fs)
    repos = assign_split(repos, cfg.test_repos_per_language, ctx.cfg.seed, cfg.pinned_test_repos)
    write_jsonl(ctx.path("repos.jsonl"), (r.to_json() for r in repos), ctx.meta("ingest"))
    write_jsonl(ctx.path("files.jsonl"), (f.to_json() for f in files), ctx.meta("ingest", root=str(root)))
    print(f"ingested {len(repos)} repositories, {len(files)} files")


def cmd_filter(ctx: Context, args) -> None:
    c = ctx.cfg.filter
    rules = FilterRuleSet(c.max_file_bytes, c.max_line_chars, c.max_mean_line_chars, c.max_non_alnum_fraction)
    files = load_files(ctx.require("files.jsonl", "ingest"), ctx.corpus_root(), ctx.cfg.ingest.hash_algorithm)
    kept, report = filter_and_dedup(files, rules)
    root = read_jsonl_meta(ctx.path("files.jsonl"))["root"]
    write_jsonl(ctx.path("kept.jsonl"), (f.to_json() for f in kept), ctx.meta("filter", root=root))
    ctx.write_json("filter_report.json", report.to_json(), "filter")
    print(f"kept {len(kept)} of {len(files)} files")


def cmd_align(ctx: Context, args) -> None:
    pairs = align_pairs(ctx.kept_files(), ctx.cfg.align.fuzzy_threshold)
    write_jsonl(ctx.path("pairs.jsonl"), (p.to_json() for p in pairs), ctx.meta("align"))
    kinds = Counter(p.match_kind.value for p in pairs)
    print(f"aligned {len(pairs)} pairs ({', '.join(f'{k}={v}' for k, v in sorted(kinds.items()))})")


def _train_files(ctx: Context):
    train = _split_ids(ctx.repos(), Split.TRAIN)
    return [f for f in ctx.kept_files() if f.repo_id in train]


def cmd_tokenize(ctx: Context, args) -> None:
    t = ctx.cfg.tokenizer
    files = _train_files(ctx)
    vocab = train_vocab((f.text for f in files), t.vocab_size, t.lines_per_file, ctx.cfg.seed, t.byte_budget)
    vocab.save(ctx.path("vocab.txt"))
    ctx.write_sidecar("vocab.txt", "tokenize", vocab_digest=vocab.digest)
    print(f"vocabulary of {vocab.size} ids (digest {vocab.digest[:12]})")


def _check_vocab_digest(ctx: Context, vocab: Vocabulary, artifact: str) -> None:
    side = ctx.path(artifact + ".meta.json")
    meta = json.loads(side.read_text())
    if meta.get("vocab_digest") != vocab.digest:
        raise UpstreamError(f"{artifact} was built with a different vocabulary; rerun the corpus stage")


def cmd_corpus(ctx: Context, args) -> None:
    vocab = ctx.vocab()
    train = _split_ids(ctx.repos(), Split.TRAIN)
    files = [f for f in ctx.kept_files() if f.repo_id in train]
    pairs = [p for p in ctx.pairs() if p.repo_id in train]
    docs = build_documents(files, pairs, vocab)
    write_corpus(ctx.path("corpus.bin"), docs, vocab.digest, ctx.cfg.corpus.context_length)
    ctx.write_sidecar("corpus.bin", "corpus", vocab_digest=vocab.digest)
    kinds = Counter(d.kind.value for d in docs)
    print(f"wrote {len(docs)} documents ({', '.join(f'{k}={v}' for k, v in sorted(kinds.items()))})")


def _corpus_docs(ctx: Context) -> list[TrainingDocument]:
    vocab = ctx.vocab()
    cf = read_corpus(ctx.require("corpus.bin", "corpus"))
    if cf.vocab_digest != vocab.digest:
        raise UpstreamError("corpus.bin was built with a different vocabulary; rerun `corpus`")
    return [TrainingDocument(k, tuple(int(t) for t in toks), "") for k, toks in zip(cf.kinds, cf.documents())]


def cmd_stats(ctx: Context, args) -> None:
    docs = _corpus_docs(ctx)
    stats = compute_stats(docs)
    windows = (2048, 8192)
    ctx.write_json("stats.json", stats.to_json(windows), "stats")
    for w in windows:
        print(f"fraction_within({w}) = {stats.fraction_within(w):.4f}  paired: {stats.paired_fraction_within(w):.4f}")


def cmd_lm_train(ctx: Context, args) -> None:
    vocab = ctx.vocab()
    docs = _corpus_docs(ctx)
    seqs = pack_sequences(docs, ctx.cfg.corpus.context_length, ctx.cfg.seed)
    model = train_lm(seqs, vocab.size, ctx.cfg.lm.order, ctx.cfg.lm.discount, vocab.digest)
    model.save(ctx.path("model.json"))
    ctx.write_sidecar("model.json", "lm", vocab_digest=vocab.digest)
    print(f"trained order-{model.order} model on {len(seqs)} packed sequences")


def _model(ctx: Context, vocab: Vocabulary) -> NGramModel:
    model = NGramModel.load(ctx.require("model.json", "lm"))
    if model.vocab_digest != vocab.digest:
        raise UpstreamError("model.json was trained with a different vocabulary; rerun `lm-train`")
    return model


def _texts(ctx: Context) -> dict[str, str]:
    return {f.file_id: f.text for f in ctx.kept_files()}


def cmd_lm_ppl(ctx: Context, args) -> None:
    vocab = ctx.vocab()
    model = _model(ctx, vocab)
    if args.text is not None:
        print(f"{perplexity(model, vocab.encode(args.text)):.4f}")
        return
    test_ids = _split_ids(ctx.repos(), Split.TEST)
    texts = _texts(ctx)
    held = [
        (vocab.encode(texts[p.code_file_id]), vocab.encode(texts[p.test_file_id]))
        for p in ctx.pairs()
        if p.repo_id in test_ids and texts[p.test_file_id]
    ]
    if not held:
        raise UpstreamError("no held-out pairs in the test split")
    with_code = heldout_perplexity(model, held)
    tokens = [t for _, test in held for t in test]
    # without code: each test file scored from an empty history, then pooled
    logs = []
    for _, test in held:
        logs.extend(token_log_probs(model, test).tolist())
    without = math.exp(-sum(logs) / len(logs))
    ctx.write_json("ppl.json", {"pairs": len(held), "tokens": len(tokens), "with_code": with_code, "without_code": without}, "lm")
    print(f"held-out test perplexity: with code {with_code:.4f}, without code {without:.4f} ({len(held)} pairs)")


def _prompt_seed(seed: int, key: tuple) -> int:
    return int(short_id(str(seed), *map(str, key)), 16) % (2**32)


def cmd_lm_sample(ctx: Context, args) -> None:
    vocab = ctx.vocab()
    model = _model(ctx, vocab)
    s = ctx.cfg.sampling
    stop = StopMode(s.stop)
    if args.prompt is not None:
        cfg = SampleConfig(s.temperature, s.max_tokens, s.num_samples, ctx.cfg.seed, stop)
        lang = Language(args.language)
        cb = stop_callback(vocab, lang, Task.EXTRA) if stop is StopMode.ON_METHOD_END else None
        for out in sample(model, vocab.encode(args.prompt), cfg, cb):
            print(json.dumps(vocab.decode(out)))
        return
    prompts = [TaskPrompt.from_json(r) for r in read_jsonl(ctx.require("prompts.jsonl", "prompts"))]
    gen_root = ctx.path("generations")
    n = 0
    for p in prompts:
        cfg = SampleConfig(s.temperature, s.max_tokens, s.num_samples, _prompt_seed(ctx.cfg.seed, p.key), stop)
        cb = stop_callback(vocab, p.subject_language, p.task) if stop is StopMode.ON_METHOD_END else None
        samples = [vocab.decode(o) for o in sample(model, p.tokens(vocab), cfg, cb)]
        write_generations(gen_root, p.key, samples)
        n += len(samples)
    (gen_root / "_meta.json").write_text(
        json.dumps(ctx.meta("sample", stop=stop.value, temperature=s.temperature, num_samples=s.num_samples), indent=2, sort_keys=True) + "\n"
    )
    print(f"wrote {n} samples for {len(prompts)} prompts (stop={stop.value})")


def cmd_signal_exp(ctx: Context, args) -> None:
    sig = ctx.cfg.signal
    if sig.source == "synthetic":
        sc = signal_corpus(seed=ctx.cfg.seed)
        aligned, shuffled, held, vsize = sc.aligned, sc.shuffled, sc.heldout, sc.vocab_size
    elif sig.source == "corpus":
        vocab = ctx.vocab()
        docs = _corpus_docs(ctx)
        aligned = [d.token_ids for d in docs]
        shuffled = file_multiset(docs)
        test_ids = _split_ids(ctx.repos(), Split.TEST)
        texts = _texts(ctx)
        held = [
            (vocab.encode(texts[p.code_file_id]), vocab.encode(texts[p.test_file_id]))
            for p in ctx.pairs()
            if p.repo_id in test_ids and texts[p.test_file_id]
        ]
        vsize = vocab.size
    else:
        raise ConfigError(f"signal.source must be 'synthetic' or 'corpus', not {sig.source!r}")
    report = alignment_signal_experiment(aligned, shuffled, held, vsize, sig.order, sig.seeds, sig.context_length, ctx.cfg.lm.discount)
    ctx.write_json("signal.json", {"source": sig.source, **report.to_json()}, "signal")
    r = report.to_json()
    print(
        f"aligned ppl {r['mean_aligned_ppl']:.4f} vs shuffled {r['mean_shuffled_ppl']:.4f}; "
        f"relative delta {r['mean_relative_delta']:.3%}; aligned wins {report.wins}/{len(report.seeds)}"
    )


def cmd_prompts(ctx: Context, args) -> None:
    e = ctx.cfg.eval
    test_ids = _split_ids(ctx.repos(), Split.TEST)
    texts = _texts(ctx)
    candidates = [p for p in ctx.pairs() if p.repo_id in test_ids]
    selected, dropped = select_eval_pairs(candidates, texts, e.pairs_per_project, ctx.cfg.seed)
    tasks = [Task(t) for t in e.tasks]
    modes = [ContextMode(m) for m in e.context_modes]
    prompts, skipped = [], []
    for p in selected:
        test_text = texts[p.test_file_id]
        try:
            outline = outline_text(test_text, p.subject_language, p.test_file_id)
        except UnparseableFile:
            dropped["unparseable"] += 1
            continue
        ps, sk = make_prompts(p, outline, test_text, texts[p.code_file_id], tasks, modes, ctx.cfg.seed)
        prompts.extend(ps)
        skipped.extend(sk)
    write_jsonl(ctx.path("eval_pairs.jsonl"), (p.to_json() for p in selected), ctx.meta("prompts"))
    write_jsonl(ctx.path("prompts.jsonl"), (p.to_json() for p in prompts), ctx.meta("prompts"))
    ctx.write_json(
        "prompt_skips.json",
        {"dropped_pairs": dict(sorted(dropped.items())), "skipped_tasks": Counter(f"{t}:{r}" for _, t, r in skipped)},
        "prompts",
    )
    print(f"{len(prompts)} prompts from {len(selected)} pairs ({len(skipped)} task skips)")


def _manifest_dir(ctx: Context) -> Path | None:
    d = ctx.cfg.eval.manifest_dir
    if d is None:
        return None
    p = Path(d)
    if not p.is_absolute():
        base = ctx.config_path.parent if ctx.config_path is not None else Path.cwd()
        p = base / p
    return p


def cmd_evaluate(ctx: Context, args) -> None:
    prompts = {p.key: p for p in (TaskPrompt.from_json(r) for r in read_jsonl(ctx.require("prompts.jsonl", "prompts")))}
    pairs = {r["pair_id"]: CodeTestPair.from_json(r) for r in read_jsonl(ctx.require("eval_pairs.jsonl", "prompts"))}
    gen_dir = Path(args.generations) if args.generations else ctx.path("generations")
    if not gen_dir.is_dir():
        raise UpstreamError(f"missing generations directory {gen_dir} (run `lm-sample` or supply external outputs)")
    gens = read_generations(gen_dir)
    unknown = set(gens) - set(prompts)
    if unknown:
        raise UpstreamError(f"generations for unknown prompts: {sorted(unknown)[:3]}")
    scores: list[LexicalScores] = []
    jobs = []
    mdir = _manifest_dir(ctx)
    manifests = load_manifests(mdir) if mdir is not None and mdir.is_dir() else {}
    for key in sorted(gens):
        p = prompts[key]
        pair = pairs[p.pair_id]
        for k, text in gens[key]:
            if p.ground_truth is not None:
                scores.append(score_sample(p.pair_id, p.task.value, p.context_mode.value, k, text, p.ground_truth, p.subject_language))
            if pair.repo_id in manifests:
                jobs.append(EvalJob(p, k, text, pair.test_path, pair.code_path))
    project_of = {pid: pair.repo_id for pid, pair in pairs.items()}
    outcomes = evaluate_many(jobs, manifests, project_of, ctx.cfg.eval.workers) if jobs else []
    write_jsonl(ctx.path("scores.jsonl"), (s.to_json() for s in scores), ctx.meta("evaluate"))
    write_jsonl(ctx.path("outcomes.jsonl"), (o.to_json() for o in outcomes), ctx.meta("evaluate"))
    print(f"scored {len(scores)} samples; executed {len(outcomes)} in {len(manifests)} project sandbox(es)")


def cmd_report(ctx: Context, args) -> None:
    scores = [LexicalScores.from_json(r) for r in read_jsonl(ctx.require("scores.jsonl", "evaluate"))]
    outcomes = [RuntimeOutcome.from_json(r) for r in read_jsonl(ctx.require("outcomes.jsonl", "evaluate"))]
    pair_ids = [r["pair_id"] for r in read_jsonl(ctx.require("eval_pairs.jsonl", "prompts"))]
    report = aggregate(outcomes, scores, pair_ids)
    gen_meta_path = ctx.path("generations") / "_meta.json"
    sampling = json.loads(gen_meta_path.read_text()) if gen_meta_path.exists() else {"stop": "external"}
    body = {
        **report.to_json(),
        "survivors": len(filter_generations(outcomes)),
        "sampling": {k: v for k, v in sampling.items() if k not in ("stage", "config_digest")},
        "exact_match_normalization": "lexical tokens; python lines keep indent levels",
    }
    ctx.write_json("report.json", body, "evaluate")
    table = report.table() + f"\n\nmetric: codebleu_lite; stop: {body['sampling'].get('stop')}; survivors after filtering: {body['survivors']}\n"
    ctx.path("report.txt").write_text(table, encoding="utf-8")
    print(table, end="")


def cmd_fixtures(ctx: Context, args) -> None:
    summary = write_fixture_corpus(args.dest, seed=args.fixture_seed)
    print(f"wrote {summary['repos']} repositories with {summary['files']} files to {args.dest}")


# --- argument parsing ----------------------------------------------------------

_STAGES: dict[str, tuple[Callable, str]] = {
    "ingest": (cmd_ingest, "ingest"),
    "filter": (cmd_filter, "filter"),
    "align": (cmd_align, "align"),
    "tokenize": (cmd_tokenize, "tokenize"),
    "corpus": (cmd_corpus, "corpus"),
    "stats": (cmd_stats, "stats"),
    "lm-train": (cmd_lm_train, "lm"),
    "lm-ppl": (cmd_lm_ppl, "lm"),
    "lm-sample": (cmd_lm_sample, "sample"),
    "signal-exp": (cmd_signal_exp, "signal"),
    "prompts": (cmd_prompts, "prompts"),
    "evaluate": (cmd_evaluate, "evaluate"),
    "report": (cmd_report, "evaluate"),
    "fixtures": (cmd_fixtures, "ingest"),
}

# flag -> config key; every flag has a config-file equivalent
_FLAG_KEYS = {
    "seed": "seed",
    "min_stars": "ingest.min_stars",
    "test_repos": "ingest.test_repos_per_language",
    "fuzzy_threshold": "align.fuzzy_threshold",
    "vocab_size": "tokenizer.vocab_size",
    "context_length": "corpus.context_length",
    "order": "lm.order",
    "temperature": "sampling.temperature",
    "num_samples": "sampling.num_samples",
    "stop": "sampling.stop",
    "manifest_dir": "eval.manifest_dir",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="pipeline TOML config")
    common.add_argument("-w", "--workdir", default=".", help="artifact directory (default: .)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key, e.g. lm.order=3")
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="codetestlm", description="Code/test pairing pipeline")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help, *flags):
        p = sub.add_parser(name, parents=[common], help=help)
        for f in flags:
            f(p)
        return p

    add("ingest", "scan checkouts into repos.jsonl and files.jsonl", lambda p: p.add_argument("--root", required=True),
        lambda p: p.add_argument("--min-stars", type=int), lambda p: p.add_argument("--test-repos", type=int))
    add("filter", "apply content filters and hash dedup")
    add("align", "pair code files with test files", lambda p: p.add_argument("--fuzzy-threshold", type=float))
    add("tokenize", "train the BPE vocabulary", lambda p: p.add_argument("--vocab-size", type=int))
    add("corpus", "build training documents into corpus.bin", lambda p: p.add_argument("--context-length", type=int))
    add("stats", "document length statistics")
    add("lm-train", "train the n-gram reference model", lambda p: p.add_argument("--order", type=int))
    add("lm-ppl", "held-out test-file perplexity", lambda p: p.add_argument("--text"))
    add(
        "lm-sample",
        "sample generations for prompts.jsonl",
        lambda p: p.add_argument("--prompt"),
        lambda p: p.add_argument("--language", default="python", choices=[l.value for l in Language]),
        lambda p: p.add_argument("--temperature", type=float),
        lambda p: p.add_argument("--num-samples", type=int),
        lambda p: p.add_argument("--stop", choices=[m.value for m in StopMode]),
    )
    add("signal-exp", "aligned vs shuffled perplexity experiment")
    add("prompts", "select evaluation pairs and build task prompts")
    add("evaluate", "score generations and run them in project sandboxes",
        lambda p: p.add_argument("--generations", help="generations directory (default: <workdir>/generations)"),
        lambda p: p.add_argument("--manifest-dir"))
    add("report", "render report.json and the summary table")
    add("fixtures", "write the synthetic fixture corpus", lambda p: p.add_argument("dest"),
        lambda p: p.add_argument("--fixture-seed", type=int, default=0))
    return parser


def _overrides(args) -> dict:
    out = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    for flag, key in _FLAG_KEYS.items():
        v = getattr(args, flag, None)
        if v is not None:
            out[key] = v
    return out


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    fn, stage = _STAGES[args.command]
    started = time.time()
    try:
        config_path = Path(args.config).resolve() if args.config else None
        cfg = load_config(config_path, _overrides(args))
        ctx = Context(cfg, Path(args.workdir), config_path)
        fn(ctx, args)
        if args.command != "fixtures":
            ctx.log(args.command, stage, started)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UpstreamError as exc:
        print(f"upstream artifact error: {exc}", file=sys.stderr)
        return EXIT_UPSTREAM
    except Exception as exc:  # noqa: BLE001 - anything else is an execution failure
        logger.debug("stage failed", exc_info=True)
        print(f"{args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_EXEC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
