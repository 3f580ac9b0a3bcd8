"""Command-line interface.

Subcommands: terms, retrieve, sff-recover, summarize, evaluate (rouge | aos),
report. All outputs are JSON (or Markdown for ``report``); scores are
reported multiplied by 100 at two decimals.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import pipeline
from ._data import default_gold_terms, load_term_file
from .aoseval import RuleTripletExtractor, verify_rag
from .config import load_config
from .corpus import SentenceRef, load_corpus, split_sentences
from .errors import ReviewSumError
from .llm import GenerationConfig, MockBackend
from .queryterms import extract_candidates, refine_terms
from .refeval import evaluate_outputs
from .retrieval import (HashingEmbedder, RetrievalResult, ScoredSentence,
                        retrieve_exclusive)
from .sff import parse_direct, sff_recover


def _write_json(data, path=None) -> None:
    text = json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_gold(path):
    return load_term_file(path) if path else default_gold_terms()


def _select_entities(corpus, entity_id):
    if entity_id is None:
        return corpus
    selected = [e for e in corpus if e.entity_id == entity_id]
    if not selected:
        raise SystemExit(f"entity {entity_id!r} not found in corpus")
    return selected


def _entity_terms(entity, args, gold):
    sentences = split_sentences(entity)
    candidates = extract_candidates(sentences, window=args.window,
                                    min_frequency=args.min_freq)
    return refine_terms(candidates, gold, q_max=args.q_max)


def _terms_to_dict(terms):
    return {
        "q_max": terms.q_max,
        "terms": [{"term": t.term, "frequency": t.frequency} for t in terms.terms],
    }


def _result_to_dict(result: RetrievalResult) -> dict:
    return {
        "k": result.k,
        "assignments": {
            term: [
                {
                    "entity_id": s.sentence.entity_id,
                    "review_index": s.sentence.review_index,
                    "sentence_index": s.sentence.sentence_index,
                    "text": s.sentence.text,
                    "score": s.score,
                }
                for s in scored
            ]
            for term, scored in result.assignments.items()
        },
    }


def _result_from_dict(data: dict) -> RetrievalResult:
    assignments = {}
    for term, scored in data["assignments"].items():
        assignments[term] = [
            ScoredSentence(
                sentence=SentenceRef(
                    entity_id=s["entity_id"],
                    review_index=s["review_index"],
                    sentence_index=s["sentence_index"],
                    text=s["text"],
                ),
                score=s["score"],
            )
            for s in scored
        ]
    return RetrievalResult(assignments=assignments, k=data["k"])


def _build_embedder(args):
    if getattr(args, "embedder", "hash") == "sidecar":
        from .sidecar import SidecarEmbedder
        app = load_config(args.config)
        if not app.modelserve_url:
            raise SystemExit("config has no [modelserve] base_url")
        return SidecarEmbedder(app.modelserve_url)
    return HashingEmbedder()


# --- subcommands ----------------------------------------------------------------

def cmd_terms(args) -> int:
    corpus = _select_entities(load_corpus(args.corpus), args.entity)
    gold = _load_gold(args.gold)
    if args.entity is not None:
        _write_json(_terms_to_dict(_entity_terms(corpus[0], args, gold)), args.out)
    else:
        _write_json({e.entity_id: _terms_to_dict(_entity_terms(e, args, gold))
                     for e in corpus}, args.out)
    return 0


def cmd_retrieve(args) -> int:
    corpus = _select_entities(load_corpus(args.corpus), args.entity)
    gold = _load_gold(args.gold)
    embedder = _build_embedder(args)

    def retrieve_one(entity):
        terms = _entity_terms(entity, args, gold)
        pool = split_sentences(entity)
        result = retrieve_exclusive(terms, pool, k=args.k, ranker=args.ranker,
                                    embedder=embedder)
        return _result_to_dict(result)

    if args.entity is not None:
        _write_json(retrieve_one(corpus[0]), args.out)
    else:
        _write_json({e.entity_id: retrieve_one(e) for e in corpus}, args.out)
    return 0


def cmd_sff_recover(args) -> int:
    raw = sys.stdin.read()
    recovered = parse_direct(raw)
    if recovered is not None:
        _write_json(recovered.to_dict())
        return 0
    recovered = sff_recover(raw)
    if recovered is not None:
        _write_json(recovered.to_dict())
        return 1
    sys.stderr.write("no recognizable pros/cons structure\n")
    return 2


_MOCK_DEFAULTS = {
    "critic": '{"pros": ["Friendly staff.", "Central location."], "cons": ["Rooms are small."]}',
    "critic-length": '{"pros": ["Friendly staff.", "Central location."], "cons": ["Rooms are small."]}',
    "rag-extractive": '{"index": 1, "sentence": ""}',
    "rag-abstractive": '{"sentence": "Guests speak positively about this."}',
}


def cmd_summarize(args) -> int:
    corpus = load_corpus(args.corpus)
    config = pipeline.RunConfig(
        mode=args.mode, ranker=args.ranker, q_max=args.q_max, k=args.k,
        seed=args.seed, window=args.window, min_frequency=args.min_freq,
        backend_descriptor=args.backend,
    )
    backend = None
    gen_config = None
    if config.needs_backend:
        if args.backend == "mock":
            backend = MockBackend(default=_MOCK_DEFAULTS[args.mode])
        else:
            settings = load_config(args.config).backend(args.backend)
            backend = settings.build()
            factory = (GenerationConfig.critic_default if args.mode.startswith("critic")
                       else GenerationConfig.rag_default)
            gen_config = factory(model_id=settings.model_id,
                                 context_limit_tokens=settings.context_limit_tokens)
    result = pipeline.run_corpus(
        corpus, config, backend=backend, gen_config=gen_config,
        embedder=_build_embedder(args), out_dir=args.out,
        cache_dir=args.cache_dir, workers=args.workers,
        gold_terms=_load_gold(args.gold),
    )
    counts = result.manifest["counts"]
    sys.stderr.write(
        f"{args.mode}: {counts['valid']} valid / {counts['invalid']} invalid / "
        f"{counts['parse_failed']} parse-failed of {counts['total']}\n"
    )
    return 0


def _load_outputs(path):
    """System outputs from a summarize output dir or a JSONL file."""
    path = Path(path)
    records = []
    if path.is_dir():
        for file in sorted(path.glob("*.json")):
            if file.name == "manifest.json":
                continue
            records.append(json.loads(file.read_text(encoding="utf-8")))
    else:
        with open(path, "r", encoding="utf-8") as handle:
            records = [json.loads(line) for line in handle if line.strip()]
    return [(r["entity_id"], r["merged_text"], bool(r["valid"])) for r in records]


def cmd_evaluate_rouge(args) -> int:
    corpus = {e.entity_id: e for e in load_corpus(args.corpus)}
    outputs = _load_outputs(args.system)
    report = evaluate_outputs(outputs, corpus, HashingEmbedder())
    _write_json(report.to_dict(), args.report)
    return 0


def cmd_evaluate_aos(args) -> int:
    assignments = _result_from_dict(json.loads(Path(args.assignments).read_text(encoding="utf-8")))
    generated = json.loads(Path(args.generated).read_text(encoding="utf-8"))
    if args.extractor == "sidecar":
        from .sidecar import SidecarTripletExtractor
        app = load_config(args.config)
        if not app.modelserve_url:
            raise SystemExit("config has no [modelserve] base_url")
        extractor = SidecarTripletExtractor(app.modelserve_url)
    else:
        extractor = RuleTripletExtractor()
    report = verify_rag(assignments, generated, extractor, _build_embedder(args))
    _write_json(report.to_dict(), args.report)
    return 0


def cmd_report(args) -> int:
    lines = []
    if args.rouge:
        data = json.loads(Path(args.rouge).read_text(encoding="utf-8"))
        mean = data["mean"]
        counts = data["counts"]
        lines += [
            "## Reference-based evaluation",
            "",
            "| System | R1 | RL | EmbedScore | Valid |",
            "|---|---|---|---|---|",
            f"| {args.label} | {mean['rouge1']} | {mean['rouge_l']} | {mean['embed']} "
            f"| {counts['valid']} / {counts['valid'] + counts['invalid']} |",
            "",
        ]
    if args.aos:
        data = json.loads(Path(args.aos).read_text(encoding="utf-8"))
        lines += [
            "## RAG verification",
            "",
            "| System | AR | SF | OF |",
            "|---|---|---|---|",
            f"| {args.label} | {data['ar']} | {data['sf']} | {data['of']} |",
            "",
        ]
    if not lines:
        raise SystemExit("nothing to report: pass --rouge and/or --aos")
    text = "\n".join(lines)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")
    return 0


# --- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reviewsum",
                                     description="Long-form review summarization toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_term_options(p):
        p.add_argument("--window", type=int, default=4)
        p.add_argument("--min-freq", type=int, default=15)
        p.add_argument("--q-max", type=int, default=15)
        p.add_argument("--gold", default=None, help="gold term list (one term per line)")

    p = sub.add_parser("terms", help="extract ranked query terms")
    p.add_argument("--corpus", required=True)
    p.add_argument("--entity", default=None)
    add_term_options(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_terms)

    p = sub.add_parser("retrieve", help="retrieve evidence sentences per query term")
    p.add_argument("--corpus", required=True)
    p.add_argument("--entity", default=None)
    add_term_options(p)
    p.add_argument("--ranker", choices=("bm25", "dense"), default="bm25")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--embedder", choices=("hash", "sidecar"), default="hash")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("sff-recover", help="recover pros/cons JSON from stdin")
    p.set_defaults(func=cmd_sff_recover)

    p = sub.add_parser("summarize", help="run a summarization mode over a corpus")
    p.add_argument("--mode", choices=pipeline.MODES, required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    add_term_options(p)
    p.add_argument("--ranker", choices=("bm25", "dense"), default="bm25")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", default="mock")
    p.add_argument("--config", default=None)
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--embedder", choices=("hash", "sidecar"), default="hash")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("evaluate", help="score system outputs")
    eval_sub = p.add_subparsers(dest="evaluator", required=True)

    pe = eval_sub.add_parser("rouge", help="reference-based ROUGE / embed scores")
    pe.add_argument("--system", required=True, help="summarize output dir or JSONL")
    pe.add_argument("--corpus", required=True)
    pe.add_argument("--report", default=None)
    pe.set_defaults(func=cmd_evaluate_rouge)

    pa = eval_sub.add_parser("aos", help="reference-free AR/SF/OF verification")
    pa.add_argument("--assignments", required=True, help="retrieve output JSON")
    pa.add_argument("--generated", required=True, help="JSON mapping term -> sentence")
    pa.add_argument("--extractor", choices=("fallback", "sidecar"), default="fallback")
    pa.add_argument("--embedder", choices=("hash", "sidecar"), default="hash")
    pa.add_argument("--config", default=None)
    pa.add_argument("--report", default=None)
    pa.set_defaults(func=cmd_evaluate_aos)

    p = sub.add_parser("report", help="render Markdown tables from report JSON")
    p.add_argument("--rouge", default=None)
    p.add_argument("--aos", default=None)
    p.add_argument("--label", default="system")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ReviewSumError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
