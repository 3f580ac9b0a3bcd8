"""End-to-end runs: critic and RAG modes, baselines, validity accounting.

Every run writes one summary JSON per entity plus a manifest describing the
configuration, backend, and cache behaviour, so paper-style tables can be
reproduced from the output directory alone. With a mock backend and a fixed
seed every mode is bit-deterministic.
"""

from __future__ import annotations

import json
import re
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from ._data import default_gold_terms, default_stopwords
from .corpus import Entity, ReferenceSummary, split_sentences
from .errors import BackendError
from .llm import (CachedCompleter, GenerationConfig, LlmBackend, build_critic_prompt,
                  build_rag_prompt)
from .queryterms import extract_candidates, refine_terms
from .refeval import merge_items, oracle_summary, random_summary
from .retrieval import Embedder, HashingEmbedder, retrieve_exclusive
from .sff import SummarySketch, parse_direct, parse_fields, recover_fields, sff_recover

MODES = (
    "critic", "critic-length",
    "rag-extractive", "rag-abstractive",
    "baseline-random", "baseline-oracle", "baseline-bm25", "baseline-dense",
)
_BACKEND_MODES = frozenset({"critic", "critic-length", "rag-extractive", "rag-abstractive"})

EXTRACTIVE_SKETCH = SummarySketch(field_names=("index", "sentence"),
                                  scalar_fields=("index", "sentence"))
ABSTRACTIVE_SKETCH = SummarySketch(field_names=("sentence",), scalar_fields=("sentence",))


@dataclass(frozen=True)
class RunConfig:
    mode: str
    ranker: str = "bm25"
    q_max: int = 15
    k: int = 10
    seed: int = 0
    window: int = 4
    min_frequency: int = 15
    backend_descriptor: str = "mock"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r} (have {MODES})")
        if self.ranker not in ("bm25", "dense"):
            raise ValueError(f"unknown ranker {self.ranker!r}")
        if self.k < 1 or self.q_max < 1:
            raise ValueError("k and q_max must be positive")

    @property
    def needs_backend(self) -> bool:
        return self.mode in _BACKEND_MODES

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "ranker": self.ranker,
            "q_max": self.q_max,
            "k": self.k,
            "seed": self.seed,
            "window": self.window,
            "min_frequency": self.min_frequency,
            "backend": self.backend_descriptor,
        }


@dataclass
class SummaryOutput:
    entity_id: str
    mode: str
    pros: tuple[str, ...] = ()
    cons: tuple[str, ...] = ()
    per_term: dict[str, str] = field(default_factory=dict)
    merged_text: str = ""
    parse_method: str = "none"  # direct | sff | mixed | none | failed
    valid: bool = False
    failed_terms: int = 0

    def to_dict(self) -> dict:
        return {
            "entity_id": self.entity_id,
            "mode": self.mode,
            "pros": list(self.pros),
            "cons": list(self.cons),
            "per_term": dict(self.per_term),
            "merged_text": self.merged_text,
            "parse_method": self.parse_method,
            "valid": self.valid,
            "failed_terms": self.failed_terms,
        }


def _entity_seed(entity_id: str, seed: int) -> int:
    return zlib.crc32(entity_id.encode("utf-8")) ^ seed


# --- critic mode ---------------------------------------------------------------

def run_critic(entity: Entity, config: RunConfig, completer: CachedCompleter,
               gen_config: GenerationConfig) -> SummaryOutput:
    """Whole-corpus critic summarization for one entity.

    In critic-length mode the required pros/cons counts come from the entity's
    reference summary. Output that neither parses directly nor recovers via
    SFF yields parse_method "failed".
    """
    length_control = None
    if config.mode == "critic-length" and entity.reference is not None and entity.reference.valid:
        length_control = (len(entity.reference.pros), len(entity.reference.cons))

    bundle = build_critic_prompt(entity, length_control=length_control, config=gen_config)
    try:
        raw = completer.complete(bundle, gen_config)
    except BackendError:
        return SummaryOutput(entity_id=entity.entity_id, mode=config.mode,
                             parse_method="failed", valid=False)

    recovered = parse_direct(raw)
    if recovered is None:
        recovered = sff_recover(raw)
    if recovered is None:
        return SummaryOutput(entity_id=entity.entity_id, mode=config.mode,
                             parse_method="failed", valid=False)
    return SummaryOutput(
        entity_id=entity.entity_id,
        mode=config.mode,
        pros=recovered.pros,
        cons=recovered.cons,
        merged_text=merge_items(list(recovered.pros) + list(recovered.cons)),
        parse_method=recovered.method,
        valid=recovered.valid,
    )


# --- RAG modes -------------------------------------------------------------------

def _parse_term_response(raw: str, mode: str, evidence) -> tuple[Optional[str], Optional[str]]:
    """Return (sentence text, parse method) for one per-term completion."""
    sketch = EXTRACTIVE_SKETCH if mode == "rag-extractive" else ABSTRACTIVE_SKETCH
    fields = parse_fields(raw, sketch)
    method = "direct"
    if fields is None:
        fields = recover_fields(raw, sketch)
        method = "sff"
    if fields is None:
        return None, None

    if mode == "rag-extractive":
        index = fields.get("index")
        if isinstance(index, str) and index.strip().isdigit():
            index = int(index.strip())
        if isinstance(index, int) and 1 <= index <= len(evidence):
            return evidence[index - 1].sentence.text, method
    sentence = fields.get("sentence")
    if isinstance(sentence, str) and sentence.strip():
        return sentence.strip(), method
    return None, None


def run_rag(entity: Entity, config: RunConfig, completer: Optional[CachedCompleter],
            gen_config: Optional[GenerationConfig], embedder: Embedder,
            stopwords=None, gold_terms=None) -> SummaryOutput:
    """RAG and baseline summarization for one entity.

    Per-term sentences are merged in query-term rank order. A term whose
    completion fails to parse is skipped and counted; the entity fails only
    when every term fails.
    """
    pool = split_sentences(entity)
    output = SummaryOutput(entity_id=entity.entity_id, mode=config.mode)
    if not pool:
        return output

    if config.mode == "baseline-random":
        n = min(config.q_max, len(pool))
        output.merged_text = random_summary(pool, n, _entity_seed(entity.entity_id, config.seed))
        output.valid = bool(output.merged_text)
        return output

    if config.mode == "baseline-oracle":
        if entity.reference is None or not entity.reference.valid:
            return output
        output.merged_text = oracle_summary(entity.reference, pool)
        output.valid = bool(output.merged_text)
        return output

    candidates = extract_candidates(pool, window=config.window,
                                    min_frequency=config.min_frequency,
                                    stopwords=stopwords)
    terms = refine_terms(candidates, gold_terms or default_gold_terms(), q_max=config.q_max)
    if not terms.terms:
        return output

    if config.mode in ("baseline-bm25", "baseline-dense"):
        ranker = "bm25" if config.mode == "baseline-bm25" else "dense"
        result = retrieve_exclusive(terms, pool, k=1, ranker=ranker, embedder=embedder)
        for term, scored in result.assignments.items():
            if scored:
                output.per_term[term] = scored[0].sentence.text
        output.merged_text = merge_items(list(output.per_term.values()))
        output.valid = bool(output.merged_text)
        return output

    # rag-extractive / rag-abstractive
    result = retrieve_exclusive(terms, pool, k=config.k, ranker=config.ranker,
                                embedder=embedder)
    prompt_mode = "extractive" if config.mode == "rag-extractive" else "abstractive"
    methods: set[str] = set()
    attempted = 0
    for term, evidence in result.assignments.items():
        if not evidence:
            continue
        attempted += 1
        bundle = build_rag_prompt(term, evidence, prompt_mode)
        try:
            raw = completer.complete(bundle, gen_config)
        except BackendError:
            output.failed_terms += 1
            continue
        sentence, method = _parse_term_response(raw, config.mode, evidence)
        if sentence is None:
            output.failed_terms += 1
            continue
        output.per_term[term] = sentence
        methods.add(method)

    output.merged_text = merge_items(list(output.per_term.values()))
    output.valid = bool(output.merged_text)
    if attempted == 0:
        output.parse_method = "none"
    elif not methods:
        output.parse_method = "failed"
    elif methods == {"direct"}:
        output.parse_method = "direct"
    elif methods == {"sff"}:
        output.parse_method = "sff"
    else:
        output.parse_method = "mixed"
    return output


def run_entity(entity: Entity, config: RunConfig, completer=None, gen_config=None,
               embedder=None, stopwords=None, gold_terms=None) -> SummaryOutput:
    if config.mode in ("critic", "critic-length"):
        return run_critic(entity, config, completer, gen_config)
    return run_rag(entity, config, completer, gen_config,
                   embedder or HashingEmbedder(), stopwords=stopwords, gold_terms=gold_terms)


# --- corpus runs -----------------------------------------------------------------

@dataclass
class ValidityCounts:
    valid: int
    invalid: int
    parse_failed: int

    @property
    def total(self) -> int:
        return self.valid + self.invalid + self.parse_failed


def validity_counts(outputs: Sequence[SummaryOutput]) -> ValidityCounts:
    """Partition outputs into valid / invalid / parse-failed; buckets are disjoint."""
    valid = sum(1 for o in outputs if o.valid)
    parse_failed = sum(1 for o in outputs if o.parse_method == "failed")
    return ValidityCounts(valid=valid, parse_failed=parse_failed,
                          invalid=len(outputs) - valid - parse_failed)


def _safe_filename(entity_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", entity_id)


@dataclass
class RunResult:
    outputs: list[SummaryOutput]
    manifest: dict


def run_corpus(
    entities: Sequence[Entity],
    config: RunConfig,
    backend: Optional[LlmBackend] = None,
    gen_config: Optional[GenerationConfig] = None,
    embedder: Optional[Embedder] = None,
    out_dir=None,
    cache_dir=None,
    workers: int = 1,
    stopwords=None,
    gold_terms=None,
) -> RunResult:
    """Run one mode over a corpus, optionally writing outputs and a manifest.

    Baseline modes need no backend. Outputs are produced in corpus order
    regardless of worker count, and all files are written with sorted keys so
    repeated runs are byte-identical.
    """
    completer = None
    if config.needs_backend:
        if backend is None:
            raise ValueError(f"mode {config.mode!r} requires a backend")
        if cache_dir is None:
            if out_dir is None:
                raise ValueError("cache_dir or out_dir required for backend modes")
            cache_dir = Path(out_dir) / "cache"
        completer = CachedCompleter(backend, cache_dir)
    if gen_config is None and config.needs_backend:
        model_id = getattr(backend, "descriptor", "unspecified")
        if config.mode.startswith("critic"):
            gen_config = GenerationConfig.critic_default(model_id=model_id)
        else:
            gen_config = GenerationConfig.rag_default(model_id=model_id)

    embedder = embedder or HashingEmbedder()
    stopwords = frozenset(stopwords) if stopwords is not None else default_stopwords()
    gold = frozenset(gold_terms) if gold_terms is not None else default_gold_terms()

    def work(entity: Entity) -> SummaryOutput:
        return run_entity(entity, config, completer=completer, gen_config=gen_config,
                          embedder=embedder, stopwords=stopwords, gold_terms=gold)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            outputs = list(executor.map(work, entities))
    else:
        outputs = [work(e) for e in entities]

    counts = validity_counts(outputs)
    manifest = {
        "config": config.to_dict(),
        "entities": [e.entity_id for e in entities],
        "counts": {
            "total": counts.total,
            "valid": counts.valid,
            "invalid": counts.invalid,
            "parse_failed": counts.parse_failed,
        },
        "cache": {
            "hits": completer.hits if completer else 0,
            "misses": completer.misses if completer else 0,
        },
    }

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for output in outputs:
            path = out_dir / f"{_safe_filename(output.entity_id)}.json"
            path.write_text(json.dumps(output.to_dict(), ensure_ascii=False,
                                       indent=2, sort_keys=True) + "\n", encoding="utf-8")
        manifest_path = out_dir / "manifest.json"
        manifest_path.write_text(json.dumps(manifest, ensure_ascii=False,
                                            indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return RunResult(outputs=outputs, manifest=manifest)


# --- length-control accounting ------------------------------------------------

@dataclass
class AdherenceCounts:
    denominator: int
    pros_match: int
    cons_match: int
    overall_match: int

    def to_dict(self) -> dict:
        return {
            "denominator": self.denominator,
            "pros_match": self.pros_match,
            "cons_match": self.cons_match,
            "overall_match": self.overall_match,
        }


def adherence_report(outputs: Sequence[SummaryOutput],
                     references: Mapping[str, ReferenceSummary]) -> AdherenceCounts:
    """Count summaries matching the reference pros/cons lengths.

    Invalid summaries and entities without a valid reference are excluded
    from the denominator.
    """
    denominator = pros_match = cons_match = overall = 0
    for output in outputs:
        if not output.valid:
            continue
        reference = references.get(output.entity_id)
        if reference is None or not reference.valid:
            continue
        denominator += 1
        pros_ok = len(output.pros) == len(reference.pros)
        cons_ok = len(output.cons) == len(reference.cons)
        pros_match += pros_ok
        cons_match += cons_ok
        overall += pros_ok and cons_ok
    return AdherenceCounts(denominator=denominator, pros_match=pros_match,
                           cons_match=cons_match, overall_match=overall)
