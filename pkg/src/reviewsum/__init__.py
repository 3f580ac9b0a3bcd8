"""Training-free long-form review summarization and evaluation toolkit."""

from .corpus import Entity, ReferenceSummary, Review, SentenceRef, load_corpus, split_sentences
from .queryterms import QueryTermSet, TermCandidate, extract_candidates, refine_terms
from .retrieval import (Embedder, HashingEmbedder, RetrievalResult, ScoredSentence,
                        bm25_rank, dense_rank, retrieve_exclusive)
from .sff import RecoveredSummary, SummarySketch, parse_direct, sff_recover
from .refeval import (RougeScore, greedy_embed_score, merge_reference, oracle_summary,
                      random_summary, rouge1_f1, rouge_l_f1)
from .aoseval import (AosTriplet, RuleTripletExtractor, TripletExtractor,
                      VerificationReport, VerificationUnit, aspect_relevance,
                      opinion_faithfulness, sentiment_factuality, verify_rag)
from .llm import (CachedCompleter, GenerationConfig, HttpChatBackend, LlmBackend,
                  MockBackend, PromptBundle, build_critic_prompt, build_rag_prompt,
                  complete_cached, truncate_reviews)
from .pipeline import RunConfig, SummaryOutput, adherence_report, run_corpus, run_entity

__version__ = "0.1.0"
