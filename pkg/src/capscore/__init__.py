"""Caption evaluation metrics and a human-free meta-evaluation harness."""

__version__ = "0.1.0"

from .corpus import (
    Caption,
    EvalCorpus,
    ReferenceSet,
    SplitCorpus,
    build_eval_corpus,
    load_candidate_file,
    load_coco_annotations,
    load_external_scores,
    split_references,
)
from .embedding_metrics import (
    EmbeddingBundle,
    bertscore,
    clipscore,
    clipscore_ref,
    cosine,
    load_embeddings,
    similarity_matrix,
)
from .errors import FormatError, IntegrityError
from .ngram_metrics import (
    BleuConfig,
    CiderConfig,
    MeteorConfig,
    MetricReport,
    RougeConfig,
    bleu_corpus,
    bleu_sentence,
    cider_build_stats,
    cider_score,
    lcs_length,
    meteor,
    rouge_l,
)
from .perturb import (
    BagOfWords,
    PerturbationSpec,
    assign_random_captions,
    build_bag,
    perturb_replace,
    perturb_shuffle,
)
from .porter import porter_stem
from .rankeval import (
    RankResult,
    Tier,
    rank_captions,
    run_model_vs_human,
    run_tier_experiment,
    spearman,
)
from .scorers import make_external_scorer, make_scorer
from .text import SynonymTable, load_synonym_table, ngram_counts, tokenize
