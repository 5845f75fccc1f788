"""selecteval: build response-selection test sets with hard, human-verified
false candidates, and rank response-generation systems by selection accuracy,
reference metrics, and correlation with human evaluation."""

__version__ = "0.1.0"

from .annotation import (
    ERROR_LABELS,
    Judgment,
    Question,
    TestSet,
    Verdict,
    apply_filter_rules,
    assemble_questions,
    assign_error_labels,
    export_tasks,
    filter_pools,
    import_judgments,
    read_testset,
    testset_from_pools,
    write_testset,
)
from .baselines import OverlapSelector, RandomSelector, TfidfSelector, make_overlap_family
from .corpus import (
    DialogueSample,
    EmbeddingTable,
    Repository,
    UnigramModel,
    Utterance,
    load_dialogues,
    load_embeddings,
    load_repository,
    load_stopwords,
)
from .evaluation import (
    HumanScoreRecord,
    SystemRun,
    accuracy,
    build_random_testset,
    fleiss_kappa,
    human_final_score,
    select,
    spearman,
    split_half_human_correlation,
    stability_analysis,
)
from .metrics import bleu_n, meteor, rouge_l
from .retrieval import (
    CandidatePool,
    Retriever,
    build_index,
    content_words,
    embedding_retrieve,
    lexical_retrieve,
    sif_vector,
    tokenize,
)
