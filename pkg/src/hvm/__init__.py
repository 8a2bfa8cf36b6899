"""Hierarchical variable model: chunk and variable learning from discrete
sequences, with a prefix-trie parser, compression/likelihood metrics, and
LZ78 + associative-learning baselines."""

from .baselines import ALModel, al_nll, al_train, lz78_decode, lz78_metrics, lz78_parse
from .corpus import SymbolTable, load_model, load_snippet, save_model
from .estimators import HCM, HVM, AssociativeLearner, check_sequence
from .generator import GenConfig, GenInventory, expand_inventory, generate, sample_flat_dirichlet, sample_sequence
from .learner import (
    LearnerConfig,
    OnlineLearner,
    apply_decay,
    learn_batch,
    learn_online,
    merge_variables,
    nll_conditional,
    nll_independent,
    propose_chunks,
    propose_variables,
    prune_unused,
    test_independence,
    update_counts,
)
from .metrics import (
    MetricReport,
    build_report,
    coding_efficiency,
    compression_ratio,
    dictionary_entries,
    representation_complexity,
    representation_entropy,
)
from .model import (
    Chunk,
    CountTables,
    Inventory,
    Var,
    Variable,
    chunk_surface_lengths,
    normalize_marginals,
)
from .parsing import (
    Binding,
    ParseOutcome,
    ParsedUnit,
    ParsingGraph,
    expected_pss,
    identify_next_chunk,
    linear_scan_identify,
    linear_scan_parse,
    match_terms,
    parse_sequence,
)

__version__ = "0.1.0"

__all__ = [
    "ALModel",
    "AssociativeLearner",
    "Binding",
    "Chunk",
    "CountTables",
    "GenConfig",
    "GenInventory",
    "HCM",
    "HVM",
    "Inventory",
    "LearnerConfig",
    "MetricReport",
    "OnlineLearner",
    "ParseOutcome",
    "ParsedUnit",
    "ParsingGraph",
    "SymbolTable",
    "Var",
    "Variable",
    "al_nll",
    "al_train",
    "apply_decay",
    "build_report",
    "check_sequence",
    "chunk_surface_lengths",
    "coding_efficiency",
    "compression_ratio",
    "dictionary_entries",
    "expand_inventory",
    "expected_pss",
    "generate",
    "identify_next_chunk",
    "learn_batch",
    "learn_online",
    "linear_scan_identify",
    "linear_scan_parse",
    "load_model",
    "load_snippet",
    "lz78_decode",
    "lz78_metrics",
    "lz78_parse",
    "match_terms",
    "merge_variables",
    "nll_conditional",
    "nll_independent",
    "normalize_marginals",
    "parse_sequence",
    "propose_chunks",
    "propose_variables",
    "prune_unused",
    "representation_complexity",
    "representation_entropy",
    "sample_flat_dirichlet",
    "sample_sequence",
    "save_model",
    "test_independence",
    "update_counts",
]
