from .bleu import BleuStats, bleu_stats, corpus_bleu, sentence_bleu
from .compliance import (
    DEFAULT_WEIGHTS,
    ComplianceResult,
    ComplianceWeights,
    check_rules,
    compliance_score,
    weighted_score,
)
from .report import MetricReport, MetricSettings, evaluate, format_grid, format_report
from .tau import Alignment, TauResult, align_tokens, count_inversions, kendall_tau, kendall_tau_result
from .tokenize import tokenize_iast

__all__ = [
    "Alignment",
    "BleuStats",
    "ComplianceResult",
    "ComplianceWeights",
    "DEFAULT_WEIGHTS",
    "MetricReport",
    "MetricSettings",
    "TauResult",
    "align_tokens",
    "bleu_stats",
    "check_rules",
    "compliance_score",
    "corpus_bleu",
    "count_inversions",
    "evaluate",
    "format_grid",
    "format_report",
    "kendall_tau",
    "kendall_tau_result",
    "sentence_bleu",
    "tokenize_iast",
    "weighted_score",
]
