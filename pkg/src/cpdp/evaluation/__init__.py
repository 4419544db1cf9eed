from .experiment import (Cell, MethodSummary, PerformanceTable, analyze, cploo, fisher_lsd,
                         summarize)
from .metrics import UndefinedAUCError, auc, rank_row, round_auc
from .stats import StatResult, compact_letters, friedman, letters_str, pairwise_lsd, share_letter

__all__ = [
    "Cell", "MethodSummary", "PerformanceTable", "StatResult", "UndefinedAUCError", "analyze",
    "auc", "compact_letters", "cploo", "fisher_lsd", "friedman", "letters_str", "pairwise_lsd",
    "rank_row", "round_auc", "share_letter", "summarize",
]
