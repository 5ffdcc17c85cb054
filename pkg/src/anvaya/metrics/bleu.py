"""BLEU over pre-tokenized sequences.

Counts are kept as plain integers so sentence statistics can be pooled
(summed) in any order before the corpus score is taken.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

MAX_ORDER = 4
SMOOTHING = ("exp", "floor", "none")


@dataclass(frozen=True)
class BleuStats:
    correct: tuple[int, ...] = (0,) * MAX_ORDER
    total: tuple[int, ...] = (0,) * MAX_ORDER
    hyp_len: int = 0
    ref_len: int = 0

    def __add__(self, other: "BleuStats") -> "BleuStats":
        return BleuStats(
            tuple(a + b for a, b in zip(self.correct, other.correct)),
            tuple(a + b for a, b in zip(self.total, other.total)),
            self.hyp_len + other.hyp_len,
            self.ref_len + other.ref_len,
        )


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu_stats(hyp: Sequence[str], ref: Sequence[str], max_order: int = MAX_ORDER) -> BleuStats:
    if not ref:
        raise ValueError("reference must be non-empty")
    correct, total = [], []
    for n in range(1, max_order + 1):
        h = _ngrams(hyp, n)
        r = _ngrams(ref, n)
        correct.append(sum(min(c, r[g]) for g, c in h.items()))
        total.append(max(len(hyp) - n + 1, 0))
    return BleuStats(tuple(correct), tuple(total), len(hyp), len(ref))


def brevity_penalty(hyp_len: int, ref_len: int) -> float:
    if hyp_len >= ref_len:
        return 1.0
    if hyp_len == 0:
        return 0.0
    return math.exp(1.0 - ref_len / hyp_len)


def score_from_stats(stats: BleuStats, smoothing: str = "exp", floor: float = 0.0) -> float:
    """BLEU in [0, 100] from pooled counts.

    Orders with no hypothesis n-grams at all are dropped (effective order),
    so short segments are scored on the orders they can have.  Zero-match
    orders are smoothed: ``exp`` halves the pseudo-count for each successive
    zero, ``floor`` substitutes ``floor`` matches, ``none`` scores 0.  No
    unigram match at all scores 0 under every policy.

    Smoothed scores depend on the raw totals, so replicating a corpus only
    leaves the score unchanged when every scored order has a match.
    """
    if smoothing not in SMOOTHING:
        raise ValueError(f"unknown smoothing {smoothing!r}; expected one of {SMOOTHING}")
    if stats.correct[0] == 0:
        return 0.0
    log_sum = 0.0
    orders = 0
    exp_divisor = 1.0
    for correct, total in zip(stats.correct, stats.total):
        if total == 0:
            break
        orders += 1
        if correct > 0:
            p = correct / total
        elif smoothing == "exp":
            exp_divisor *= 2
            p = 1.0 / (exp_divisor * total)
        elif smoothing == "floor" and floor > 0:
            p = floor / total
        else:
            return 0.0
        log_sum += math.log(p)
    if orders == 0:
        return 0.0
    bp = brevity_penalty(stats.hyp_len, stats.ref_len)
    return 100.0 * bp * math.exp(log_sum / orders)


def sentence_bleu(hyp: Sequence[str], ref: Sequence[str], smoothing: str = "exp", floor: float = 0.0) -> float:
    return score_from_stats(bleu_stats(hyp, ref), smoothing, floor)


def corpus_bleu(
    pairs: Iterable[tuple[Sequence[str], Sequence[str]]], smoothing: str = "exp", floor: float = 0.0
) -> float:
    """Corpus BLEU: n-gram counts and lengths are summed over all pairs first."""
    pooled = None
    for hyp, ref in pairs:
        s = bleu_stats(hyp, ref)
        pooled = s if pooled is None else pooled + s
    if pooled is None:
        raise ValueError("corpus_bleu needs at least one (hyp, ref) pair")
    return score_from_stats(pooled, smoothing, floor)
