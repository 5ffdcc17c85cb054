"""Token alignment and Kendall's tau over the aligned common subsequence."""

from __future__ import annotations

import bisect
import itertools
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

EXHAUSTIVE_LIMIT = 10


@dataclass(frozen=True)
class Alignment:
    mapping: dict[int, int]  # hyp index -> ref index
    unaligned_hyp: tuple[int, ...]
    unaligned_ref: tuple[int, ...]

    def ref_positions(self) -> list[int]:
        """Ref indices of aligned tokens, in hypothesis order."""
        return [self.mapping[h] for h in sorted(self.mapping)]


def _finish(mapping: dict[int, int], n_hyp: int, n_ref: int) -> Alignment:
    used = set(mapping.values())
    return Alignment(
        dict(sorted(mapping.items())),
        tuple(i for i in range(n_hyp) if i not in mapping),
        tuple(j for j in range(n_ref) if j not in used),
    )


def _greedy(hyp: Sequence[str], ref: Sequence[str]) -> dict[int, int]:
    slots: dict[str, list[int]] = defaultdict(list)
    for j, tok in enumerate(ref):
        slots[tok].append(j)
    cursor: dict[str, int] = defaultdict(int)
    mapping = {}
    for i, tok in enumerate(hyp):
        k = cursor[tok]
        if k < len(slots[tok]):
            mapping[i] = slots[tok][k]
            cursor[tok] = k + 1
    return mapping


def count_inversions(seq: Sequence[int]) -> int:
    """Number of pairs i < j with seq[i] > seq[j].

    Scans right to left keeping a sorted list of values seen so far; each
    value contributes the number of smaller values already to its right.
    """
    seen: list[int] = []
    inv = 0
    for x in reversed(seq):
        k = bisect.bisect_left(seen, x)
        inv += k
        seen.insert(k, x)
    return inv


def _exhaustive(hyp: Sequence[str], ref: Sequence[str]) -> dict[int, int]:
    hyp_pos: dict[str, list[int]] = defaultdict(list)
    ref_pos: dict[str, list[int]] = defaultdict(list)
    for i, t in enumerate(hyp):
        hyp_pos[t].append(i)
    for j, t in enumerate(ref):
        ref_pos[t].append(j)
    per_surface = []
    size = 0  # aligned tokens with more than one candidate partner
    for tok in sorted(set(hyp_pos) & set(ref_pos)):
        hs, rs = hyp_pos[tok], ref_pos[tok]
        k = min(len(hs), len(rs))
        if len(hs) > 1 or len(rs) > 1:
            size += k
        # crossing pairs of one surface only add inversions, so each choice
        # of k positions on both sides is matched in order
        per_surface.append(
            [dict(zip(hc, rc)) for hc in itertools.combinations(hs, k) for rc in itertools.combinations(rs, k)]
        )
    if size > EXHAUSTIVE_LIMIT:
        raise ValueError(
            f"exhaustive alignment limited to {EXHAUSTIVE_LIMIT} aligned repeated-surface tokens, got {size}"
        )
    best, best_inv = {}, None
    for combo in itertools.product(*per_surface):
        mapping = {}
        for part in combo:
            mapping.update(part)
        inv = count_inversions([mapping[h] for h in sorted(mapping)])
        if best_inv is None or inv < best_inv:
            best, best_inv = mapping, inv
    return best


def align_tokens(hyp: Sequence[str], ref: Sequence[str], mode: str = "greedy") -> Alignment:
    """Injective surface-preserving alignment of hypothesis to reference tokens.

    ``greedy`` pairs the k-th occurrence of a word in the hypothesis with its
    k-th occurrence in the reference.  ``exhaustive`` picks, among maximal
    alignments, one with the fewest inversions; it refuses inputs with more
    than ``EXHAUSTIVE_LIMIT`` aligned tokens whose surface repeats (tokens
    with a single candidate partner do not enlarge the search).
    """
    if mode == "greedy":
        mapping = _greedy(hyp, ref)
    elif mode == "exhaustive":
        mapping = _exhaustive(hyp, ref)
    else:
        raise ValueError(f"unknown alignment mode {mode!r}")
    return _finish(mapping, len(hyp), len(ref))


@dataclass(frozen=True)
class TauResult:
    aligned: int
    inversions: int
    unaligned_count: int

    @property
    def pairs(self) -> int:
        return self.aligned * (self.aligned - 1) // 2

    @property
    def defined(self) -> bool:
        return self.aligned >= 2

    @property
    def exact(self) -> Fraction | None:
        if not self.defined:
            return None
        return 1 - Fraction(2 * self.inversions, self.pairs)

    @property
    def tau(self) -> float | None:
        ex = self.exact
        return None if ex is None else float(ex)


def kendall_tau_result(hyp: Sequence[str], ref: Sequence[str], alignment: str = "greedy") -> TauResult:
    al = align_tokens(hyp, ref, alignment)
    seq = al.ref_positions()
    return TauResult(len(seq), count_inversions(seq), len(al.unaligned_hyp) + len(al.unaligned_ref))


def kendall_tau(hyp: Sequence[str], ref: Sequence[str], alignment: str = "greedy") -> float | None:
    """Tau-a over aligned tokens; None when fewer than two tokens align."""
    return kendall_tau_result(hyp, ref, alignment).tau
