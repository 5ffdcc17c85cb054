"""Weighted rule-compliance score, a mechanical proxy for expert judgement.

Each of the five prompt rules is checked as pass/fail against the gold
annotation; the score is the sum of the weights of the rules that pass.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from ..corpus import AnnotatedSentence
from ..linearizer import DEFAULT_PROFILE, RuleProfile, plan
from .tau import align_tokens

RULE_IDS = (1, 2, 3, 4, 5)
RULE_NAMES = {
    1: "sandhi",
    2: "clause",
    3: "chunking",
    4: "order",
    5: "particles",
}


@dataclass(frozen=True)
class ComplianceWeights:
    weights: Mapping[int, float] = field(default_factory=lambda: {1: 3, 2: 2, 3: 2, 4: 2, 5: 1})

    def __post_init__(self):
        w = {int(k): v for k, v in dict(self.weights).items()}
        if set(w) != set(RULE_IDS):
            raise ValueError(f"weights must cover rules {RULE_IDS}")
        if any(v < 0 for v in w.values()):
            raise ValueError("weights must be non-negative")
        object.__setattr__(self, "weights", w)

    @property
    def maximum(self) -> float:
        return sum(self.weights.values())

    def to_dict(self) -> dict[str, float]:
        return {str(k): v for k, v in sorted(self.weights.items())}


DEFAULT_WEIGHTS = ComplianceWeights()


def weighted_score(passed: Iterable[int], weights: ComplianceWeights = DEFAULT_WEIGHTS) -> float:
    passed = set(passed)
    unknown = passed - set(RULE_IDS)
    if unknown:
        raise ValueError(f"unknown rule ids {sorted(unknown)}")
    return float(sum(weights.weights[r] for r in sorted(passed)))


@dataclass(frozen=True)
class ComplianceResult:
    score: float
    per_rule: dict[int, bool]

    @property
    def passed(self) -> list[int]:
        return [r for r in RULE_IDS if self.per_rule[r]]


def _non_decreasing(xs: Sequence) -> bool:
    return all(a <= b for a, b in zip(xs, xs[1:]))


def check_rules(
    hyp: Sequence[str], gold: AnnotatedSentence, profile: RuleProfile = DEFAULT_PROFILE
) -> dict[int, bool]:
    tokens = gold.tokens
    lin = plan(gold, profile)
    canon = [tokens[i].surface for i in lin.order]
    al = align_tokens(list(hyp), canon)
    # hyp position -> gold token index
    where = {h: lin.order[c] for h, c in al.mapping.items()}

    results = {1: Counter(hyp) == Counter(gold.surfaces)}
    if al.unaligned_hyp or not where:
        results.update({r: False for r in (2, 3, 4, 5)})
        return results

    in_hyp = [where[h] for h in sorted(where)]  # gold indices, hypothesis order
    pos = {g: p for p, g in enumerate(in_hyp)}
    words = [g for g in in_hyp if tokens[g].role != "particle"]

    # clause spans in mandated order, main verb final
    clause_rank = {cid: k for k, cid in enumerate(lin.clause_order)}
    ok2 = _non_decreasing([clause_rank[tokens[g].clause] for g in words])
    mv = gold.main_verb()
    if mv is not None:
        ok2 = ok2 and mv.index in pos and all(tokens[g].role == "particle" for g in in_hyp[pos[mv.index] + 1 :])
    results[2] = ok2

    # modifiers contiguous with their heads, in chunk order
    word_pos = {g: k for k, g in enumerate(words)}
    ok3 = True
    for chunks in lin.chunks.values():
        for ch in chunks:
            if len(ch.members) < 2:
                continue
            if any(m not in word_pos for m in ch.members):
                ok3 = False
                break
            ps = [word_pos[m] for m in ch.members]
            if ps != list(range(ps[0], ps[0] + len(ps))):
                ok3 = False
                break
    results[3] = ok3

    # role classes in profile order within each clause
    ok4 = True
    for cid in lin.clause_order:
        ranks = [lin.unit_rank[g] for g in words if tokens[g].clause == cid and g in lin.unit_rank]
        ok4 = ok4 and _non_decreasing(ranks)
    results[4] = ok4

    # particles right after their parent word (or a sibling particle)
    def anchor(i: int) -> int:
        while tokens[i].role == "particle" and tokens[i].head is not None:
            i = tokens[i].head
        return i

    ok5 = True
    for g in in_hyp:
        t = tokens[g]
        if t.role != "particle" or t.head is None:
            continue
        p = pos[g]
        prev = in_hyp[p - 1] if p > 0 else None
        if prev is None:
            ok5 = False
        elif prev != t.head and not (tokens[prev].role == "particle" and anchor(prev) == anchor(g)):
            ok5 = False
    results[5] = ok5
    return results


def compliance_score(
    hyp: Sequence[str],
    gold: AnnotatedSentence,
    weights: ComplianceWeights = DEFAULT_WEIGHTS,
    profile: RuleProfile = DEFAULT_PROFILE,
) -> ComplianceResult:
    """Check ``hyp`` against the five rules and weight the passes.

    Hypothesis words missing from the gold segmentation fail every rule that
    needs an alignment (2-5) instead of raising.
    """
    per_rule = check_rules(hyp, gold, profile)
    return ComplianceResult(weighted_score([r for r, ok in per_rule.items() if ok], weights), per_rule)
