"""Rule-based reordering of annotated verse into canonical prose (anvaya) order.

The pipeline is: order the clauses, chunk modifiers with their heads, order
the chunks of each clause by role class, then hang indeclinable particles
after their parent words.  Every tie is broken by source position, so the
output is a deterministic function of the annotation.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import (
    APPOSITIVE_ROLES,
    KARAKA_ROLES,
    MODIFIER_ROLES,
    AnnotatedSentence,
    AnnotationError,
    validate_sentence,
)

RULES = ("R-clause", "R-chunk", "R-intra-order", "R-particle")
NONFINITE_PLACEMENTS = ("before-karman", "after-karakas")
APPOSITIVE_PLACEMENTS = ("before-head", "after-head")


@dataclass(frozen=True)
class RuleProfile:
    karaka_order: tuple[str, ...] = KARAKA_ROLES
    nonfinite_placement: str = "after-karakas"
    appositive_placement: str = "after-head"
    enabled_rules: frozenset[str] = frozenset(RULES)

    def __post_init__(self):
        object.__setattr__(self, "karaka_order", tuple(self.karaka_order))
        object.__setattr__(self, "enabled_rules", frozenset(self.enabled_rules))
        if sorted(self.karaka_order) != sorted(KARAKA_ROLES):
            raise ValueError(f"karaka_order must list each of {KARAKA_ROLES} exactly once")
        if self.nonfinite_placement not in NONFINITE_PLACEMENTS:
            raise ValueError(f"nonfinite_placement must be one of {NONFINITE_PLACEMENTS}")
        if self.appositive_placement not in APPOSITIVE_PLACEMENTS:
            raise ValueError(f"appositive_placement must be one of {APPOSITIVE_PLACEMENTS}")
        unknown = self.enabled_rules - set(RULES)
        if unknown:
            raise ValueError(f"unknown rules {sorted(unknown)}")

    def enabled(self, rule: str) -> bool:
        return rule in self.enabled_rules

    def to_dict(self) -> dict:
        return {
            "karaka_order": list(self.karaka_order),
            "nonfinite_placement": self.nonfinite_placement,
            "appositive_placement": self.appositive_placement,
            "enabled_rules": [r for r in RULES if r in self.enabled_rules],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "RuleProfile":
        unknown = set(d) - {"karaka_order", "nonfinite_placement", "appositive_placement", "enabled_rules"}
        if unknown:
            raise ValueError(f"unknown profile keys {sorted(unknown)}")
        kw = dict(d)
        if "karaka_order" in kw:
            kw["karaka_order"] = tuple(kw["karaka_order"])
        if "enabled_rules" in kw:
            kw["enabled_rules"] = frozenset(kw["enabled_rules"])
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> "RuleProfile":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


DEFAULT_PROFILE = RuleProfile()


@dataclass(frozen=True)
class Chunk:
    head: int
    members: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))


def _modifier_children(sentence: AnnotatedSentence) -> dict[int, list[int]]:
    children: dict[int, list[int]] = {}
    tokens = sentence.tokens
    for t in tokens:
        if t.role not in MODIFIER_ROLES:
            continue
        head = tokens[t.head]
        if head.clause != t.clause:
            raise AnnotationError(
                f"modifier {t.index} ({t.surface}) in clause {t.clause!r} has head "
                f"{head.index} ({head.surface}) in clause {head.clause!r}"
            )
        if head.role == "particle":
            raise AnnotationError(f"modifier {t.index} ({t.surface}) is attached to particle {head.index} ({head.surface})")
        children.setdefault(head.index, []).append(t.index)
    return children


def _expand(idx: int, children: Mapping[int, list[int]], sentence: AnnotatedSentence, profile: RuleProfile) -> list[int]:
    pre, negs, appos = [], [], []
    for m in children.get(idx, ()):
        role = sentence.tokens[m].role
        if role in APPOSITIVE_ROLES:
            appos.append(m)
        elif role == "negation":
            negs.append(m)
        else:
            pre.append(m)
    out: list[int] = []
    for m in pre:
        out += _expand(m, children, sentence, profile)
    if profile.appositive_placement == "before-head":
        for m in appos:
            out += _expand(m, children, sentence, profile)
    # negation sits right before what it negates
    for m in negs:
        out += _expand(m, children, sentence, profile)
    out.append(idx)
    if profile.appositive_placement == "after-head":
        for m in appos:
            out += _expand(m, children, sentence, profile)
    return out


def build_chunks(sentence: AnnotatedSentence, profile: RuleProfile = DEFAULT_PROFILE) -> dict[str, list[Chunk]]:
    """Group every non-particle token into exactly one chunk, per clause.

    Chunks of a clause are listed by head position.  With R-chunk disabled
    every token is its own chunk; with R-particle disabled particles are
    chunked like ordinary words.
    """
    tokens = sentence.tokens
    chunking = profile.enabled("R-chunk")
    children = _modifier_children(sentence) if chunking else {}
    out: dict[str, list[Chunk]] = {c.clause_id: [] for c in sentence.clauses}
    for t in tokens:
        if t.role == "particle" and profile.enabled("R-particle"):
            continue
        if chunking and t.role in MODIFIER_ROLES:
            continue
        members = _expand(t.index, children, sentence, profile) if chunking else [t.index]
        out[t.clause].append(Chunk(t.index, tuple(members)))
    return out


def _class_sequence(profile: RuleProfile) -> list[str]:
    karakas = list(profile.karaka_order)
    if profile.nonfinite_placement == "before-karman":
        k = karakas.index("karman")
        middle = karakas[:k] + ["nonfinite-verb"] + karakas[k:]
    else:
        middle = karakas + ["nonfinite-verb"]
    return ["sambodhya", "kartr", *middle, "other", "finite-verb", "quotative-marker"]


def class_ranks(profile: RuleProfile = DEFAULT_PROFILE) -> dict[str, int]:
    """Rank of each role class in the intra-clause sequence."""
    return {role: i for i, role in enumerate(_class_sequence(profile))}


@dataclass
class _ClausePlan:
    order: list[int]
    unit_rank: dict[int, int]  # token -> class rank of its clause-level unit


def _plan_clause(chunks: Sequence[Chunk], sentence: AnnotatedSentence, profile: RuleProfile) -> _ClausePlan:
    tokens = sentence.tokens
    if not chunks:
        return _ClausePlan([], {})
    ranks = class_ranks(profile)
    other = ranks["other"]

    def rank(c: Chunk) -> int:
        return ranks.get(tokens[c.head].role, other)

    def key(c: Chunk):
        t = tokens[c.head]
        return (rank(c), t.role == "finite-verb" and t.is_main_verb, c.head)

    if not profile.enabled("R-intra-order"):
        order = [i for c in sorted(chunks, key=lambda c: c.head) for i in c.members]
        unit_rank = {i: rank(c) for c in chunks for i in c.members}
        return _ClausePlan(order, unit_rank)

    clause = tokens[chunks[0].head].clause
    chunk_of = {i: c for c in chunks for i in c.members}

    # arguments of a non-finite verb travel with it as one group
    parent: dict[int, Chunk | None] = {}

    def group_parent(c: Chunk) -> Chunk | None:
        if c.head in parent:
            return parent[c.head]
        gov = tokens[c.head].head
        result = None
        if gov is not None and tokens[gov].clause == clause and gov in chunk_of:
            gc = chunk_of[gov]
            if tokens[gc.head].role == "nonfinite-verb":
                result = gc
            else:
                result = group_parent(gc)
        parent[c.head] = result
        return result

    groups: dict[int | None, list[Chunk]] = {}
    for c in chunks:
        p = group_parent(c)
        groups.setdefault(None if p is None else p.head, []).append(c)

    def arrange(units: list[Chunk]) -> list[int]:
        out: list[int] = []
        for c in sorted(units, key=key):
            if tokens[c.head].role == "nonfinite-verb":
                out += arrange(groups.get(c.head, []))
            out += c.members
        return out

    order = arrange(groups.get(None, []))
    unit_rank: dict[int, int] = {}

    def mark(c: Chunk, r: int) -> None:
        for i in c.members:
            unit_rank[i] = r
        for sub in groups.get(c.head, ()) if tokens[c.head].role == "nonfinite-verb" else ():
            mark(sub, r)

    for c in groups.get(None, []):
        mark(c, rank(c))
    return _ClausePlan(order, unit_rank)


def order_clause(
    chunks: Sequence[Chunk], sentence: AnnotatedSentence, profile: RuleProfile = DEFAULT_PROFILE
) -> list[int]:
    """Order the chunks of one clause into a flat list of token indices.

    Sequence: vocatives, agent, the kāraka roles in ``profile.karaka_order``
    (non-finite verb groups slotted per ``profile.nonfinite_placement``),
    role ``other``, finite verbs with the flagged main verb last, and finally
    any quotative marker.  Chunks of one class keep source order.
    """
    flagged = [c.head for c in chunks if sentence.tokens[c.head].is_main_verb]
    if len(flagged) > 1:
        raise AnnotationError(f"clause has {len(flagged)} finite verbs flagged is-main-verb: {flagged}")
    return _plan_clause(chunks, sentence, profile).order


def _clause_governors(sentence: AnnotatedSentence) -> dict[str, str | None]:
    tokens = sentence.tokens
    main = sentence.main_clause.clause_id
    gov: dict[str, str | None] = {main: None}
    for c in sentence.clauses:
        if c.clause_id == main:
            continue
        g = main
        for t in sentence.clause_tokens(c.clause_id):
            if t.head is not None and tokens[t.head].clause != c.clause_id:
                g = tokens[t.head].clause
                break
        gov[c.clause_id] = g
    # break governance cycles by re-attaching to the main clause
    for c in sentence.clauses:
        seen = set()
        cur: str | None = c.clause_id
        while cur is not None and cur not in seen:
            seen.add(cur)
            cur = gov[cur]
        if cur is not None:
            gov[cur] = main
    return gov


def order_clauses(sentence: AnnotatedSentence, profile: RuleProfile = DEFAULT_PROFILE) -> list[str]:
    """Order clause ids for emission.

    Explicit ``order_rank`` on every clause wins.  Otherwise each clause is
    emitted after the clauses it governs, so the main clause comes last;
    a quotative clause that follows its (non-main) governor in the source
    stays after it.
    """
    n = len(sentence.tokens)
    start = {c.clause_id: n for c in sentence.clauses}
    for t in sentence.tokens:
        start[t.clause] = min(start[t.clause], t.index)
    src_pos = {c.clause_id: i for i, c in enumerate(sentence.clauses)}

    def src_key(cid: str):
        return (start[cid], src_pos[cid])

    if not profile.enabled("R-clause"):
        return sorted(start, key=src_key)
    if all(c.order_rank is not None for c in sentence.clauses):
        return [c.clause_id for c in sorted(sentence.clauses, key=lambda c: c.order_rank)]

    gov = _clause_governors(sentence)
    kids: dict[str, list[str]] = {}
    for cid, g in gov.items():
        if g is not None:
            kids.setdefault(g, []).append(cid)
    kind = {c.clause_id: c.kind for c in sentence.clauses}
    main = sentence.main_clause.clause_id

    def emit(cid: str) -> list[str]:
        before, after = [], []
        for k in sorted(kids.get(cid, []), key=src_key):
            if kind[k] == "quotative" and cid != main and src_key(k) > src_key(cid):
                after.append(k)
            else:
                before.append(k)
        out: list[str] = []
        for k in before:
            out += emit(k)
        out.append(cid)
        for k in after:
            out += emit(k)
        return out

    return emit(main)


def place_particles(order: Sequence[int], sentence: AnnotatedSentence) -> list[int]:
    """Insert each particle right after its head (after earlier particles of the same head)."""
    tokens = sentence.tokens
    attached: dict[int, list[int]] = {}
    for t in tokens:
        if t.role != "particle":
            continue
        if t.head is None:
            raise AnnotationError(f"particle {t.index} ({t.surface}) has no head")
        attached.setdefault(t.head, []).append(t.index)

    placed = set(order)
    if len(placed) != len(order):
        raise ValueError("order contains duplicate indices")
    out: list[int] = []

    def emit(i: int) -> None:
        out.append(i)
        for p in attached.get(i, ()):
            emit(p)

    for i in order:
        emit(i)
    if len(out) != len(tokens):
        missing = sorted(set(range(len(tokens))) - set(out))
        raise AnnotationError(f"tokens not placed (head missing from order): {missing}")
    return out


@dataclass
class Linearization:
    """Full result of linearizing one sentence."""

    order: list[int]
    clause_order: list[str]
    chunks: dict[str, list[Chunk]]
    unit_rank: dict[int, int] = field(default_factory=dict)
    surfaces: list[str] = field(default_factory=list)

    @property
    def text(self) -> str:
        return " ".join(self.surfaces[i] for i in self.order)


def plan(sentence: AnnotatedSentence, profile: RuleProfile = DEFAULT_PROFILE) -> Linearization:
    validate_sentence(sentence)
    chunks = build_chunks(sentence, profile)
    clause_order = order_clauses(sentence, profile)
    order: list[int] = []
    unit_rank: dict[int, int] = {}
    for cid in clause_order:
        cl = chunks[cid]
        order_clause(cl, sentence, profile)  # checks the clause invariants
        p = _plan_clause(cl, sentence, profile)
        order += p.order
        unit_rank.update(p.unit_rank)
    if profile.enabled("R-particle"):
        order = place_particles(order, sentence)
    return Linearization(order, clause_order, chunks, unit_rank, sentence.surfaces)


def linearize_indices(sentence: AnnotatedSentence, profile: RuleProfile = DEFAULT_PROFILE) -> list[int]:
    return plan(sentence, profile).order


def linearize(sentence: AnnotatedSentence, profile: RuleProfile = DEFAULT_PROFILE) -> str:
    """Canonical prose for an annotated sentence, words joined by single spaces."""
    return plan(sentence, profile).text


def reannotate(sentence: AnnotatedSentence, order: Sequence[int]) -> AnnotatedSentence:
    """Renumber ``sentence`` so its tokens appear in ``order``; heads are remapped."""
    new_index = {old: new for new, old in enumerate(order)}
    tokens = []
    for old in order:
        t = sentence.tokens[old]
        tokens.append(
            type(t)(
                index=new_index[old],
                surface=t.surface,
                role=t.role,
                head=None if t.head is None else new_index[t.head],
                clause=t.clause,
                flags=t.flags,
            )
        )
    return AnnotatedSentence(tuple(tokens), sentence.clauses)
