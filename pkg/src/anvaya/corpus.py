"""IAST verse/prose corpora: data types, validation, loading and summary stats."""

from __future__ import annotations

import csv
import json
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

ROLES = (
    "sambodhya",
    "kartr",
    "karman",
    "karana",
    "sampradana",
    "apadana",
    "adhikarana",
    "genitive-modifier",
    "adjective",
    "adverb",
    "negation",
    "appositive-of-kartr",
    "appositive-of-karman",
    "particle",
    "nonfinite-verb",
    "finite-verb",
    "quotative-marker",
    "other",
)
KARAKA_ROLES = ("adhikarana", "apadana", "sampradana", "karana", "karman")
MODIFIER_ROLES = frozenset(
    {"adjective", "genitive-modifier", "adverb", "negation", "appositive-of-kartr", "appositive-of-karman"}
)
APPOSITIVE_ROLES = frozenset({"appositive-of-kartr", "appositive-of-karman"})
# roles that cannot stand at the root of a head tree
DEPENDENT_ROLES = MODIFIER_ROLES | {"particle"}

FLAGS = frozenset({"is-relative-pronoun", "is-main-verb"})
# "coordinate" is not among the classical clause types; it covers independent
# clauses chained inside one verse (see the A2 fixture).
CLAUSE_KINDS = ("main", "relative", "quotative", "absolutive", "coordinate")

_IAST_SPECIAL = "āīūṛṝḷḹṅñṭḍṇśṣḥṃēō"
IAST_CHARS = frozenset(
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    "0123456789"
    ",.?!"
    " "
    "ʼ'"  # avagraha: modifier apostrophe and the ASCII stand-in
    + _IAST_SPECIAL
    + _IAST_SPECIAL.upper()
)


class CorpusError(ValueError):
    """Raised when a corpus file cannot be ingested."""

    def __init__(self, message: str, line: int | None = None, record_id: str | None = None):
        self.line = line
        self.record_id = record_id
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class AnnotationError(ValueError):
    """Raised when an annotated sentence violates a structural invariant."""


def normalize(text: str) -> str:
    """NFC-compose and collapse runs of whitespace to single spaces."""
    return " ".join(unicodedata.normalize("NFC", text).split())


@dataclass(frozen=True)
class IastCheck:
    offending: tuple[tuple[int, str], ...] = ()

    @property
    def ok(self) -> bool:
        return not self.offending

    def __bool__(self) -> bool:
        return self.ok


def validate_iast(text: str) -> IastCheck:
    """Check ``text`` against the accepted IAST repertoire.

    Positions refer to the NFC-composed form of ``text``. Whitespace of any
    kind is accepted.
    """
    text = unicodedata.normalize("NFC", text)
    bad = tuple((i, ch) for i, ch in enumerate(text) if not ch.isspace() and ch not in IAST_CHARS)
    return IastCheck(bad)


@dataclass(frozen=True)
class AnnotatedToken:
    index: int
    surface: str
    role: str
    head: int | None  # None is the root
    clause: str
    flags: frozenset[str] = frozenset()

    @property
    def is_main_verb(self) -> bool:
        return "is-main-verb" in self.flags

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "surface": self.surface,
            "role": self.role,
            "head": "root" if self.head is None else self.head,
            "clause": self.clause,
            "flags": sorted(self.flags),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnnotatedToken":
        head = d.get("head", "root")
        if head == "root" or head is None:
            head = None
        elif isinstance(head, bool) or not isinstance(head, int):
            raise AnnotationError(f"token {d.get('index')}: head must be an int or 'root', got {head!r}")
        return cls(
            index=int(d["index"]),
            surface=normalize(str(d["surface"])),
            role=str(d["role"]),
            head=head,
            clause=str(d["clause"]),
            flags=frozenset(d.get("flags", ())),
        )


@dataclass(frozen=True)
class ClauseInfo:
    clause_id: str
    kind: str
    order_rank: int | None = None

    def to_dict(self) -> dict:
        d = {"clause_id": self.clause_id, "kind": self.kind}
        if self.order_rank is not None:
            d["order_rank"] = self.order_rank
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ClauseInfo":
        rank = d.get("order_rank")
        return cls(str(d["clause_id"]), str(d["kind"]), None if rank is None else int(rank))


@dataclass(frozen=True)
class AnnotatedSentence:
    tokens: tuple[AnnotatedToken, ...]
    clauses: tuple[ClauseInfo, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "clauses", tuple(self.clauses))

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def clause(self, clause_id: str) -> ClauseInfo:
        for c in self.clauses:
            if c.clause_id == clause_id:
                return c
        raise KeyError(clause_id)

    @property
    def main_clause(self) -> ClauseInfo:
        return next(c for c in self.clauses if c.kind == "main")

    def clause_tokens(self, clause_id: str) -> list[AnnotatedToken]:
        return [t for t in self.tokens if t.clause == clause_id]

    def main_verb(self) -> AnnotatedToken | None:
        """The flagged finite verb of the main clause, if any."""
        main = self.main_clause.clause_id
        for t in self.tokens:
            if t.clause == main and t.role == "finite-verb" and t.is_main_verb:
                return t
        return None

    def to_dict(self) -> dict:
        return {"tokens": [t.to_dict() for t in self.tokens], "clauses": [c.to_dict() for c in self.clauses]}

    @classmethod
    def from_dict(cls, d: dict) -> "AnnotatedSentence":
        return cls(
            tuple(AnnotatedToken.from_dict(t) for t in d["tokens"]),
            tuple(ClauseInfo.from_dict(c) for c in d["clauses"]),
        )

    def validate(self) -> None:
        validate_sentence(self)


def validate_sentence(sentence: AnnotatedSentence) -> None:
    """Raise AnnotationError unless every annotation invariant holds."""
    tokens = sentence.tokens
    n = len(tokens)
    if [t.index for t in tokens] != list(range(n)):
        raise AnnotationError("token indices must be exactly 0..n-1 in order")

    ids = [c.clause_id for c in sentence.clauses]
    if len(set(ids)) != len(ids):
        raise AnnotationError("duplicate clause_id")
    for c in sentence.clauses:
        if c.kind not in CLAUSE_KINDS:
            raise AnnotationError(f"clause {c.clause_id}: unknown kind {c.kind!r}")
    mains = [c for c in sentence.clauses if c.kind == "main"]
    if len(mains) != 1:
        raise AnnotationError(f"expected exactly one main clause, found {len(mains)}")
    ranks = [c.order_rank for c in sentence.clauses if c.order_rank is not None]
    if len(set(ranks)) != len(ranks):
        raise AnnotationError("order_rank values must be pairwise distinct")

    known = set(ids)
    main_verbs: Counter[str] = Counter()
    for t in tokens:
        if not t.surface:
            raise AnnotationError(f"token {t.index}: empty surface")
        if t.role not in ROLES:
            raise AnnotationError(f"token {t.index}: unknown role {t.role!r}")
        if t.clause not in known:
            raise AnnotationError(f"token {t.index}: clause {t.clause!r} not declared")
        if not t.flags <= FLAGS:
            raise AnnotationError(f"token {t.index}: unknown flags {sorted(t.flags - FLAGS)}")
        if t.head is not None:
            if t.head == t.index:
                raise AnnotationError(f"token {t.index}: head points to itself")
            if not 0 <= t.head < n:
                raise AnnotationError(f"token {t.index}: head {t.head} out of range")
        elif t.role in DEPENDENT_ROLES:
            raise AnnotationError(f"token {t.index} ({t.surface}): role {t.role} requires a head")
        if t.is_main_verb:
            if t.role != "finite-verb":
                raise AnnotationError(f"token {t.index}: is-main-verb on a {t.role}")
            main_verbs[t.clause] += 1
    for clause_id, count in main_verbs.items():
        if count > 1:
            raise AnnotationError(f"clause {clause_id}: {count} finite verbs flagged is-main-verb")

    # head links must form a forest
    state = [0] * n  # 0 unseen, 1 on stack, 2 done
    for start in range(n):
        path = []
        i: int | None = start
        while i is not None and state[i] == 0:
            state[i] = 1
            path.append(i)
            i = tokens[i].head
        if i is not None and state[i] == 1:
            raise AnnotationError(f"head cycle through token {i}")
        for j in path:
            state[j] = 2


@dataclass(frozen=True)
class VerseRecord:
    id: str
    verse: str
    prose: str | None = None
    source: str = ""
    annotation: AnnotatedSentence | None = None

    def to_dict(self) -> dict:
        d: dict = {"id": self.id, "verse": self.verse}
        if self.prose is not None:
            d["prose"] = self.prose
        d["source"] = self.source
        if self.annotation is not None:
            d["annotation"] = self.annotation.to_dict()
        return d


def _check_text(field_name: str, text: str, record_id: str, line: int | None) -> None:
    check = validate_iast(text)
    if not check.ok:
        pos, ch = check.offending[0]
        raise CorpusError(
            f"record {record_id!r}: invalid IAST character {ch!r} (U+{ord(ch):04X}) in {field_name} at position {pos}",
            line=line,
            record_id=record_id,
        )


def make_record(d: dict, line: int | None = None) -> VerseRecord:
    """Build and validate a VerseRecord from a decoded jsonl object."""
    if not isinstance(d, dict):
        raise CorpusError("expected a json object", line=line)
    for key in ("id", "verse"):
        if key not in d:
            raise CorpusError(f"missing required field {key!r}", line=line)
    rid = str(d["id"])
    verse = normalize(str(d["verse"]))
    if not verse:
        raise CorpusError(f"record {rid!r}: empty verse", line=line, record_id=rid)
    _check_text("verse", verse, rid, line)
    prose = d.get("prose")
    if prose is not None:
        prose = normalize(str(prose))
        _check_text("prose", prose, rid, line)
    annotation = None
    if d.get("annotation") is not None:
        try:
            annotation = AnnotatedSentence.from_dict(d["annotation"])
            validate_sentence(annotation)
        except (KeyError, TypeError, AnnotationError) as exc:
            raise CorpusError(f"record {rid!r}: bad annotation: {exc}", line=line, record_id=rid) from exc
        for t in annotation.tokens:
            _check_text(f"token {t.index}", t.surface, rid, line)
    return VerseRecord(rid, verse, prose, str(d.get("source", "")), annotation)


def _read_jsonl(path: Path) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"malformed json: {exc.msg}", line=lineno) from exc


def _read_tsv(path: Path) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE), 1):
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) not in (2, 3):
                raise CorpusError(f"expected 2 or 3 tab-separated columns, got {len(row)}", line=lineno)
            d = {"id": row[0], "verse": row[1]}
            if len(row) == 3 and row[2].strip():
                d["prose"] = row[2]
            yield lineno, d


def load_corpus(path: str | Path, format: str = "jsonl") -> list[VerseRecord]:
    """Load all records of a corpus file, in file order.

    Raises CorpusError on malformed lines, duplicate ids and characters
    outside the IAST repertoire.
    """
    path = Path(path)
    if format == "jsonl":
        rows = _read_jsonl(path)
    elif format == "tsv":
        rows = _read_tsv(path)
    else:
        raise ValueError(f"unknown corpus format {format!r}")

    records: list[VerseRecord] = []
    seen: dict[str, int] = {}
    for lineno, d in rows:
        rec = make_record(d, line=lineno)
        if rec.id in seen:
            raise CorpusError(
                f"duplicate id {rec.id!r} (first seen on line {seen[rec.id]})", line=lineno, record_id=rec.id
            )
        seen[rec.id] = lineno
        records.append(rec)
    return records


def dump_corpus(records: Iterable[VerseRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False) + "\n")


@dataclass
class CorpusStats:
    total: int = 0
    per_source: dict[str, int] = field(default_factory=dict)
    annotated: int = 0
    with_prose: int = 0
    mean_verse_tokens: float = 0.0
    mean_prose_tokens: float = 0.0

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "per_source": dict(self.per_source),
            "annotated": self.annotated,
            "with_prose": self.with_prose,
            "mean_verse_tokens": self.mean_verse_tokens,
            "mean_prose_tokens": self.mean_prose_tokens,
        }


def corpus_stats(records: Sequence[VerseRecord]) -> CorpusStats:
    if not records:
        return CorpusStats()
    per_source = Counter(r.source for r in records)
    verse_lens = [len(r.verse.split()) for r in records]
    prose_lens = [len(r.prose.split()) for r in records if r.prose is not None]
    return CorpusStats(
        total=len(records),
        per_source=dict(sorted(per_source.items())),
        annotated=sum(r.annotation is not None for r in records),
        with_prose=len(prose_lens),
        mean_verse_tokens=sum(verse_lens) / len(verse_lens),
        mean_prose_tokens=sum(prose_lens) / len(prose_lens) if prose_lens else 0.0,
    )
