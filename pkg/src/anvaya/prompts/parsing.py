"""Extraction of the final prose from tagged model responses."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .templates import TAG_CONVENTIONS, TAGS

# alternates tried after the convention's own vocabulary
_FALLBACK = {
    "prose-only": [("reasoning", "answer"), ("think", "prose")],
    "think-prose": [("reasoning", "answer")],
    "reasoning-answer": [("think", "prose")],
}


@dataclass
class ParsedResponse:
    prose: str | None
    reasoning: str | None
    raw: str
    diagnostics: list[str] = field(default_factory=list)


def _collapse(text: str) -> str:
    return " ".join(text.split())


def _extract(raw: str, tag: str, notes: list[str]) -> str | None:
    opens = [m.end() for m in re.finditer(rf"<{tag}\s*>", raw, re.IGNORECASE)]
    closes = [m.start() for m in re.finditer(rf"</{tag}\s*>", raw, re.IGNORECASE)]
    if not opens:
        return None
    if closes:
        close = closes[-1]
        before = [o for o in opens if o <= close]
        if before:
            return raw[before[-1] : close]
    start = opens[-1]
    notes.append(f"missing </{tag}>: took text to end")
    return raw[start:]


def parse_response(raw: str, convention: str = "prose-only") -> ParsedResponse:
    """Pull the final answer (and reasoning, if tagged) out of ``raw``.

    The innermost span of the last answer tag pair wins.  A missing closing
    tag takes the rest of the text.  Whitespace inside the answer is
    collapsed to single spaces.
    """
    if convention not in TAG_CONVENTIONS:
        raise ValueError(f"unknown tag convention {convention!r}")
    notes: list[str] = []
    prose = reasoning = None
    for reason_tag, answer_tag in [TAGS[convention], *_FALLBACK[convention]]:
        found = _extract(raw, answer_tag, notes)
        if found is None:
            continue
        if (reason_tag, answer_tag) != TAGS[convention]:
            notes.append(f"used <{answer_tag}> vocabulary instead of <{TAGS[convention][1]}>")
        prose = _collapse(found)
        if not prose:
            notes.append(f"empty <{answer_tag}>")
            prose = None
            continue
        if reason_tag:
            r = _extract(raw, reason_tag, notes)
            if r is not None:
                # an unclosed reasoning span must not swallow the answer
                r = re.split(rf"<{answer_tag}\s*>", r, flags=re.IGNORECASE)[0]
                reasoning = r.strip()
        break
    if prose is None and not any(n.startswith("empty") for n in notes):
        notes.append("no answer tag")
    return ParsedResponse(prose, reasoning, raw, notes)
