"""Metric-side tokenization of IAST text."""

from __future__ import annotations

import re

from ..corpus import normalize

PUNCTUATION = ",.?!"
_PUNCT_RE = re.compile(f"([{re.escape(PUNCTUATION)}])")


def tokenize_iast(text: str, detach_punctuation: bool = True) -> list[str]:
    """Split normalized IAST text on whitespace, optionally detaching , . ? !"""
    text = normalize(text)
    if detach_punctuation:
        text = _PUNCT_RE.sub(r" \1 ", text)
    return text.split()


def tokenization_name(detach_punctuation: bool = True) -> str:
    return "iast-ws+punct" if detach_punctuation else "iast-ws"
