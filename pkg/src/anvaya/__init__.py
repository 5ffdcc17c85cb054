"""Verse-to-prose (anvaya) toolkit for IAST Sanskrit: corpus handling, a
rule-based linearizer, evaluation metrics and prompt construction."""

__version__ = "0.1.0"

from .corpus import AnnotatedSentence, AnnotatedToken, ClauseInfo, VerseRecord, load_corpus  # noqa: E402
from .linearizer import DEFAULT_PROFILE, RuleProfile, linearize  # noqa: E402

__all__ = [
    "AnnotatedSentence",
    "AnnotatedToken",
    "ClauseInfo",
    "VerseRecord",
    "load_corpus",
    "DEFAULT_PROFILE",
    "RuleProfile",
    "linearize",
    "__version__",
]
