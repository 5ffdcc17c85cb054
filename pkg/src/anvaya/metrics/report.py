"""Per-sentence and corpus evaluation, serialized as MetricReport."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

from ..corpus import AnnotatedSentence
from ..linearizer import RuleProfile
from .bleu import BleuStats, bleu_stats, score_from_stats
from .compliance import DEFAULT_WEIGHTS, ComplianceWeights, compliance_score
from .tau import kendall_tau_result
from .tokenize import tokenization_name, tokenize_iast


@dataclass(frozen=True)
class MetricSettings:
    tokenization: str = "iast-ws+punct"
    smoothing: str = "exp"
    alignment: str = "greedy"
    profile_hash: str | None = None
    tau_aggregation: str = "mean-of-defined-sentence-tau"
    bleu_orders: str = "1-4,effective-order"

    @property
    def detach_punctuation(self) -> bool:
        return self.tokenization == "iast-ws+punct"


@dataclass
class SentenceScores:
    id: str
    bleu: float
    tau: float | None
    unaligned_count: int
    compliance: float | None = None
    per_rule: dict[str, bool] | None = None

    def to_dict(self) -> dict:
        d = {"id": self.id, "bleu": self.bleu, "tau": self.tau, "unaligned_count": self.unaligned_count}
        if self.compliance is not None:
            d["compliance"] = self.compliance
            d["per_rule"] = self.per_rule
        return d


@dataclass
class MetricReport:
    per_sentence: list[SentenceScores]
    corpus_bleu: float
    mean_tau: float | None
    settings: MetricSettings
    mean_compliance: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "corpus_bleu": self.corpus_bleu,
            "mean_tau": self.mean_tau,
            "settings": asdict(self.settings),
            "per_sentence": [s.to_dict() for s in self.per_sentence],
        }
        if self.mean_compliance is not None:
            d["mean_compliance"] = self.mean_compliance
        if self.extra:
            d.update(self.extra)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)


def _score_one(args) -> tuple[SentenceScores, BleuStats]:
    rid, hyp_text, ref_text, settings, gold, weights, profile = args
    hyp = tokenize_iast(hyp_text, settings.detach_punctuation)
    ref = tokenize_iast(ref_text, settings.detach_punctuation)
    stats = bleu_stats(hyp, ref)
    tau = kendall_tau_result(hyp, ref, settings.alignment)
    row = SentenceScores(rid, score_from_stats(stats, settings.smoothing), tau.tau, tau.unaligned_count)
    if gold is not None:
        res = compliance_score(hyp, gold, weights, profile)
        row.compliance = res.score
        row.per_rule = {str(k): v for k, v in res.per_rule.items()}
    return row, stats


def evaluate(
    hyps: Mapping[str, str],
    refs: Mapping[str, str],
    *,
    smoothing: str = "exp",
    detach_punctuation: bool = True,
    alignment: str = "greedy",
    gold: Mapping[str, AnnotatedSentence] | None = None,
    weights: ComplianceWeights = DEFAULT_WEIGHTS,
    profile: RuleProfile | None = None,
    jobs: int = 1,
) -> MetricReport:
    """Score every hypothesis against its reference, in reference order.

    Raises KeyError listing hypothesis ids with no reference.
    """
    missing = [k for k in hyps if k not in refs]
    if missing:
        raise KeyError(f"hypothesis ids missing from reference: {missing}")
    if not hyps:
        raise ValueError("no hypotheses to evaluate")
    settings = MetricSettings(
        tokenization=tokenization_name(detach_punctuation),
        smoothing=smoothing,
        alignment=alignment,
        profile_hash=profile.hash if (profile is not None and gold) else None,
    )
    profile = profile or RuleProfile()
    work = [
        (rid, hyps[rid], refs[rid], settings, (gold or {}).get(rid), weights, profile) for rid in refs if rid in hyps
    ]
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(_score_one, work))
    else:
        results = [_score_one(w) for w in work]

    pooled = BleuStats()
    for _, s in results:
        pooled = pooled + s
    rows = [r for r, _ in results]
    taus = [r.tau for r in rows if r.tau is not None]
    comps = [r.compliance for r in rows if r.compliance is not None]
    return MetricReport(
        per_sentence=rows,
        corpus_bleu=score_from_stats(pooled, smoothing),
        mean_tau=sum(taus) / len(taus) if taus else None,
        settings=settings,
        mean_compliance=sum(comps) / len(comps) if comps else None,
    )


def _fmt(x: float | None, digits: int) -> str:
    return "-" if x is None else f"{x:.{digits}f}"


def format_report(report: MetricReport) -> str:
    """Aligned-column text rendering of a report."""
    has_comp = report.mean_compliance is not None
    header = ["id", "BLEU", "KT", "unaligned"] + (["compliance"] if has_comp else [])
    rows = [
        [s.id, _fmt(s.bleu, 3), _fmt(s.tau, 4), str(s.unaligned_count)]
        + ([_fmt(s.compliance, 1)] if has_comp else [])
        for s in report.per_sentence
    ]
    rows.append(
        ["CORPUS", _fmt(report.corpus_bleu, 3), _fmt(report.mean_tau, 4), ""]
        + ([_fmt(report.mean_compliance, 2)] if has_comp else [])
    )
    return _table(header, rows) + f"\nsettings: {json.dumps(asdict(report.settings))}\n"


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    lines = ["  ".join(str(c).ljust(w) for c, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines)


def format_grid(cells: Mapping[tuple[str, str], MetricReport]) -> str:
    """System x corpus grid with BLEU and KT per corpus column."""
    systems = list(dict.fromkeys(s for s, _ in cells))
    corpora = list(dict.fromkeys(c for _, c in cells))
    header = ["system"]
    for c in corpora:
        header += [f"{c} BLEU", f"{c} KT"]
    rows = []
    for s in systems:
        row = [s]
        for c in corpora:
            rep = cells.get((s, c))
            row += [_fmt(rep.corpus_bleu, 3), _fmt(rep.mean_tau, 4)] if rep else ["-", "-"]
        rows.append(row)
    return _table(header, rows) + "\n"
