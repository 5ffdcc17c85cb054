"""Command-line entry point: linearize, evaluate, prompt, score, stats."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .corpus import AnnotatedSentence, AnnotationError, CorpusError, corpus_stats, load_corpus, make_record, normalize
from .linearizer import DEFAULT_PROFILE, RuleProfile, linearize
from .metrics import (
    ComplianceWeights,
    check_rules,
    evaluate,
    format_grid,
    format_report,
    tokenize_iast,
    weighted_score,
)
from .prompts import (
    ALL_RULES,
    PromptSpec,
    PromptSpecError,
    ablation_family,
    bundled_examples,
    parse_demonstrations,
    render_prompt,
)

log = logging.getLogger("anvaya")

DEFAULTS = {
    "format": "jsonl",
    "jobs": 1,
    "smoothing": "exp",
    "alignment": "greedy",
    "detach_punctuation": True,
    "weights": "1=3,2=2,3=2,4=2,5=1",
    "tags": None,
}
HYP_FIELDS = ("prose_pred", "prediction", "hyp", "prose")


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    inputs: list[dict]
    profile_hash: str | None
    metric_settings: dict | None
    config: dict
    version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


def _file_entry(path: str | Path | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    digest = hashlib.sha256(p.read_bytes()).hexdigest() if p.is_file() else None
    return {"path": str(p), "sha256": digest}


def _manifest_path(output: Path) -> Path:
    if output.is_dir():
        return output / "manifest.json"
    return output.with_name(output.name + ".manifest.json")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _load_profile(path: str | None) -> RuleProfile:
    return RuleProfile.load(path) if path else DEFAULT_PROFILE


def _parse_weights(spec: str) -> ComplianceWeights:
    w = {}
    try:
        for part in spec.split(","):
            k, v = part.split("=")
            w[int(k)] = float(v)
        return ComplianceWeights(w)
    except ValueError as exc:
        raise UsageError(f"bad --weights {spec!r}: {exc}") from exc


def _parse_rules(spec: str) -> frozenset[int]:
    if not spec.strip():
        return frozenset()
    try:
        return frozenset(int(x) for x in spec.split(","))
    except ValueError as exc:
        raise UsageError(f"bad --rules {spec!r}") from exc


def read_hypotheses(path: str | Path, format: str | None = None) -> tuple[dict[str, str], dict[str, dict]]:
    """Read ``{id: hypothesis}`` from jsonl (any of prose_pred/prediction/hyp/prose) or tsv."""
    path = Path(path)
    format = format or ("tsv" if path.suffix == ".tsv" else "jsonl")
    hyps: dict[str, str] = {}
    extra: dict[str, dict] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            if format == "tsv":
                rid, _, text = line.rstrip("\n").partition("\t")
                rec = {"id": rid}
            else:
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"malformed json: {exc.msg}", line=lineno) from exc
                rid = str(rec.get("id", ""))
                text = next((rec[k] for k in HYP_FIELDS if k in rec), None)
                if text is None:
                    raise CorpusError(f"record {rid!r} has none of {HYP_FIELDS}", line=lineno)
            if not rid:
                raise CorpusError("record without id", line=lineno)
            if rid in hyps:
                raise CorpusError(f"duplicate id {rid!r}", line=lineno)
            hyps[rid] = normalize(str(text))
            extra[rid] = rec
    return hyps, extra


# --- subcommands -------------------------------------------------------------


def cmd_linearize(cfg: dict) -> int:
    corpus_path = cfg.get("input")
    if not corpus_path or not cfg.get("output"):
        raise UsageError("linearize needs --input and --output")
    profile = _load_profile(cfg.get("profile"))
    failures: list[tuple[str, str]] = []
    entries = []

    with open(corpus_path, encoding="utf-8") as fh:
        lines = [(n, line) for n, line in enumerate(fh, 1) if line.strip()]

    def work(item):
        lineno, line = item
        try:
            d = json.loads(line)
        except json.JSONDecodeError as exc:
            return str(lineno), None, f"line {lineno}: malformed json: {exc.msg}"
        rid = str(d.get("id", f"line-{lineno}"))
        if d.get("annotation") is None:
            return rid, None, "record has no annotation"
        try:
            rec = make_record({k: v for k, v in d.items() if k != "annotation"}, line=lineno)
            sent = AnnotatedSentence.from_dict(d["annotation"])
            return rec.id, linearize(sent, profile), None
        except (CorpusError, AnnotationError, KeyError, TypeError) as exc:
            return rid, None, str(exc)

    if cfg["jobs"] > 1:
        with ThreadPoolExecutor(cfg["jobs"]) as pool:
            results = list(pool.map(work, lines))
    else:
        results = [work(x) for x in lines]

    seen = set()
    for rid, prose, err in results:
        if err is None and rid in seen:
            err = f"duplicate id {rid!r}"
        seen.add(rid)
        if err is not None:
            failures.append((rid, err))
        else:
            entries.append(json.dumps({"id": rid, "prose_pred": prose}, ensure_ascii=False))

    out = Path(cfg["output"])
    _write_text(out, "".join(e + "\n" for e in entries))
    RunManifest("linearize", [_file_entry(corpus_path), _file_entry(cfg.get("profile"))], profile.hash, None, cfg).write(
        _manifest_path(out)
    )
    print(f"processed {len(results)}, succeeded {len(entries)}, failed {len(failures)}")
    for rid, err in failures:
        print(f"FAILED {rid}: {err}", file=sys.stderr)
    return 1 if failures else 0


def _single_eval(hyp_path, ref_path, cfg: dict):
    hyps, _ = read_hypotheses(hyp_path, cfg.get("hyp_format"))
    if not hyps:
        raise UsageError(f"no hypotheses in {hyp_path}")
    refs_records = load_corpus(ref_path, cfg["format"])
    refs = {r.id: r.prose for r in refs_records if r.prose is not None}
    missing = [k for k in hyps if k not in refs]
    if missing:
        raise UsageError(f"hypothesis ids without reference prose in {ref_path}: {missing}")
    return evaluate(
        hyps,
        refs,
        smoothing=cfg["smoothing"],
        detach_punctuation=cfg["detach_punctuation"],
        alignment=cfg["alignment"],
        jobs=cfg["jobs"],
    )


def cmd_evaluate(cfg: dict) -> int:
    out = Path(cfg["output"]) if cfg.get("output") else None
    cells = cfg.get("cell") or []
    if cells:
        grid = {}
        inputs = []
        for system, corpus, hyp, ref in cells:
            grid[(system, corpus)] = _single_eval(hyp, ref, cfg)
            inputs += [_file_entry(hyp), _file_entry(ref)]
        payload = {
            "cells": [{"system": s, "corpus": c, "report": r.to_dict()} for (s, c), r in grid.items()],
        }
        text = format_grid(grid)
        settings = asdict(next(iter(grid.values())).settings)
    else:
        hyp, ref = cfg.get("hyp") or cfg.get("input"), cfg.get("ref")
        if not hyp or not ref:
            raise UsageError("evaluate needs --hyp and --ref (or --cell ...)")
        report = _single_eval(hyp, ref, cfg)
        payload = report.to_dict()
        text = format_report(report)
        settings = payload["settings"]
        inputs = [_file_entry(hyp), _file_entry(ref)]

    print(text, end="")
    if out is not None:
        _write_text(out, json.dumps(payload, ensure_ascii=False, indent=2) + "\n")
        _write_text(out.with_suffix(".txt"), text)
        RunManifest("evaluate", inputs, None, settings, cfg).write(_manifest_path(out))
    return 0


def _spec_from_cfg(cfg: dict) -> PromptSpec:
    strategy = cfg.get("strategy") or "fs-rules"
    plain = strategy.endswith("-plain")
    rules = _parse_rules(cfg["rules"]) if cfg.get("rules") is not None else (frozenset() if plain else ALL_RULES)
    if cfg.get("examples"):
        examples = tuple(parse_demonstrations(Path(cfg["examples"]).read_text(encoding="utf-8")))
    elif strategy == "zs-plain":
        examples = ()
    else:
        examples = bundled_examples("cot" if strategy == "cot" else "fewshot")
    tags = cfg.get("tags") or ("think-prose" if strategy == "cot" else "prose-only")
    spec = PromptSpec(strategy, rules, examples, tags)
    try:
        spec.validate()
    except PromptSpecError as exc:
        raise UsageError(str(exc)) from exc
    return spec


def cmd_prompt(cfg: dict) -> int:
    if not cfg.get("output"):
        raise UsageError("prompt needs --output")
    out = Path(cfg["output"])
    verse = cfg.get("verse")
    if cfg.get("ablate"):
        base = _spec_from_cfg({**cfg, "strategy": cfg.get("strategy") or "fs-rules"})
        try:
            family = ablation_family(base)
        except PromptSpecError as exc:
            raise UsageError(str(exc)) from exc
        out.mkdir(parents=True, exist_ok=True)
        for name, spec in family.items():
            _write_text(out / f"{name}.txt", render_prompt(spec, verse))
        print(f"wrote {len(family)} prompts to {out}")
    else:
        spec = _spec_from_cfg(cfg)
        _write_text(out, render_prompt(spec, verse))
        print(f"wrote {out}")
    RunManifest("prompt", [_file_entry(cfg.get("examples"))], None, None, cfg).write(_manifest_path(out))
    return 0


def cmd_score(cfg: dict) -> int:
    hyp_path = cfg.get("hyp") or cfg.get("input")
    gold_path = cfg.get("gold")
    if not hyp_path or not gold_path:
        raise UsageError("score needs --hyp and --gold")
    profile = _load_profile(cfg.get("profile"))
    weights = _parse_weights(cfg["weights"])
    hyps, extra = read_hypotheses(hyp_path, cfg.get("hyp_format"))
    gold = {r.id: r for r in load_corpus(gold_path, cfg["format"])}
    missing = [k for k in hyps if k not in gold]
    if missing:
        raise UsageError(f"hypothesis ids missing from gold corpus: {missing}")

    rows, failures = [], []
    for rid in (r for r in gold if r in hyps):
        rec = gold[rid]
        row: dict = {"id": rid}
        tokens = tokenize_iast(hyps[rid], cfg["detach_punctuation"])
        if rec.annotation is not None:
            try:
                mech = check_rules(tokens, rec.annotation, profile)
                row["mechanical"] = {
                    "score": weighted_score([r for r, ok in mech.items() if ok], weights),
                    "per_rule": {str(k): v for k, v in mech.items()},
                }
            except AnnotationError as exc:
                failures.append((rid, str(exc)))
        adjudicated = extra[rid].get("rules_followed")
        if adjudicated is not None:
            passed = {int(r) for r in adjudicated}
            row["mode"] = "adjudicated"
            row["score"] = weighted_score(passed, weights)
            row["per_rule"] = {str(r): r in passed for r in range(1, 6)}
        elif "mechanical" in row:
            row["mode"] = "mechanical"
            row["score"] = row["mechanical"]["score"]
            row["per_rule"] = row["mechanical"]["per_rule"]
        else:
            if not any(f[0] == rid for f in failures):
                failures.append((rid, "gold record has no annotation and no adjudicated rules"))
            continue
        rows.append(row)

    mean = sum(r["score"] for r in rows) / len(rows) if rows else None
    payload = {
        "mean_score": mean,
        "max_score": weights.maximum,
        "weights": weights.to_dict(),
        "profile_hash": profile.hash,
        "per_sentence": rows,
        "failures": [{"id": i, "reason": e} for i, e in failures],
    }
    lines = ["id  mode  score  rules"]
    for r in rows:
        passed = ",".join(k for k, v in r["per_rule"].items() if v) or "-"
        lines.append(f"{r['id']}  {r['mode']}  {r['score']:g}  {passed}")
    lines.append(f"MEAN  {mean:.3f} / {weights.maximum:g}" if mean is not None else "MEAN  -")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    for rid, err in failures:
        print(f"FAILED {rid}: {err}", file=sys.stderr)
    if cfg.get("output"):
        out = Path(cfg["output"])
        _write_text(out, json.dumps(payload, ensure_ascii=False, indent=2) + "\n")
        _write_text(out.with_suffix(".txt"), text)
        RunManifest(
            "score", [_file_entry(hyp_path), _file_entry(gold_path)], profile.hash, {"weights": weights.to_dict()}, cfg
        ).write(_manifest_path(out))
    return 1 if failures else 0


def cmd_stats(cfg: dict) -> int:
    if not cfg.get("input"):
        raise UsageError("stats needs --input")
    stats = corpus_stats(load_corpus(cfg["input"], cfg["format"]))
    text = json.dumps(stats.to_dict(), ensure_ascii=False, indent=2) + "\n"
    print(text, end="")
    if cfg.get("output"):
        _write_text(Path(cfg["output"]), text)
    return 0


COMMANDS: dict[str, Callable[[dict], int]] = {
    "linearize": cmd_linearize,
    "evaluate": cmd_evaluate,
    "prompt": cmd_prompt,
    "score": cmd_score,
    "stats": cmd_stats,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anvaya", description="Canonical prose ordering and evaluation for IAST verse.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", "-i")
    common.add_argument("--output", "-o")
    common.add_argument("--profile", help="rule profile json")
    common.add_argument("--format", choices=["jsonl", "tsv"], help="corpus format (default jsonl)")
    common.add_argument("--jobs", "-j", type=int)
    common.add_argument("--config", help="json config file; flags override it")

    sub.add_parser("linearize", parents=[common], help="reorder annotated verses into prose")

    ev = sub.add_parser("evaluate", parents=[common], help="BLEU and Kendall's tau against reference prose")
    ev.add_argument("--hyp")
    ev.add_argument("--ref")
    ev.add_argument("--hyp-format", choices=["jsonl", "tsv"])
    ev.add_argument("--smoothing", choices=["exp", "floor", "none"])
    ev.add_argument("--alignment", choices=["greedy", "exhaustive"])
    ev.add_argument("--no-detach-punctuation", dest="detach_punctuation", action="store_false", default=None)
    ev.add_argument(
        "--cell",
        nargs=4,
        action="append",
        metavar=("SYSTEM", "CORPUS", "HYP", "REF"),
        help="one cell of a cross-domain grid; repeatable",
    )

    pr = sub.add_parser("prompt", parents=[common], help="render prompt variants")
    pr.add_argument("--strategy", choices=["zs-plain", "fs-plain", "fs-rules", "cot"])
    pr.add_argument("--rules", help="comma-separated rule ids, e.g. 1,3,4")
    pr.add_argument("--examples", help="demonstration file (### example-N blocks)")
    pr.add_argument("--tags", choices=["prose-only", "think-prose", "reasoning-answer"])
    pr.add_argument("--verse", help="verse to append as the final INPUT")
    pr.add_argument("--ablate", action="store_true", default=None, help="write the 8-variant ablation family to --output dir")

    sc = sub.add_parser("score", parents=[common], help="weighted rule-compliance scores")
    sc.add_argument("--hyp")
    sc.add_argument("--gold")
    sc.add_argument("--hyp-format", choices=["jsonl", "tsv"])
    sc.add_argument("--weights", help="e.g. 1=3,2=2,3=2,4=2,5=1")
    sc.add_argument("--no-detach-punctuation", dest="detach_punctuation", action="store_false", default=None)

    sub.add_parser("stats", parents=[common], help="corpus statistics")
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Flags > config file (top level, then per-command section) > defaults."""
    cfg = dict(DEFAULTS)
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        section = file_cfg.pop(args.command, {}) if isinstance(file_cfg.get(args.command), dict) else {}
        for src in (file_cfg, section):
            cfg.update({k.replace("-", "_"): v for k, v in src.items() if k not in COMMANDS})
    for k, v in vars(args).items():
        if v is not None and k not in ("verbose",):
            cfg[k] = v
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"anvaya {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (CorpusError, ValueError, OSError) as exc:
        print(f"anvaya {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
