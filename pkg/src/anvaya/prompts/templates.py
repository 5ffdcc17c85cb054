"""Prompt assembly from the bundled text blocks, and the ablation family."""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources

STRATEGIES = ("zs-plain", "fs-plain", "fs-rules", "cot")
TAG_CONVENTIONS = ("prose-only", "think-prose", "reasoning-answer")
ALL_RULES = frozenset({1, 2, 3, 4, 5})
RULE_HEADINGS = {
    1: "Sandhi Analysis",
    2: "Clause Structuring",
    3: "Modifier Chunking",
    4: "Intra-Clause Word Order",
    5: "Particle Placement",
}
ABLATION_NAMES = {1: "P_NoSandhi", 2: "P_NoClause", 3: "P_NoChunking", 4: "P_NoOrder", 5: "P_NoParticles"}
FORMAT_BLOCK = {"prose-only": "format-prose", "think-prose": "format-cot", "reasoning-answer": "format-reasoning"}
TAGS = {"prose-only": (None, "prose"), "think-prose": ("think", "prose"), "reasoning-answer": ("reasoning", "answer")}

_HEADER = re.compile(r"^### (\S+)\s*$")


class PromptSpecError(ValueError):
    pass


def parse_blocks(text: str) -> dict[str, str]:
    """Split a data file into ``{name: body}`` on ``### name`` header lines."""
    blocks: dict[str, list[str]] = {}
    current = None
    for line in text.splitlines():
        m = _HEADER.match(line)
        if m:
            current = m.group(1)
            if current in blocks:
                raise ValueError(f"duplicate block {current!r}")
            blocks[current] = []
        elif current is not None:
            blocks[current].append(line)
    return {k: "\n".join(v).strip("\n") for k, v in blocks.items()}


@lru_cache(maxsize=None)
def load_data(name: str) -> dict[str, str]:
    return parse_blocks(resources.files(__package__).joinpath("data", name).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class Demonstration:
    verse: str
    prose: str
    reasoning: str | None = None


def parse_demonstrations(text: str) -> list[Demonstration]:
    demos = []
    for name, body in parse_blocks(text).items():
        fields: dict[str, str] = {}
        lines = body.splitlines()
        for k, line in enumerate(lines):
            if line.startswith("reasoning:"):
                fields["reasoning"] = "\n".join([line[len("reasoning:") :].strip(), *lines[k + 1 :]]).strip()
                break
            key, sep, value = line.partition(":")
            if sep and key in ("sloka", "prose"):
                fields[key] = value.strip()
        if "sloka" not in fields or "prose" not in fields:
            raise ValueError(f"demonstration {name!r} needs 'sloka:' and 'prose:' lines")
        demos.append(Demonstration(fields["sloka"], fields["prose"], fields.get("reasoning")))
    return demos


def bundled_examples(kind: str = "fewshot") -> tuple[Demonstration, ...]:
    """The three few-shot pairs (``fewshot``) or the two worked CoT examples (``cot``)."""
    fname = {"fewshot": "fewshot_examples.txt", "cot": "cot_examples.txt"}[kind]
    text = resources.files(__package__).joinpath("data", fname).read_text(encoding="utf-8")
    return tuple(parse_demonstrations(text))


@dataclass(frozen=True)
class PromptSpec:
    strategy: str
    rule_mask: frozenset[int] = frozenset()
    examples: tuple[Demonstration, ...] = ()
    tag_convention: str = "prose-only"

    def __post_init__(self):
        object.__setattr__(self, "rule_mask", frozenset(self.rule_mask))
        object.__setattr__(self, "examples", tuple(self.examples))

    def validate(self) -> None:
        if self.strategy not in STRATEGIES:
            raise PromptSpecError(f"unknown strategy {self.strategy!r}")
        if self.tag_convention not in TAG_CONVENTIONS:
            raise PromptSpecError(f"unknown tag convention {self.tag_convention!r}")
        if not self.rule_mask <= ALL_RULES:
            raise PromptSpecError(f"rule mask {sorted(self.rule_mask)} outside 1..5")
        if self.strategy.endswith("-plain") and self.rule_mask:
            raise PromptSpecError(f"{self.strategy} takes no rules")
        if self.strategy == "zs-plain" and self.examples:
            raise PromptSpecError("zs-plain takes no examples")
        if self.strategy in ("fs-plain", "fs-rules", "cot") and not self.examples:
            raise PromptSpecError(f"{self.strategy} needs at least one example")
        if self.strategy == "cot":
            if self.tag_convention == "prose-only":
                raise PromptSpecError("cot needs a convention with a reasoning tag")
            missing = [k for k, ex in enumerate(self.examples, 1) if not ex.reasoning]
            if missing:
                raise PromptSpecError(f"cot example(s) {missing} lack reasoning")


def _demo_block(k: int, ex: Demonstration, convention: str) -> str:
    reason_tag, answer_tag = TAGS[convention]
    lines = [f"Example {k}:", "", "INPUT:", f"sloka: {ex.verse}", "", "RESPONSE:"]
    if reason_tag and ex.reasoning:
        lines += [f"<{reason_tag}>", ex.reasoning, f"</{reason_tag}>"]
    lines.append(f"<{answer_tag}>{ex.prose}</{answer_tag}>")
    return "\n".join(lines)


def render_blocks(spec: PromptSpec, verse: str | None = None) -> list[tuple[str, str]]:
    """Named blocks of the prompt, in emission order."""
    spec.validate()
    data = load_data("blocks.txt")
    out = [("task", data["task" if spec.rule_mask else "task-plain"])]
    if spec.rule_mask:
        out.append(("rules-heading", data["rules-heading"]))
        out += [(f"rule-{r}", data[f"rule-{r}"]) for r in sorted(spec.rule_mask)]
    out.append((FORMAT_BLOCK[spec.tag_convention], data[FORMAT_BLOCK[spec.tag_convention]]))
    if spec.examples:
        heading = "examples-heading-cot" if spec.strategy == "cot" else "examples-heading"
        out.append((heading, data[heading]))
        out += [(f"example-{k}", _demo_block(k, ex, spec.tag_convention)) for k, ex in enumerate(spec.examples, 1)]
    if verse is not None:
        out.append(("input", f"INPUT:\nsloka: {verse}\n\nRESPONSE:"))
    return out


def render_prompt(spec: PromptSpec, verse: str | None = None) -> str:
    """Render ``spec`` to prompt text; appends an INPUT section when ``verse`` is given."""
    return "\n\n".join(body for _, body in render_blocks(spec, verse)) + "\n"


def ablation_family(base: PromptSpec | None = None) -> dict[str, PromptSpec]:
    """The eight prompt variants of the rule-ablation study.

    ``base`` must carry all five rules; it becomes P_full and each P_NoK
    drops rule K from it.
    """
    if base is None:
        base = PromptSpec("fs-rules", ALL_RULES, bundled_examples("fewshot"))
    if base.rule_mask != ALL_RULES:
        raise PromptSpecError("ablation base must include all five rules")
    base.validate()
    family = {"P_base": PromptSpec("zs-plain"), "P_full": base}
    for k, name in ABLATION_NAMES.items():
        family[name] = replace(base, rule_mask=ALL_RULES - {k})
    family["CoT"] = PromptSpec("cot", ALL_RULES, bundled_examples("cot"), "think-prose")
    return family
