"""Prompt template assets: one markdown file per template, `{{name}}` slots."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Mapping

from ..errors import MissingSlot, UnknownTemplate

PROMPTS_DIR = Path(__file__).parent / "prompts"

_SLOT_RE = re.compile(r"\{\{([a-z0-9_]+)\}\}")


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    body: str
    required_slots: frozenset[str]

    @classmethod
    def from_body(cls, template_id: str, body: str) -> "PromptTemplate":
        slots = frozenset(_SLOT_RE.findall(body))
        return cls(template_id=template_id, body=body, required_slots=slots)

    def render(self, bindings: Mapping[str, str]) -> str:
        missing = sorted(self.required_slots - set(bindings))
        if missing:
            raise MissingSlot(self.template_id, missing)
        # Substitution via callback keeps backslashes and braces in values literal.
        return _SLOT_RE.sub(lambda m: str(bindings[m.group(1)]), self.body)


def list_templates() -> list[str]:
    return sorted(p.stem for p in PROMPTS_DIR.glob("*.md"))


@lru_cache(maxsize=None)
def load_template(template_id: str) -> PromptTemplate:
    path = PROMPTS_DIR / f"{template_id}.md"
    if not path.is_file():
        raise UnknownTemplate(template_id)
    return PromptTemplate.from_body(template_id, path.read_text(encoding="utf-8"))


def render_prompt(template_id: str, bindings: Mapping[str, str]) -> str:
    return load_template(template_id).render(bindings)
