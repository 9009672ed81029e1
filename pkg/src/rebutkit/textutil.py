"""Text primitives shared across modules: normalization, hooks, numerals, relevance."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

# Words per the usual IR throwaway list; kept small and fixed so relevance
# scores are reproducible across environments.
STOPWORDS = frozenset(
    """a an and are as at be by for from has have in is it its of on or that the
    this to was we were what when which while who why will with our your you
    their they them he she his her not no nor but if then than so such can could
    should would may might must do does did done been being there here how all
    any each more most other some"""
    .split()
)

_HOOK_RE = re.compile(
    r"\b(?:"
    r"sec(?:tion)?\.?\s*\d+(?:\.\d+)*"
    r"|eq(?:uation)?\.?\s*\(?\d+\)?"
    r"|fig(?:ure)?\.?\s*\d+"
    r"|tab(?:le)?\.?\s*\d+"
    r")",
    re.IGNORECASE,
)

_HOOK_PARSERS = (
    (re.compile(r"sec(?:tion)?\.?\s*(\d+(?:\.\d+)*)", re.IGNORECASE), "Sec.{}"),
    (re.compile(r"eq(?:uation)?\.?\s*\(?(\d+)\)?", re.IGNORECASE), "Eq.({})"),
    (re.compile(r"fig(?:ure)?\.?\s*(\d+)", re.IGNORECASE), "Fig.{}"),
    (re.compile(r"tab(?:le)?\.?\s*(\d+)", re.IGNORECASE), "Tab.{}"),
)


def canonical_hook(token: str) -> str | None:
    """Normalize a paper-hook mention to its canonical token, or None."""
    token = token.strip()
    if not token:
        return None
    if token.lower() == "global":
        return "Global"
    for pattern, form in _HOOK_PARSERS:
        m = pattern.fullmatch(token) or pattern.match(token)
        if m:
            return form.format(m.group(1))
    return None


def harvest_hooks(text: str) -> list[str]:
    """All canonical hook tokens mentioned in text, deduplicated in order."""
    seen: list[str] = []
    for m in _HOOK_RE.finditer(text):
        hook = canonical_hook(m.group(0))
        if hook and hook not in seen:
            seen.append(hook)
    return seen


def collapse_spaces(text: str) -> str:
    """Collapse runs of spaces/tabs; used when joining wrapped lines."""
    return re.sub(r"[ \t]+", " ", text).strip()


def normalize_for_match(text: str) -> str:
    """Collapse all whitespace runs to single spaces for verbatim-quote checks."""
    return re.sub(r"\s+", " ", text).strip()


def word_count(text: str) -> int:
    """Whitespace-delimited token count; the one fixed definition of 'word'."""
    return len(text.split())


def estimate_tokens(text: str) -> int:
    """chars/4 heuristic, rounded up."""
    return (len(text) + 3) // 4


# --- numerals ---------------------------------------------------------------

_NUMERAL_RE = re.compile(r"\d+(?:\.\d+)?(?:[eE][+-]?\d+)?%?")

# Multi-word structural prefixes: "Eq. 3", "Table 2", "line 23" are references,
# not asserted quantities.
_STRUCTURAL_PREFIX_RE = re.compile(
    r"(?:eq|equation|sec|section|fig|figure|tab|table|reviewer|line|lines|page|"
    r"para|paragraph|app|appendix|chapter|step|round|tier|item|day)"
    r"\.?\s*\(?\s*$",
    re.IGNORECASE,
)

# Single letters that form identifiers when directly attached: Q1, A2, R3,
# p4, u2, b1, W2, v3.
_ATTACHED_ID_LETTERS = frozenset("qarpubvwQARPUBVW")


@dataclass(frozen=True)
class NumeralMatch:
    raw: str          # as it appears, e.g. "85.4%"
    value: str        # canonical numeric form, e.g. "85.4"
    start: int
    end: int


def canonical_numeral(token: str) -> str:
    token = token.rstrip("%")
    try:
        f = float(token)
    except ValueError:
        return token
    if f == int(f) and "e" not in token.lower():
        return str(int(f))
    return repr(f)


def _is_structural(text: str, start: int, end: int, raw: str) -> bool:
    before = text[max(0, start - 12):start]
    if _STRUCTURAL_PREFIX_RE.search(before):
        return True
    if start >= 1 and text[start - 1] in _ATTACHED_ID_LETTERS:
        if start < 2 or not text[start - 2].isalnum():
            return True
    # Bare list numbering "(3)": small parenthesized integers.
    if (
        raw.isdigit()
        and len(raw) <= 2
        and start >= 1
        and text[start - 1] == "("
        and end < len(text)
        and text[end] == ")"
    ):
        return True
    # Year whitelist.
    if raw.isdigit() and 1900 <= int(raw) <= 2099:
        return True
    return False


def numeral_tokens(text: str, skip_structural: bool = True) -> list[NumeralMatch]:
    """Numeric tokens (decimal/percent/scientific) with character offsets.

    With skip_structural, reference-style numbers (Eq. 3, Table 2, Q1, years,
    list numbering) are excluded; use skip_structural=False when building the
    known-numeral whitelist, where over-inclusion is harmless.
    """
    out: list[NumeralMatch] = []
    for m in _NUMERAL_RE.finditer(text):
        raw = m.group(0)
        if skip_structural and _is_structural(text, m.start(), m.end(), raw):
            continue
        out.append(NumeralMatch(raw=raw, value=canonical_numeral(raw), start=m.start(), end=m.end()))
    return out


def known_numerals(*texts: str) -> set[str]:
    """Canonical numeral values appearing anywhere in the given texts."""
    known: set[str] = set()
    for text in texts:
        for match in numeral_tokens(text, skip_structural=False):
            known.add(match.value)
    return known


# --- lexical relevance ------------------------------------------------------


def content_terms(text: str) -> Counter:
    tokens = re.findall(r"[a-z0-9]+", text.lower())
    return Counter(t for t in tokens if t not in STOPWORDS and len(t) > 1)


def tf_cosine(text_a: str, text_b: str) -> float:
    """Cosine similarity over term-frequency vectors, stop-words removed."""
    a, b = content_terms(text_a), content_terms(text_b)
    if not a or not b:
        return 0.0
    dot = sum(a[t] * b[t] for t in a.keys() & b.keys())
    if dot == 0:
        return 0.0
    norm = math.sqrt(sum(v * v for v in a.values())) * math.sqrt(sum(v * v for v in b.values()))
    return dot / norm
