"""Lenient recovery of structured pros/cons output from malformed LLM text.

Recovery runs in three stages: a sketch names the expected fields, regex
fetching locates field content even in informal layouts (bullet lists,
numbered lists, bare ``Pros: ...`` lines), and filling repairs common JSON
damage (single quotes, comma errors, unbalanced brackets) before assembling
the result. Strict parsing is always attempted first; recovery never invents
text that is not present in the (quote-normalized) input.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Optional, Sequence, Union

FieldValue = Union[list[str], str, int]


@dataclass(frozen=True)
class SummarySketch:
    """Expected output shape: named fields holding string lists or scalars."""

    field_names: tuple[str, ...] = ("pros", "cons")
    scalar_fields: tuple[str, ...] = ()

    def __post_init__(self):
        names = [n.strip().lower() for n in self.field_names]
        if not names or any(not n for n in names):
            raise ValueError("sketch field names must be non-empty")
        if len(set(names)) != len(names):
            raise ValueError("sketch field names must be unique")
        object.__setattr__(self, "field_names", tuple(names))
        object.__setattr__(self, "scalar_fields", tuple(s.strip().lower() for s in self.scalar_fields))

    def is_scalar(self, field: str) -> bool:
        return field in self.scalar_fields


DEFAULT_SKETCH = SummarySketch()


@dataclass(frozen=True)
class RecoveredSummary:
    pros: tuple[str, ...]
    cons: tuple[str, ...]
    method: str  # "direct" | "sff"

    @property
    def valid(self) -> bool:
        return bool(self.pros) and bool(self.cons)

    def to_dict(self) -> dict:
        return {
            "pros": list(self.pros),
            "cons": list(self.cons),
            "method": self.method,
            "valid": self.valid,
        }


# --- text normalization and repair ----------------------------------------

_FENCE_RE = re.compile(r"```[a-zA-Z0-9_-]*\n?|```")
_TYPOGRAPHIC = {"‘": "'", "’": "'", "`": "'", "“": '"', "”": '"'}
_SINGLE_QUOTED_RE = re.compile(r"([\[{,:]\s*|^\s*)'([^'\n]*)'(?=\s*[,\]}:])", re.MULTILINE)
_MISSING_COMMA_RE = re.compile(r"(?<=\")(\s+)(?=\")")
_BRACKET_KEY_COMMA_RE = re.compile(r"(?<=[\]}])(\s+)(?=\")")
_DUPLICATE_COMMA_RE = re.compile(r",(\s*,)+")
_TRAILING_COMMA_RE = re.compile(r",\s*([}\]])")


def strip_fences(text: str) -> str:
    return _FENCE_RE.sub("", text).strip()


def normalize_quotes(text: str) -> str:
    """Map typographic quotes to ASCII and single-quoted JSON tokens to double quotes."""
    for fancy, plain in _TYPOGRAPHIC.items():
        text = text.replace(fancy, plain)
    return _SINGLE_QUOTED_RE.sub(lambda m: f'{m.group(1)}"{m.group(2)}"', text)


def repair_commas(text: str) -> str:
    """Insert missing separators, collapse duplicates, drop trailers."""
    text = _MISSING_COMMA_RE.sub(lambda m: f",{m.group(1)}", text)
    text = _BRACKET_KEY_COMMA_RE.sub(lambda m: f",{m.group(1)}", text)
    text = _DUPLICATE_COMMA_RE.sub(",", text)
    text = _TRAILING_COMMA_RE.sub(r"\1", text)
    return text


def balance_brackets(text: str) -> str:
    """Close unclosed braces/brackets and drop stray closers (outside strings).

    Text ending inside an unterminated string is returned untouched: closing
    the string would fabricate an item, and structural fetching already drops
    the truncated fragment.
    """
    out: list[str] = []
    stack: list[str] = []
    in_string = False
    escaped = False
    for ch in text:
        if in_string:
            out.append(ch)
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
            out.append(ch)
        elif ch in "{[":
            stack.append("}" if ch == "{" else "]")
            out.append(ch)
        elif ch in "}]":
            if stack and stack[-1] == ch:
                stack.pop()
                out.append(ch)
            # else: stray closer, dropped
        else:
            out.append(ch)
    if in_string:
        return text
    out.extend(reversed(stack))
    return "".join(out)


def _extract_json_block(text: str) -> Optional[str]:
    """Balanced ``{...}`` block, quote-aware; None when no object is present."""
    start = text.find("{")
    if start == -1:
        return None
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start:i + 1]
    return None


def _clean_item(item: str) -> str:
    item = re.sub(r"\s+", " ", item).strip()
    return item.strip(",;").strip()


def _clean_items(values) -> list[str]:
    items = []
    for value in values:
        text = _clean_item(value if isinstance(value, str) else str(value))
        if text:
            items.append(text)
    return items


# --- strict parsing ---------------------------------------------------------

def parse_fields(raw: str, sketch: SummarySketch = DEFAULT_SKETCH) -> Optional[dict[str, FieldValue]]:
    """Strict parse: well-formed JSON object with exactly the sketch fields.

    Surrounding prose and markdown fences are stripped first. List fields must
    hold lists of strings; scalar fields must hold a string or an integer.
    Returns None on any mismatch.
    """
    block = _extract_json_block(strip_fences(raw))
    if block is None:
        return None
    try:
        data = json.loads(block)
    except json.JSONDecodeError:
        return None
    if not isinstance(data, dict):
        return None
    if set(k.lower() for k in data) != set(sketch.field_names) or len(data) != len(sketch.field_names):
        return None
    result: dict[str, FieldValue] = {}
    for key, value in data.items():
        field = key.lower()
        if sketch.is_scalar(field):
            if isinstance(value, bool) or not isinstance(value, (str, int)):
                return None
            result[field] = value.strip() if isinstance(value, str) else value
        else:
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                return None
            result[field] = _clean_items(value)
    return result


def parse_direct(raw: str, sketch: SummarySketch = DEFAULT_SKETCH) -> Optional[RecoveredSummary]:
    """Strict pros/cons parse; None signals that recovery should run."""
    fields = parse_fields(raw, sketch)
    if fields is None:
        return None
    first, second = sketch.field_names[0], sketch.field_names[1]
    return RecoveredSummary(pros=tuple(fields[first]), cons=tuple(fields[second]), method="direct")


# --- lenient recovery -------------------------------------------------------

_BULLET_RE = re.compile(r"^[ \t]*(?:[-*•]|\d+[.)])\s+(.+?)\s*$", re.MULTILINE)
_QUOTED_RE = re.compile(r'"([^"]*)"')
_INT_RE = re.compile(r"-?\d+")


def _field_anchor_re(field: str) -> re.Pattern:
    return re.compile(rf'["\']?\b{re.escape(field)}\b["\']?\s*:', re.IGNORECASE)


def _fetch_regions(text: str, sketch: SummarySketch) -> Optional[dict[str, str]]:
    """Locate each field's content region between its anchor and the next one."""
    anchors: list[tuple[int, int, str]] = []
    for field in sketch.field_names:
        match = _field_anchor_re(field).search(text)
        if match:
            anchors.append((match.start(), match.end(), field))
    if not anchors:
        return None
    anchors.sort()
    regions: dict[str, str] = {}
    for pos, (start, end, field) in enumerate(anchors):
        stop = anchors[pos + 1][0] if pos + 1 < len(anchors) else len(text)
        regions[field] = text[end:stop]
    return regions


def _fetch_list(region: str) -> list[str]:
    quoted = _QUOTED_RE.findall(region)
    if quoted:
        return _clean_items(quoted)
    bullets = _BULLET_RE.findall(region)
    if bullets:
        return _clean_items(bullets)
    return []


def _fetch_scalar(region: str) -> Optional[Union[str, int]]:
    quoted = _QUOTED_RE.search(region)
    if quoted:
        return _clean_item(quoted.group(1)) or None
    stripped = region.strip().strip("{}[],").strip()
    if not stripped:
        return None
    first_line = stripped.splitlines()[0]
    number = _INT_RE.fullmatch(first_line.strip())
    if number:
        return int(number.group(0))
    return _clean_item(first_line) or None


def recover_fields(raw: str, sketch: SummarySketch = DEFAULT_SKETCH) -> Optional[dict[str, FieldValue]]:
    """Lenient recovery: repair, reparse, then fetch fields structurally.

    Repairs run in a fixed order (quotes, commas, brackets); if the repaired
    text parses as JSON carrying at least one sketch field the values are
    taken from it, otherwise field-anchored fetching handles bullet lists,
    numbered lists, and minimal ``field: ...`` layouts. Returns None only
    when no field anchor is recognizable at all.
    """
    text = balance_brackets(repair_commas(normalize_quotes(strip_fences(raw))))

    block = _extract_json_block(text)
    if block is not None:
        try:
            data = json.loads(block)
        except json.JSONDecodeError:
            data = None
        if isinstance(data, dict):
            by_name = {str(k).lower(): v for k, v in data.items()}
            if any(f in by_name for f in sketch.field_names):
                result: dict[str, FieldValue] = {}
                for field in sketch.field_names:
                    value = by_name.get(field)
                    if sketch.is_scalar(field):
                        if isinstance(value, str):
                            result[field] = _clean_item(value)
                        elif isinstance(value, int) and not isinstance(value, bool):
                            result[field] = value
                        else:
                            result[field] = ""
                    elif isinstance(value, list):
                        result[field] = _clean_items(value)
                    elif isinstance(value, str):
                        result[field] = _clean_items([value])
                    else:
                        result[field] = []
                return result

    regions = _fetch_regions(text, sketch)
    if regions is None:
        return None
    result = {}
    for field in sketch.field_names:
        region = regions.get(field, "")
        if sketch.is_scalar(field):
            value = _fetch_scalar(region)
            result[field] = value if value is not None else ""
        else:
            result[field] = _fetch_list(region)
    return result


def sff_recover(raw: str, sketch: SummarySketch = DEFAULT_SKETCH) -> Optional[RecoveredSummary]:
    """Recover a pros/cons summary from malformed output.

    Returns None when no field anchors are recognizable; a summary with one
    empty section is returned (``valid`` False) rather than failing.
    """
    fields = recover_fields(raw, sketch)
    if fields is None:
        return None
    first, second = sketch.field_names[0], sketch.field_names[1]
    return RecoveredSummary(pros=tuple(fields[first]), cons=tuple(fields[second]), method="sff")
