"""Item 1 (business description) extraction from plain-text 10-K filings.

The heading heuristic: a case-insensitive "item 1" followed by an optional
separator and the word "business" opens the section; the next "item 1a",
"item 1b" or "item 2" heading closes it. Because tables of contents repeat
headings, the LAST occurrence of the opening pattern is used. HTML must
already be stripped; this module never fetches or parses EDGAR documents.
"""

from __future__ import annotations

import re

from .errors import SectionNotFoundError, SectionTooShortError

ITEM1_HEADING = re.compile(r"item\s*1\s*[.:\-–—]?\s*business", re.IGNORECASE)
NEXT_HEADING = re.compile(r"item\s*1\s*a\b|item\s*1\s*b\b|item\s*2\b", re.IGNORECASE)

DEFAULT_MIN_CHARS = 200


def extract_item1(raw_filing_text: str, min_chars: int = DEFAULT_MIN_CHARS) -> str:
    """Return the text strictly between the Item 1 heading and the next item
    heading (or end of document), stripped of surrounding whitespace.

    Raises SectionNotFoundError when no Item 1 heading matches, and
    SectionTooShortError when the extracted span is empty or shorter than
    ``min_chars`` characters.
    """
    matches = list(ITEM1_HEADING.finditer(raw_filing_text))
    if not matches:
        raise SectionNotFoundError("Item 1 not found")
    start = matches[-1].end()
    terminator = NEXT_HEADING.search(raw_filing_text, start)
    end = terminator.start() if terminator else len(raw_filing_text)
    span = raw_filing_text[start:end].strip()
    if len(span) < max(1, min_chars):
        raise SectionTooShortError(
            f"Item 1 span has {len(span)} characters, below the minimum of {max(1, min_chars)}"
        )
    return span
