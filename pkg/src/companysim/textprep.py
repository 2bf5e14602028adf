"""Text cleaning, tokenization, truncation and chunking.

Cleaning is bit-exact and documented so fixtures stay portable:
URLs (scheme- or www-prefixed, up to the next whitespace) are replaced by a
space, non-ASCII characters are dropped, the text is lowercased, and
whitespace runs collapse to single spaces with the ends trimmed.

Tokenization is a deterministic word + punctuation splitter, not a subword
vocabulary: its tokens only govern truncation and chunk boundaries. The
``tokens_per_word`` knob on ChunkingConfig rescales budgets to emulate
subword inflation when a downstream provider counts subword tokens.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_WS_RE = re.compile(r"\s+")
_PUNCT = frozenset(string.punctuation)


@dataclass
class TokenSequence:
    """Ordered tokens from one source document."""

    tokens: list[str] = field(default_factory=list)
    source_id: str = ""

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class ChunkingConfig:
    """Chunk window and total context budget, both in tokens."""

    window: int = 512
    context_budget: int = 512
    tokens_per_word: float = 1.0

    def __post_init__(self):
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.context_budget < 1:
            raise ValueError(f"context_budget must be >= 1, got {self.context_budget}")
        if self.tokens_per_word <= 0:
            raise ValueError(f"tokens_per_word must be > 0, got {self.tokens_per_word}")

    def effective_window(self) -> int:
        return max(1, round(self.window / self.tokens_per_word))

    def effective_budget(self) -> int:
        return max(1, round(self.context_budget / self.tokens_per_word))


def clean_text(raw: str) -> str:
    """Strip URLs and non-ASCII characters, lowercase, collapse whitespace.

    Idempotent; never increases byte length.
    """
    text = _URL_RE.sub(" ", raw)
    text = text.encode("ascii", "ignore").decode("ascii")
    text = text.lower()
    return _WS_RE.sub(" ", text).strip()


def tokenize(cleaned: str, source_id: str = "") -> TokenSequence:
    """Split cleaned text on whitespace, peeling leading/trailing punctuation
    into separate tokens. Interior punctuation (hyphens, decimals) stays."""
    tokens: list[str] = []
    for word in cleaned.split():
        lead: list[str] = []
        while word and word[0] in _PUNCT:
            lead.append(word[0])
            word = word[1:]
        trail: list[str] = []
        while word and word[-1] in _PUNCT:
            trail.append(word[-1])
            word = word[:-1]
        tokens.extend(lead)
        if word:
            tokens.append(word)
        tokens.extend(reversed(trail))
    return TokenSequence(tokens, source_id)


def truncate(tokens: TokenSequence, budget: int) -> TokenSequence:
    """Keep the first ``budget`` tokens, order preserved."""
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    return TokenSequence(tokens.tokens[:budget], tokens.source_id)


def chunk(tokens: TokenSequence, window: int) -> list[TokenSequence]:
    """Partition into consecutive chunks of ``window`` tokens; the last chunk
    may be shorter. Empty input yields an empty list."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    return [
        TokenSequence(tokens.tokens[i : i + window], tokens.source_id)
        for i in range(0, len(tokens), window)
    ]


def prepare_chunks(raw: str, config: ChunkingConfig, source_id: str = "") -> list[TokenSequence]:
    """Full preprocessing path: clean, tokenize, truncate to the context
    budget, then split into embedding windows."""
    toks = tokenize(clean_text(raw), source_id)
    toks = truncate(toks, config.effective_budget())
    return chunk(toks, config.effective_window())
