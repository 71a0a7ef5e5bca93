"""Deterministic JSON encoding and digests shared across modules."""

from __future__ import annotations

import hashlib
import json
from typing import Any


def canonical_json(value: Any) -> str:
    """Compact JSON with no whitespace, used wherever bytes must be stable.

    Key order is preserved as given (callers pass ordered structures), text is
    not ASCII-escaped, so `{"s": "naïve"}` stays readable in prompts.
    """
    return json.dumps(value, separators=(",", ":"), ensure_ascii=False)


def stable_digest(value: Any, length: int = 8) -> str:
    """Hex digest of the canonical encoding, truncated to `length` chars."""
    raw = canonical_json(value).encode("utf-8")
    return hashlib.sha256(raw).hexdigest()[:length]
