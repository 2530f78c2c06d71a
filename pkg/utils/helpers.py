"""
Small helpers shared by services and commands
"""

import hashlib
import json
from typing import Any


def render_float(value: float) -> str:
    """Shortest decimal string that round-trips to the same double"""
    return repr(float(value))


def canonical_json(payload: Any) -> str:
    """Key-sorted, whitespace-free JSON used for hashing"""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def content_hash(payload: Any) -> str:
    """sha256 hex digest of the canonical JSON form of payload"""
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()
