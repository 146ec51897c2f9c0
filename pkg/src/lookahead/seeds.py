"""Deterministic per-component seed derivation.

All randomness in an experiment flows from one top-level seed.  Components
(bootstrap, sampling, task shuffling, ...) derive their own seed from it plus
a string label path, so one number reproduces a whole run and adding a new
consumer never perturbs existing ones.
"""

from __future__ import annotations

import hashlib

_SEED_BITS = 64


def derive_seed(root_seed: int, *labels: str) -> int:
    """A stable 64-bit seed for the component named by ``labels``.

    The same (root_seed, labels) always maps to the same value, on every
    platform.  Distinct label paths are independent for practical purposes.
    """
    if root_seed < 0:
        raise ValueError("root seed must be non-negative")
    if not labels:
        raise ValueError("at least one label is required")
    payload = repr(root_seed) + "\x1f" + "\x1f".join(labels)
    digest = hashlib.sha256(payload.encode("utf-8")).digest()
    return int.from_bytes(digest[: _SEED_BITS // 8], "big")
