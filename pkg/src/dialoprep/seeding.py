"""Deterministic RNG derivation.

Every stochastic operation takes a generator derived from the global seed
plus stable string parts (stage name, dialogue id, ordinal). Derivation goes
through a keyed hash, so per-item generators are independent of scheduling
and identical across platforms and runs. No wall-clock or OS entropy is used
anywhere in the package.
"""

from __future__ import annotations

import hashlib
import random


def derive_seed(*parts: int | str) -> int:
    data = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "big")


def derive_rng(*parts: int | str) -> random.Random:
    return random.Random(derive_seed(*parts))
