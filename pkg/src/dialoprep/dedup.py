"""Duplicate removal, evaluation-set leakage removal, and minimum-size filtering.

Similarity is Jaccard over shingle sets built from utterance text only (role
names are randomized later and would only add noise). The reference decision
pass is exact and sequential in input order, first occurrence wins, so results
are order-stable. A banded MinHash prefilter (128 hashes, 32 bands of 4 rows)
can restrict which pairs the exact check visits on large corpora; every
candidate pair is still verified with exact Jaccard, so acceleration can only
miss a pair, never invent one, and at practical thresholds the miss
probability is negligible (~5e-8 per true pair at 0.8).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .metrics import tokenize_for_metrics
from .records import Dialogue

_MINHASH_PERMS = 128
_MINHASH_BANDS = 32  # 32 bands x 4 rows
_MERSENNE_PRIME = (1 << 61) - 1
# Hash parameters are internal constants: the prefilter is an accelerator,
# not a semantic knob, so it must not vary run to run.
_HASH_SEED = 0x5EED_CAFE


@dataclass(frozen=True)
class DedupConfig:
    jaccard_threshold: float = 0.8
    shingle_k: int = 1  # 1 = unigram token sets; k > 1 = k-token shingles
    min_turns: int = 4
    min_tokens: int = 32

    def __post_init__(self):
        if not 0.0 < self.jaccard_threshold <= 1.0:
            raise ValueError("jaccard_threshold must be in (0, 1]")
        if self.shingle_k < 1:
            raise ValueError("shingle_k must be >= 1")
        if self.min_turns < 1 or self.min_tokens < 1:
            raise ValueError("min_turns and min_tokens must be >= 1")

    @classmethod
    def from_file(cls, path: str | Path) -> "DedupConfig":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        return cls(**obj)


@dataclass(frozen=True)
class RemovalRecord:
    removed_id: str
    reason: str
    matched_id: str | None = None
    score: float | None = None

    def to_dict(self) -> dict:
        obj: dict = {"removed_id": self.removed_id, "reason": self.reason}
        if self.matched_id is not None:
            obj["matched_id"] = self.matched_id
        if self.score is not None:
            obj["score"] = self.score
        return obj


def save_removal_report(records: Iterable[RemovalRecord], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), ensure_ascii=False))
            fh.write("\n")
            count += 1
    return count


def _shingles(tokens: Sequence[str], k: int) -> frozenset:
    if k == 1:
        return frozenset(tokens)
    return frozenset(tuple(tokens[i:i + k]) for i in range(len(tokens) - k + 1))


def text_shingles(text: str, shingle_k: int = 1) -> frozenset:
    return _shingles(tokenize_for_metrics(text), shingle_k)


def dialogue_text(d: Dialogue) -> str:
    """Utterance text of a dialogue, roles excluded."""
    return " ".join(t.text for t in d.turns)


def dialogue_shingles(d: Dialogue, shingle_k: int = 1) -> frozenset:
    return text_shingles(dialogue_text(d), shingle_k)


def jaccard_similarity(a: str, b: str, shingle_k: int = 1) -> float:
    """|Sa ∩ Sb| / |Sa ∪ Sb| over shingle sets; 1.0 when both sets are empty."""
    return _jaccard_sets(text_shingles(a, shingle_k), text_shingles(b, shingle_k))


def _jaccard_sets(sa: frozenset, sb: frozenset) -> float:
    if not sa and not sb:
        return 1.0
    union = len(sa | sb)
    if union == 0:
        return 1.0
    return len(sa & sb) / union


def _similar(sa: frozenset, sb: frozenset, threshold: float) -> float | None:
    """Jaccard score if it reaches the threshold, else None. Prunes on set sizes:
    J <= min(|a|,|b|) / max(|a|,|b|)."""
    la, lb = len(sa), len(sb)
    if la == 0 and lb == 0:
        return 1.0
    if la == 0 or lb == 0:
        return None if threshold > 0.0 else 0.0
    if min(la, lb) < threshold * max(la, lb):
        return None
    score = len(sa & sb) / len(sa | sb)
    return score if score >= threshold else None


# ---------------------------------------------------------------------------
# MinHash prefilter
# ---------------------------------------------------------------------------

def _stable_hash64(item) -> int:
    if isinstance(item, tuple):
        data = "\x1f".join(item).encode("utf-8")
    else:
        data = str(item).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "big")


def _hash_params() -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(_HASH_SEED)
    a = rng.integers(1, _MERSENNE_PRIME, size=_MINHASH_PERMS, dtype=np.uint64)
    b = rng.integers(0, _MERSENNE_PRIME, size=_MINHASH_PERMS, dtype=np.uint64)
    return a, b


_HASH_A, _HASH_B = _hash_params()


def _signature(shingle_set: frozenset) -> np.ndarray:
    """128-value MinHash signature; empty sets get a sentinel signature."""
    if not shingle_set:
        return np.full(_MINHASH_PERMS, np.iinfo(np.uint64).max, dtype=np.uint64)
    hashes = np.fromiter((_stable_hash64(s) for s in shingle_set),
                         dtype=np.uint64, count=len(shingle_set))
    # (a * h + b) mod p, vectorized over permutations x shingles.
    products = (np.outer(_HASH_A, hashes) + _HASH_B[:, None]) % _MERSENNE_PRIME
    return products.min(axis=1)


class _BandIndex:
    """LSH buckets over banded signatures; returns candidate row ids for a query."""

    def __init__(self):
        rows = _MINHASH_PERMS // _MINHASH_BANDS
        self._bounds = [(band * rows, (band + 1) * rows) for band in range(_MINHASH_BANDS)]
        self._buckets: list[dict[bytes, list[int]]] = [{} for _ in range(_MINHASH_BANDS)]

    def _keys(self, signature: np.ndarray) -> list[bytes]:
        return [signature[lo:hi].tobytes() for lo, hi in self._bounds]

    def candidates(self, signature: np.ndarray) -> set[int]:
        found: set[int] = set()
        for band, key in enumerate(self._keys(signature)):
            found.update(self._buckets[band].get(key, ()))
        return found

    def add(self, row_id: int, signature: np.ndarray) -> None:
        for band, key in enumerate(self._keys(signature)):
            self._buckets[band].setdefault(key, []).append(row_id)


# ---------------------------------------------------------------------------
# Corpus operations
# ---------------------------------------------------------------------------

def dedup_corpus(dialogues: Sequence[Dialogue], cfg: DedupConfig,
                 use_minhash: bool = False) -> tuple[list[Dialogue], list[RemovalRecord]]:
    """Drop every dialogue similar (>= threshold) to an earlier kept one.

    First occurrence wins; kept order is input order. The report pairs each
    removed dialogue with the kept dialogue it matched.
    """
    shingle_sets = [dialogue_shingles(d, cfg.shingle_k) for d in dialogues]
    index = _BandIndex() if use_minhash else None
    signatures = [_signature(s) for s in shingle_sets] if use_minhash else None

    kept: list[Dialogue] = []
    kept_rows: list[int] = []
    removed: list[RemovalRecord] = []
    for row, d in enumerate(dialogues):
        if index is not None:
            candidate_rows = sorted(index.candidates(signatures[row]))
        else:
            candidate_rows = kept_rows
        match_row = None
        match_score = None
        for kept_row in candidate_rows:
            score = _similar(shingle_sets[row], shingle_sets[kept_row], cfg.jaccard_threshold)
            if score is not None:
                match_row = kept_row
                match_score = score
                break
        if match_row is not None:
            removed.append(RemovalRecord(
                removed_id=d.id, reason="duplicate",
                matched_id=dialogues[match_row].id, score=match_score))
        else:
            kept.append(d)
            kept_rows.append(row)
            if index is not None:
                index.add(row, signatures[row])
    return kept, removed


def remove_eval_overlap(dialogues: Sequence[Dialogue],
                        eval_sets: Sequence[Sequence[Dialogue]],
                        cfg: DedupConfig,
                        use_minhash: bool = False) -> tuple[list[Dialogue], list[RemovalRecord]]:
    """Drop every training dialogue similar to any evaluation dialogue.

    Evaluation sets are never modified; after this pass no kept dialogue is
    within the threshold of any evaluation dialogue.
    """
    eval_dialogues = [d for eval_set in eval_sets for d in eval_set]
    eval_shingles = [dialogue_shingles(d, cfg.shingle_k) for d in eval_dialogues]
    index = None
    if use_minhash:
        index = _BandIndex()
        for row, s in enumerate(eval_shingles):
            index.add(row, _signature(s))

    kept: list[Dialogue] = []
    removed: list[RemovalRecord] = []
    for d in dialogues:
        shingles = dialogue_shingles(d, cfg.shingle_k)
        if index is not None:
            candidate_rows = sorted(index.candidates(_signature(shingles)))
        else:
            candidate_rows = range(len(eval_dialogues))
        match_row = None
        match_score = None
        for row in candidate_rows:
            score = _similar(shingles, eval_shingles[row], cfg.jaccard_threshold)
            if score is not None:
                match_row = row
                match_score = score
                break
        if match_row is not None:
            removed.append(RemovalRecord(
                removed_id=d.id, reason="eval_overlap",
                matched_id=eval_dialogues[match_row].id, score=match_score))
        else:
            kept.append(d)
    return kept, removed


def filter_min_size(dialogues: Sequence[Dialogue],
                    cfg: DedupConfig) -> tuple[list[Dialogue], list[RemovalRecord]]:
    """Keep dialogues with at least ``min_turns`` turns AND ``min_tokens`` utterance
    tokens (metrics tokenizer, roles excluded). Boundaries are inclusive."""
    kept: list[Dialogue] = []
    removed: list[RemovalRecord] = []
    for d in dialogues:
        if len(d.turns) < cfg.min_turns:
            removed.append(RemovalRecord(removed_id=d.id, reason="too_few_turns"))
            continue
        tokens = sum(len(tokenize_for_metrics(t.text)) for t in d.turns)
        if tokens < cfg.min_tokens:
            removed.append(RemovalRecord(removed_id=d.id, reason="too_few_tokens"))
            continue
        kept.append(d)
    return kept, removed
