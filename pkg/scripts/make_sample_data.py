#!/usr/bin/env python3
"""Regenerate the bundled demo corpus under data/sample/.

Emits a raw source file in the generic one-utterance-per-line format plus its
ingest spec. The raw file holds 50 base dialogues that survive cleaning with
default settings, plus five planted rejects: two exact duplicates, one near
duplicate above the 0.8 Jaccard threshold, one dialogue with only 3 turns,
and one with fewer than 32 tokens. Some dialogues carry consecutive
same-speaker rows (merged at ingest) and curly punctuation (normalized at
ingest). Fully deterministic; run from the repository root:

    python scripts/make_sample_data.py
"""

from __future__ import annotations

import json
import random
from pathlib import Path

VOCAB = """
morning afternoon evening coffee lunch dinner meeting schedule project deadline
report email ticket order refund parcel delivery tracking account password
update laptop phone screen battery charger flight hotel booking train station
weather rain sunny weekend holiday movie concert tickets garden kitchen recipe
doctor appointment dentist gym practice lesson homework exam library book
novel author music playlist guitar piano birthday present wedding party
neighbor street market groceries bakery cheese tomatoes apples budget invoice
payment contract client presentation slides feedback review launch release
server database backup error crash restart upgrade install printer paper
season football tennis match score team coach stadium river mountain trail
camping tent picnic museum gallery painting photo camera video channel
podcast episode article newspaper coupon discount sale warranty receipt
manager colleague office desk chair window door keys wallet umbrella jacket
suitcase passport visa currency airport taxi traffic highway bridge tunnel
""".split()

OPENERS = ["hey", "hi", "hello", "so", "well", "right", "okay", "listen"]
SPEAKER_PAIRS = [
    ("amy", "blake"), ("casey", "drew"), ("erin", "felix"),
    ("gina", "hugo"), ("iris", "jude"), ("agent", "customer"),
]


def utterance(rng: random.Random, n_tokens: int) -> str:
    words = [rng.choice(OPENERS)] + rng.choices(VOCAB, k=n_tokens - 1)
    return " ".join(words)


def base_dialogue(rng: random.Random, conv: str) -> list[dict]:
    speakers = rng.choice(SPEAKER_PAIRS)
    n_turns = rng.randint(5, 8)
    rows = []
    for turn in range(n_turns):
        rows.append({
            "conv": conv,
            "speaker": speakers[turn % 2],
            "text": utterance(rng, rng.randint(7, 12)),
        })
    return rows


def split_some_turns(rng: random.Random, rows: list[dict]) -> list[dict]:
    """Split a few utterances into consecutive same-speaker rows (merged back
    at ingest), leaving the merged form unchanged."""
    out = []
    for row in rows:
        words = row["text"].split()
        if len(words) >= 8 and rng.random() < 0.35:
            cut = rng.randint(3, len(words) - 3)
            out.append({**row, "text": " ".join(words[:cut])})
            out.append({**row, "text": " ".join(words[cut:])})
        else:
            out.append(row)
    return out


def add_curly_punctuation(rows: list[dict]) -> list[dict]:
    decorated = []
    for i, row in enumerate(rows):
        text = row["text"]
        if i == 0:
            text = "it’s " + text  # normalizes to "it's"
        elif i == 1:
            text = text + " — really"
        decorated.append({**row, "text": text})
    return decorated


def merged_token_set(rows: list[dict]) -> set[str]:
    return {w.strip("’—'") for row in rows for w in row["text"].lower().split()}


def jaccard(a: set, b: set) -> float:
    return len(a & b) / len(a | b)


def main() -> None:
    rng = random.Random(20240817)
    dialogues: list[list[dict]] = []
    attempt = 0
    while len(dialogues) < 50:
        attempt += 1
        candidate = base_dialogue(rng, f"c{len(dialogues):03d}")
        tokens = merged_token_set(candidate)
        if all(jaccard(tokens, merged_token_set(d)) < 0.6 for d in dialogues):
            dialogues.append(candidate)
        if attempt > 500:
            raise RuntimeError("vocabulary too small for 50 dissimilar dialogues")

    rows: list[dict] = []
    for i, d in enumerate(dialogues):
        styled = split_some_turns(rng, d) if i % 3 == 0 else d
        if i in (4, 19):
            styled = add_curly_punctuation(styled)
        rows.extend(styled)

    # planted rejects, appended after the dialogues they duplicate
    def clone(src: list[dict], conv: str) -> list[dict]:
        return [{**row, "conv": conv} for row in src]

    rows.extend(clone(dialogues[3], "dup-of-c003"))
    rows.extend(clone(dialogues[10], "dup-of-c010"))
    near = clone(dialogues[7], "near-of-c007")
    words = near[0]["text"].split()
    words[-1] = "zzzchanged"
    near[0]["text"] = " ".join(words)
    rows.extend(near)

    short_turns = [
        {"conv": "reject-turns", "speaker": "amy", "text": utterance(rng, 15)},
        {"conv": "reject-turns", "speaker": "blake", "text": utterance(rng, 15)},
        {"conv": "reject-turns", "speaker": "amy", "text": utterance(rng, 15)},
    ]
    rows.extend(short_turns)
    few_tokens = [
        {"conv": "reject-tokens", "speaker": "casey", "text": utterance(rng, 5)},
        {"conv": "reject-tokens", "speaker": "drew", "text": utterance(rng, 5)},
        {"conv": "reject-tokens", "speaker": "casey", "text": utterance(rng, 5)},
        {"conv": "reject-tokens", "speaker": "drew", "text": utterance(rng, 5)},
    ]
    rows.extend(few_tokens)

    sample_dir = Path(__file__).resolve().parent.parent / "data" / "sample"
    sample_dir.mkdir(parents=True, exist_ok=True)
    with open(sample_dir / "raw_sample.jsonl", "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    with open(sample_dir / "ingest_spec.json", "w", encoding="utf-8") as fh:
        json.dump({
            "speaker_field": "speaker",
            "utterance_field": "text",
            "id_field": "conv",
            "dataset_tag": "sample",
            "aliases": {"agent": "Agent", "customer": "Customer"},
        }, fh, indent=2)
        fh.write("\n")
    print(f"wrote {len(rows)} raw rows ({len(dialogues)} base dialogues + 5 rejects)")


if __name__ == "__main__":
    main()
