"""Canonical dialogue / summary records and their line-delimited file format.

A corpus file holds one JSON record per line (UTF-8). Dialogue records carry
``schema_version``, ``id``, ``source_dataset``, ``roles`` and ``turns``;
parallel records additionally carry ``summaries``. All types here are frozen
values: safe to share across threads, compared field-for-field.

Utterance and role texts are stored whitespace-canonical (single spaces, no
leading/trailing whitespace) and must not contain the reserved marker strings
used by the serialization layer. Both rules are enforced by
:func:`validate_dialogue` rather than escaped at write time, so corrupted
inputs can never be confused with control tokens downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import MalformedRecordError

SCHEMA_VERSION = 1

#: Strings that may never occur inside role or utterance text.
RESERVED_MARKERS = ("<s>", "</s>", "<eor>", "<eou>", "<mask>", "<uttr-mask>")

SUMMARY_ORIGINS = ("annotated", "reference", "augmented")


@dataclass(frozen=True)
class Turn:
    """One utterance, owned by the role at ``role_index`` in the dialogue's role table."""

    role_index: int
    text: str


@dataclass(frozen=True)
class Dialogue:
    """A multi-turn dialogue in dual-turn form (no two consecutive turns share a speaker)."""

    id: str
    source_dataset: str
    roles: tuple[str, ...]
    turns: tuple[Turn, ...]

    def __post_init__(self):
        object.__setattr__(self, "roles", tuple(self.roles))
        object.__setattr__(self, "turns", tuple(self.turns))

    def role_of(self, turn: Turn) -> str:
        return self.roles[turn.role_index]


@dataclass(frozen=True)
class SummaryRecord:
    text: str
    origin: str  # one of SUMMARY_ORIGINS


@dataclass(frozen=True)
class ParallelExample:
    """A dialogue paired with at least one summary."""

    dialogue: Dialogue
    summaries: tuple[SummaryRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "summaries", tuple(self.summaries))


@dataclass(frozen=True)
class CorpusManifest:
    """Provenance sidecar for a stored corpus."""

    name: str
    examples: int
    created_with_seed: int | None = None
    source_datasets: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "source_datasets", tuple(self.source_datasets))


def _is_canonical(text: str) -> bool:
    return text == " ".join(text.split()) and text != ""


def validate_dialogue(d: Dialogue) -> list[str]:
    """Return every violated invariant of ``d`` (empty list means valid).

    Violations are data, not errors: callers decide whether to raise, drop,
    or report.
    """
    violations: list[str] = []
    if not d.turns:
        violations.append("dialogue has no turns")
    if not d.roles:
        violations.append("dialogue has no roles")
    seen_roles = set()
    for i, role in enumerate(d.roles):
        if not _is_canonical(role):
            violations.append(f"role {i}: name is empty or not whitespace-canonical")
        for marker in RESERVED_MARKERS:
            if marker in role:
                violations.append(f"role {i}: reserved marker {marker!r} in name")
        if role in seen_roles:
            violations.append(f"role {i}: duplicate role name {role!r}")
        seen_roles.add(role)
    prev_index = None
    for i, turn in enumerate(d.turns):
        if not 0 <= turn.role_index < len(d.roles):
            violations.append(f"turn {i}: role_index out of range")
        if not _is_canonical(turn.text):
            violations.append(f"turn {i}: text is empty or not whitespace-canonical")
        for marker in RESERVED_MARKERS:
            if marker in turn.text:
                violations.append(f"turn {i}: reserved marker {marker!r} in text")
        if prev_index is not None and turn.role_index == prev_index:
            violations.append(f"turn {i}: consecutive turns share speaker")
        prev_index = turn.role_index
    return violations


def validate_example(ex: ParallelExample) -> list[str]:
    """Violations of a parallel example: dialogue invariants plus summary rules."""
    violations = validate_dialogue(ex.dialogue)
    if not ex.summaries:
        violations.append("example has no summaries")
    for i, s in enumerate(ex.summaries):
        if not s.text:
            violations.append(f"summary {i}: empty text")
        if s.origin not in SUMMARY_ORIGINS:
            violations.append(f"summary {i}: unknown origin {s.origin!r}")
    return violations


def render_dialogue_text(d: Dialogue) -> str:
    """Render a dialogue as one ``role: utterance`` line per turn."""
    return "\n".join(f"{d.roles[t.role_index]}: {t.text}" for t in d.turns)


def _dialogue_to_obj(d: Dialogue) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "id": d.id,
        "source_dataset": d.source_dataset,
        "roles": list(d.roles),
        "turns": [{"role_index": t.role_index, "text": t.text} for t in d.turns],
    }


def _example_to_obj(ex: ParallelExample) -> dict:
    obj = _dialogue_to_obj(ex.dialogue)
    obj["summaries"] = [{"text": s.text, "origin": s.origin} for s in ex.summaries]
    return obj


def record_to_obj(record: Dialogue | ParallelExample) -> dict:
    """The JSON object form of one corpus record, as written by save_corpus."""
    if isinstance(record, ParallelExample):
        return _example_to_obj(record)
    return _dialogue_to_obj(record)


def dialogue_from_obj(obj: dict, line_number: int = 0) -> Dialogue:
    """Parse and validate one dialogue record object (as read by load_corpus)."""
    return _dialogue_from_obj(obj, line_number)


def _require(obj: dict, key: str, line_number: int):
    if key not in obj:
        raise MalformedRecordError(line_number, f"record missing {key!r} field")
    return obj[key]


def _dialogue_from_obj(obj: dict, line_number: int) -> Dialogue:
    version = _require(obj, "schema_version", line_number)
    if version != SCHEMA_VERSION:
        raise MalformedRecordError(line_number, f"unsupported schema_version {version!r}")
    roles = _require(obj, "roles", line_number)
    raw_turns = _require(obj, "turns", line_number)
    if not isinstance(roles, list) or not all(isinstance(r, str) for r in roles):
        raise MalformedRecordError(line_number, "roles must be an array of strings")
    if not isinstance(raw_turns, list):
        raise MalformedRecordError(line_number, "turns must be an array")
    turns = []
    for t in raw_turns:
        if not isinstance(t, dict) or "role_index" not in t or "text" not in t:
            raise MalformedRecordError(line_number, "turn must have role_index and text")
        turns.append(Turn(role_index=t["role_index"], text=t["text"]))
    d = Dialogue(
        id=str(_require(obj, "id", line_number)),
        source_dataset=str(_require(obj, "source_dataset", line_number)),
        roles=tuple(roles),
        turns=tuple(turns),
    )
    violations = validate_dialogue(d)
    if violations:
        raise MalformedRecordError(line_number, "; ".join(violations))
    return d


def _example_from_obj(obj: dict, line_number: int) -> ParallelExample:
    dialogue = _dialogue_from_obj(obj, line_number)
    raw = _require(obj, "summaries", line_number)
    if not isinstance(raw, list) or not raw:
        raise MalformedRecordError(line_number, "summaries must be a non-empty array")
    summaries = []
    for s in raw:
        if not isinstance(s, dict) or "text" not in s or "origin" not in s:
            raise MalformedRecordError(line_number, "summary must have text and origin")
        if s["origin"] not in SUMMARY_ORIGINS:
            raise MalformedRecordError(line_number, f"unknown summary origin {s['origin']!r}")
        if not s["text"]:
            raise MalformedRecordError(line_number, "summary text is empty")
        summaries.append(SummaryRecord(text=s["text"], origin=s["origin"]))
    return ParallelExample(dialogue=dialogue, summaries=tuple(summaries))


def load_corpus(path: str | Path, kind: str) -> list[Dialogue] | list[ParallelExample]:
    """Load a corpus file; ``kind`` is ``"dialogues"`` or ``"parallel"``.

    Every returned record is fully validated; the first bad line raises
    :class:`MalformedRecordError` with its 1-based line number.
    """
    if kind not in ("dialogues", "parallel"):
        raise ValueError(f"unknown corpus kind {kind!r}")
    records: list = []
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecordError(line_number, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise MalformedRecordError(line_number, "record is not an object")
            if kind == "dialogues":
                records.append(_dialogue_from_obj(obj, line_number))
            else:
                records.append(_example_from_obj(obj, line_number))
    return records


def save_corpus(records: Iterable[Dialogue | ParallelExample], path: str | Path) -> int:
    """Write records to ``path``, one JSON object per line. Returns the count written.

    Output bytes are a pure function of the records: field order and JSON
    formatting are fixed.
    """
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_obj(record), ensure_ascii=False))
            fh.write("\n")
            count += 1
    return count


def corpus_manifest(name: str, records: Sequence[Dialogue | ParallelExample],
                    seed: int | None = None) -> CorpusManifest:
    """Build a manifest for a corpus about to be stored."""
    datasets: list[str] = []
    for r in records:
        d = r.dialogue if isinstance(r, ParallelExample) else r
        if d.source_dataset not in datasets:
            datasets.append(d.source_dataset)
    return CorpusManifest(
        name=name,
        examples=len(records),
        created_with_seed=seed,
        source_datasets=tuple(datasets),
    )
