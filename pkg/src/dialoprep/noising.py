"""Denoising pre-training pairs: corruption tasks, serialization, task mixing.

A dialogue serializes to ``<s> R1 <eor> U1 <eou> ... Rm <eor> Un <eou> </s>``
with whitespace-split content tokens (subword vocabularies are downstream
territory). Every token carries a speaker id; ids alternate 0/1 over the
top-level groups of the sequence (turn groups, and mask groups produced by
infilling), so they stay binary for any number of roles and remain consistent
on corrupted inputs.

Five reconstruction tasks corrupt the input while the target stays the clean
serialization of the original dialogue; the task-oriented pairs map the clean
dialogue to a summary. Corruption counts use round-half-up of rate * n.
All sampling flows through generators derived from (seed, dialogue id,
ordinal), so generation order never depends on scheduling.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .metrics import rouge_n, tokenize_for_metrics
from .records import Dialogue, ParallelExample, Turn
from .seeding import derive_rng

BOS = "<s>"
EOS = "</s>"
EOR = "<eor>"
EOU = "<eou>"
MASK = "<mask>"
UTTR_MASK = "<uttr-mask>"

RECONSTRUCTION_TASKS = ("token_mask", "token_delete", "uttr_infill",
                        "uttr_permute", "uttr_mask")
ALL_TASKS = RECONSTRUCTION_TASKS + ("task_oriented",)


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


@dataclass(frozen=True)
class NoisingConfig:
    token_mask_rate: float = 0.2
    token_delete_rate: float = 0.2
    infill_lambda: float = 3.0
    infill_utterance_budget_rate: float = 0.2
    uttr_mask_rate: float = 0.2
    seed: int = 0

    def __post_init__(self):
        for name in ("token_mask_rate", "token_delete_rate",
                     "infill_utterance_budget_rate", "uttr_mask_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.infill_lambda <= 0:
            raise ValueError("infill_lambda must be > 0")

    @classmethod
    def from_file(cls, path: str | Path) -> "NoisingConfig":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))


@dataclass(frozen=True)
class TaskMix:
    weights: dict[str, float]
    seed: int = 0

    def __post_init__(self):
        unknown = set(self.weights) - set(ALL_TASKS)
        if unknown:
            raise ValueError(f"unknown tasks in mix: {sorted(unknown)}")
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("task weights must be non-negative")
        if not any(w > 0 for w in self.weights.values()):
            raise ValueError("at least one task weight must be positive")

    @classmethod
    def equal_reconstruction(cls, seed: int = 0) -> "TaskMix":
        return cls(weights={t: 1.0 for t in RECONSTRUCTION_TASKS}, seed=seed)

    @classmethod
    def from_file(cls, path: str | Path) -> "TaskMix":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        return cls(weights=dict(obj["weights"]), seed=obj.get("seed", 0))


@dataclass(frozen=True)
class SerializedInput:
    tokens: tuple[str, ...]
    speaker_ids: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "speaker_ids", tuple(self.speaker_ids))
        if len(self.tokens) != len(self.speaker_ids):
            raise ValueError("tokens and speaker_ids must have equal length")


@dataclass(frozen=True)
class NoisedPair:
    task: str
    source: SerializedInput
    target_tokens: tuple[str, ...]
    dialogue_id: str
    target_origin: str | None = None  # set for task_oriented pairs only

    def __post_init__(self):
        object.__setattr__(self, "target_tokens", tuple(self.target_tokens))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

# A group is one top-level unit of the serialized sequence: a (role tokens,
# utterance tokens) turn, or a bare mask produced by infilling.
_MaskGroup = object()


def _turn_groups(d: Dialogue) -> list[tuple[list[str], list[str]]]:
    return [(d.roles[t.role_index].split(), t.text.split()) for t in d.turns]


def _build_serialized(groups: Sequence) -> SerializedInput:
    tokens: list[str] = [BOS]
    ids: list[int] = [0]
    for position, group in enumerate(groups):
        speaker = position % 2
        if group is _MaskGroup:
            tokens.append(MASK)
            ids.append(speaker)
            continue
        role_tokens, utterance_tokens = group
        for tok in (*role_tokens, EOR, *utterance_tokens, EOU):
            tokens.append(tok)
            ids.append(speaker)
    tokens.append(EOS)
    ids.append(ids[-1] if len(ids) > 1 else 0)
    return SerializedInput(tokens=tuple(tokens), speaker_ids=tuple(ids))


def assign_speaker_ids(d: Dialogue) -> list[int]:
    """Per-turn speaker ids: turn 0 gets 0, then flip at every turn boundary.

    In dual-turn form every boundary is a role transition, so ids stay in
    {0, 1} for any number of roles.
    """
    return [i % 2 for i in range(len(d.turns))]


def serialize_dialogue(d: Dialogue) -> SerializedInput:
    """Clean serialization of a dialogue with markers and speaker ids."""
    return _build_serialized(_turn_groups(d))


def deserialize_dialogue(s: SerializedInput, dialogue_id: str = "",
                         source_dataset: str = "") -> Dialogue:
    """Parse a clean serialization back into a Dialogue.

    The role table is rebuilt in order of first appearance, which matches how
    every pipeline stage constructs dialogues. Corrupted sequences (stray
    masks, unterminated groups) raise ValueError.
    """
    tokens = list(s.tokens)
    if len(tokens) < 2 or tokens[0] != BOS or tokens[-1] != EOS:
        raise ValueError("serialization must start with <s> and end with </s>")
    roles: list[str] = []
    turns: list[Turn] = []
    i = 1
    end = len(tokens) - 1
    while i < end:
        try:
            eor = tokens.index(EOR, i, end)
            eou = tokens.index(EOU, eor + 1, end)
        except ValueError:
            raise ValueError("unterminated role or utterance group") from None
        role_tokens = tokens[i:eor]
        utterance_tokens = tokens[eor + 1:eou]
        group_tokens = role_tokens + utterance_tokens
        if not role_tokens or not utterance_tokens:
            raise ValueError("empty role or utterance group")
        if any(t in (BOS, EOS, EOR, EOU, MASK, UTTR_MASK) for t in group_tokens):
            raise ValueError("marker token inside a content group")
        role = " ".join(role_tokens)
        if role not in roles:
            roles.append(role)
        turns.append(Turn(role_index=roles.index(role), text=" ".join(utterance_tokens)))
        i = eou + 1
    if not turns:
        raise ValueError("serialization contains no turns")
    return Dialogue(id=dialogue_id, source_dataset=source_dataset,
                    roles=tuple(roles), turns=tuple(turns))


# ---------------------------------------------------------------------------
# Corruption tasks
# ---------------------------------------------------------------------------

def token_masking(d: Dialogue, cfg: NoisingConfig, rng: random.Random) -> NoisedPair:
    """Replace round(rate * n) tokens of each utterance with ``<mask>``.

    Roles and structural markers are never touched.
    """
    groups = []
    for role_tokens, utterance_tokens in _turn_groups(d):
        n = len(utterance_tokens)
        k = round_half_up(cfg.token_mask_rate * n)
        masked = list(utterance_tokens)
        for position in rng.sample(range(n), k):
            masked[position] = MASK
        groups.append((role_tokens, masked))
    return NoisedPair(task="token_mask", source=_build_serialized(groups),
                      target_tokens=serialize_dialogue(d).tokens, dialogue_id=d.id)


def token_deletion(d: Dialogue, cfg: NoisingConfig, rng: random.Random) -> NoisedPair:
    """Delete round(rate * N) utterance tokens across the whole dialogue.

    Surviving tokens keep their relative order; an utterance deleted to
    emptiness keeps its role and markers.
    """
    groups = _turn_groups(d)
    total = sum(len(utterance) for _, utterance in groups)
    k = round_half_up(cfg.token_delete_rate * total)
    doomed = set(rng.sample(range(total), k))
    corrupted = []
    offset = 0
    for role_tokens, utterance_tokens in groups:
        kept = [tok for j, tok in enumerate(utterance_tokens) if offset + j not in doomed]
        offset += len(utterance_tokens)
        corrupted.append((role_tokens, kept))
    return NoisedPair(task="token_delete", source=_build_serialized(corrupted),
                      target_tokens=serialize_dialogue(d).tokens, dialogue_id=d.id)


def sample_poisson(lam: float, rng: random.Random) -> int:
    """Exact Poisson draw (Knuth's product-of-uniforms method)."""
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    threshold = math.exp(-lam)
    k = 0
    p = 1.0
    while True:
        p *= rng.random()
        if p <= threshold:
            return k
        k += 1


def _uncovered_runs(covered: list[bool]) -> list[tuple[int, int]]:
    runs: list[tuple[int, int]] = []
    start = None
    for i, flag in enumerate(covered + [True]):
        if not flag and start is None:
            start = i
        elif flag and start is not None:
            runs.append((start, i - start))
            start = None
    return runs


def _plan_infill(n_turns: int, budget: int, lam: float,
                 rng: random.Random) -> tuple[list[tuple[int, int]], int]:
    """Sample utterance spans until ``budget`` turns are consumed.

    Returns (spans as (start, length) over turn indices, number of 0-length
    insertions). Span lengths are Poisson draws clipped to the remaining
    budget and to the longest uncovered run; 0-length draws insert a mask
    without consuming budget, so iterations are capped to stay finite.
    """
    covered = [False] * n_turns
    spans: list[tuple[int, int]] = []
    insertions = 0
    consumed = 0
    iterations = 0
    while consumed < budget and iterations < 10 * budget + 10:
        iterations += 1
        length = sample_poisson(lam, rng)
        if length == 0:
            insertions += 1
            continue
        runs = _uncovered_runs(covered)
        if not runs:
            break
        length = min(length, budget - consumed, max(r[1] for r in runs))
        starts = [s for run_start, run_len in runs
                  for s in range(run_start, run_start + run_len - length + 1)]
        start = starts[rng.randrange(len(starts))]
        spans.append((start, length))
        for i in range(start, start + length):
            covered[i] = True
        consumed += length
    spans.sort()
    return spans, insertions


def _apply_infill(d: Dialogue, spans: Sequence[tuple[int, int]], insertions: int,
                  rng: random.Random) -> NoisedPair:
    """Collapse each span's turn groups to one ``<mask>`` and insert
    ``insertions`` bare masks at sampled gaps of the collapsed sequence."""
    turn_groups = _turn_groups(d)
    groups: list = []
    starts = {start: length for start, length in spans}
    i = 0
    while i < len(turn_groups):
        if i in starts:
            groups.append(_MaskGroup)
            i += starts[i]
        else:
            groups.append(turn_groups[i])
            i += 1
    for _ in range(insertions):
        groups.insert(rng.randrange(len(groups) + 1), _MaskGroup)
    return NoisedPair(task="uttr_infill", source=_build_serialized(groups),
                      target_tokens=serialize_dialogue(d).tokens, dialogue_id=d.id)


def utterance_infilling(d: Dialogue, cfg: NoisingConfig, rng: random.Random) -> NoisedPair:
    """Replace sampled spans of consecutive turns with single ``<mask>`` tokens.

    The total replaced-turn budget is round(budget_rate * turns); span lengths
    are Poisson(lambda) draws, and a 0-length draw inserts a mask at a turn
    boundary without removing anything.
    """
    budget = round_half_up(cfg.infill_utterance_budget_rate * len(d.turns))
    if budget == 0:
        return NoisedPair(task="uttr_infill", source=serialize_dialogue(d),
                          target_tokens=serialize_dialogue(d).tokens, dialogue_id=d.id)
    spans, insertions = _plan_infill(len(d.turns), budget, cfg.infill_lambda, rng)
    return _apply_infill(d, spans, insertions, rng)


def utterance_permutation(d: Dialogue, cfg: NoisingConfig, rng: random.Random) -> NoisedPair:
    """Shuffle utterances across turn slots while the role sequence stays fixed,
    so utterances may sit next to the wrong role."""
    turn_groups = _turn_groups(d)
    utterances = [utterance for _, utterance in turn_groups]
    rng.shuffle(utterances)
    groups = [(role, utterance) for (role, _), utterance in zip(turn_groups, utterances)]
    return NoisedPair(task="uttr_permute", source=_build_serialized(groups),
                      target_tokens=serialize_dialogue(d).tokens, dialogue_id=d.id)


def select_gap_utterances(d: Dialogue, k: int) -> list[int]:
    """Greedy principal-utterance selection.

    Repeat k times: add the turn index maximizing ROUGE-1 F1 (unigram types
    counted once) between the selected utterances and the remaining ones.
    Lowest index wins ties; the result is deterministic.
    """
    n = len(d.turns)
    if not 1 <= k <= n:
        raise ValueError("k must be in [1, turns]")
    token_lists = [tokenize_for_metrics(t.text) for t in d.turns]
    selected: list[int] = []
    while len(selected) < k:
        best_index = -1
        best_score = -1.0
        for i in range(n):
            if i in selected:
                continue
            trial = sorted(selected + [i])
            chosen = [tok for j in trial for tok in token_lists[j]]
            rest = [tok for j in range(n) if j not in trial for tok in token_lists[j]]
            score = rouge_n(chosen, rest, 1, unique_ngrams=True).f1
            if score > best_score:
                best_score = score
                best_index = i
        selected.append(best_index)
    return sorted(selected)


def utterance_masking(d: Dialogue, cfg: NoisingConfig,
                      rng: random.Random | None = None) -> NoisedPair:
    """Replace the max(1, round(rate * turns)) principal gap-utterances with
    ``<uttr-mask>``, keeping each slot's role and markers.

    Selection is greedy, not random; ``rng`` is accepted for dispatch
    uniformity but never consumed.
    """
    k = max(1, round_half_up(cfg.uttr_mask_rate * len(d.turns)))
    chosen = set(select_gap_utterances(d, k))
    groups = [(role, [UTTR_MASK] if i in chosen else utterance)
              for i, (role, utterance) in enumerate(_turn_groups(d))]
    return NoisedPair(task="uttr_mask", source=_build_serialized(groups),
                      target_tokens=serialize_dialogue(d).tokens, dialogue_id=d.id)


def make_task_oriented_pair(ex: ParallelExample) -> NoisedPair:
    """Clean dialogue serialization paired with a summary token sequence.

    Uses the first summary with origin ``annotated``; falls back to the first
    summary otherwise and flags the fallback origin in the pair.
    """
    summary = next((s for s in ex.summaries if s.origin == "annotated"), ex.summaries[0])
    return NoisedPair(
        task="task_oriented",
        source=serialize_dialogue(ex.dialogue),
        target_tokens=tuple(summary.text.split()),
        dialogue_id=ex.dialogue.id,
        target_origin=summary.origin,
    )


_TASK_FUNCTIONS = {
    "token_mask": token_masking,
    "token_delete": token_deletion,
    "uttr_infill": utterance_infilling,
    "uttr_permute": utterance_permutation,
    "uttr_mask": utterance_masking,
}


def noise_dialogue(d: Dialogue, task: str, cfg: NoisingConfig,
                   rng: random.Random) -> NoisedPair:
    """Apply one reconstruction task to a dialogue."""
    try:
        fn = _TASK_FUNCTIONS[task]
    except KeyError:
        raise ValueError(f"unknown reconstruction task {task!r}") from None
    return fn(d, cfg, rng)


# ---------------------------------------------------------------------------
# Multi-task mixing
# ---------------------------------------------------------------------------

def _dialogue_of(item: Dialogue | ParallelExample) -> Dialogue:
    return item.dialogue if isinstance(item, ParallelExample) else item


def mixed_pair(items: Sequence[Dialogue | ParallelExample], mix: TaskMix,
               cfg: NoisingConfig, ordinal: int) -> NoisedPair:
    """The pair at position ``ordinal`` of the mixed stream.

    Task and dialogue are drawn from a generator derived from (mix seed,
    ordinal); corruption uses a generator derived from (config seed, dialogue
    id, ordinal). Both depend only on their inputs, so any scheduling of
    ordinals yields the same stream.
    """
    if not items:
        raise ValueError("cannot mix over an empty corpus")
    active = [(task, mix.weights[task]) for task in ALL_TASKS
              if mix.weights.get(task, 0.0) > 0.0]
    total = sum(w for _, w in active)
    selector = derive_rng(mix.seed, "select", ordinal)
    draw = selector.random() * total
    cumulative = 0.0
    task = active[-1][0]
    for name, weight in active:
        cumulative += weight
        if draw < cumulative:
            task = name
            break
    item = items[selector.randrange(len(items))]
    if task == "task_oriented":
        if not isinstance(item, ParallelExample):
            raise ValueError("task_oriented requires parallel examples")
        return make_task_oriented_pair(item)
    dialogue = _dialogue_of(item)
    pair_rng = derive_rng(cfg.seed, "pair", dialogue.id, ordinal)
    return noise_dialogue(dialogue, task, cfg, pair_rng)


def mix_tasks(items: Sequence[Dialogue | ParallelExample], mix: TaskMix,
              cfg: NoisingConfig, count: int) -> Iterator[NoisedPair]:
    """Stream ``count`` pairs with tasks drawn proportionally to mix weights."""
    if count < 0:
        raise ValueError("count must be >= 0")
    for ordinal in range(count):
        yield mixed_pair(items, mix, cfg, ordinal)


# ---------------------------------------------------------------------------
# Pair records on disk
# ---------------------------------------------------------------------------

def pair_to_obj(pair: NoisedPair) -> dict:
    obj = {
        "task": pair.task,
        "source_tokens": list(pair.source.tokens),
        "source_speaker_ids": list(pair.source.speaker_ids),
        "target_tokens": list(pair.target_tokens),
        "dialogue_id": pair.dialogue_id,
    }
    if pair.target_origin is not None:
        obj["target_origin"] = pair.target_origin
    return obj


def save_pairs(pairs: Iterable[NoisedPair], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair_to_obj(pair), ensure_ascii=False))
            fh.write("\n")
            count += 1
    return count


def load_pairs(path: str | Path) -> list[NoisedPair]:
    pairs: list[NoisedPair] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            pairs.append(NoisedPair(
                task=obj["task"],
                source=SerializedInput(tokens=tuple(obj["source_tokens"]),
                                       speaker_ids=tuple(obj["source_speaker_ids"])),
                target_tokens=tuple(obj["target_tokens"]),
                dialogue_id=obj["dialogue_id"],
                target_origin=obj.get("target_origin"),
            ))
    return pairs
