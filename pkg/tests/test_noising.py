from __future__ import annotations

import random

import pytest

from dialoprep.noising import (
    BOS,
    EOR,
    EOS,
    EOU,
    MASK,
    UTTR_MASK,
    NoisingConfig,
    SerializedInput,
    TaskMix,
    _apply_infill,
    _plan_infill,
    assign_speaker_ids,
    deserialize_dialogue,
    load_pairs,
    make_task_oriented_pair,
    mix_tasks,
    mixed_pair,
    round_half_up,
    sample_poisson,
    save_pairs,
    select_gap_utterances,
    serialize_dialogue,
    token_deletion,
    token_masking,
    utterance_infilling,
    utterance_masking,
    utterance_permutation,
)
from dialoprep.records import Dialogue, ParallelExample, SummaryRecord, Turn

from conftest import make_dialogue, make_example

CFG = NoisingConfig(seed=3442)
MARKERS = (BOS, EOS, EOR, EOU, MASK, UTTR_MASK)


def _dlg(texts, roles=("A", "B"), indices=None):
    if indices is None:
        indices = [i % 2 for i in range(len(texts))]
    return Dialogue(id="n1", source_dataset="u", roles=roles,
                    turns=tuple(Turn(i, t) for i, t in zip(indices, texts)))


# Independent structural parser used as the test-side oracle.

def parse_turn_groups(s: SerializedInput, allow_bare_mask=False):
    """Split a serialization into (tokens, speaker_id) groups."""
    tokens = list(s.tokens)
    ids = list(s.speaker_ids)
    assert tokens[0] == BOS and tokens[-1] == EOS
    groups = []
    i = 1
    end = len(tokens) - 1
    while i < end:
        if allow_bare_mask and tokens[i] == MASK:
            groups.append((["<mask-group>"], ids[i]))
            i += 1
            continue
        eor = tokens.index(EOR, i, end)
        eou = tokens.index(EOU, eor + 1, end)
        group_ids = set(ids[i:eou + 1])
        assert len(group_ids) == 1, "a group must carry one speaker id"
        groups.append(((tokens[i:eor], tokens[eor + 1:eou]), group_ids.pop()))
        i = eou + 1
    return groups


def assert_ids_alternate(s: SerializedInput, allow_bare_mask=False):
    groups = parse_turn_groups(s, allow_bare_mask)
    assert [speaker for _, speaker in groups] == [i % 2 for i in range(len(groups))]
    assert s.speaker_ids[0] == 0
    assert s.speaker_ids[-1] == s.speaker_ids[-2]


def utterance_tokens(s: SerializedInput) -> list[str]:
    out = []
    for (group, _) in parse_turn_groups(s):
        _, utterance = group
        out.extend(utterance)
    return out


def is_subsequence(short, long) -> bool:
    it = iter(long)
    return all(tok in it for tok in short)


# ---------------------------------------------------------------------------
# Ids and serialization
# ---------------------------------------------------------------------------

def test_speaker_ids_two_roles():
    d = _dlg(["a", "b", "c", "d"])
    assert assign_speaker_ids(d) == [0, 1, 0, 1]


def test_speaker_ids_single_turn():
    d = _dlg(["solo"], roles=("A",), indices=[0])
    assert assign_speaker_ids(d) == [0]


def test_speaker_ids_three_roles_flip_on_transition():
    d = _dlg(["x", "y", "z"], roles=("A", "B", "C"), indices=[0, 1, 2])
    assert assign_speaker_ids(d) == [0, 1, 0]


def test_serialize_worked_example():
    d = Dialogue(id="s", source_dataset="u", roles=("Danny", "Alejandra"),
                 turns=(Turn(0, "hi"), Turn(1, "hello")))
    s = serialize_dialogue(d)
    assert s.tokens == ("<s>", "Danny", "<eor>", "hi", "<eou>",
                        "Alejandra", "<eor>", "hello", "<eou>", "</s>")
    assert s.speaker_ids == (0, 0, 0, 0, 0, 1, 1, 1, 1, 1)


def test_serialize_marker_discipline():
    rng = random.Random(8)
    for i in range(30):
        d = make_dialogue(rng, f"d{i}", n_roles=3)
        s = serialize_dialogue(d)
        assert s.tokens.count(BOS) == 1 and s.tokens[0] == BOS
        assert s.tokens.count(EOS) == 1 and s.tokens[-1] == EOS
        assert s.tokens.count(EOR) == len(d.turns)
        assert s.tokens.count(EOU) == len(d.turns)
        assert_ids_alternate(s)


def test_round_trip_random_dialogues():
    rng = random.Random(9)
    for i in range(50):
        d = make_dialogue(rng, f"d{i}", n_roles=rng.randint(2, 4))
        assert deserialize_dialogue(serialize_dialogue(d), d.id, d.source_dataset) == d


def test_deserialize_rejects_corrupted():
    with pytest.raises(ValueError):
        deserialize_dialogue(SerializedInput(("<s>", "A", "<eor>", "x"), (0, 0, 0, 0)))
    with pytest.raises(ValueError):
        deserialize_dialogue(SerializedInput(
            ("<s>", "A", "<eor>", "<mask>", "<eou>", "</s>"), (0,) * 6))


def test_round_half_up():
    assert round_half_up(0.4) == 0
    assert round_half_up(0.5) == 1
    assert round_half_up(2.0) == 2
    assert round_half_up(2.5) == 3
    assert round_half_up(1.9) == 2


# ---------------------------------------------------------------------------
# Token masking
# ---------------------------------------------------------------------------

def test_token_masking_counts_per_utterance():
    texts = [" ".join(f"w{i}{j}" for j in range(10)) for i in range(4)]
    pair = token_masking(_dlg(texts), CFG, random.Random(0))
    for (group, _) in parse_turn_groups(pair.source):
        _, utterance = group
        assert utterance.count(MASK) == 2  # round(0.2 * 10)
        assert len(utterance) == 10
    assert pair.target_tokens == serialize_dialogue(_dlg(texts)).tokens


def test_token_masking_rate_zero_identity():
    d = _dlg(["one two three", "four five"])
    pair = token_masking(d, NoisingConfig(token_mask_rate=0.0), random.Random(0))
    assert pair.source.tokens == pair.target_tokens


def test_token_masking_two_token_utterance_unchanged():
    d = _dlg(["only two", "and here three"])
    pair = token_masking(d, CFG, random.Random(0))
    groups = parse_turn_groups(pair.source)
    (_, first_utterance), _ = groups[0]
    assert first_utterance == ["only", "two"]  # round(0.4) == 0 masks


def test_token_masking_roles_untouched():
    rng = random.Random(11)
    for i in range(20):
        d = make_dialogue(rng, f"d{i}")
        pair = token_masking(d, CFG, random.Random(i))
        for ((role, _), _), turn in zip(parse_turn_groups(pair.source), d.turns):
            assert role == d.roles[turn.role_index].split()


# ---------------------------------------------------------------------------
# Token deletion
# ---------------------------------------------------------------------------

def test_token_deletion_count():
    texts = ["a b c d e", "f g h i j", "k l m n o", "p q r s t"]  # N = 20
    d = _dlg(texts)
    pair = token_deletion(d, CFG, random.Random(0))
    source_count = len(utterance_tokens(pair.source))
    target = serialize_dialogue(d)
    assert source_count == len(utterance_tokens(target)) - 4  # round(0.2 * 20)


def test_token_deletion_rate_zero_identity():
    d = _dlg(["one two", "three four"])
    pair = token_deletion(d, NoisingConfig(token_delete_rate=0.0), random.Random(0))
    assert pair.source.tokens == pair.target_tokens


def test_token_deletion_subsequence():
    rng = random.Random(12)
    for i in range(40):
        d = make_dialogue(rng, f"d{i}", max_tokens=8)
        pair = token_deletion(d, CFG, random.Random(i))
        survivors = utterance_tokens(pair.source)
        original = utterance_tokens(serialize_dialogue(d))
        assert is_subsequence(survivors, original)


def test_token_deletion_empty_utterance_keeps_markers():
    d = _dlg(["x", "y z w v u t s r q p"])  # rate high enough to kill "x"
    cfg = NoisingConfig(token_delete_rate=1.0)
    pair = token_deletion(d, cfg, random.Random(0))
    assert pair.source.tokens == ("<s>", "A", "<eor>", "<eou>",
                                  "B", "<eor>", "<eou>", "</s>")


# ---------------------------------------------------------------------------
# Poisson sampler
# ---------------------------------------------------------------------------

def test_poisson_sanity():
    rng = random.Random(3442)
    draws = [sample_poisson(3.0, rng) for _ in range(20000)]
    mean = sum(draws) / len(draws)
    assert abs(mean - 3.0) < 0.1
    assert all(k >= 0 for k in draws)


def test_poisson_invalid_lambda():
    with pytest.raises(ValueError):
        sample_poisson(0.0, random.Random(0))


# ---------------------------------------------------------------------------
# Utterance infilling
# ---------------------------------------------------------------------------

def test_infill_span_collapses_to_one_mask():
    texts = ["t0 a", "t1 b", "t2 c", "t3 d", "t4 e"]
    d = _dlg(texts)
    pair = _apply_infill(d, spans=[(1, 2)], insertions=0, rng=random.Random(0))
    assert pair.source.tokens == (
        "<s>", "A", "<eor>", "t0", "a", "<eou>",
        MASK,
        "B", "<eor>", "t3", "d", "<eou>",
        "A", "<eor>", "t4", "e", "<eou>", "</s>")
    assert_ids_alternate(pair.source, allow_bare_mask=True)
    assert deserialize_dialogue(
        SerializedInput(pair.target_tokens, serialize_dialogue(d).speaker_ids),
        d.id, d.source_dataset) == d


def test_infill_zero_length_span_adds_one_token():
    d = _dlg(["a b", "c d", "e f", "g h"])
    pair = _apply_infill(d, spans=[], insertions=1, rng=random.Random(5))
    assert len(pair.source.tokens) == len(pair.target_tokens) + 1
    assert pair.source.tokens.count(MASK) == 1
    # all original tokens still present, in order
    without_mask = [t for t in pair.source.tokens if t != MASK]
    assert tuple(without_mask) == pair.target_tokens


def test_infill_budget_zero_identity():
    d = _dlg(["a b", "c d"])
    cfg = NoisingConfig(infill_utterance_budget_rate=0.0)
    pair = utterance_infilling(d, cfg, random.Random(0))
    assert pair.source.tokens == pair.target_tokens


def test_infill_plan_consumes_budget():
    rng = random.Random(77)
    for trial in range(50):
        n = rng.randint(2, 12)
        budget = round_half_up(0.4 * n)
        if budget == 0:
            continue
        spans, insertions = _plan_infill(n, budget, 3.0, random.Random(trial))
        consumed = sum(length for _, length in spans)
        assert consumed == budget
        assert insertions >= 0
        # spans never overlap
        covered = set()
        for start, length in spans:
            span_range = set(range(start, start + length))
            assert not (covered & span_range)
            assert 0 <= start and start + length <= n
            covered |= span_range


def test_infill_end_to_end_structure():
    rng = random.Random(13)
    for i in range(40):
        d = make_dialogue(rng, f"d{i}", n_turns=rng.randint(4, 10))
        pair = utterance_infilling(d, CFG, random.Random(i))
        assert_ids_alternate(pair.source, allow_bare_mask=True)
        groups = parse_turn_groups(pair.source, allow_bare_mask=True)
        survivors = [g for g, _ in groups if g != ["<mask-group>"]]
        original = parse_turn_groups(serialize_dialogue(d))
        # surviving turn groups appear in original order with original content
        original_groups = [g for g, _ in original]
        assert is_subsequence(
            [tuple(map(tuple, g)) for g in survivors],
            [tuple(map(tuple, g)) for g in original_groups])


# ---------------------------------------------------------------------------
# Utterance permutation
# ---------------------------------------------------------------------------

def test_permutation_single_turn_identity():
    d = _dlg(["solo words"], roles=("A",), indices=[0])
    pair = utterance_permutation(d, CFG, random.Random(0))
    assert pair.source.tokens == pair.target_tokens


def test_permutation_keeps_role_sequence():
    d = _dlg(["u1 only", "u2 only", "u3 only"],
             roles=("A", "B"), indices=[0, 1, 0])
    pair = utterance_permutation(d, CFG, random.Random(1))
    roles = [group[0] for group, _ in parse_turn_groups(pair.source)]
    assert roles == [["A"], ["B"], ["A"]]


def test_permutation_preserves_utterance_multiset():
    rng = random.Random(14)
    for i in range(30):
        d = make_dialogue(rng, f"d{i}", n_turns=rng.randint(2, 8))
        pair = utterance_permutation(d, CFG, random.Random(i))
        shuffled = [tuple(g[1]) for g, _ in parse_turn_groups(pair.source)]
        original = [tuple(t.text.split()) for t in d.turns]
        assert sorted(shuffled) == sorted(original)
        assert_ids_alternate(pair.source)


# ---------------------------------------------------------------------------
# Gap-utterance selection and utterance masking
# ---------------------------------------------------------------------------

def test_gap_selection_worked_example():
    d = _dlg(["alice books", "bob books", "weather today"],
             roles=("A", "B"), indices=[0, 1, 0])
    assert select_gap_utterances(d, 1) == [0]


def test_gap_selection_k_equals_turns():
    d = _dlg(["a b", "c d", "e f"], roles=("A", "B"), indices=[0, 1, 0])
    assert select_gap_utterances(d, 3) == [0, 1, 2]


def _stepwise_oracle(token_lists, k):
    from dialoprep.metrics import rouge_n

    selected = []
    for _ in range(k):
        scores = []
        for i in range(len(token_lists)):
            if i in selected:
                scores.append(None)
                continue
            trial = sorted(selected + [i])
            chosen = [t for j in trial for t in token_lists[j]]
            rest = [t for j in range(len(token_lists)) if j not in trial
                    for t in token_lists[j]]
            scores.append(rouge_n(chosen, rest, 1, unique_ngrams=True).f1)
        best = max(s for s in scores if s is not None)
        selected.append(scores.index(best))
    return sorted(selected)


def test_gap_selection_matches_stepwise_oracle():
    from dialoprep.metrics import tokenize_for_metrics

    rng = random.Random(15)
    for i in range(60):
        d = make_dialogue(rng, f"d{i}", n_turns=rng.randint(2, 8), max_tokens=6)
        token_lists = [tokenize_for_metrics(t.text) for t in d.turns]
        for k in range(1, len(d.turns) + 1):
            assert select_gap_utterances(d, k) == _stepwise_oracle(token_lists, k)


def test_gap_selection_deterministic():
    rng = random.Random(16)
    d = make_dialogue(rng, "dd", n_turns=6)
    assert select_gap_utterances(d, 2) == select_gap_utterances(d, 2)


def test_gap_selection_case_invariant():
    rng = random.Random(26)
    for i in range(10):
        d = make_dialogue(rng, f"c{i}", n_turns=5)
        upper = Dialogue(id=d.id, source_dataset=d.source_dataset, roles=d.roles,
                         turns=tuple(Turn(t.role_index, t.text.upper()) for t in d.turns))
        assert select_gap_utterances(d, 2) == select_gap_utterances(upper, 2)


def test_gap_selection_bounds():
    d = _dlg(["a", "b"])
    with pytest.raises(ValueError):
        select_gap_utterances(d, 0)
    with pytest.raises(ValueError):
        select_gap_utterances(d, 3)


def test_utterance_masking_five_turns_masks_one():
    texts = [f"text number {i} here" for i in range(5)]
    d = _dlg(texts, roles=("A", "B"), indices=[0, 1, 0, 1, 0])
    pair = utterance_masking(d, CFG)
    masked = [g for g, _ in parse_turn_groups(pair.source) if g[1] == [UTTR_MASK]]
    assert len(masked) == 1  # max(1, round(0.2 * 5))


def test_utterance_masking_keeps_roles_and_markers():
    d = _dlg(["alice books", "bob books", "weather today"],
             roles=("A", "B"), indices=[0, 1, 0])
    pair = utterance_masking(d, CFG)
    groups = parse_turn_groups(pair.source)
    # principal utterance (index 0) replaced; its role group intact
    assert groups[0][0] == (["A"], [UTTR_MASK])
    assert groups[1][0] == (["B"], ["bob", "books"])
    assert pair.source.tokens.count(EOR) == 3
    assert pair.source.tokens.count(EOU) == 3


def test_utterance_masking_single_turn_min_one():
    d = _dlg(["just one utterance"], roles=("A",), indices=[0])
    pair = utterance_masking(d, CFG)
    assert pair.source.tokens == ("<s>", "A", "<eor>", UTTR_MASK, "<eou>", "</s>")


# ---------------------------------------------------------------------------
# Task-oriented pairs
# ---------------------------------------------------------------------------

def test_task_oriented_uses_annotated_summary():
    rng = random.Random(17)
    d = make_dialogue(rng, "t1")
    ex = ParallelExample(dialogue=d, summaries=(
        SummaryRecord("a reference text", "reference"),
        SummaryRecord("the annotated one", "annotated")))
    pair = make_task_oriented_pair(ex)
    assert pair.target_tokens == ("the", "annotated", "one")
    assert pair.target_origin == "annotated"
    assert pair.source.tokens == serialize_dialogue(d).tokens


def test_task_oriented_reference_fallback_flagged():
    rng = random.Random(18)
    ex = ParallelExample(dialogue=make_dialogue(rng, "t2"),
                         summaries=(SummaryRecord("only reference", "reference"),))
    pair = make_task_oriented_pair(ex)
    assert pair.target_tokens == ("only", "reference")
    assert pair.target_origin == "reference"


def test_task_oriented_source_never_corrupted():
    rng = random.Random(19)
    for i in range(10):
        pair = make_task_oriented_pair(make_example(rng, f"t{i}"))
        assert MASK not in pair.source.tokens
        assert UTTR_MASK not in pair.source.tokens


# ---------------------------------------------------------------------------
# Reconstruction invariant: target always deserializes to the original
# ---------------------------------------------------------------------------

def test_marker_discipline_all_task_sources():
    rng = random.Random(27)
    tasks = [token_masking, token_deletion, utterance_infilling,
             utterance_permutation, utterance_masking]
    for i in range(20):
        d = make_dialogue(rng, f"md{i}", n_turns=rng.randint(2, 8))
        for task_fn in tasks:
            source = task_fn(d, CFG, random.Random(i)).source
            assert source.tokens[0] == BOS and source.tokens.count(BOS) == 1
            assert source.tokens[-1] == EOS and source.tokens.count(EOS) == 1
            assert source.tokens.count(EOR) == source.tokens.count(EOU)
            if task_fn is not utterance_infilling:
                assert source.tokens.count(EOR) == len(d.turns)


def test_all_tasks_target_is_original_serialization():
    rng = random.Random(20)
    tasks = [token_masking, token_deletion, utterance_infilling,
             utterance_permutation, utterance_masking]
    for i in range(20):
        d = make_dialogue(rng, f"d{i}", n_turns=rng.randint(2, 8))
        clean = serialize_dialogue(d)
        for task_fn in tasks:
            pair = task_fn(d, CFG, random.Random(i))
            assert pair.target_tokens == clean.tokens
            restored = deserialize_dialogue(
                SerializedInput(pair.target_tokens, clean.speaker_ids),
                d.id, d.source_dataset)
            assert restored == d


# ---------------------------------------------------------------------------
# Task mixing
# ---------------------------------------------------------------------------

def test_mix_degenerate_weights():
    rng = random.Random(21)
    items = [make_dialogue(rng, f"d{i}") for i in range(5)]
    mix = TaskMix(weights={"token_mask": 1.0}, seed=7)
    pairs = list(mix_tasks(items, mix, CFG, 50))
    assert len(pairs) == 50
    assert all(p.task == "token_mask" for p in pairs)


def test_mix_same_seed_identical_streams(tmp_path):
    rng = random.Random(22)
    items = [make_example(rng, f"e{i}") for i in range(6)]
    mix = TaskMix(weights={t: 1.0 for t in
                           ("token_mask", "token_delete", "uttr_infill",
                            "uttr_permute", "uttr_mask", "task_oriented")}, seed=3442)
    first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    save_pairs(mix_tasks(items, mix, CFG, 200), first)
    save_pairs(mix_tasks(items, mix, CFG, 200), second)
    assert first.read_bytes() == second.read_bytes()
    assert load_pairs(first) == load_pairs(second)


def test_mix_scheduling_independent():
    rng = random.Random(23)
    items = [make_dialogue(rng, f"d{i}") for i in range(4)]
    mix = TaskMix.equal_reconstruction(seed=1)
    in_order = [mixed_pair(items, mix, CFG, i) for i in range(30)]
    reversed_order = [mixed_pair(items, mix, CFG, i) for i in reversed(range(30))]
    assert in_order == list(reversed(reversed_order))


def test_mix_task_oriented_requires_parallel():
    rng = random.Random(24)
    items = [make_dialogue(rng, "d0")]
    mix = TaskMix(weights={"task_oriented": 1.0}, seed=0)
    with pytest.raises(ValueError):
        list(mix_tasks(items, mix, CFG, 1))


def test_mix_weight_validation():
    with pytest.raises(ValueError):
        TaskMix(weights={})
    with pytest.raises(ValueError):
        TaskMix(weights={"token_mask": -1.0})
    with pytest.raises(ValueError):
        TaskMix(weights={"bogus_task": 1.0})


def test_pairs_file_round_trip(tmp_path):
    rng = random.Random(25)
    items = [make_example(rng, f"e{i}") for i in range(3)]
    pairs = [make_task_oriented_pair(ex) for ex in items]
    pairs.append(token_masking(items[0].dialogue, CFG, random.Random(0)))
    path = tmp_path / "pairs.jsonl"
    assert save_pairs(pairs, path) == 4
    assert load_pairs(path) == pairs
