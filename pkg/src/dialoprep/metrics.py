"""Tokenizer, ROUGE-1/2/L, extractive fragments, corpus statistics, evaluation protocols.

One tokenizer is used everywhere a statistic is computed: lowercase, split on
runs of non-alphanumeric characters, no stemming, stopwords kept. Empty-input
ROUGE conventions are total: both sides empty scores 1.0, exactly one side
empty scores 0.0 (packages differ here; ours is fixed so golden files are
stable).

Corpus statistics follow the per-example-average convention: every corpus
field is the unweighted mean of per-example values, never a ratio of corpus
totals. Per-example dialogue text is the rendered ``role: utterance`` form,
so summaries that mention speakers by name can match.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import EmptyCorpusError, EmptySummaryError
from .records import Dialogue, ParallelExample, render_dialogue_text

# Unicode letters and digits; underscore excluded.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

#: Recorded in reports so stored statistics name the convention they used.
TOKENIZER_LABEL = "lowercase, non-alphanumeric split, no stemming"


def tokenize_for_metrics(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric run. Never yields empty tokens."""
    return _TOKEN_RE.findall(text.lower())


def _as_tokens(text_or_tokens: str | Sequence[str]) -> list[str]:
    if isinstance(text_or_tokens, str):
        return tokenize_for_metrics(text_or_tokens)
    return list(text_or_tokens)


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalScores:
    """The R-1 / R-2 / R-L triple reported by the evaluation protocols."""

    rouge1: RougeScore
    rouge2: RougeScore
    rougeL: RougeScore

    def rouge_avg(self) -> float:
        return (self.rouge1.f1 + self.rouge2.f1 + self.rougeL.f1) / 3.0


def _score(precision: float, recall: float) -> RougeScore:
    if precision + recall == 0.0:
        return RougeScore(precision, recall, 0.0)
    return RougeScore(precision, recall, 2.0 * precision * recall / (precision + recall))


def _ngrams(tokens: Sequence[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def rouge_n(candidate: str | Sequence[str], reference: str | Sequence[str], n: int,
            unique_ngrams: bool = False) -> RougeScore:
    """Clipped n-gram overlap ROUGE. ``unique_ngrams`` counts each n-gram type once
    (the convention used for gap-utterance scoring)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    cand = _ngrams(_as_tokens(candidate), n)
    ref = _ngrams(_as_tokens(reference), n)
    if not cand and not ref:
        return RougeScore(1.0, 1.0, 1.0)
    if not cand or not ref:
        return RougeScore(0.0, 0.0, 0.0)
    if unique_ngrams:
        cand_set, ref_set = set(cand), set(ref)
        overlap = len(cand_set & ref_set)
        return _score(overlap / len(cand_set), overlap / len(ref_set))
    cand_counts, ref_counts = Counter(cand), Counter(ref)
    overlap = sum(min(c, ref_counts[g]) for g, c in cand_counts.items())
    return _score(overlap / len(cand), overlap / len(ref))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                curr.append(prev[j - 1] + 1)
            else:
                curr.append(max(prev[j], curr[j - 1]))
        prev = curr
    return prev[-1]


def rouge_l(candidate: str | Sequence[str], reference: str | Sequence[str]) -> RougeScore:
    """Longest-common-subsequence ROUGE over metric tokens."""
    cand = _as_tokens(candidate)
    ref = _as_tokens(reference)
    if not cand and not ref:
        return RougeScore(1.0, 1.0, 1.0)
    if not cand or not ref:
        return RougeScore(0.0, 0.0, 0.0)
    lcs = _lcs_length(cand, ref)
    return _score(lcs / len(cand), lcs / len(ref))


def score_pair(candidate: str | Sequence[str], reference: str | Sequence[str]) -> EvalScores:
    """R-1, R-2 and R-L for one candidate/reference pair."""
    cand = _as_tokens(candidate)
    ref = _as_tokens(reference)
    return EvalScores(
        rouge1=rouge_n(cand, ref, 1),
        rouge2=rouge_n(cand, ref, 2),
        rougeL=rouge_l(cand, ref),
    )


# ---------------------------------------------------------------------------
# Extractive fragments (greedy longest-match tiling of the summary)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Fragment:
    summary_start: int
    dialogue_start: int
    length: int


@dataclass(frozen=True)
class FragmentSet:
    """Greedy extractive fragments of a summary against a dialogue.

    Fragments are non-overlapping in the summary and sorted by summary
    position; coverage and density are derived from fragment lengths.
    """

    fragments: tuple[Fragment, ...]
    summary_length: int

    def coverage(self) -> float:
        if self.summary_length == 0:
            return 0.0
        return sum(f.length for f in self.fragments) / self.summary_length

    def density(self) -> float:
        if self.summary_length == 0:
            return 0.0
        return sum(f.length ** 2 for f in self.fragments) / self.summary_length


def extractive_fragments(dialogue_tokens: Sequence[str],
                         summary_tokens: Sequence[str]) -> FragmentSet:
    """Scan the summary left to right; at each position take the longest common
    substring starting there that occurs anywhere in the dialogue (earliest
    dialogue occurrence on ties), emit it and jump past it. Unmatched tokens
    advance by one with no fragment."""
    a = list(dialogue_tokens)
    s = list(summary_tokens)
    # Positions of each dialogue token, in order, for earliest-occurrence ties.
    positions: dict[str, list[int]] = {}
    for j, tok in enumerate(a):
        positions.setdefault(tok, []).append(j)
    fragments: list[Fragment] = []
    i = 0
    while i < len(s):
        best_len = 0
        best_j = -1
        for j in positions.get(s[i], ()):
            length = 1
            while (i + length < len(s) and j + length < len(a)
                   and s[i + length] == a[j + length]):
                length += 1
            if length > best_len:
                best_len = length
                best_j = j
        if best_len > 0:
            fragments.append(Fragment(summary_start=i, dialogue_start=best_j, length=best_len))
            i += best_len
        else:
            i += 1
    return FragmentSet(fragments=tuple(fragments), summary_length=len(s))


# ---------------------------------------------------------------------------
# Per-example and corpus statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExampleStats:
    dialogue_tokens: int
    summary_tokens: int
    compression: float
    coverage: float
    density: float
    novel_ngram_pct: tuple[float, float, float]      # n = 1, 2, 3
    redundant_ngram_pct: tuple[float, float, float]  # n = 1, 2, 3


@dataclass(frozen=True)
class CorpusStats:
    n_dialogues: int
    mean_dialogue_tokens: float
    mean_summary_tokens: float
    compression: float
    coverage: float
    density: float
    novel_ngram_pct: tuple[float, float, float]
    redundant_ngram_pct: tuple[float, float, float]

    def to_dict(self) -> dict:
        return {
            "n_dialogues": self.n_dialogues,
            "mean_dialogue_tokens": self.mean_dialogue_tokens,
            "mean_summary_tokens": self.mean_summary_tokens,
            "compression": self.compression,
            "coverage": self.coverage,
            "density": self.density,
            "novel_ngram_pct": list(self.novel_ngram_pct),
            "redundant_ngram_pct": list(self.redundant_ngram_pct),
        }


def novel_ngram_pct(summary_tokens: Sequence[str], dialogue_tokens: Sequence[str], n: int,
                    set_based: bool = False) -> float:
    """Percentage of summary n-grams that never occur in the dialogue.

    Instance-based by default (each summary occurrence counts); ``set_based``
    counts each distinct summary n-gram once.
    """
    grams = _ngrams(list(summary_tokens), n)
    if not grams:
        return 0.0
    dialogue_grams = set(_ngrams(list(dialogue_tokens), n))
    if set_based:
        types = set(grams)
        novel = sum(1 for g in types if g not in dialogue_grams)
        return 100.0 * novel / len(types)
    novel = sum(1 for g in grams if g not in dialogue_grams)
    return 100.0 * novel / len(grams)


def redundant_ngram_pct(summary_tokens: Sequence[str], n: int,
                        type_based: bool = False) -> float:
    """Percentage of repeated n-gram instances within a summary: 100 * (1 - unique/total).

    ``type_based`` instead reports the share of n-gram types occurring more
    than once.
    """
    grams = _ngrams(list(summary_tokens), n)
    if not grams:
        return 0.0
    if type_based:
        counts = Counter(grams)
        return 100.0 * sum(1 for c in counts.values() if c > 1) / len(counts)
    return 100.0 * (1.0 - len(set(grams)) / len(grams))


def example_stats(ex: ParallelExample, summary_index: int = 0,
                  set_based_novelty: bool = False) -> ExampleStats:
    """Compression, coverage, density, novelty and redundancy for one example.

    The dialogue side is the rendered ``role: utterance`` text, tokenized with
    the metrics tokenizer.
    """
    dialogue_tokens = tokenize_for_metrics(render_dialogue_text(ex.dialogue))
    summary_tokens = tokenize_for_metrics(ex.summaries[summary_index].text)
    if not summary_tokens:
        raise EmptySummaryError(
            f"summary {summary_index} of dialogue {ex.dialogue.id!r} has no tokens")
    frags = extractive_fragments(dialogue_tokens, summary_tokens)
    return ExampleStats(
        dialogue_tokens=len(dialogue_tokens),
        summary_tokens=len(summary_tokens),
        compression=len(dialogue_tokens) / len(summary_tokens),
        coverage=frags.coverage(),
        density=frags.density(),
        novel_ngram_pct=tuple(
            novel_ngram_pct(summary_tokens, dialogue_tokens, n, set_based=set_based_novelty)
            for n in (1, 2, 3)),
        redundant_ngram_pct=tuple(redundant_ngram_pct(summary_tokens, n) for n in (1, 2, 3)),
    )


def corpus_report(examples: Sequence[ParallelExample], summary_index: int = 0,
                  set_based_novelty: bool = False) -> CorpusStats:
    """Unweighted per-example means of every statistic over a corpus."""
    if not examples:
        raise EmptyCorpusError("cannot compute statistics over an empty corpus")
    per_example = [example_stats(ex, summary_index, set_based_novelty) for ex in examples]

    def mean(values) -> float:
        return math.fsum(values) / len(per_example)

    return CorpusStats(
        n_dialogues=len(per_example),
        mean_dialogue_tokens=mean(s.dialogue_tokens for s in per_example),
        mean_summary_tokens=mean(s.summary_tokens for s in per_example),
        compression=mean(s.compression for s in per_example),
        coverage=mean(s.coverage for s in per_example),
        density=mean(s.density for s in per_example),
        novel_ngram_pct=tuple(
            mean(s.novel_ngram_pct[k] for s in per_example) for k in range(3)),
        redundant_ngram_pct=tuple(
            mean(s.redundant_ngram_pct[k] for s in per_example) for k in range(3)),
    )


def format_stats_table(stats: CorpusStats) -> str:
    """Human-readable rendering of a corpus report."""
    rows = [
        ("dialogues", f"{stats.n_dialogues}"),
        ("tokens/dialogue", f"{stats.mean_dialogue_tokens:.1f}"),
        ("tokens/summary", f"{stats.mean_summary_tokens:.1f}"),
        ("compression", f"{stats.compression:.2f}"),
        ("coverage", f"{stats.coverage:.2f}"),
        ("density", f"{stats.density:.2f}"),
    ]
    for k, n in enumerate((1, 2, 3)):
        rows.append((f"novel {n}-gram %", f"{stats.novel_ngram_pct[k]:.2f}"))
    for k, n in enumerate((1, 2, 3)):
        rows.append((f"redundant {n}-gram %", f"{stats.redundant_ngram_pct[k]:.2f}"))
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name.ljust(width)}  {value}" for name, value in rows)


# ---------------------------------------------------------------------------
# Evaluation protocols
# ---------------------------------------------------------------------------

def multi_reference_rouge(candidate: str | Sequence[str],
                          references: Sequence[str | Sequence[str]]) -> EvalScores:
    """Arithmetic mean of each metric (P, R and F1 componentwise) over all references."""
    if not references:
        raise ValueError("at least one reference is required")
    scored = [score_pair(candidate, ref) for ref in references]

    def mean_score(pick) -> RougeScore:
        n = len(scored)
        return RougeScore(
            precision=math.fsum(pick(s).precision for s in scored) / n,
            recall=math.fsum(pick(s).recall for s in scored) / n,
            f1=math.fsum(pick(s).f1 for s in scored) / n,
        )

    return EvalScores(
        rouge1=mean_score(lambda s: s.rouge1),
        rouge2=mean_score(lambda s: s.rouge2),
        rougeL=mean_score(lambda s: s.rougeL),
    )


def select_training_reference(dialogue: str | Dialogue,
                              references: Sequence[str | Sequence[str]]) -> int:
    """Index of the reference with the highest ROUGE-Avg (mean of R-1/R-2/R-L F1)
    against the dialogue text; lowest index wins ties."""
    if not references:
        raise ValueError("at least one reference is required")
    if isinstance(dialogue, Dialogue):
        dialogue = render_dialogue_text(dialogue)
    best_index = 0
    best_score = -1.0
    for i, ref in enumerate(references):
        avg = score_pair(dialogue, ref).rouge_avg()
        if avg > best_score:
            best_score = avg
            best_index = i
    return best_index


def truncate_summary(text_or_tokens: str | Sequence[str], max_length: int) -> list[str]:
    """First ``max_length`` metric tokens of a summary (the zero-shot length limit)."""
    if max_length < 1:
        raise ValueError("max_length must be >= 1")
    return _as_tokens(text_or_tokens)[:max_length]
