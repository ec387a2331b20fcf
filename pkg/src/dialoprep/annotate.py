"""Summarization prompts and the batch annotation client.

Prompts come in three fixed variants; the instruct variant (``Tl;dr:`` after
the dialogue) is the default because it scores best in zero-shot use. The
batch client POSTs a chat-completion body, retries retryable statuses with
exponential backoff, respects a request budget, bounds in-flight concurrency,
and appends every success to the output file as it lands so an interrupted
run resumes by skipping already-annotated ids. Failures are reported, never
silently dropped.

The API key is read from the ``LLM_API_KEY`` environment variable and is
never written to config files, reports, or logs.
"""

from __future__ import annotations

import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Protocol, Sequence

import requests

from .errors import BudgetExhaustedError, EndpointError
from .records import (
    Dialogue,
    ParallelExample,
    SummaryRecord,
    load_corpus,
    record_to_obj,
    render_dialogue_text,
)

API_KEY_ENV = "LLM_API_KEY"

_PRECEDING_PROMPT = "Summarize the following dialogue into a short summary:"
_INSTRUCT_PROMPT = "Tl;dr:"
_SUBSEQUENT_PROMPT = "Summarize the above dialogue into a short summary:"


class PromptTemplate(Enum):
    PRECEDING = "preceding"
    INSTRUCT = "instruct"
    SUBSEQUENT = "subsequent"


def build_prompt(d: Dialogue, template: PromptTemplate = PromptTemplate.INSTRUCT) -> str:
    """Compose the annotation prompt for one dialogue. Byte-deterministic."""
    dialogue = render_dialogue_text(d)
    if template is PromptTemplate.PRECEDING:
        return f"{_PRECEDING_PROMPT}\n\n{dialogue}"
    if template is PromptTemplate.INSTRUCT:
        return f"{dialogue}\n{_INSTRUCT_PROMPT}"
    return f"{dialogue}\n{_SUBSEQUENT_PROMPT}"


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_backoff: float = 1.0
    backoff_multiplier: float = 2.0
    retryable_statuses: frozenset[int] = frozenset({429, 500, 502, 503, 504})

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.backoff_multiplier < 1:
            raise ValueError("backoff_multiplier must be >= 1")
        object.__setattr__(self, "retryable_statuses", frozenset(self.retryable_statuses))

    def backoff(self, attempt: int) -> float:
        """Delay before retry number ``attempt`` (1-based)."""
        return self.base_backoff * self.backoff_multiplier ** (attempt - 1)


@dataclass(frozen=True)
class AnnotationJob:
    model: str
    temperature: float = 0.0
    template: PromptTemplate = PromptTemplate.INSTRUCT
    max_in_flight: int = 1
    budget: int | None = None  # max requests for this run, retries included

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.budget is not None and self.budget < 0:
            raise ValueError("budget must be >= 0")


class AnnotationEndpoint(Protocol):
    """Anything that can answer a chat-completion request."""

    def complete(self, payload: dict) -> tuple[int, dict | str]:
        """Return (status code, parsed response body or raw text)."""
        ...


class HttpEndpoint:
    """Live chat-completion-compatible endpoint."""

    def __init__(self, base_url: str, timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def complete(self, payload: dict) -> tuple[int, dict | str]:
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        response = requests.post(f"{self.base_url}/chat/completions",
                                 json=payload, headers=headers, timeout=self.timeout)
        try:
            return response.status_code, response.json()
        except ValueError:
            return response.status_code, response.text


class MockEndpoint:
    """Offline endpoint for tests and the demo pipeline.

    ``fixed:<text>`` answers every request with the same summary;
    ``head:<k>`` echoes the first k whitespace tokens of the prompt;
    ``digest:<k>`` writes a fixed preamble plus k evenly spaced prompt tokens,
    a cheap stand-in for an abstractive summarizer.
    """

    def __init__(self, behavior: str):
        self.behavior = behavior
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, payload: dict) -> tuple[int, dict]:
        with self._lock:
            self.calls += 1
        prompt = payload["messages"][0]["content"]
        if self.behavior.startswith("fixed:"):
            text = self.behavior[len("fixed:"):]
        elif self.behavior.startswith("head:"):
            k = int(self.behavior[len("head:"):])
            text = " ".join(prompt.split()[:k])
        elif self.behavior.startswith("digest:"):
            k = int(self.behavior[len("digest:"):])
            words = prompt.split()
            step = max(1, len(words) // k)
            picked = [words[i] for i in range(0, len(words), step)][:k]
            text = "overall they discuss " + " ".join(picked)
        else:
            raise ValueError(f"unknown mock behavior {self.behavior!r}")
        return 200, {"choices": [{"message": {"role": "assistant", "content": text}}]}


@dataclass
class AnnotationReport:
    completed: list[str] = field(default_factory=list)
    skipped_existing: list[str] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    retries: dict[str, int] = field(default_factory=dict)
    budget_exhausted: bool = False
    not_attempted: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "completed": self.completed,
            "skipped_existing": self.skipped_existing,
            "failures": self.failures,
            "retries": self.retries,
            "budget_exhausted": self.budget_exhausted,
            "not_attempted": self.not_attempted,
        }


def _extract_summary(body: dict | str) -> str:
    if isinstance(body, dict):
        try:
            return body["choices"][0]["message"]["content"].strip()
        except (KeyError, IndexError, TypeError, AttributeError):
            pass
    raise EndpointError(200, f"unexpected response body: {str(body)[:200]}")


class _Budget:
    """Thread-safe request counter; acquire() is False once spent."""

    def __init__(self, limit: int | None):
        self._limit = limit
        self._used = 0
        self._lock = threading.Lock()

    def acquire(self) -> bool:
        with self._lock:
            if self._limit is not None and self._used >= self._limit:
                return False
            self._used += 1
            return True


def _annotate_one(d: Dialogue, job: AnnotationJob, endpoint: AnnotationEndpoint,
                  policy: RetryPolicy, budget: _Budget,
                  sleep: Callable[[float], None]) -> tuple[str, int]:
    """Annotate one dialogue with retries. Returns (summary, retry count).

    Raises EndpointError after exhausting attempts and BudgetExhaustedError
    when no request allowance remains.
    """
    prompt = build_prompt(d, job.template)
    payload = {
        "model": job.model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": job.temperature,
    }
    last_status, last_body = 0, ""
    for attempt in range(1, policy.max_attempts + 1):
        if not budget.acquire():
            raise BudgetExhaustedError(d.id)
        try:
            status, body = endpoint.complete(payload)
        except Exception as exc:  # network timeouts etc. are retryable
            status, body = -1, repr(exc)
        if status == 200:
            return _extract_summary(body), attempt - 1
        last_status, last_body = status, body
        retryable = status == -1 or status in policy.retryable_statuses
        if not retryable or attempt == policy.max_attempts:
            break
        sleep(policy.backoff(attempt))
    raise EndpointError(last_status, str(last_body)[:200])


def existing_annotated_ids(out_path: str | Path) -> set[str]:
    """Dialogue ids already present in an annotation output file."""
    if not Path(out_path).exists():
        return set()
    return {ex.dialogue.id for ex in load_corpus(out_path, "parallel")}


def annotate_batch(dialogues: Sequence[Dialogue], job: AnnotationJob,
                   endpoint: AnnotationEndpoint, out_path: str | Path,
                   policy: RetryPolicy | None = None,
                   sleep: Callable[[float], None] = time.sleep) -> AnnotationReport:
    """Annotate a batch, appending each success to ``out_path`` immediately.

    Reruns skip ids already present in the output file, so partial runs are
    resumable. At most ``job.max_in_flight`` requests run concurrently; the
    output file has a single writer.
    """
    policy = policy or RetryPolicy()
    report = AnnotationReport()
    done = existing_annotated_ids(out_path)
    pending: list[Dialogue] = []
    for d in dialogues:
        if d.id in done:
            report.skipped_existing.append(d.id)
        else:
            pending.append(d)

    budget = _Budget(job.budget)
    with open(out_path, "a", encoding="utf-8") as out, \
            ThreadPoolExecutor(max_workers=job.max_in_flight) as pool:
        futures = [(d, pool.submit(_annotate_one, d, job, endpoint,
                                   policy, budget, sleep))
                   for d in pending]
        for d, future in futures:
            try:
                summary, retry_count = future.result()
            except BudgetExhaustedError:
                report.budget_exhausted = True
                report.not_attempted.append(d.id)
                continue
            except EndpointError as exc:
                report.failures.append({
                    "dialogue_id": d.id,
                    "status": exc.status,
                    "reason": exc.body_excerpt,
                })
                continue
            if retry_count:
                report.retries[d.id] = retry_count
            example = ParallelExample(
                dialogue=d,
                summaries=(SummaryRecord(text=summary, origin="annotated"),))
            out.write(json.dumps(record_to_obj(example), ensure_ascii=False) + "\n")
            out.flush()
            report.completed.append(d.id)
    return report


def save_failure_report(report: AnnotationReport, path: str | Path) -> None:
    """Write the failure side of a run as line-delimited records."""
    with open(path, "w", encoding="utf-8") as fh:
        for failure in report.failures:
            fh.write(json.dumps({"kind": "failure", **failure}, ensure_ascii=False) + "\n")
        for dialogue_id in report.not_attempted:
            fh.write(json.dumps({"kind": "budget_exhausted", "dialogue_id": dialogue_id},
                                ensure_ascii=False) + "\n")
