"""LLM-assisted quality scoring: few-shot prompt assembly, pluggable scoring
clients (HTTP chat-completions or a deterministic offline mock) and the
prediction-vs-proctor error-rate metric."""

import re
from dataclasses import dataclass, field

import requests

from .errors import DataError, KwfstError
from .evaluate import per

DEFAULT_EXAMPLE_COUNT = 3
DEFAULT_RUNS = 5
DEFAULT_TEMPERATURE = 0.1

_NUMBER = re.compile(r"[-+]?\d+(?:\.\d+)?")

PROMPT_HEADER = (
    "You are grading a child's oral reading of a passage.\n"
    "Given the reference phoneme sequence, the transcribed phoneme sequence,\n"
    "the recording duration and the passage word count, produce a single\n"
    "numeric quality score consistent with the scored examples below.\n")


@dataclass(frozen=True)
class ScoringInputs:
    reference: list         # prompted phoneme sequence
    transcribed: list       # verbatim decoded phoneme sequence
    duration_s: float
    word_count: int

    def __post_init__(self):
        if self.reference is None or self.transcribed is None:
            raise DataError("missing phoneme sequence")
        if self.duration_s is None or self.word_count is None:
            raise DataError("missing duration or word count")


@dataclass
class ScoreRecord:
    utterance_id: str
    predicted_score: float
    reference_score: float

    def __post_init__(self):
        if self.reference_score <= 0:
            raise DataError("reference score must be positive")
        if self.predicted_score < 0:
            raise DataError("predicted score must be non-negative")

    @property
    def error_rate(self):
        return score_error_rate(self.predicted_score, self.reference_score)

    def to_dict(self):
        return {"utterance_id": self.utterance_id,
                "predicted": self.predicted_score,
                "reference": self.reference_score,
                "error_rate": round(self.error_rate, 9)}


def _render(inputs):
    return (f"reference phonemes: {' '.join(inputs.reference)}\n"
            f"transcribed phonemes: {' '.join(inputs.transcribed)}\n"
            f"duration seconds: {inputs.duration_s:.3f}\n"
            f"word count: {inputs.word_count}\n")


def build_prompt(examples, target, example_count=DEFAULT_EXAMPLE_COUNT):
    """Deterministic few-shot prompt; byte-identical for identical inputs."""
    if len(examples) != example_count:
        raise DataError(
            f"need exactly {example_count} scored examples, got {len(examples)}")
    parts = [PROMPT_HEADER]
    for i, (inputs, score) in enumerate(examples, 1):
        parts.append(f"\nExample {i}:\n{_render(inputs)}score: {score:g}\n")
    parts.append(f"\nNow score this performance.\n{_render(target)}score:")
    return "".join(parts)


def parse_score(completion):
    """First decimal number after the last 'score' token; None if absent."""
    low = completion.lower()
    idx = low.rfind("score")
    if idx < 0:
        return None
    m = _NUMBER.search(completion[idx + len("score"):])
    return float(m.group()) if m else None


class MockScoringClient:
    """Offline deterministic scorer.

    Parses the target block back out of the prompt and rates it as
    word_count * clamp(1 - PER/100, 0, 1), rounded to the nearest integer.
    """

    deterministic = True

    def complete(self, prompt, temperature=0.0):
        block = prompt.rsplit("Now score this performance.", 1)[-1]

        def seq(name):
            m = re.search(rf"{name} phonemes: (.*)", block)
            return m.group(1).split() if m else None

        ref = seq("reference")
        hyp = seq("transcribed")
        m = re.search(r"word count: (\d+)", block)
        if ref is None or hyp is None or m is None:
            raise DataError("mock scorer could not parse the prompt target")
        words = int(m.group(1))
        rate = per(ref, hyp).per if ref else 100.0
        quality = min(max(1.0 - rate / 100.0, 0.0), 1.0)
        return f"score: {round(words * quality)}"


class HttpScoringClient:
    """Chat-completions style JSON client (any OpenAI-compatible endpoint)."""

    deterministic = False

    def __init__(self, endpoint, model, timeout=60.0):
        if not endpoint:
            raise DataError("scoring endpoint is required for the http backend")
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.timeout = timeout

    def complete(self, prompt, temperature=DEFAULT_TEMPERATURE):
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
        }
        resp = requests.post(f"{self.endpoint}/chat/completions",
                             json=payload, timeout=self.timeout)
        resp.raise_for_status()
        return resp.json()["choices"][0]["message"]["content"]


@dataclass
class ScoreOutcome:
    score: float
    completions: list = field(default_factory=list)
    failures: list = field(default_factory=list)


def llm_score(prompt, client, runs=DEFAULT_RUNS,
              temperature=DEFAULT_TEMPERATURE):
    """Mean parsed score over `runs` completions; raw completions kept for
    audit.  An unparseable completion is retried once, then excluded."""
    if runs < 1:
        raise DataError("runs must be >= 1")
    scores = []
    outcome = ScoreOutcome(0.0)
    for _ in range(runs):
        value = None
        for _attempt in range(2):
            text = client.complete(prompt, temperature=temperature)
            outcome.completions.append(text)
            value = parse_score(text)
            if value is not None:
                break
        if value is None:
            outcome.failures.append(text)
        else:
            scores.append(value)
    if not scores:
        raise KwfstError("no completion yielded a parseable score")
    outcome.score = sum(scores) / len(scores)
    return outcome


def score_error_rate(predicted, reference):
    """|predicted - reference| / reference."""
    if reference <= 0:
        raise DataError("reference score must be positive")
    return abs(predicted - reference) / reference


def mean_error_rate(records):
    """Mean of record error rates, as a percentage."""
    if not records:
        raise DataError("no score records")
    return 100.0 * sum(r.error_rate for r in records) / len(records)


def make_client(backend, endpoint=None, model=None):
    if backend == "mock":
        return MockScoringClient()
    if backend == "http":
        return HttpScoringClient(endpoint, model)
    raise DataError(f"unknown scoring backend {backend!r}")
