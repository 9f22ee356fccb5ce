"""One reasoning call: HTTP chat-completion client plus a Markov-parameterized mock.

Every call is stateless: the full context is sent as a single user message,
and only the summarized solution (thinking block removed) flows downstream.
The raw text is preserved on the response for persistence.
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass, field

import requests

from .answers import AnswerKey, extract_answer, normalize_answer
from .markov import TransitionParams

import random

THINK_OPEN = "<think>"
THINK_CLOSE = "</think>"

CONTEXT_SEPARATOR = "\n\n"


class BackendError(Exception):
    pass


class BackendUnavailable(BackendError):
    """Retries exhausted without a usable response."""


class BackendTimeout(BackendError):
    """The request deadline elapsed on every attempt."""


class ResponseTruncated(BackendError):
    """The token budget was hit before the completion finished."""

    def __init__(self, message: str, partial_text: str = ""):
        super().__init__(message)
        self.partial_text = partial_text


@dataclass(frozen=True)
class ReasoningRequest:
    """Context segments for one call, e.g. [q; s; p_v; v; p_r] for a refine."""

    context: tuple[str, ...]
    max_response_tokens: int = 65536
    temperature: float = 0.6
    request_seed: int | None = None

    def __post_init__(self):
        if not self.context:
            raise ValueError("context must be non-empty")
        if self.max_response_tokens < 1:
            raise ValueError("max_response_tokens must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def rendered(self) -> str:
        return CONTEXT_SEPARATOR.join(self.context)


@dataclass
class ReasoningResponse:
    full_text: str
    summary_text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency_s: float = 0.0
    malformed_thinking: bool = False


def strip_thinking(full_text: str) -> tuple[str, bool]:
    """Remove the first well-formed thinking block; returns (summary, malformed).

    Text without delimiters passes through unchanged. An unclosed opening
    delimiter removes everything from it onward and sets the malformed flag.
    """
    start = full_text.find(THINK_OPEN)
    if start == -1:
        return full_text, False
    end = full_text.find(THINK_CLOSE, start + len(THINK_OPEN))
    if end == -1:
        return full_text[:start].strip(), True
    before = full_text[:start]
    after = full_text[end + len(THINK_CLOSE):]
    return (before.strip() + "\n" + after.strip()).strip(), False


@dataclass(frozen=True)
class BackendConfig:
    """HTTP backend settings; the auth token is named by env var, never inline."""

    endpoint: str
    model: str
    auth_env: str | None = None
    timeout_s: float = 600.0
    max_attempts: int = 3
    backoff_base_ms: int = 250
    backoff_max_ms: int = 8000
    rps: float | None = None
    max_in_flight: int = 8
    max_response_tokens: int = 65536
    temperature: float = 0.6

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be > 0")


class HttpBackend:
    """Chat-completion client with retry/backoff, an in-flight cap, and an rps limit.

    Safe for concurrent use; the limiter state is shared and synchronized.
    """

    def __init__(self, config: BackendConfig):
        self.config = config
        self._session = requests.Session()
        self._inflight = threading.Semaphore(config.max_in_flight)
        self._rate_lock = threading.Lock()
        self._next_allowed = 0.0

    def _throttle(self) -> None:
        if self.config.rps is None:
            return
        with self._rate_lock:
            now = time.monotonic()
            wait = self._next_allowed - now
            self._next_allowed = max(now, self._next_allowed) + 1.0 / self.config.rps
        if wait > 0:
            time.sleep(wait)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.config.auth_env:
            token = os.environ.get(self.config.auth_env)
            if token:
                headers["Authorization"] = f"Bearer {token}"
        return headers

    def reasoning_call(self, request: ReasoningRequest) -> ReasoningResponse:
        body = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.rendered()}],
            "max_tokens": request.max_response_tokens,
            "temperature": request.temperature,
        }
        if request.request_seed is not None:
            body["seed"] = request.request_seed

        last_error: Exception | None = None
        timed_out = False
        with self._inflight:
            for attempt in range(self.config.max_attempts):
                if attempt > 0:
                    delay = min(
                        self.config.backoff_base_ms * 2 ** (attempt - 1),
                        self.config.backoff_max_ms,
                    )
                    time.sleep(delay / 1000.0)
                self._throttle()
                started = time.monotonic()
                try:
                    resp = self._session.post(
                        self.config.endpoint,
                        json=body,
                        headers=self._headers(),
                        timeout=self.config.timeout_s,
                    )
                except requests.Timeout as e:
                    last_error, timed_out = e, True
                    continue
                except requests.RequestException as e:
                    last_error = e
                    continue
                if resp.status_code in (429,) or resp.status_code >= 500:
                    last_error = BackendError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                    continue
                if resp.status_code != 200:
                    raise BackendUnavailable(
                        f"HTTP {resp.status_code}: {resp.text[:200]}"
                    )
                payload = resp.json()
                choice = payload["choices"][0]
                full_text = choice["message"]["content"]
                if choice.get("finish_reason") == "length":
                    raise ResponseTruncated(
                        "completion hit the response token budget",
                        partial_text=full_text,
                    )
                summary, malformed = strip_thinking(full_text)
                usage = payload.get("usage", {})
                return ReasoningResponse(
                    full_text=full_text,
                    summary_text=summary,
                    prompt_tokens=int(usage.get("prompt_tokens", 0)),
                    completion_tokens=int(usage.get("completion_tokens", 0)),
                    latency_s=time.monotonic() - started,
                    malformed_thinking=malformed,
                )
        if timed_out:
            raise BackendTimeout(f"all {self.config.max_attempts} attempts timed out") from last_error
        raise BackendUnavailable(
            f"retries exhausted after {self.config.max_attempts} attempts"
        ) from last_error


# ---------------------------------------------------------------------------
# Mock backend
# ---------------------------------------------------------------------------

# Wrong answers live in a fixed integer range disjoint from real answers,
# giving a controllable collision rate between diverging incorrect solutions.
WRONG_ANSWER_BASE = 100_000


@dataclass(frozen=True)
class MockSpec:
    """Markov parameterization of a simulated reasoner.

    alpha / beta are the verification pass rates given an Incorrect / Correct
    solution; transition governs correctness flips on refine.
    """

    ground_truth: AnswerKey
    initial_correct_probability: float
    transition: TransitionParams
    alpha: float = 0.1
    beta: float = 0.9
    wrong_answer_space: int = 100

    def __post_init__(self):
        for name in ("initial_correct_probability", "alpha", "beta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.wrong_answer_space < 1:
            raise ValueError("wrong_answer_space must be >= 1")


def _wrong_answer(spec: MockSpec, rng: random.Random) -> str:
    k = rng.randrange(spec.wrong_answer_space)
    candidate = str(WRONG_ANSWER_BASE + k)
    if candidate == spec.ground_truth.canonical:
        candidate = str(WRONG_ANSWER_BASE + spec.wrong_answer_space)
    return candidate


def _solution_text(answer: str, seed: int) -> str:
    return (
        f"{THINK_OPEN}working on it (trace {seed}){THINK_CLOSE}\n"
        f"After reworking the key steps, the result follows.\n"
        f"Final answer: \\boxed{{{answer}}}"
    )


def mock_reasoning_call(
    spec: MockSpec, request_kind: str, hidden_state: str, seed: int
) -> tuple[ReasoningResponse, str]:
    """Deterministic synthetic reasoning call.

    request_kind is "solve", "verify", or "refine"; hidden_state is "C" or
    "I" (ignored for solve). Returns the response and the next hidden state.
    """
    rng = random.Random(seed)
    correct = hidden_state == "C"
    if request_kind == "solve":
        correct = rng.random() < spec.initial_correct_probability
        answer = spec.ground_truth.canonical if correct else _wrong_answer(spec, rng)
        full = _solution_text(answer, seed)
    elif request_kind == "verify":
        passed = rng.random() < (spec.beta if correct else spec.alpha)
        full = (
            f"{THINK_OPEN}checking each step (trace {seed}){THINK_CLOSE}\n"
            f"Verification report: the solution was checked step by step.\n"
            f"\\boxed{{{1 if passed else 0}}}"
        )
    elif request_kind == "refine":
        flip_p = spec.transition.p_ci if correct else spec.transition.p_ic
        if rng.random() < flip_p:
            correct = not correct
        answer = spec.ground_truth.canonical if correct else _wrong_answer(spec, rng)
        full = _solution_text(answer, seed)
    else:
        raise ValueError(f"unknown request kind {request_kind!r}")
    summary, malformed = strip_thinking(full)
    words = sum(len(seg.split()) for seg in (full,))
    response = ReasoningResponse(
        full_text=full,
        summary_text=summary,
        prompt_tokens=0,
        completion_tokens=words,
        malformed_thinking=malformed,
    )
    return response, ("C" if correct else "I")


class MockBackend:
    """Backend double that realizes the mock spec behind reasoning_call.

    The request kind and hidden correctness are inferred from the request
    context itself (segment count; answer embedded in the prior solution), so
    the mock is a pure function of (spec, request) and resume-safe.
    """

    def __init__(self, spec: MockSpec):
        self.spec = spec
        self._lock = threading.Lock()
        self._inflight = 0
        self.max_observed_inflight = 0
        self.call_count = 0

    def _classify(self, request: ReasoningRequest) -> tuple[str, str]:
        n = len(request.context)
        if n == 2:
            return "solve", "I"
        if n == 3:
            kind = "verify"
        elif n == 5:
            kind = "refine"
        else:
            raise ValueError(f"cannot classify request with {n} context segments")
        answer = extract_answer(request.context[1])
        correct = answer == self.spec.ground_truth
        return kind, ("C" if correct else "I")

    def reasoning_call(self, request: ReasoningRequest) -> ReasoningResponse:
        if request.request_seed is None:
            raise ValueError("mock backend requires request_seed")
        with self._lock:
            self._inflight += 1
            self.call_count += 1
            self.max_observed_inflight = max(self.max_observed_inflight, self._inflight)
        try:
            kind, state = self._classify(request)
            response, _ = mock_reasoning_call(self.spec, kind, state, request.request_seed)
            response.prompt_tokens = sum(len(seg.split()) for seg in request.context)
            return response
        finally:
            with self._lock:
                self._inflight -= 1


class MockBackendProvider:
    """Hands each problem a mock backend whose ground truth is that problem's
    answer; all other spec parameters are shared."""

    def __init__(self, spec: MockSpec):
        self.spec = spec
        self._lock = threading.Lock()
        self._backends: dict[str, MockBackend] = {}

    def for_problem(self, problem) -> MockBackend:
        truth = problem.answer if problem.answer is not None else self.spec.ground_truth
        with self._lock:
            backend = self._backends.get(problem.problem_id)
            if backend is None:
                backend = MockBackend(
                    MockSpec(
                        ground_truth=truth,
                        initial_correct_probability=self.spec.initial_correct_probability,
                        transition=self.spec.transition,
                        alpha=self.spec.alpha,
                        beta=self.spec.beta,
                        wrong_answer_space=self.spec.wrong_answer_space,
                    )
                )
                self._backends[problem.problem_id] = backend
            return backend


def mock_spec_from_dict(d: dict) -> MockSpec:
    """Build a MockSpec from a config-file mock section."""
    return MockSpec(
        ground_truth=normalize_answer(str(d["ground_truth"])),
        initial_correct_probability=float(d.get("initial_correct_probability", 0.0)),
        transition=TransitionParams(
            p_ic=float(d["p_ic"]), p_ci=float(d["p_ci"])
        ),
        alpha=float(d.get("alpha", 0.1)),
        beta=float(d.get("beta", 0.9)),
        wrong_answer_space=int(d.get("wrong_answer_space", 100)),
    )
