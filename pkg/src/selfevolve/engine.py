"""Trial controllers: the fixed-horizon solve/verify/refine loop and the
verification-dependent accept/reject variant, plus the parallel experiment
driver.

Every reasoning call context is exactly (q, s, p_v, v, p_r) or a prefix of
it; earlier solutions never re-enter the context, so the process is Markov in
the current solution. Calls within a trial are strictly sequential; trials
are embarrassingly parallel. All randomness flows through per-call seeds
derived from (run_seed, problem, trial, iteration, phase, attempt), which
makes resumed execution reproduce the uninterrupted run exactly.
"""

from __future__ import annotations

import dataclasses
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .answers import AnswerKey, extract_answer, normalize_answer
from .backend import BackendError, ReasoningRequest, ResponseTruncated
from .seeds import derive_seed
from .store import Event, RunLog, RunStore

DEFAULT_SOLVE_PROMPT = (
    "Solve the following problem step by step. "
    "Output your final answer strictly in the format: \\boxed{}."
)

DEFAULT_VERIFY_PROMPT = (
    "Verify the given solution step by step to check correctness. "
    "Provide a short verification report, containing the key points "
    "of the solution and any errors found. Finally, put your "
    "judgement strictly in the format: \\boxed{1} if correct, "
    "or \\boxed{0} if incorrect."
)

DEFAULT_REFINE_PROMPT = (
    "Given your previous solution and verification report, reconsider "
    "the problem carefully and provide a corrected solution. "
    "Output your final answer strictly in the format: \\boxed{}."
)

DSER = "dser"
VERDEP = "verdep"

RUNNING = "running"
COMPLETED = "completed"
ACCEPTED_EXIT = "accepted_exit"
REJECTED_EXIT = "rejected_exit"
ABORTED = "aborted"

TERMINAL_STATUSES = {COMPLETED, ACCEPTED_EXIT, REJECTED_EXIT, ABORTED}

FAILURE_TRUNCATED = "truncated"
FAILURE_UNPARSEABLE = "unparseable"
FAILURE_BACKEND = "backend_error"


@dataclass(frozen=True)
class PromptSet:
    verify_prompt: str = DEFAULT_VERIFY_PROMPT
    refine_prompt: str = DEFAULT_REFINE_PROMPT
    solve_prompt: str = DEFAULT_SOLVE_PROMPT


@dataclass(frozen=True)
class Problem:
    problem_id: str
    statement: str
    answer: AnswerKey | None = None


@dataclass
class IterationRecord:
    """One committed step of a trial; index 0 is the initial solve."""

    index: int
    solution_text: str
    answer: str | None = None
    verification_text: str | None = None
    verdict: int | None = None
    failure: str | None = None
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "IterationRecord":
        return cls(**d)


@dataclass(frozen=True)
class ControllerConfig:
    kind: str = DSER
    max_iterations: int = 80
    accept_limit: int = 5
    reject_limit: int = 10
    carry_forward_on_failure: bool = True
    max_parse_retries: int = 2

    def __post_init__(self):
        if self.kind not in (DSER, VERDEP):
            raise ValueError(f"unknown controller kind {self.kind!r}")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if self.accept_limit < 1 or self.reject_limit < 1:
            raise ValueError("accept/reject limits must be >= 1")


@dataclass
class TrialState:
    problem_id: str
    trial_index: int
    controller: str
    seed: int
    records: list[IterationRecord] = field(default_factory=list)
    status: str = RUNNING

    @property
    def trial_id(self) -> tuple[str, int]:
        return (self.problem_id, self.trial_index)

    def answer_at(self, n: int) -> str | None:
        return self.records[n].answer


def _noop_emit(kind: str, payload: dict) -> None:
    pass


def _call(backend, context: tuple[str, ...], seed: int, emit, phase: str,
          max_response_tokens: int = 65536, temperature: float = 0.6):
    """One backend invocation with event bookkeeping.

    Returns (response, None) or (None, failure_kind).
    """
    request = ReasoningRequest(
        context=context,
        max_response_tokens=max_response_tokens,
        temperature=temperature,
        request_seed=seed,
    )
    emit("CallSent", {"phase": phase, "seed": seed, "context": list(context)})
    try:
        response = backend.reasoning_call(request)
    except ResponseTruncated as e:
        emit("CallReceived", {"phase": phase, "failure": FAILURE_TRUNCATED,
                              "partial_text": e.partial_text})
        return None, FAILURE_TRUNCATED
    except BackendError as e:
        emit("CallReceived", {"phase": phase, "failure": FAILURE_BACKEND,
                              "error": str(e)})
        return None, FAILURE_BACKEND
    emit("CallReceived", {
        "phase": phase,
        "full_text": response.full_text,
        "summary_text": response.summary_text,
        "prompt_tokens": response.prompt_tokens,
        "completion_tokens": response.completion_tokens,
    })
    return response, None


def _call_with_reask(backend, context, base_seed, emit, phase, config,
                     parsed_ok) -> tuple[object | None, str | None]:
    """Call, re-asking with the same context up to max_parse_retries when the
    response parses to nothing (distinguishes format lapses from real failure)."""
    failure = None
    for attempt in range(config.max_parse_retries + 1):
        seed = derive_seed(base_seed, "attempt", attempt)
        response, failure = _call(backend, context, seed, emit, phase)
        if failure is not None:
            return None, failure
        if parsed_ok(response.summary_text):
            return response, None
        failure = FAILURE_UNPARSEABLE
    return response, failure


def solve(backend, question: str, prompts: PromptSet, seed: int,
          config: ControllerConfig = ControllerConfig(), emit=_noop_emit) -> IterationRecord:
    """Initial record: one reasoning call on [solve_prompt; q]."""
    if not question:
        raise ValueError("question must be non-empty")
    emit("SolveStarted", {"seed": seed})
    context = (prompts.solve_prompt, question)
    response, failure = _call_with_reask(
        backend, context, seed, emit, "solve", config,
        parsed_ok=lambda text: extract_answer(text) is not None,
    )
    if response is None:
        return IterationRecord(index=0, solution_text="", failure=failure)
    answer = extract_answer(response.summary_text)
    return IterationRecord(
        index=0,
        solution_text=response.summary_text,
        answer=answer.canonical if answer else None,
        failure=failure,
        prompt_tokens=response.prompt_tokens,
        completion_tokens=response.completion_tokens,
    )


def parse_verdict(summary_text: str) -> int | None:
    answer = extract_answer(summary_text)
    if answer is not None and answer.canonical in ("0", "1"):
        return int(answer.canonical)
    return None


def verify(backend, question: str, solution: str, prompts: PromptSet, seed: int,
           config: ControllerConfig = ControllerConfig(), emit=_noop_emit):
    """Verification call on [q; s; p_v].

    Returns (verification_text, verdict, failure, usage). An absent verdict is
    recorded (verdict None), not fatal.
    """
    if not solution:
        raise ValueError("solution must be non-empty")
    context = (question, solution, prompts.verify_prompt)
    response, failure = _call_with_reask(
        backend, context, seed, emit, "verify", config,
        parsed_ok=lambda text: parse_verdict(text) is not None,
    )
    if response is None:
        return None, None, failure, (0, 0)
    return (
        response.summary_text,
        parse_verdict(response.summary_text),
        failure,
        (response.prompt_tokens, response.completion_tokens),
    )


def refine(backend, question: str, solution: str, verification_text: str,
           prompts: PromptSet, seed: int, prior: IterationRecord,
           config: ControllerConfig = ControllerConfig(), emit=_noop_emit) -> IterationRecord:
    """Refinement call on [q; s; p_v; v; p_r] producing the next record.

    On failure with carry-forward, the prior solution becomes the new state
    and the record is marked failed.
    """
    context = (question, solution, prompts.verify_prompt, verification_text,
               prompts.refine_prompt)
    response, failure = _call_with_reask(
        backend, context, seed, emit, "refine", config,
        parsed_ok=lambda text: extract_answer(text) is not None,
    )
    if failure is not None:
        if config.carry_forward_on_failure:
            return IterationRecord(
                index=prior.index + 1,
                solution_text=prior.solution_text,
                answer=prior.answer,
                failure=failure,
            )
        text = response.summary_text if response is not None else ""
        return IterationRecord(index=prior.index + 1, solution_text=text, failure=failure)
    answer = extract_answer(response.summary_text)
    return IterationRecord(
        index=prior.index + 1,
        solution_text=response.summary_text,
        answer=answer.canonical if answer else None,
        prompt_tokens=response.prompt_tokens,
        completion_tokens=response.completion_tokens,
    )


def _trial_emitter(log: RunLog | None, trial_id: tuple[str, int]):
    if log is None:
        return _noop_emit

    def emit(kind: str, payload: dict) -> None:
        log.append(kind, payload, trial_id=trial_id)

    return emit


def _commit(emit, record: IterationRecord, extra: dict | None = None) -> None:
    payload = {"record": record.to_dict()}
    if extra:
        payload.update(extra)
    emit("IterationCommitted", payload)


def run_dser_trial(config: ControllerConfig, backend, question: str,
                   prompts: PromptSet, seed: int, emit=_noop_emit,
                   state: TrialState | None = None,
                   problem_id: str = "p0", trial_index: int = 0) -> TrialState:
    """Fixed-horizon trial: exactly max_iterations verify+refine cycles after
    the initial solve, each committed before the next call begins."""
    if config.kind != DSER:
        raise ValueError("run_dser_trial requires a DSER controller config")
    if state is None:
        state = TrialState(problem_id, trial_index, DSER, seed)
    if not state.records:
        record = solve(backend, question, prompts,
                       derive_seed(seed, 0, "solve"), config, emit)
        state.records.append(record)
        _commit(emit, record)
    while len(state.records) <= config.max_iterations:
        n = len(state.records)
        prior = state.records[-1]
        v_text, verdict, v_failure, v_usage = verify(
            backend, question, prior.solution_text or "(no solution)",
            prompts, derive_seed(seed, n, "verify"), config, emit)
        if v_failure in (FAILURE_TRUNCATED, FAILURE_BACKEND):
            record = IterationRecord(
                index=n, solution_text=prior.solution_text, answer=prior.answer,
                failure=v_failure)
        else:
            record = refine(backend, question, prior.solution_text or "(no solution)",
                            v_text or "", prompts, derive_seed(seed, n, "refine"),
                            prior, config, emit)
            record.verification_text = v_text
            record.verdict = verdict
            record.prompt_tokens += v_usage[0]
            record.completion_tokens += v_usage[1]
        state.records.append(record)
        _commit(emit, record)
    state.status = COMPLETED
    emit("TrialExited", {"status": state.status})
    return state


def _verdep_streaks(records: list[IterationRecord]) -> tuple[int, int]:
    """Reconstruct (pass, fail) streak counters from committed records."""
    passes = fails = 0
    for r in records[1:]:
        if r.verdict == 1:
            passes, fails = passes + 1, 0
        else:
            passes, fails = 0, fails + 1
    return passes, fails


def run_verdep_trial(config: ControllerConfig, backend, question: str,
                     prompts: PromptSet, seed: int, emit=_noop_emit,
                     state: TrialState | None = None,
                     problem_id: str = "p0", trial_index: int = 0) -> TrialState:
    """Verification-dependent trial.

    A pass keeps the solution unchanged and extends the pass streak; a fail
    resets it, extends the fail streak, and triggers a refine. Unparseable
    verdicts count as fails. Exits on accept_limit consecutive passes,
    reject_limit consecutive fails, or the iteration budget.
    """
    if config.kind != VERDEP:
        raise ValueError("run_verdep_trial requires a verdep controller config")
    if state is None:
        state = TrialState(problem_id, trial_index, VERDEP, seed)
    if not state.records:
        record = solve(backend, question, prompts,
                       derive_seed(seed, 0, "solve"), config, emit)
        state.records.append(record)
        _commit(emit, record)
    passes, fails = _verdep_streaks(state.records)
    while len(state.records) <= config.max_iterations:
        n = len(state.records)
        prior = state.records[-1]
        v_text, verdict, v_failure, v_usage = verify(
            backend, question, prior.solution_text or "(no solution)",
            prompts, derive_seed(seed, n, "verify"), config, emit)
        if verdict == 1:
            passes, fails = passes + 1, 0
            record = IterationRecord(
                index=n, solution_text=prior.solution_text, answer=prior.answer,
                verification_text=v_text, verdict=verdict,
                prompt_tokens=v_usage[0], completion_tokens=v_usage[1])
        else:
            passes, fails = 0, fails + 1
            if v_failure in (FAILURE_TRUNCATED, FAILURE_BACKEND):
                record = IterationRecord(
                    index=n, solution_text=prior.solution_text, answer=prior.answer,
                    failure=v_failure)
            else:
                record = refine(backend, question, prior.solution_text or "(no solution)",
                                v_text or "", prompts, derive_seed(seed, n, "refine"),
                                prior, config, emit)
                record.verification_text = v_text
                record.verdict = verdict
                record.prompt_tokens += v_usage[0]
                record.completion_tokens += v_usage[1]
        state.records.append(record)
        _commit(emit, record, {"pass_streak": passes, "fail_streak": fails})
        if passes >= config.accept_limit:
            state.status = ACCEPTED_EXIT
            break
        if fails >= config.reject_limit:
            state.status = REJECTED_EXIT
            break
    else:
        state.status = COMPLETED
    emit("TrialExited", {"status": state.status})
    return state


def run_trial(config: ControllerConfig, backend, question: str, prompts: PromptSet,
              seed: int, emit=_noop_emit, state: TrialState | None = None,
              problem_id: str = "p0", trial_index: int = 0) -> TrialState:
    runner = run_dser_trial if config.kind == DSER else run_verdep_trial
    return runner(config, backend, question, prompts, seed, emit, state,
                  problem_id, trial_index)


# ---------------------------------------------------------------------------
# Experiment driver
# ---------------------------------------------------------------------------


def trial_seed(run_seed: int, problem_id: str, trial_index: int) -> int:
    return derive_seed(run_seed, problem_id, trial_index)


def rebuild_trial_states(manifest: dict, events: list[Event]) -> dict[tuple[str, int], TrialState]:
    """Reconstruct all trial states purely from committed events."""
    run_seed = manifest["run_seed"]
    controller = manifest["config"]["controller"]["kind"]
    states: dict[tuple[str, int], TrialState] = {}
    for p in manifest["problems"]:
        for t in range(manifest["k_trials"]):
            tid = (p["id"], t)
            states[tid] = TrialState(
                problem_id=p["id"], trial_index=t, controller=controller,
                seed=trial_seed(run_seed, p["id"], t))
    for ev in events:
        if ev.trial_id is None or ev.trial_id not in states:
            continue
        st = states[ev.trial_id]
        if ev.kind == "IterationCommitted":
            record = IterationRecord.from_dict(ev.payload["record"])
            if record.index == len(st.records):
                st.records.append(record)
        elif ev.kind == "TrialExited":
            st.status = ev.payload["status"]
    return states


def resume_points(manifest: dict, states: dict[tuple[str, int], TrialState]) -> dict:
    """Next action per non-terminal trial, sufficient to reproduce the
    uninterrupted log on a deterministic backend."""
    actions: dict[tuple[str, int], dict] = {}
    for tid, st in states.items():
        if st.status in TERMINAL_STATUSES:
            continue
        if not st.records:
            actions[tid] = {"action": "solve", "next_index": 0,
                            "seed": derive_seed(st.seed, 0, "solve")}
        else:
            n = len(st.records)
            action = {"action": "verify", "next_index": n,
                      "seed": derive_seed(st.seed, n, "verify")}
            if st.controller == VERDEP:
                passes, fails = _verdep_streaks(st.records)
                action["pass_streak"] = passes
                action["fail_streak"] = fails
            actions[tid] = action
    return actions


def build_manifest(run_id: str, run_seed: int, problems: list[Problem],
                   k_trials: int, config_snapshot: dict, config_hash: str) -> dict:
    return {
        "run_id": run_id,
        "created_at": time.time(),
        "run_seed": run_seed,
        "k_trials": k_trials,
        "config": config_snapshot,
        "config_hash": config_hash,
        "problems": [
            {"id": p.problem_id, "statement": p.statement,
             "answer": p.answer.canonical if p.answer else None}
            for p in problems
        ],
    }


def problems_from_manifest(manifest: dict) -> list[Problem]:
    return [
        Problem(p["id"], p["statement"],
                normalize_answer(p["answer"]) if p["answer"] is not None else None)
        for p in manifest["problems"]
    ]


def run_experiment(problems: list[Problem], k_trials: int, config: ControllerConfig,
                   backend, prompts: PromptSet, run_seed: int, store: RunStore,
                   parallelism: int = 8, run_id: str | None = None,
                   config_snapshot: dict | None = None, config_hash: str = "",
                   store_sync: str = "always") -> str:
    """Schedule problems x k_trials independent trials with bounded parallelism.

    backend is either a single backend object or anything with a
    for_problem(problem) method returning one (the mock needs the per-problem
    ground truth). Returns the run id; the manifest and event log are durable
    and resumable at every point.
    """
    if k_trials < 1:
        raise ValueError("k_trials must be >= 1")
    if run_id is None:
        run_id = uuid.uuid4().hex[:12]
    if config_snapshot is None:
        config_snapshot = {"controller": dataclasses.asdict(config)}
    manifest = build_manifest(run_id, run_seed, problems, k_trials,
                              config_snapshot, config_hash)
    store.create_run(run_id, manifest)
    log = store.open_log(run_id, sync=store_sync)
    try:
        _execute_trials(manifest, {}, config, backend, prompts, log, parallelism)
        log.append("RunFinalized", {})
    finally:
        log.close()
    return run_id


def resume_experiment(store: RunStore, run_id: str, backend,
                      parallelism: int = 8, store_sync: str = "always") -> None:
    """Complete the remaining trials of a half-finished run."""
    manifest, states = store.load_run(run_id)
    if any(e.kind == "RunFinalized" for e in store.events(run_id)):
        return
    config = ControllerConfig(**manifest["config"]["controller"])
    prompts = PromptSet(**manifest["config"].get("prompts", {}))
    log = store.open_log(run_id, sync=store_sync)
    try:
        _execute_trials(manifest, states, config, backend, prompts, log, parallelism)
        log.append("RunFinalized", {})
    finally:
        log.close()


def _execute_trials(manifest: dict, states: dict, config: ControllerConfig,
                    backend, prompts: PromptSet, log: RunLog, parallelism: int) -> None:
    problems = problems_from_manifest(manifest)
    run_seed = manifest["run_seed"]
    k_trials = manifest["k_trials"]

    def backend_for(problem: Problem):
        if hasattr(backend, "for_problem"):
            return backend.for_problem(problem)
        return backend

    tasks = []
    for problem in problems:
        for t in range(k_trials):
            tid = (problem.problem_id, t)
            st = states.get(tid)
            if st is not None and st.status in TERMINAL_STATUSES:
                continue
            tasks.append((problem, t, st))

    def worker(task):
        problem, t, st = task
        seed = trial_seed(run_seed, problem.problem_id, t)
        emit = _trial_emitter(log, (problem.problem_id, t))
        run_trial(config, backend_for(problem), problem.statement, prompts,
                  seed, emit, state=st, problem_id=problem.problem_id, trial_index=t)

    if parallelism <= 1:
        for task in tasks:
            worker(task)
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            list(pool.map(worker, tasks))
