"""Two-state correctness chain and the verification-dependent absorbing chain.

Closed forms (stationary distribution, mixing rate, absorption probabilities)
are computed directly from their formulas; Monte Carlo counterparts are
provided as independent oracles. All simulators are deterministic given a
seed and safe to evaluate in parallel.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

CORRECT = "C"
INCORRECT = "I"


class DegenerateChain(ValueError):
    """p_ic = p_ci = 0: every distribution is stationary, no unique answer."""


class RejectingConditionPresent(ValueError):
    """The 4-state absorbing matrix only models the chain without a reject limit."""


class SingularChain(ValueError):
    """det(I - Q) = 0: no absorption possible (e.g. alpha = beta = 0)."""


def _check_prob(name: str, p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {p}")


@dataclass(frozen=True)
class TransitionParams:
    """The pair (p_ic, p_ci): improvement and degradation probabilities."""

    p_ic: float
    p_ci: float

    def __post_init__(self):
        _check_prob("p_ic", self.p_ic)
        _check_prob("p_ci", self.p_ci)

    def matrix(self) -> np.ndarray:
        """2x2 row-stochastic matrix, rows/columns ordered (Correct, Incorrect)."""
        return np.array(
            [
                [1.0 - self.p_ci, self.p_ci],
                [self.p_ic, 1.0 - self.p_ic],
            ]
        )


@dataclass(frozen=True)
class StateDistribution:
    """Probability mass over (Correct, Incorrect)."""

    pi_c: float
    pi_i: float

    def __post_init__(self):
        _check_prob("pi_c", self.pi_c)
        _check_prob("pi_i", self.pi_i)
        if abs(self.pi_c + self.pi_i - 1.0) > 1e-12:
            raise ValueError(f"masses must sum to 1, got {self.pi_c + self.pi_i}")

    def as_array(self) -> np.ndarray:
        return np.array([self.pi_c, self.pi_i])


@dataclass(frozen=True)
class AbsorbingChainParams:
    """Parameters of the verification-dependent chain.

    alpha / beta are pass probabilities given an Incorrect / Correct solution.
    y_c0 / y_i0 are probabilities that refinement after a failed verification
    yields a Correct solution from (Correct, fail) / (Incorrect, fail).
    y_c1 / y_i1 are the analogous pass-side refinement probabilities; the
    simplified 4-state matrix never uses them (a pass keeps the solution),
    and the simulator only applies them in an explicit alternate mode.
    """

    alpha: float
    beta: float
    y_c0: float
    y_i0: float
    y_c1: float | None = None
    y_i1: float | None = None
    accept_limit: int = 5
    reject_limit: int | None = None

    def __post_init__(self):
        _check_prob("alpha", self.alpha)
        _check_prob("beta", self.beta)
        _check_prob("y_c0", self.y_c0)
        _check_prob("y_i0", self.y_i0)
        for name in ("y_c1", "y_i1"):
            v = getattr(self, name)
            if v is not None:
                _check_prob(name, v)
        if self.accept_limit < 1:
            raise ValueError("accept_limit must be >= 1")
        if self.reject_limit is not None and self.reject_limit < 1:
            raise ValueError("reject_limit must be >= 1")


@dataclass(frozen=True)
class AbsorptionResult:
    """Absorption split between the two terminated states, for a given start."""

    p_correct_exit: float
    p_incorrect_exit: float
    start: str


@dataclass
class ChainTrajectory:
    """One realized path. Reproducible: same seed + params give the same path."""

    states: list[str]
    seed: int
    verdicts: list[int] = field(default_factory=list)
    pass_streaks: list[int] = field(default_factory=list)
    fail_streaks: list[int] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Two-state chain
# ---------------------------------------------------------------------------


def stationary_distribution(params: TransitionParams) -> StateDistribution:
    """Long-run probability of (Correct, Incorrect): pi_c = p_ic / (p_ic + p_ci)."""
    s = params.p_ic + params.p_ci
    if s == 0.0:
        raise DegenerateChain("p_ic = p_ci = 0 has no unique stationary distribution")
    return StateDistribution(params.p_ic / s, params.p_ci / s)


def convergence_rate(params: TransitionParams) -> float:
    """|lambda_2| = |1 - p_ci - p_ic|, the geometric mixing rate."""
    return abs(1.0 - params.p_ci - params.p_ic)


def evolve_distribution(
    params: TransitionParams, initial: StateDistribution, n: int
) -> StateDistribution:
    """Push a distribution forward n steps: initial . P^n."""
    if n < 0:
        raise ValueError("n must be >= 0")
    vec = initial.as_array() @ np.linalg.matrix_power(params.matrix(), n)
    total = vec.sum()
    return StateDistribution(float(vec[0] / total), float(vec[1] / total))


def simulate_chain(
    params: TransitionParams, initial_state: str, n_steps: int, seed: int
) -> ChainTrajectory:
    """Sample one path of length n_steps + 1 starting at initial_state."""
    if initial_state not in (CORRECT, INCORRECT):
        raise ValueError(f"initial_state must be {CORRECT!r} or {INCORRECT!r}")
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    rng = random.Random(seed)
    states = [initial_state]
    correct = initial_state == CORRECT
    for _ in range(n_steps):
        flip_p = params.p_ci if correct else params.p_ic
        if rng.random() < flip_p:
            correct = not correct
        states.append(CORRECT if correct else INCORRECT)
    return ChainTrajectory(states=states, seed=seed)


def chain_correct_frequency(
    params: TransitionParams,
    initial_state: str,
    n_steps: int,
    n_chains: int,
    seed: int,
) -> float:
    """Fraction of n_chains independent paths that sit in Correct after n_steps.

    Vectorized Monte Carlo oracle for evolve_distribution / the stationary law.
    """
    rng = np.random.default_rng(seed)
    correct = np.full(n_chains, initial_state == CORRECT)
    for _ in range(n_steps):
        u = rng.random(n_chains)
        flip = u < np.where(correct, params.p_ci, params.p_ic)
        correct ^= flip
    return float(correct.mean())


# ---------------------------------------------------------------------------
# Verification-dependent absorbing chain
# ---------------------------------------------------------------------------


def absorbing_transition_matrix(acp: AbsorbingChainParams) -> np.ndarray:
    """4x4 row-stochastic matrix over S1..S4 for the chain without a reject limit.

    S1/S2: Correct/Incorrect and ongoing; S3/S4: Correct/Incorrect terminated.
    """
    if acp.reject_limit is not None:
        raise RejectingConditionPresent(
            "the 4-state matrix models only the chain without a reject limit"
        )
    b = acp.beta**acp.accept_limit
    a = acp.alpha**acp.accept_limit
    return np.array(
        [
            [(1 - b) * acp.y_c0, (1 - b) * (1 - acp.y_c0), b, 0.0],
            [(1 - a) * acp.y_i0, (1 - a) * (1 - acp.y_i0), 0.0, a],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def _iq_determinant(acp: AbsorbingChainParams) -> float:
    b = acp.beta**acp.accept_limit
    a = acp.alpha**acp.accept_limit
    return a - (1 - b) * a * acp.y_c0 + (1 - a) * b * acp.y_i0


def absorption_probabilities(acp: AbsorbingChainParams, start: str) -> AbsorptionResult:
    """Exit split (I - Q)^-1 R from transient start state "S1" or "S2"."""
    if start not in ("S1", "S2"):
        raise ValueError("start must be 'S1' or 'S2'")
    det = _iq_determinant(acp)
    if det <= 1e-15:
        raise SingularChain(f"det(I - Q) = {det}; no absorption possible")
    p = absorbing_transition_matrix(acp)
    q, r = p[:2, :2], p[:2, 2:]
    absorb = np.linalg.solve(np.eye(2) - q, r)
    row = absorb[0 if start == "S1" else 1]
    return AbsorptionResult(float(row[0]), float(row[1]), start)


def absorption_closed_form(acp: AbsorbingChainParams, start: str) -> AbsorptionResult:
    """Exit split via the explicit (I - Q)^-1 R entries, no linear solver.

    Exact in exact arithmetic; used to cross-check absorption_probabilities.
    """
    if start not in ("S1", "S2"):
        raise ValueError("start must be 'S1' or 'S2'")
    det = _iq_determinant(acp)
    if det <= 1e-15:
        raise SingularChain(f"det(I - Q) = {det}; no absorption possible")
    b = acp.beta**acp.accept_limit
    a = acp.alpha**acp.accept_limit
    if start == "S1":
        p_correct = (1 - (1 - a) * (1 - acp.y_i0)) * b / det
        p_incorrect = (1 - b) * a * (1 - acp.y_c0) / det
    else:
        p_correct = (1 - a) * b * acp.y_i0 / det
        p_incorrect = (1 - (1 - b) * acp.y_c0) * a / det
    return AbsorptionResult(p_correct, p_incorrect, start)


def check_overconfidence_bound(acp: AbsorbingChainParams) -> tuple[bool, float]:
    """Evaluate alpha^accept_limit >= y_i0; when it holds, the correct-exit
    probability from an ongoing Incorrect solution cannot exceed 0.5."""
    holds = acp.alpha**acp.accept_limit >= acp.y_i0
    p = absorption_probabilities(acp, "S2").p_correct_exit
    if holds and p > 0.5 + 1e-9:
        raise AssertionError(
            f"bound violated: alpha^a >= y_i0 but p_correct_exit = {p}"
        )
    return holds, p


def simulate_verdep_chain(
    acp: AbsorbingChainParams,
    seed: int,
    max_iterations: int,
    initial_state: str = INCORRECT,
    refine_on_pass: bool = False,
) -> tuple[str, bool, ChainTrajectory]:
    """Full-fidelity sample of the verification-dependent process.

    Each step verifies (pass w.p. beta if Correct else alpha), updates the
    streak counters (a pass resets the fail counter and vice versa), and on a
    fail refines with y_c0 / y_i0. By default a pass keeps the solution
    unchanged, matching the analyzed 4-state matrix; refine_on_pass applies
    y_c1 / y_i1 instead (no closed-form ground truth for that mode).

    Returns (exit kind "Accepted" | "Rejected" | "Budget", final correctness,
    trajectory).
    """
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    if refine_on_pass and (acp.y_c1 is None or acp.y_i1 is None):
        raise ValueError("refine_on_pass requires y_c1 and y_i1")
    rng = random.Random(seed)
    correct = initial_state == CORRECT
    traj = ChainTrajectory(states=[CORRECT if correct else INCORRECT], seed=seed)
    passes = fails = 0
    for _ in range(max_iterations):
        verdict = rng.random() < (acp.beta if correct else acp.alpha)
        if verdict:
            passes += 1
            fails = 0
            if refine_on_pass:
                correct = rng.random() < (acp.y_c1 if correct else acp.y_i1)
        else:
            fails += 1
            passes = 0
            correct = rng.random() < (acp.y_c0 if correct else acp.y_i0)
        traj.verdicts.append(int(verdict))
        traj.pass_streaks.append(passes)
        traj.fail_streaks.append(fails)
        traj.states.append(CORRECT if correct else INCORRECT)
        if passes >= acp.accept_limit:
            return "Accepted", correct, traj
        if acp.reject_limit is not None and fails >= acp.reject_limit:
            return "Rejected", correct, traj
    return "Budget", correct, traj


def verdep_exit_frequencies(
    acp: AbsorbingChainParams,
    start: str,
    n_samples: int,
    seed: int,
    max_rounds: int = 1_000_000,
) -> tuple[float, float]:
    """Monte Carlo exit split for the chain without a reject limit.

    Simulates the 4-state process forward, one accept-or-refine round per
    iteration (a run of consecutive passes never changes the solution, so the
    exit distribution is identical to the step-level process). Vectorized so
    that 10^6 samples are practical. Returns (correct-exit, incorrect-exit)
    frequencies; raises SingularChain if any path fails to absorb in
    max_rounds rounds.
    """
    if acp.reject_limit is not None:
        raise RejectingConditionPresent("exit frequencies need reject_limit absent")
    if start not in ("S1", "S2"):
        raise ValueError("start must be 'S1' or 'S2'")
    rng = np.random.default_rng(seed)
    b = acp.beta**acp.accept_limit
    a = acp.alpha**acp.accept_limit
    correct = np.full(n_samples, start == "S1")
    exited_correct = 0
    exited_incorrect = 0
    rounds = 0
    while correct.shape[0] > 0:
        if rounds >= max_rounds:
            raise SingularChain(
                f"{correct.shape[0]} of {n_samples} paths unabsorbed after {max_rounds} rounds"
            )
        rounds += 1
        accept = rng.random(correct.shape[0]) < np.where(correct, b, a)
        exited_correct += int(np.count_nonzero(accept & correct))
        exited_incorrect += int(np.count_nonzero(accept & ~correct))
        correct = correct[~accept]
        u = rng.random(correct.shape[0])
        correct = u < np.where(correct, acp.y_c0, acp.y_i0)
    return exited_correct / n_samples, exited_incorrect / n_samples


def verdep_exit_counts(
    acp: AbsorbingChainParams,
    n_samples: int,
    seed: int,
    max_iterations: int,
    initial_state: str = INCORRECT,
) -> dict[str, int]:
    """Pooled exit kinds over n_samples step-level runs (reject limit allowed)."""
    counts = {"Accepted": 0, "Rejected": 0, "Budget": 0}
    for i in range(n_samples):
        exit_kind, _, _ = simulate_verdep_chain(
            acp, seed=seed + i, max_iterations=max_iterations, initial_state=initial_state
        )
        counts[exit_kind] += 1
    return counts
