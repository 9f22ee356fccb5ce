"""Run configuration file parsing and validation.

A run config is a YAML document with sections:

    backend: {endpoint, model, auth_env, timeout_s, ...}   # real HTTP backend
    mock: {ground_truth, p_ic, p_ci, alpha, beta, ...}     # or a mock backend
    controller: {kind, max_iterations, accept_limit, ...}
    prompts: {solve_prompt, verify_prompt, refine_prompt}  # optional overrides
    experiment: {problems, k_trials, run_seed, parallelism, store_sync}
    output_dir: path

Exactly one of backend/mock must be present. The problems file is a YAML or
JSON list of {id, statement, answer} records.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path

import yaml

from .answers import normalize_answer
from .backend import BackendConfig, HttpBackend, MockBackendProvider, mock_spec_from_dict
from .engine import ControllerConfig, Problem, PromptSet


class ConfigInvalid(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


class ConfigDrift(ValueError):
    """Live config hash differs from the manifest snapshot."""


_BACKEND_KEYS = {f.name for f in dataclasses.fields(BackendConfig)}
_CONTROLLER_KEYS = {f.name for f in dataclasses.fields(ControllerConfig)}
_PROMPT_KEYS = {f.name for f in dataclasses.fields(PromptSet)}
_MOCK_KEYS = {"ground_truth", "initial_correct_probability", "p_ic", "p_ci",
              "alpha", "beta", "wrong_answer_space"}
_EXPERIMENT_KEYS = {"problems", "k_trials", "run_seed", "parallelism", "store_sync"}


def config_hash(snapshot: dict) -> str:
    return hashlib.sha256(
        json.dumps(snapshot, sort_keys=True, separators=(",", ":")).encode("utf-8")
    ).hexdigest()


class RunConfig:
    """Validated run configuration plus factories for its pieces."""

    def __init__(self, raw: dict, base_dir: Path):
        self.raw = raw
        self.base_dir = base_dir
        errors: list[str] = []
        if not isinstance(raw, dict):
            raise ConfigInvalid(["config root must be a mapping"])

        has_backend = "backend" in raw
        has_mock = "mock" in raw
        if has_backend == has_mock:
            errors.append("exactly one of 'backend' or 'mock' sections must be present")

        for section, allowed in (("backend", _BACKEND_KEYS), ("mock", _MOCK_KEYS),
                                 ("controller", _CONTROLLER_KEYS),
                                 ("prompts", _PROMPT_KEYS),
                                 ("experiment", _EXPERIMENT_KEYS)):
            body = raw.get(section)
            if body is None:
                continue
            if not isinstance(body, dict):
                errors.append(f"{section}: must be a mapping")
                continue
            unknown = set(body) - allowed
            if unknown:
                errors.append(f"{section}: unknown keys {sorted(unknown)}")

        exp = raw.get("experiment") or {}
        if "problems" not in exp:
            errors.append("experiment.problems: required")
        else:
            problems_path = base_dir / str(exp["problems"])
            if not problems_path.exists():
                errors.append(f"experiment.problems: file not found: {problems_path}")
        if int(exp.get("k_trials", 1)) < 1:
            errors.append("experiment.k_trials: must be >= 1")
        if has_backend and not (raw["backend"] or {}).get("endpoint"):
            errors.append("backend.endpoint: required")

        if errors:
            raise ConfigInvalid(errors)

        self.controller = ControllerConfig(**(raw.get("controller") or {}))
        self.prompts = PromptSet(**(raw.get("prompts") or {}))
        self.k_trials = int(exp.get("k_trials", 1))
        self.run_seed = int(exp.get("run_seed", 0))
        self.parallelism = int(exp.get("parallelism", 8))
        self.store_sync = str(exp.get("store_sync", "always"))
        self.problems_path = base_dir / str(exp["problems"])
        self.output_dir = base_dir / str(raw.get("output_dir", "out"))

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            raw = yaml.safe_load(path.read_text(encoding="utf-8"))
        except (OSError, yaml.YAMLError) as e:
            raise ConfigInvalid([f"cannot read config: {e}"]) from e
        return cls(raw, path.parent.resolve())

    def snapshot(self) -> dict:
        """Immutable config snapshot stored in the run manifest."""
        snap = {
            "controller": dataclasses.asdict(self.controller),
            "prompts": dataclasses.asdict(self.prompts),
            "k_trials": self.k_trials,
            "run_seed": self.run_seed,
        }
        if "mock" in self.raw:
            snap["mock"] = dict(self.raw["mock"])
        else:
            snap["backend"] = dict(self.raw["backend"])
        return snap

    def build_backend(self):
        return build_backend_from_snapshot(self.snapshot())

    def load_problems(self) -> list[Problem]:
        return load_problems(self.problems_path)


def build_backend_from_snapshot(snapshot: dict):
    if "mock" in snapshot:
        return MockBackendProvider(mock_spec_from_dict(snapshot["mock"]))
    return HttpBackend(BackendConfig(**snapshot["backend"]))


def load_problems(path: str | Path) -> list[Problem]:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".jsonl":
        records = [json.loads(line) for line in text.splitlines() if line.strip()]
    elif path.suffix == ".json":
        records = json.loads(text)
    else:
        records = yaml.safe_load(text)
    if not isinstance(records, list) or not records:
        raise ConfigInvalid([f"{path}: problems file must be a non-empty list"])
    problems = []
    seen = set()
    for i, rec in enumerate(records):
        if not isinstance(rec, dict) or "id" not in rec or "statement" not in rec:
            raise ConfigInvalid([f"{path}: record {i} needs 'id' and 'statement'"])
        pid = str(rec["id"])
        if pid in seen:
            raise ConfigInvalid([f"{path}: duplicate problem id {pid!r}"])
        seen.add(pid)
        answer = rec.get("answer")
        problems.append(Problem(
            problem_id=pid,
            statement=str(rec["statement"]),
            answer=normalize_answer(str(answer)) if answer is not None else None,
        ))
    return problems
