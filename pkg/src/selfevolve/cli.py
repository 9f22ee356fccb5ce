"""Operator CLI: launch/resume experiments, pure chain simulations, analysis."""

from __future__ import annotations

import csv
import sys
from pathlib import Path

import click

from . import markov
from .aggregate import WrongController
from .config import (ConfigDrift, ConfigInvalid, RunConfig, config_hash)
from .engine import resume_experiment, run_experiment
from .reports import write_run_reports
from .store import CorruptLog, RunStore, StoreUnavailable

EXIT_CONFIG_INVALID = 2
EXIT_CONFIG_DRIFT = 3
EXIT_CORRUPT_LOG = 4
EXIT_STORE_UNAVAILABLE = 5


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Self-evolving reasoning experiment engine."""


@main.command("run")
@click.argument("config_path", type=click.Path(exists=True))
def cmd_run(config_path):
    """Launch an experiment described by a config file; prints the run id."""
    try:
        cfg = RunConfig.load(config_path)
        problems = cfg.load_problems()
        backend = cfg.build_backend()
        snapshot = cfg.snapshot()
        store = RunStore(cfg.output_dir / "runs")
        run_id = run_experiment(
            problems, cfg.k_trials, cfg.controller, backend, cfg.prompts,
            cfg.run_seed, store, parallelism=cfg.parallelism,
            config_snapshot=snapshot, config_hash=config_hash(snapshot),
            store_sync=cfg.store_sync)
    except ConfigInvalid as e:
        _fail(EXIT_CONFIG_INVALID, f"invalid config: {e}")
    except StoreUnavailable as e:
        _fail(EXIT_STORE_UNAVAILABLE, f"store unavailable: {e}")
    write_run_reports(store, run_id, cfg.output_dir / "reports" / run_id)
    click.echo(run_id)


@main.command("resume")
@click.argument("run_id")
@click.option("--runs-dir", type=click.Path(), default="out/runs", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Live config to validate against the manifest snapshot.")
@click.option("--reports-dir", type=click.Path(), default=None)
def cmd_resume(run_id, runs_dir, config_path, reports_dir):
    """Complete the remaining trials of a run; a completed run is a no-op."""
    try:
        store = RunStore(runs_dir)
        manifest = store.manifest(run_id)
        if config_path is not None:
            cfg = RunConfig.load(config_path)
            if config_hash(cfg.snapshot()) != manifest["config_hash"]:
                raise ConfigDrift("live config differs from the manifest snapshot")
        from .config import build_backend_from_snapshot

        backend = build_backend_from_snapshot(manifest["config"])
        resume_experiment(store, run_id, backend)
    except ConfigInvalid as e:
        _fail(EXIT_CONFIG_INVALID, f"invalid config: {e}")
    except ConfigDrift as e:
        _fail(EXIT_CONFIG_DRIFT, str(e))
    except CorruptLog as e:
        _fail(EXIT_CORRUPT_LOG, str(e))
    except StoreUnavailable as e:
        _fail(EXIT_STORE_UNAVAILABLE, f"store unavailable: {e}")
    if reports_dir is not None:
        write_run_reports(store, run_id, reports_dir)
    click.echo(run_id)


@main.command("analyze")
@click.argument("run_id")
@click.option("--runs-dir", type=click.Path(), default="out/runs", show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--exit-ratios", is_flag=True, default=False)
@click.option("--window", type=int, default=10, show_default=True)
def cmd_analyze(run_id, runs_dir, out_dir, exit_ratios, window):
    """Recompute metric tables and charts from a run's event log."""
    try:
        store = RunStore(runs_dir)
        written = write_run_reports(store, run_id, out_dir, window=window,
                                    exit_ratios=exit_ratios)
    except CorruptLog as e:
        _fail(EXIT_CORRUPT_LOG, str(e))
    except StoreUnavailable as e:
        _fail(EXIT_STORE_UNAVAILABLE, f"store unavailable: {e}")
    except WrongController as e:
        _fail(1, str(e))
    for path in written:
        click.echo(str(path))


@main.group("simulate")
def cmd_simulate():
    """Pure Markov-chain simulations and closed-form analyses."""


def _prob_option(name, **kw):
    return click.option(name, type=click.FloatRange(0.0, 1.0), required=True, **kw)


@cmd_simulate.command("stationary")
@_prob_option("--p-ic")
@_prob_option("--p-ci")
def sim_stationary(p_ic, p_ci):
    """Stationary split and mixing rate of the two-state chain."""
    params = markov.TransitionParams(p_ic=p_ic, p_ci=p_ci)
    try:
        pi = markov.stationary_distribution(params)
    except markov.DegenerateChain as e:
        _fail(1, str(e))
    click.echo(f"pi_c={pi.pi_c:.6f} pi_i={pi.pi_i:.6f} "
               f"lambda2={markov.convergence_rate(params):.6f}")


@cmd_simulate.command("trajectory")
@_prob_option("--p-ic")
@_prob_option("--p-ci")
@click.option("--start", type=click.Choice(["C", "I"]), default="I", show_default=True)
@click.option("--steps", type=int, default=50, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def sim_trajectory(p_ic, p_ci, start, steps, seed):
    """One seeded sample path of the two-state chain."""
    params = markov.TransitionParams(p_ic=p_ic, p_ci=p_ci)
    traj = markov.simulate_chain(params, start, steps, seed)
    click.echo("".join(traj.states))


@cmd_simulate.command("absorb")
@_prob_option("--alpha")
@_prob_option("--beta")
@_prob_option("--y-c0")
@_prob_option("--y-i0")
@click.option("--accept-limit", type=int, default=5, show_default=True)
@click.option("--start", type=click.Choice(["S1", "S2"]), default="S2", show_default=True)
def sim_absorb(alpha, beta, y_c0, y_i0, accept_limit, start):
    """Closed-form absorption probabilities of the simplified 4-state chain."""
    acp = markov.AbsorbingChainParams(alpha=alpha, beta=beta, y_c0=y_c0,
                                      y_i0=y_i0, accept_limit=accept_limit)
    try:
        result = markov.absorption_probabilities(acp, start)
    except markov.SingularChain as e:
        _fail(1, str(e))
    click.echo(f"p_correct_exit={result.p_correct_exit:.6f} "
               f"p_incorrect_exit={result.p_incorrect_exit:.6f}")


@cmd_simulate.command("verdep")
@_prob_option("--alpha")
@_prob_option("--beta")
@_prob_option("--y-c0")
@_prob_option("--y-i0")
@click.option("--accept-limit", type=int, default=5, show_default=True)
@click.option("--reject-limit", type=int, default=None)
@click.option("--start", type=click.Choice(["C", "I"]), default="I", show_default=True)
@click.option("--samples", type=int, default=10000, show_default=True)
@click.option("--max-iterations", type=int, default=10000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--csv", "csv_path", type=click.Path(), default=None,
              help="Also write exit fractions as CSV.")
def sim_verdep(alpha, beta, y_c0, y_i0, accept_limit, reject_limit, start,
               samples, max_iterations, seed, csv_path):
    """Monte Carlo of the full verification-dependent chain with exit statistics."""
    acp = markov.AbsorbingChainParams(
        alpha=alpha, beta=beta, y_c0=y_c0, y_i0=y_i0,
        accept_limit=accept_limit, reject_limit=reject_limit)
    counts = markov.verdep_exit_counts(acp, samples, seed, max_iterations,
                                       initial_state=start)
    fractions = {k: v / samples for k, v in counts.items()}
    click.echo(" ".join(f"{k.lower()}={v:.6f}" for k, v in fractions.items()))
    if csv_path:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["exit", "fraction"])
            for k, v in fractions.items():
                writer.writerow([k, v])


if __name__ == "__main__":
    main()
