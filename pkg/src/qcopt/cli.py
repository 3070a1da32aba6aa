"""Command-line driver."""
from __future__ import annotations

import json
import shlex
from pathlib import Path

import click

from .gateset import GATE_SETS, NOISELESS, load_noise_model
from .harness import MODES, RunReport, compare, run, write_comparison
from .search import SearchConfig


@click.group()
def main():
    """Quantum-circuit optimizer: rewrite rules + resynthesis under a global
    error budget."""


@main.command("run")
@click.argument("corpus", type=click.Path(exists=True))
@click.option("--gate-set", "gate_set", type=click.Choice(sorted(GATE_SETS)), required=True)
@click.option("--objective", type=click.Choice(["two-qubit-count", "weighted-t-cx", "neg-log-fidelity"]), default="two-qubit-count", show_default=True)
@click.option("--epsilon", type=float, default=1e-8, show_default=True, help="Total error budget.")
@click.option("--time-limit", type=float, default=60.0, show_default=True, help="Seconds per benchmark.")
@click.option("--max-iterations", type=int, default=None, help="Iteration cap (for reproducible runs).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mode", type=click.Choice(MODES), default="guoq", show_default=True)
@click.option("--rules", "rules_path", type=click.Path(exists=True), default=None, help="Extra rewrite rules (JSON).")
@click.option("--resynth", default="builtin", show_default=True, help="'builtin' or 'plugin:CMD'.")
@click.option("--noise-model", "noise_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Report/trace output directory.")
@click.option("--max-subcircuit-qubits", type=int, default=3, show_default=True)
@click.option("--temperature", type=float, default=10.0, show_default=True)
@click.option("--resynth-probability", type=float, default=0.015, show_default=True)
@click.option("--resynth-budget-ms", type=float, default=10_000.0, show_default=True)
@click.option("--async-resynth/--no-async-resynth", "async_resynth", default=False, show_default=True)
def run_cmd(corpus, gate_set, objective, epsilon, time_limit, max_iterations, seed, mode,
            rules_path, resynth, noise_path, out_dir, max_subcircuit_qubits, temperature,
            resynth_probability, resynth_budget_ms, async_resynth):
    """Optimize every .qasm file under CORPUS."""
    plugin = None
    if resynth != "builtin":
        if not resynth.startswith("plugin:"):
            raise click.ClickException("--resynth must be 'builtin' or 'plugin:CMD'")
        plugin = shlex.split(resynth[len("plugin:"):])
    noise = load_noise_model(noise_path) if noise_path else NOISELESS
    config = SearchConfig(
        epsilon_f=epsilon,
        temperature=temperature,
        resynth_probability=resynth_probability,
        max_subcircuit_qubits=max_subcircuit_qubits,
        time_limit=time_limit,
        seed=seed,
        async_resynthesis=async_resynth,
        max_iterations=max_iterations,
        resynth_budget_ms=resynth_budget_ms,
    )
    report = run(
        corpus, gate_set, config, mode=mode, objective=objective,
        noise_model=noise, rules_path=rules_path, plugin=plugin, out_dir=out_dir,
    )
    for record in report.records:
        if record["status"] != "ok":
            click.echo(f"{record['name']}: FAILED ({record['error']})")
            continue
        before = record["counts_before"]["two_qubit"]
        after = record["counts_after"]["two_qubit"]
        click.echo(
            f"{record['name']}: 2q {before} -> {after}, total "
            f"{record['counts_before']['total']} -> {record['counts_after']['total']}, "
            f"budget spent {record['error_budget_spent']:.2e}, "
            f"{record['wall_time_s']:.1f}s"
        )
    if out_dir:
        click.echo(f"report written to {out_dir}")


@main.command("compare")
@click.argument("reports", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--metric", default="two_qubit_after", show_default=True,
              type=click.Choice(["two_qubit_after", "total_after", "gate_reduction",
                                 "two_qubit_reduction", "fidelity_after"]))
@click.option("--out", "out_dir", type=click.Path(), default=None)
def compare_cmd(reports, metric, out_dir):
    """Summarize outperform/match/underperform counts between run reports."""
    loaded = []
    for path in reports:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        loaded.append(
            RunReport(
                gate_set=data["gate_set"],
                objective=data["objective"],
                mode=data["mode"],
                epsilon_f=data["epsilon_f"],
                seed=data["seed"],
                time_limit=data["time_limit"],
                records=data["records"],
            )
        )
    summary = compare(loaded, metric=metric)
    for pair in summary["pairs"]:
        click.echo(
            f"{pair['a']} vs {pair['b']} on {metric}: "
            f"{pair['outperform']} outperform / {pair['match']} match / "
            f"{pair['underperform']} underperform"
        )
    if summary["excluded"]:
        click.echo(f"excluded (not shared): {', '.join(summary['excluded'])}")
    if out_dir:
        write_comparison(summary, out_dir)
        click.echo(f"comparison written to {out_dir}")


if __name__ == "__main__":
    main()
