"""``judgepanel`` command line.

Exit codes: 0 success, 2 bad input (config, dataset, missing stage output),
3 one or more judge calls failed (auth or transport).
"""

from __future__ import annotations

import functools
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Optional

import click

from .domain import Category
from .metrics import pct
from .orchestrator import (
    ConfigError,
    DatasetIOError,
    EmptyDataset,
    MissingStage,
    Pipeline,
    RunExists,
    SimulationSpec,
    load_config,
    simulate,
)
from .reporting import agreement_line

EXIT_DATA = 2
EXIT_BACKEND = 3

logger = logging.getLogger("judgepanel")


def _run_options(fn: Callable) -> Callable:
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
                     help="YAML run configuration."),
        click.option("--dataset", type=click.Path(dir_okay=False, path_type=Path), help="Pair dataset (JSONL)."),
        click.option("--out", type=click.Path(file_okay=False, path_type=Path), help="Output root directory."),
        click.option("--seed", type=int, help="Run seed (mock draws, bootstrap sample, retry jitter)."),
        click.option("--mock", is_flag=True, default=None, help="Use deterministic mock judges."),
        click.option("--run-id", help="Explicit run id instead of the config fingerprint."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _pipeline(config_path, dataset, out, seed, mock, run_id) -> Pipeline:
    config = load_config(config_path, overrides={
        "dataset": str(dataset) if dataset else None,
        "output_dir": str(out) if out else None,
        "seed": seed,
        "mock": mock,
        "run_id": run_id,
    })
    return Pipeline(config)


def _handled(fn: Callable) -> Callable:
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, EmptyDataset, DatasetIOError, RunExists, MissingStage) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_DATA)

    return wrapper


def _exit_for_failures(failed: int) -> None:
    if failed:
        click.echo(f"{failed} judge call(s) failed; see failures.jsonl", err=True)
        sys.exit(EXIT_BACKEND)


@click.group()
@click.option("-v", "--verbose", count=True, help="-v for info, -vv for debug logging.")
def main(verbose: int) -> None:
    """Evaluate complementary-item recommendations with a panel of LLM judges."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@_run_options
@click.option("--resume", is_flag=True, help="Continue a partially completed audit.")
@_handled
def audit(config_path, dataset, out, seed, mock, run_id, resume) -> None:
    """Ingest the dataset and collect both audits from every judge."""
    pipe = _pipeline(config_path, dataset, out, seed, mock, run_id)
    data = pipe.ingest()
    stats = pipe.audit(data, resume=resume)
    click.echo(
        f"{pipe.run_dir}: {len(data.pairs)} pairs, {stats.completed} audits done, "
        f"{stats.skipped} reused, {stats.failed} failed, {len(data.errors)} bad lines"
    )
    _exit_for_failures(stats.failed)


@main.command()
@_run_options
@_handled
def consensus(config_path, dataset, out, seed, mock, run_id) -> None:
    """Select the panel and write consensus labels."""
    pipe = _pipeline(config_path, dataset, out, seed, mock, run_id)
    labels, panel = pipe.consensus(pipe.load_pairs())
    conflicted = sum(l.conflicted for l in labels.values())
    click.echo(f"panel of {len(panel.panel)}: {len(labels)} labels, {conflicted} conflicted")


@main.command()
@_run_options
@_handled
def metrics(config_path, dataset, out, seed, mock, run_id) -> None:
    """Score every judge against the consensus labels."""
    pipe = _pipeline(config_path, dataset, out, seed, mock, run_id)
    scorecards = pipe.metrics(pipe.load_pairs())
    click.echo(pipe.path("scorecards.csv").read_text(encoding="utf-8"), nl=False)
    if not scorecards:
        click.echo("no definitive consensus labels; nothing scored", err=True)


@main.command()
@_run_options
@_handled
def report(config_path, dataset, out, seed, mock, run_id) -> None:
    """Render the aggregate markdown/JSON report and the cost ledger."""
    pipe = _pipeline(config_path, dataset, out, seed, mock, run_id)
    rep, _ = pipe.report(pipe.load_pairs())
    click.echo(agreement_line(rep))
    click.echo(f"report written to {pipe.path('report.md')}")


@main.command()
@_run_options
@click.option("--resume", is_flag=True, help="Continue a partially completed run.")
@_handled
def run(config_path, dataset, out, seed, mock, run_id, resume) -> None:
    """Run every stage end to end."""
    pipe = _pipeline(config_path, dataset, out, seed, mock, run_id)
    result = pipe.run(resume=resume)
    click.echo(f"run {result.run_id} -> {result.run_dir}")
    click.echo(agreement_line(result.report))
    _exit_for_failures(result.audit.failed)


def _parse_competence(values: tuple[str, ...]) -> dict:
    table = {}
    for item in values:
        name, sep, value = item.partition("=")
        if not sep:
            raise click.BadParameter(f"expected CATEGORY=P, got {item!r}", param_hint="--competence")
        table[Category.parse(name)] = float(value)
    return table


@main.command(name="simulate")
@click.option("--competence", multiple=True, metavar="CATEGORY=P",
              help="Judge competence per category; repeatable. Default Electronics=0.95 PetSupplies=0.75.")
@click.option("--judges", "n_judges", type=int, default=15, show_default=True)
@click.option("--pairs", "pairs_per_category", type=int, default=500, show_default=True,
              help="Synthetic pairs per category.")
@click.option("--abstain-rate", type=float, default=0.0, show_default=True)
@click.option("--threshold", type=float, default=0.6, show_default=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="Write distributions as JSON.")
def simulate_cmd(competence, n_judges, pairs_per_category, abstain_rate, threshold, seed, out: Optional[Path]):
    """Simulate a mock panel and print per-category agreement distributions."""
    kwargs = {"competence": _parse_competence(competence)} if competence else {}
    spec = SimulationSpec(
        n_judges=n_judges, pairs_per_category=pairs_per_category,
        abstain_rate=abstain_rate, threshold=threshold, seed=seed, **kwargs,
    )
    result = simulate(spec)
    click.echo(f"consensus accuracy: {pct(result.accuracy())}%")
    for cat, dist in result.distributions.items():
        click.echo(
            f"{cat.value:>16}: accuracy {pct(result.accuracy(cat))}%, "
            f"mass above 0.8 = {dist.mass_above(0.8):.3f}, n = {dist.count}"
        )
    if out:
        payload = {
            "accuracy": result.accuracy(),
            "per_category_accuracy": {c.value: a for c, a in result.per_category_accuracy.items()},
            "distributions": [d.to_dict() for d in result.distributions.values()],
        }
        out.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
