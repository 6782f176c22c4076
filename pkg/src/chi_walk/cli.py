"""Command line: evaluation runs, the session service, and replay.

Exit codes: 0 ok, 2 configuration error, 3 acceptance-property violation
(--check on eval, or a replay mismatch)."""

from __future__ import annotations

import json
import pathlib
import sys

import click

from chi_walk.evaluation import (
    error_vs_expense,
    mean_series,
    parse_approach,
    plot_curves_svg,
    run_matrix,
    write_curves_csv,
    write_expense_csv,
)
from chi_walk.scenarios import builtin_scenario
from chi_walk.session import load_session, save_session
from chi_walk.world import load_scenario

CONFIG_ERROR = 2
PROPERTY_VIOLATION = 3

DEFAULT_TARGETS = (15.0, 12.0, 9.0, 7.0, 6.0, 5.0, 4.0, 3.0)


@click.group()
def main():
    """Walker-in-the-loop indoor localization toolkit."""


@main.command("eval")
@click.option("--scenario", "scenario_spec", default="builtin:grid100",
              show_default=True,
              help="Scenario JSON file or builtin:<name> (grid100, office17).")
@click.option("--approach", "approaches", multiple=True,
              default=("chi", "fp:1/5,5", "crowd:5"), show_default=True,
              help="chi | fp:p,c | crowd:k (repeatable).")
@click.option("--seeds", default=20, show_default=True, help="Number of seeds.")
@click.option("--horizon", default=8000.0, show_default=True,
              help="Simulated time units per run.")
@click.option("--out", "out_dir", default="eval-out", show_default=True)
@click.option("--svg", is_flag=True, help="Also write curves.svg.")
@click.option("--check", is_flag=True,
              help="Verify the guided < crowd and guided < fingerprinting "
                   "orderings; exit 3 on violation.")
def eval_cmd(scenario_spec, approaches, seeds, horizon, out_dir, svg, check):
    """Run localization processes and write curves.csv / expense.csv."""
    try:
        configs = [parse_approach(a) for a in approaches]
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(CONFIG_ERROR)

    if scenario_spec.startswith("builtin:"):
        name = scenario_spec.split(":", 1)[1]
        try:
            builtin_scenario(name)
        except ValueError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(CONFIG_ERROR)

        def builder(seed):
            return builtin_scenario(name, seed=seed)
    else:
        path = pathlib.Path(scenario_spec)
        if not path.exists():
            click.echo(f"error: scenario file {path} not found", err=True)
            sys.exit(CONFIG_ERROR)
        fixed = load_scenario(path)

        def builder(seed):
            return fixed

    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed_list = list(range(1, seeds + 1))
    results = run_matrix(builder, configs, seed_list, horizon)
    write_curves_csv(out / "curves.csv", results)
    rows = error_vs_expense(results, configs, DEFAULT_TARGETS)
    write_expense_csv(out / "expense.csv", rows)
    if svg:
        plot_curves_svg(out / "curves.svg", results)

    finals = {label: mean_series(series)[-1][1]
              for label, series in results.items()}
    for label in sorted(finals):
        click.echo(f"{label}: mean error at horizon = {finals[label]:.3f}")

    if check:
        chi_labels = [c.label for c in configs if c.kind == "chi"]
        if not chi_labels:
            click.echo("error: --check needs a chi approach", err=True)
            sys.exit(CONFIG_ERROR)
        chi_final = finals[chi_labels[0]]
        violations = [label for label, err in finals.items()
                      if label != chi_labels[0] and err <= chi_final]
        if violations:
            click.echo(f"ordering violation: {violations} not above "
                       f"chi={chi_final:.3f}", err=True)
            sys.exit(PROPERTY_VIOLATION)
        click.echo("ordering check passed")


@main.command("serve")
@click.option("--port", default=8008, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui", "ui_dir", default=None,
              help="Directory of built UI files to serve at /.")
def serve_cmd(port, host, ui_dir):
    """Start the session HTTP API."""
    import uvicorn

    from chi_walk.service import create_app

    if ui_dir is not None and not pathlib.Path(ui_dir).is_dir():
        click.echo(f"error: UI directory {ui_dir} not found", err=True)
        sys.exit(CONFIG_ERROR)
    uvicorn.run(create_app(static_dir=ui_dir), host=host, port=port,
                log_level="warning")


@main.command("replay")
@click.argument("session_file", type=click.Path(exists=False))
@click.option("--save", "save_path", default=None,
              help="Write the replayed session back out.")
def replay_cmd(session_file, save_path):
    """Re-run a session event log and verify the recorded state matches."""
    path = pathlib.Path(session_file)
    if not path.exists():
        click.echo(f"error: {path} not found", err=True)
        sys.exit(CONFIG_ERROR)
    try:
        with open(path) as fh:
            recorded = json.load(fh)
        session = load_session(path)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(CONFIG_ERROR)
    replayed = session.state_dict()
    if "state" in recorded:
        want = json.dumps(recorded["state"], sort_keys=True)
        got = json.dumps(replayed["state"], sort_keys=True)
        if want != got:
            click.echo("replay mismatch: event log does not reproduce the "
                       "recorded state", err=True)
            sys.exit(PROPERTY_VIOLATION)
    click.echo(f"replayed {len(replayed['events'])} events; "
               f"clock={replayed['state']['clock']:.1f}; state verified")
    if save_path:
        save_session(session, save_path)


if __name__ == "__main__":
    main()
