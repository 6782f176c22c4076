"""A small taste of the evaluation harness: guided collection vs five random
walkers on the 100-AP square, 4 seeds. The full comparison (20 seeds, three
approaches, expense tables) runs via `chi-walk eval`."""

import pathlib

from chi_walk.evaluation import (
    ApproachConfig,
    error_vs_expense,
    mean_series,
    plot_curves_svg,
    run_matrix,
)
from chi_walk.scenarios import grid100

approaches = [ApproachConfig("chi"), ApproachConfig("crowd", crowds=5)]
results = run_matrix(grid100, approaches, seeds=[1, 2, 3, 4], horizon=8000.0)

for label, per_seed in results.items():
    series = mean_series(per_seed)
    quarter = [err for t, err in series if t in (2000.0, 4000.0, 6000.0, 8000.0)]
    print(f"{label:8s} error at t=2k/4k/6k/8k: "
          + " / ".join(f"{e:6.2f}" for e in quarter))

rows = error_vs_expense(results, approaches, [15.0, 9.0, 5.0])
print("\nexpense to reach error targets:")
for label, target, t, e in rows:
    status = "unreached" if t is None else f"t={t:<7.0f} expense={e:.0f}"
    print(f"  {label:8s} target {target:4.0f}: {status}")

out = pathlib.Path(__file__).with_name("curves.svg")
plot_curves_svg(out, results)
print(f"\nwrote {out}")
