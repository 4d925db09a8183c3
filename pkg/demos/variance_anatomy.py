"""Where does the uncertainty of a published cell come from?

Builds the calibrated world, tabulates it, and prints the share of total
variability owed to sampling, imputation and noise infusion by size class.

    python3 demos/variance_anatomy.py
"""
from pathlib import Path

import pandas as pd

from qwivar.config import RunConfig
from qwivar.microdata import generate_world
from qwivar.tabulate import prepare, run_tables, summarize

cfg = RunConfig.load(Path(__file__).parents[1] / "configs" / "calibrated.yaml")
world = generate_world(cfg.world_config())
print(f"{world.n_employers} employers, {world.n_jobs} jobs, {len(world.quarters)} quarters")

cells = run_tables(prepare(world, cfg))
summary = summarize(cells, cfg.L, cfg.level)

pd.set_option("display.width", 160)
cols = ["stat", "size_class", "n_cells", "pct_within", "pct_between_imp", "pct_between_sdl", "CV_p50", "DF_med"]
for table, g in summary.groupby("table", sort=False):
    print(f"\n{table}")
    print(g[cols].to_string(index=False, float_format=lambda v: f"{v:.3g}"))
