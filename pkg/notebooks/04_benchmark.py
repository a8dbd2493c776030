# %% [markdown]
# # A small benchmark sweep
#
# The harness runs each method on each (style, sigma, outliers, seed) scene and
# writes one CSV row per trial plus per-cell means. This sweep is tiny so it
# runs in seconds; `gcransac bench` runs the full grid from the shell.

# %%
import tempfile
from pathlib import Path

from gcransac import ExperimentConfig, run_experiment
from gcransac.bench import aggregate, format_table

config = ExperimentConfig(methods=("gc", "baseline", "gc-no-spatial"), styles=("straight", "dashed"),
                          sigmas=(1, 4), outliers=(100,), trials=20)
with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "trials.csv"
    records = run_experiment(config, out)
    print(out.read_text().splitlines()[0])
print(len(records), "trials")
print(format_table(aggregate(records), with_timing=False))

# %% [markdown]
# `not_all_inlier_success` is the share of successful runs whose winning minimal
# sample held at least one point farther than sigma from the true line.
