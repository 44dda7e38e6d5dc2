import logging
import os
from typing import List

import numpy as np
import pandas as pd

from nopast.utils.data import CellSummary, ExperimentSummary, RunRecord

RUNS_FILE = "runs.csv"
SCORES_FILE = "scores.csv"
PROBABILITIES_FILE = "probabilities.csv"
SUMMARY_FILE = "summary.json"
PLOT_DATA_FILE = "plot_data.csv"
PLOT_FILE = "convergence.svg"


def runs_columns(dim: int, size: int) -> List[str]:
    return (
        ["run_id", "iteration", "phase", "chosen_acq"]
        + [f"x_{d + 1}" for d in range(dim)]
        + ["y", "best_so_far"]
        + [f"p_{j + 1}" for j in range(size)]
    )


def runs_frame(records: List[RunRecord], dim: int, size: int) -> pd.DataFrame:
    rows = []
    for record in records:
        for entry in record.entries:
            trace = entry.trace
            rows.append(
                [
                    record.run_id,
                    entry.iteration,
                    entry.phase,
                    None if trace is None else record.acquisitions[trace.chosen],
                    *entry.x,
                    entry.y,
                    entry.best_so_far,
                    *([np.nan] * size if trace is None else trace.probabilities),
                ]
            )
    return pd.DataFrame(rows, columns=runs_columns(dim, size))


def scores_frame(records: List[RunRecord], size: int) -> pd.DataFrame:
    g_cols = [f"G_{j + 1}" for j in range(size)]
    r_cols = [f"r_{j + 1}" for j in range(size)]
    rows = []
    for record in records:
        for trace in record.traces:
            rows.append(
                [record.run_id, trace.iteration]
                + (trace.rewards or [np.nan] * size)
                + (trace.normalized_rewards or [np.nan] * size)
            )
    return pd.DataFrame(rows, columns=["run_id", "iteration"] + g_cols + r_cols)


def probabilities_frame(records: List[RunRecord], size: int) -> pd.DataFrame:
    """Mean choice probability per iteration and the cumulative choice frequency."""
    p_cols = [f"p_{j + 1}" for j in range(size)]
    f_cols = [f"freq_{j + 1}" for j in range(size)]
    rows = [
        [trace.iteration, trace.chosen] + trace.probabilities
        for record in records
        for trace in record.traces
    ]
    df = pd.DataFrame(rows, columns=["iteration", "chosen"] + p_cols)
    means = df.groupby("iteration")[p_cols].mean()
    chosen = pd.get_dummies(df["chosen"]).reindex(columns=range(size), fill_value=0)
    counts = chosen.astype(int).groupby(df["iteration"]).sum().cumsum()
    frequencies = counts.div(counts.sum(axis=1), axis=0)
    frequencies.columns = f_cols
    return pd.concat([means, frequencies], axis=1).reset_index()


def save_cell(out: str, name: str, records: List[RunRecord], dim: int, size: int) -> str:
    cell_dir = os.path.join(out, name)
    os.makedirs(cell_dir, exist_ok=True)
    runs_frame(records, dim, size).to_csv(os.path.join(cell_dir, RUNS_FILE), index=False)
    scores_frame(records, size).to_csv(os.path.join(cell_dir, SCORES_FILE), index=False)
    probabilities_frame(records, size).to_csv(
        os.path.join(cell_dir, PROBABILITIES_FILE), index=False
    )
    logging.info(f"Stored {len(records)} runs of {name} in {cell_dir}")
    return cell_dir


def load_runs(out: str, name: str) -> pd.DataFrame:
    path = os.path.join(out, name, RUNS_FILE)
    if not os.path.exists(path):
        raise FileNotFoundError(f"Can't find runs at {path}")
    return pd.read_csv(path, float_precision="round_trip")


def save_summary(out: str, summary: ExperimentSummary) -> str:
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, SUMMARY_FILE)
    with open(path, "w") as f:
        f.write(summary.to_json(indent=2))
    logging.info(f"Stored summary in {path}")
    return path


def load_summary(out: str) -> ExperimentSummary:
    path = os.path.join(out, SUMMARY_FILE)
    if not os.path.exists(path):
        raise FileNotFoundError(f"Can't find summary at {path}")
    with open(path, "r") as f:
        return ExperimentSummary.from_json(f.read())


def plot_frame(cells: List[CellSummary]) -> pd.DataFrame:
    columns = {}
    for cell in cells:
        if cell.status != "ok":
            continue
        columns[f"{cell.name}_mean"] = cell.mean_log_error
        columns[f"{cell.name}_ci"] = cell.ci
    df = pd.DataFrame(columns)
    df.insert(0, "iteration", range(len(df)))
    return df


def save_plot_data(out: str, cells: List[CellSummary]) -> str:
    path = os.path.join(out, PLOT_DATA_FILE)
    plot_frame(cells).to_csv(path, index=False)
    return path


def save_convergence_plot(out: str, summary: ExperimentSummary) -> str:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for cell in summary.cells:
        if cell.status != "ok":
            continue
        mean = np.asarray(cell.mean_log_error)
        ci = summary.metadata.ci_multiplier * np.asarray(cell.ci)
        iterations = np.arange(len(mean))
        ax.plot(iterations, mean, label=cell.name)
        ax.fill_between(iterations, mean - ci, mean + ci, alpha=0.2)
    ax.set_xlabel("iteration")
    ax.set_ylabel(f"mean log{summary.metadata.log_base} error")
    ax.set_title(summary.config.benchmark)
    ax.legend(fontsize="small")
    path = os.path.join(out, PLOT_FILE)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logging.info(f"Stored plot in {path}")
    return path
