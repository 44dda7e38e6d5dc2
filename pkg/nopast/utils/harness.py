import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from nopast.utils import benchmarks, store
from nopast.utils.acquisitions import AcquisitionSpec
from nopast.utils.bo import RunConfig, run_bo, simple_error
from nopast.utils.data import (
    CellSummary,
    ExperimentConfig,
    ExperimentSummary,
    RunRecord,
    SelectionTrace,
    Strategy,
    SummaryMetadata,
)
from nopast.utils.errors import ContractViolation
from nopast.utils.portfolio import portfolio_specs

ERROR_FLOOR = 1e-12
CI_MULTIPLIER = 1.0


@dataclass(frozen=True)
class Cell:
    name: str
    strategy: Strategy
    specs: Tuple[AcquisitionSpec, ...]
    eta: Optional[float] = None
    memory: Optional[float] = None
    normalize: bool = True


def expand_cells(config: ExperimentConfig) -> List[Cell]:
    """One cell per (strategy, memory, eta) combination that the strategy reads."""
    specs = tuple(portfolio_specs(config.portfolio))
    cells = []
    for name in config.strategies:
        strategy = Strategy(name)
        if strategy == Strategy.NO_PAST_BO:
            suffix = "" if config.normalize else "_raw"
            for memory in config.memories:
                for eta in config.etas:
                    cells.append(
                        Cell(
                            f"no_past_bo_m{memory:g}_eta{eta:g}{suffix}",
                            strategy,
                            specs,
                            eta,
                            memory,
                            config.normalize,
                        )
                    )
        elif strategy == Strategy.GP_HEDGE:
            for eta in config.hedge_etas:
                cells.append(Cell(f"gp_hedge_eta{eta:g}", strategy, specs, eta, 1.0))
        elif strategy == Strategy.RANDOM:
            cells.append(Cell("random", strategy, specs))
        else:
            for spec in specs:
                cells.append(Cell(f"single_{spec.label}", strategy, (spec,)))
    return cells


def run_config(cell: Cell, config: ExperimentConfig, run_id: int) -> RunConfig:
    return RunConfig(
        space=benchmarks.get(config.benchmark).space,
        iterations=config.iterations,
        initial_points=config.initial_points,
        strategy=cell.strategy,
        specs=list(cell.specs),
        eta=cell.eta,
        memory=1.0 if cell.memory is None else cell.memory,
        normalize=cell.normalize,
        seed=config.seed + run_id,
        gp_restarts=config.gp_restarts,
        acq_budget=config.acq_budget,
        objective=config.benchmark,
    )


def execute_run(cell: Cell, config: ExperimentConfig, run_id: int) -> RunRecord:
    benchmark = benchmarks.get(config.benchmark)
    logging.debug(f"Starting {cell.name} run {run_id}")
    return run_bo(run_config(cell, config, run_id), benchmark, run_id)


def error_curve(record: RunRecord, f_min: float, initial_points: int) -> np.ndarray:
    """Simple error from the last initial point (index 0) to the final iteration."""
    return simple_error(record, f_min)[initial_points - 1 :]


def mean_log_error(errors: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-iteration mean of log10(error) across runs and its std / sqrt(R)."""
    logs = np.log10(np.maximum(np.atleast_2d(np.asarray(errors, dtype=float)), ERROR_FLOOR))
    runs = logs.shape[0]
    mean = logs.mean(axis=0)
    if runs < 2:
        return mean, np.zeros_like(mean)
    return mean, logs.std(axis=0, ddof=1) / np.sqrt(runs)


def selection_frequency(traces: List[SelectionTrace]) -> np.ndarray:
    if not traces:
        raise ContractViolation("selection_frequency needs at least one trace")
    counts = np.bincount(
        [trace.chosen for trace in traces], minlength=len(traces[0].probabilities)
    )
    return counts / counts.sum()


def _summarize_cell(
    cell: Cell,
    outcomes: Dict[int, Union[RunRecord, Exception]],
    config: ExperimentConfig,
    benchmark: benchmarks.Benchmark,
) -> CellSummary:
    summary = CellSummary(
        name=cell.name,
        strategy=cell.strategy.value,
        acquisitions=[spec.label for spec in cell.specs],
        memory=cell.memory,
        eta=cell.eta,
        normalize=cell.normalize if cell.strategy == Strategy.NO_PAST_BO else None,
    )
    failures = {
        run_id: outcome
        for run_id, outcome in outcomes.items()
        if isinstance(outcome, Exception)
    }
    if failures:
        summary.status = "failed"
        summary.error = "; ".join(f"run {k}: {v}" for k, v in sorted(failures.items()))
        logging.warning(f"Cell {cell.name} failed: {summary.error}")
        return summary

    records = [outcomes[run_id] for run_id in sorted(outcomes)]
    store.save_cell(config.out, cell.name, records, benchmark.dim, len(cell.specs))
    errors = np.array(
        [error_curve(r, benchmark.f_min, config.initial_points) for r in records]
    )
    mean, ci = mean_log_error(errors)
    summary.mean_log_error = mean.tolist()
    summary.ci = ci.tolist()
    summary.selection_frequency = selection_frequency(
        [trace for record in records for trace in record.traces]
    ).tolist()
    summary.final_errors = errors[:, -1].tolist()
    logging.info(
        f"{cell.name}: final mean log error {mean[-1]:.4f} +- {ci[-1]:.4f} over {len(records)} runs"
    )
    return summary


def run_experiment(config: ExperimentConfig, progress: bool = False) -> ExperimentSummary:
    benchmark = benchmarks.get(config.benchmark)
    cells = expand_cells(config)
    jobs = [(cell, run_id) for cell in cells for run_id in range(config.runs)]
    logging.info(
        f"Running {len(cells)} cells x {config.runs} runs on {benchmark.name} "
        f"({config.initial_points} + {config.iterations} evaluations each)"
    )

    outcomes: Dict[str, Dict[int, Union[RunRecord, Exception]]] = {
        cell.name: {} for cell in cells
    }
    with tqdm(total=len(jobs), disable=not progress) as bar:
        if config.workers > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                futures = {
                    pool.submit(execute_run, cell, config, run_id): (cell, run_id)
                    for cell, run_id in jobs
                }
                for future in as_completed(futures):
                    cell, run_id = futures[future]
                    try:
                        outcomes[cell.name][run_id] = future.result()
                    except Exception as ex:
                        logging.error(f"{cell.name} run {run_id} failed: {ex}")
                        outcomes[cell.name][run_id] = ex
                    bar.update()
        else:
            for cell, run_id in jobs:
                try:
                    outcomes[cell.name][run_id] = execute_run(cell, config, run_id)
                except Exception as ex:
                    logging.error(f"{cell.name} run {run_id} failed: {ex}")
                    outcomes[cell.name][run_id] = ex
                bar.update()

    summary = ExperimentSummary(
        config=config,
        metadata=SummaryMetadata(
            f_min=benchmark.f_min,
            dim=benchmark.dim,
            ci_multiplier=CI_MULTIPLIER,
            error_floor=ERROR_FLOOR,
        ),
        cells=[
            _summarize_cell(cell, outcomes[cell.name], config, benchmark)
            for cell in cells
        ],
    )
    store.save_summary(config.out, summary)
    store.save_plot_data(config.out, summary.cells)
    if config.plot:
        store.save_convergence_plot(config.out, summary)
    return summary


def errors_from_runs(runs: pd.DataFrame, f_min: float) -> np.ndarray:
    """R x (T + 1) simple-error matrix rebuilt from a runs.csv frame."""
    curves = runs[runs["iteration"] >= 0].sort_values(["run_id", "iteration"])
    best = curves.pivot(index="run_id", columns="iteration", values="best_so_far")
    return np.maximum(best.to_numpy() - f_min, 0.0)


def summarize(out: str) -> pd.DataFrame:
    """Recomputes every ok cell's statistics from its runs.csv."""
    summary = store.load_summary(out)
    rows = []
    for cell in summary.cells:
        if cell.status != "ok":
            rows.append([cell.name, cell.status, np.nan, np.nan, np.nan, 0])
            continue
        errors = errors_from_runs(store.load_runs(out, cell.name), summary.metadata.f_min)
        mean, ci = mean_log_error(errors)
        deviation = float(
            max(
                np.max(np.abs(mean - np.asarray(cell.mean_log_error))),
                np.max(np.abs(ci - np.asarray(cell.ci))),
            )
        )
        if deviation > 1e-10:
            logging.warning(f"{cell.name}: CSV statistics deviate from summary by {deviation}")
        rows.append([cell.name, cell.status, mean[-1], ci[-1], deviation, errors.shape[0]])
    return pd.DataFrame(
        rows,
        columns=["cell", "status", "final_mean_log_error", "final_ci", "deviation", "runs"],
    )


def compare(summary: ExperimentSummary, reference: Optional[str] = None) -> pd.DataFrame:
    """Paired final-error table against `reference` (first GP-Hedge cell by default)."""
    ok = [cell for cell in summary.cells if cell.status == "ok"]
    if not ok:
        raise ContractViolation("No successful cells to compare")
    if reference is None:
        hedges = [c for c in ok if c.strategy == Strategy.GP_HEDGE.value]
        reference = (hedges or ok)[0].name
    if summary.cell(reference).status != "ok":
        raise ContractViolation(f"Reference cell {reference} has no results to pair against")
    ref_logs = np.log10(
        np.maximum(np.asarray(summary.cell(reference).final_errors), ERROR_FLOOR)
    )

    rows = []
    for cell in ok:
        logs = np.log10(np.maximum(np.asarray(cell.final_errors), ERROR_FLOOR))
        paired = min(len(logs), len(ref_logs))
        rows.append(
            [
                cell.name,
                cell.mean_log_error[-1],
                cell.ci[-1],
                float(np.mean(logs[:paired] - ref_logs[:paired])),
                float(np.mean(logs[:paired] < ref_logs[:paired])),
            ]
        )
    df = pd.DataFrame(
        rows,
        columns=["cell", "final_mean_log_error", "final_ci", "mean_paired_diff", "paired_wins"],
    )
    df.attrs["reference"] = reference
    return df.sort_values("final_mean_log_error", kind="stable").reset_index(drop=True)
