import argparse
import logging

import pandas as pd

from nopast.utils import benchmarks
from nopast.utils.command import Command
from nopast.utils.data import (
    ExperimentConfig,
    ExperimentSummary,
    split_floats,
    split_memories,
    split_values,
)
from nopast.utils.harness import run_experiment


class Run(Command):
    @classmethod
    def options(cls, parser: argparse.ArgumentParser):
        sub_parser = parser.add_parser(
            "run", help="Run a strategy / memory-factor sweep on a benchmark"
        )
        super().options(sub_parser)
        sub_parser.add_argument(
            "--benchmark",
            "-b",
            choices=sorted(benchmarks.REGISTRY),
            help="Benchmark to minimize (Default: branin)",
            default="branin",
        )
        sub_parser.add_argument(
            "--strategy",
            "-s",
            type=split_values,
            help="""
                Strategies (comma seperated) out of gp_hedge, no_past_bo, random, single
                (Default: gp_hedge,no_past_bo)
            """,
            default="gp_hedge,no_past_bo",
        )
        sub_parser.add_argument(
            "--portfolio",
            "-p",
            type=int,
            choices=(3, 9),
            help="Number of acquisition functions in the portfolio (Default: 3)",
            default=3,
        )
        sub_parser.add_argument(
            "--memory",
            "-m",
            type=split_memories,
            help="""
                No-PASt-BO memory factors (comma seperated), or `sweep` for
                0.7,0.75,0.8,0.85,0.9,0.95,1 (Default: 0.7)
            """,
            default="0.7",
        )
        sub_parser.add_argument(
            "--eta",
            type=split_floats,
            help="No-PASt-BO eta values (comma seperated) (Default: 4)",
            default="4",
        )
        sub_parser.add_argument(
            "--hedge_eta",
            type=split_floats,
            help="GP-Hedge eta values (comma seperated) (Default: 1)",
            default="1",
        )
        sub_parser.add_argument(
            "--runs", "-r", type=int, help="Runs per cell (Default: 25)", default=25
        )
        sub_parser.add_argument(
            "--iters",
            "-t",
            type=int,
            help="BO iterations after the initial design (Default: 100)",
            default=100,
        )
        sub_parser.add_argument(
            "--initial_points",
            type=int,
            help="Latin hypercube points before the first iteration (Default: 5)",
            default=5,
        )
        sub_parser.add_argument(
            "--seed", type=int, help="Seed of run 0, run k uses seed + k (Default: 0)", default=0
        )
        sub_parser.add_argument(
            "--workers",
            "-w",
            type=int,
            help="Parallel worker processes (Default: 1)",
            default=1,
        )
        sub_parser.add_argument(
            "--gp_restarts",
            type=int,
            help="Hyperparameter optimization restarts per refit (Default: 5)",
            default=5,
        )
        sub_parser.add_argument(
            "--acq_budget",
            type=int,
            help="Acquisition evaluations per nominee (Default: 1024 x dimension)",
            default=None,
        )
        sub_parser.add_argument(
            "--no_normalize",
            action="store_true",
            help="Feed raw memory-factored rewards to No-PASt-BO's softmax (Default: False)",
        )
        sub_parser.add_argument(
            "--plot",
            action="store_true",
            help="Also render convergence.svg (Default: False)",
        )

    def experiment_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            benchmark=self.options.benchmark,
            strategies=self.options.strategy,
            portfolio=self.options.portfolio,
            memories=self.options.memory,
            etas=self.options.eta,
            hedge_etas=self.options.hedge_eta,
            runs=self.options.runs,
            iterations=self.options.iters,
            initial_points=self.options.initial_points,
            seed=self.options.seed,
            out=self.options.out,
            workers=self.options.workers,
            gp_restarts=self.options.gp_restarts,
            acq_budget=self.options.acq_budget,
            normalize=not self.options.no_normalize,
            plot=self.options.plot,
        )

    def print_summary(self, summary: ExperimentSummary):
        df = pd.DataFrame(
            [
                [
                    cell.name,
                    cell.status,
                    cell.mean_log_error[-1] if cell.mean_log_error else None,
                    cell.ci[-1] if cell.ci else None,
                    cell.selection_frequency,
                ]
                for cell in summary.cells
            ],
            columns=["cell", "status", "final_mean_log_error", "final_ci", "frequency"],
        )
        print(df.to_string(index=False))

    def log_dir(self):
        return self.options.out

    def run(self):
        config = self.experiment_config()
        summary = run_experiment(config, progress=True)
        self.print_summary(summary)
        logging.info(f"Done, artifacts in {config.out}")
