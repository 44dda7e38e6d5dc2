import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.stats import qmc

from nopast.utils.acquisitions import AcquisitionSpec, incumbent
from nopast.utils.data import RunEntry, RunRecord, Strategy
from nopast.utils.errors import ContractViolation, ObjectiveError, UnknownMinimumError
from nopast.utils.gp import DEFAULT_RESTARTS, Dataset, GpModel, SearchSpace, fit
from nopast.utils.portfolio import MEMORY, PortfolioState, portfolio_specs, step

INITIAL_POINTS = 5
ITERATIONS = 100


@dataclass
class RunConfig:
    space: SearchSpace
    iterations: int = ITERATIONS
    initial_points: int = INITIAL_POINTS
    strategy: Strategy = Strategy.NO_PAST_BO
    specs: List[AcquisitionSpec] = field(default_factory=lambda: portfolio_specs(3))
    eta: Optional[float] = None
    memory: float = MEMORY
    normalize: bool = True
    seed: int = 0
    gp_restarts: int = DEFAULT_RESTARTS
    acq_budget: Optional[int] = None
    objective: Optional[str] = None

    def __post_init__(self):
        if self.iterations < 1:
            raise ContractViolation(f"iterations must be >= 1, got {self.iterations}")
        if self.initial_points < 2:
            raise ContractViolation(
                f"initial_points must be >= 2 to fit a GP, got {self.initial_points}"
            )

    def portfolio(self) -> PortfolioState:
        return PortfolioState(
            strategy=self.strategy,
            specs=list(self.specs),
            eta=self.eta,
            memory=self.memory,
            normalize=self.normalize,
        )


def latin_hypercube(n: int, space: SearchSpace, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise ContractViolation(f"Need at least one design point, got {n}")
    sample = qmc.LatinHypercube(d=space.dim, seed=rng).random(n)
    return space.clip(qmc.scale(sample, space.lower, space.upper))


class Optimizer:
    """Ask/tell driver: the initial LHS design first, then one portfolio step per ask.

    Independent generators are spawned from the seed for the design, the GP
    restarts, the acquisition probes and the nominee draw, so strategies run
    with the same seed share their initial design.
    """

    def __init__(self, config: RunConfig, run_id: int = 0) -> None:
        self.config = config
        self.run_id = run_id
        self.space = config.space
        design_seq, model_seq, acq_seq, select_seq = np.random.SeedSequence(
            config.seed
        ).spawn(4)
        self.model_rng = np.random.default_rng(model_seq)
        self.acq_rng = np.random.default_rng(acq_seq)
        self.select_rng = np.random.default_rng(select_seq)
        self.design = latin_hypercube(
            config.initial_points, self.space, np.random.default_rng(design_seq)
        )
        self.state = config.portfolio()
        self.data = Dataset.empty(self.space.dim)
        self.model: Optional[GpModel] = None
        self.t = 0
        self.entries: List[RunEntry] = []
        self._pending = None

    @property
    def done(self) -> bool:
        return self.t >= self.config.iterations

    def ask(self) -> np.ndarray:
        if self._pending is not None:
            return self._pending[0].copy()

        if len(self.data) < self.config.initial_points:
            self._pending = (self.design[len(self.data)].copy(), None, None)
            return self._pending[0].copy()

        if self.done:
            raise ContractViolation(
                f"All {self.config.iterations} iterations have been used"
            )
        t = self.t + 1
        x, trace, complete = step(
            self.state,
            self.model,
            self.space,
            t,
            incumbent(self.model),
            self.select_rng,
            self.acq_rng,
            self.config.acq_budget,
        )
        self._pending = (x, trace, complete)
        return x.copy()

    def tell(self, x: np.ndarray, y: float):
        if self._pending is None:
            raise ContractViolation("tell() called without a pending ask()")
        pending_x, trace, complete = self._pending
        x = np.asarray(x, dtype=float)
        if not np.array_equal(x, pending_x):
            raise ContractViolation(f"Told {x}, but the pending point is {pending_x}")
        if not np.isfinite(y):
            raise ContractViolation(f"Observation at {x} is not finite: {y}")

        self.data = self.data.augment(x, y)
        if len(self.data) >= self.config.initial_points:
            self.model = fit(
                self.data,
                self.space,
                self.config.gp_restarts,
                self.model_rng,
                initial=None if self.model is None else self.model.hyper,
            )
        if complete is not None:
            complete(self.model)
            self.t += 1

        previous = self.entries[-1].best_so_far if self.entries else np.inf
        self.entries.append(
            RunEntry(
                iteration=len(self.data) - self.config.initial_points,
                phase="init" if trace is None else "bo",
                x=x.tolist(),
                y=float(y),
                best_so_far=float(min(previous, y)),
                trace=trace,
            )
        )
        self._pending = None
        if trace is not None:
            logging.debug(
                f"Run {self.run_id} t={self.t}: y={y:.6g} best={self.entries[-1].best_so_far:.6g}"
            )

    def record(self) -> RunRecord:
        best = int(np.argmin(self.data.targets)) if len(self.data) else None
        return RunRecord(
            run_id=self.run_id,
            seed=self.config.seed,
            strategy=self.config.strategy.value,
            acquisitions=[spec.label for spec in self.config.specs],
            entries=list(self.entries),
            best_point=None if best is None else self.data.inputs[best].tolist(),
            best_value=None if best is None else float(self.data.targets[best]),
        )


def run_bo(
    config: RunConfig, objective: Callable[[np.ndarray], float], run_id: int = 0
) -> RunRecord:
    optimizer = Optimizer(config, run_id)
    while not optimizer.done:
        x = optimizer.ask()
        try:
            y = float(objective(x))
        except Exception as ex:
            raise ObjectiveError(
                f"Objective failed at {x.tolist()}: {ex}", optimizer.record()
            ) from ex
        if not np.isfinite(y):
            raise ObjectiveError(
                f"Objective returned {y} at {x.tolist()}", optimizer.record()
            )
        optimizer.tell(x, y)
    return optimizer.record()


def simple_error(record: RunRecord, f_min: Optional[float]) -> np.ndarray:
    if f_min is None:
        raise UnknownMinimumError(
            "The objective's minimum is unknown; report record.best_so_far instead"
        )
    return np.maximum(np.asarray(record.best_so_far) - f_min, 0.0)
