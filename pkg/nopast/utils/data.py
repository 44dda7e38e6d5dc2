from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Union

from dataclasses_json import dataclass_json

from nopast.utils.errors import ContractViolation

PORTFOLIO_SIZES = (3, 9)
MEMORY_SWEEP = (0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0)


class Strategy(Enum):
    GP_HEDGE = "gp_hedge"
    NO_PAST_BO = "no_past_bo"
    RANDOM = "random"
    SINGLE = "single"


@dataclass_json
@dataclass
class SelectionTrace:
    iteration: int
    probabilities: List[float]
    chosen: int
    nominees: List[List[float]]
    # r_j(t-1) that produced `probabilities`; None unless rewards were normalized
    normalized_rewards: Optional[List[float]] = None
    # G_j(t) after the reward update
    rewards: Optional[List[float]] = None


@dataclass_json
@dataclass
class RunEntry:
    iteration: int
    phase: str
    x: List[float]
    y: float
    best_so_far: float
    trace: Optional[SelectionTrace] = None


@dataclass_json
@dataclass
class RunRecord:
    run_id: int
    seed: int
    strategy: str
    acquisitions: List[str]
    entries: List[RunEntry] = field(default_factory=list)
    best_point: Optional[List[float]] = None
    best_value: Optional[float] = None

    @property
    def traces(self) -> List[SelectionTrace]:
        return [e.trace for e in self.entries if e.trace is not None]

    @property
    def best_so_far(self) -> List[float]:
        return [e.best_so_far for e in self.entries]


def split_values(input: str, delimiter=",") -> List[str]:
    return [value.strip() for value in input.split(delimiter) if value.strip()]


def split_floats(input: str, delimiter=",") -> List[float]:
    return [float(value) for value in split_values(input, delimiter)]


def split_memories(input: str, delimiter=",") -> List[float]:
    if input.strip().lower() == "sweep":
        return list(MEMORY_SWEEP)
    return split_floats(input, delimiter)


def _as_list(value: Union[str, float, List]) -> List:
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


@dataclass_json
@dataclass
class ExperimentConfig:
    benchmark: str = "branin"
    strategies: List[str] = field(
        default_factory=lambda: [Strategy.GP_HEDGE.value, Strategy.NO_PAST_BO.value]
    )
    portfolio: int = 3
    memories: List[float] = field(default_factory=lambda: [0.7])
    etas: List[float] = field(default_factory=lambda: [4.0])
    hedge_etas: List[float] = field(default_factory=lambda: [1.0])
    runs: int = 25
    iterations: int = 100
    initial_points: int = 5
    seed: int = 0
    out: str = "./results"
    workers: int = 1
    gp_restarts: int = 5
    acq_budget: Optional[int] = None
    normalize: bool = True
    plot: bool = False

    def __post_init__(self):
        self.strategies = [str(s).lower() for s in _as_list(self.strategies)]
        self.memories = [float(m) for m in _as_list(self.memories)]
        self.etas = [float(e) for e in _as_list(self.etas)]
        self.hedge_etas = [float(e) for e in _as_list(self.hedge_etas)]

        known = {s.value for s in Strategy}
        unknown = [s for s in self.strategies if s not in known]
        if unknown or not self.strategies:
            raise ContractViolation(
                f"Unknown strategies {unknown}, choose from {sorted(known)}"
            )
        if self.portfolio not in PORTFOLIO_SIZES:
            raise ContractViolation(f"Portfolio size must be one of {PORTFOLIO_SIZES}")
        if any(not 0.0 <= m <= 1.0 for m in self.memories):
            raise ContractViolation(f"Memory factors must lie in [0, 1]: {self.memories}")
        if any(e <= 0 for e in self.etas + self.hedge_etas):
            raise ContractViolation("eta values must be positive")
        if self.runs < 1 or self.iterations < 1 or self.initial_points < 2:
            raise ContractViolation(
                "Need runs >= 1, iterations >= 1 and initial_points >= 2"
            )
        if self.workers < 1:
            raise ContractViolation("workers must be >= 1")


@dataclass_json
@dataclass
class CellSummary:
    name: str
    strategy: str
    acquisitions: List[str]
    memory: Optional[float] = None
    eta: Optional[float] = None
    normalize: Optional[bool] = None
    status: str = "ok"
    error: Optional[str] = None
    mean_log_error: List[float] = field(default_factory=list)
    ci: List[float] = field(default_factory=list)
    selection_frequency: List[float] = field(default_factory=list)
    final_errors: List[float] = field(default_factory=list)


@dataclass_json
@dataclass
class SummaryMetadata:
    f_min: float
    dim: int
    paired_seeds: bool = True
    log_base: int = 10
    ci_multiplier: float = 1.0
    error_floor: float = 1e-12
    # error curve index 0 is the best value of the initial design
    iteration_origin: str = "last initial point"


@dataclass_json
@dataclass
class ExperimentSummary:
    config: ExperimentConfig
    metadata: SummaryMetadata
    cells: List[CellSummary] = field(default_factory=list)

    def cell(self, name: str) -> CellSummary:
        for cell in self.cells:
            if cell.name == name:
                return cell
        raise ContractViolation(
            f"No cell named {name}, available: {[c.name for c in self.cells]}"
        )
