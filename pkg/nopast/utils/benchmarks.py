"""Synthetic test objectives with their domains and known global minima.

Constants follow the Virtual Library of Simulation Experiments definitions.
"""
from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np

from nopast.utils.errors import ContractViolation, NopastError
from nopast.utils.gp import SearchSpace

SELF_TEST_TOLERANCE = 1e-4

BRANIN_SPACE = SearchSpace(lower=[-5.0, 0.0], upper=[10.0, 15.0])
HARTMANN3_SPACE = SearchSpace(lower=[0.0] * 3, upper=[1.0] * 3)
HARTMANN6_SPACE = SearchSpace(lower=[0.0] * 6, upper=[1.0] * 6)

HARTMANN_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
HARTMANN3_A = np.array(
    [
        [3.0, 10.0, 30.0],
        [0.1, 10.0, 35.0],
        [3.0, 10.0, 30.0],
        [0.1, 10.0, 35.0],
    ]
)
HARTMANN3_P = 1e-4 * np.array(
    [
        [3689, 1170, 2673],
        [4699, 4387, 7470],
        [1091, 8732, 5547],
        [381, 5743, 8828],
    ]
)
HARTMANN6_A = np.array(
    [
        [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
        [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
        [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
        [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
    ]
)
HARTMANN6_P = 1e-4 * np.array(
    [
        [1312, 1696, 5569, 124, 8283, 5886],
        [2329, 4135, 8307, 3736, 1004, 9991],
        [2348, 1451, 3522, 2883, 3047, 6650],
        [4047, 8828, 8732, 5743, 1091, 381],
    ]
)


def _checked(x: np.ndarray, space: SearchSpace, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (space.dim,):
        raise ContractViolation(f"{name} takes a {space.dim}-D point, got shape {x.shape}")
    if not space.contains(x):
        raise ContractViolation(f"{x.tolist()} is outside the {name} domain")
    return x


def branin(x: np.ndarray) -> float:
    x1, x2 = _checked(x, BRANIN_SPACE, "branin")
    a, b, c = 1.0, 5.1 / (4.0 * np.pi**2), 5.0 / np.pi
    r, s, t = 6.0, 10.0, 1.0 / (8.0 * np.pi)
    return float(a * (x2 - b * x1**2 + c * x1 - r) ** 2 + s * (1 - t) * np.cos(x1) + s)


def _hartmann(x: np.ndarray, A: np.ndarray, P: np.ndarray) -> float:
    inner = np.sum(A * (x - P) ** 2, axis=1)
    return float(-np.sum(HARTMANN_ALPHA * np.exp(-inner)))


def hartmann3(x: np.ndarray) -> float:
    return _hartmann(_checked(x, HARTMANN3_SPACE, "hartmann3"), HARTMANN3_A, HARTMANN3_P)


def hartmann6(x: np.ndarray) -> float:
    return _hartmann(_checked(x, HARTMANN6_SPACE, "hartmann6"), HARTMANN6_A, HARTMANN6_P)


@dataclass(frozen=True)
class Benchmark:
    name: str
    space: SearchSpace
    evaluator: Callable[[np.ndarray], float]
    f_min: float
    minimizers: Tuple[Tuple[float, ...], ...]

    def __call__(self, x: np.ndarray) -> float:
        return self.evaluator(x)

    @property
    def dim(self) -> int:
        return self.space.dim


REGISTRY: Dict[str, Benchmark] = {
    b.name: b
    for b in (
        Benchmark(
            "branin",
            BRANIN_SPACE,
            branin,
            0.397887,
            ((-np.pi, 12.275), (np.pi, 2.275), (9.42478, 2.475)),
        ),
        Benchmark(
            "hartmann3",
            HARTMANN3_SPACE,
            hartmann3,
            -3.86278,
            ((0.114614, 0.555649, 0.852547),),
        ),
        Benchmark(
            "hartmann6",
            HARTMANN6_SPACE,
            hartmann6,
            -3.32237,
            ((0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573),),
        ),
    )
}


def get(name: str) -> Benchmark:
    try:
        return REGISTRY[name.lower()]
    except KeyError:
        raise ContractViolation(
            f"Unknown benchmark {name}, choose from {sorted(REGISTRY)}"
        ) from None


def self_test():
    for benchmark in REGISTRY.values():
        for minimizer in benchmark.minimizers:
            value = benchmark(np.array(minimizer))
            if abs(value - benchmark.f_min) > SELF_TEST_TOLERANCE:
                raise NopastError(
                    f"{benchmark.name}{minimizer} = {value}, expected {benchmark.f_min}"
                )


self_test()
