"""Shared solve loop, stopping rule and result record."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from meanfield.core import Environment, exploitability


class NumericalError(ArithmeticError):
    """A solver produced a non-finite quantity."""

    def __init__(self, message: str, iteration: int | None = None):
        self.iteration = iteration
        if iteration is not None:
            message = f"iteration {iteration}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class SolveSettings:
    max_iter: int = 300
    atol: float = 1e-8
    rtol: float = 1e-8
    record_every: int = 1

    def __post_init__(self):
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive int, got {self.max_iter}")
        if self.atol < 0 or self.rtol < 0:
            raise ValueError("atol and rtol must be >= 0")
        if int(self.record_every) != self.record_every or not 1 <= self.record_every <= self.max_iter:
            raise ValueError(f"record_every must be an int in [1, max_iter], got {self.record_every}")


@dataclass
class SolveResult:
    """Snapshots of a solver run.

    ``policies``, ``exploitabilities``, ``runtimes`` and ``iterations`` are
    aligned; ``runtimes`` holds cumulative wall-clock seconds.
    """

    policies: list[np.ndarray] = field(default_factory=list)
    exploitabilities: list[float] = field(default_factory=list)
    runtimes: list[float] = field(default_factory=list)
    iterations: list[int] = field(default_factory=list)
    converged: bool = False
    iterations_run: int = 0

    @property
    def policy(self) -> np.ndarray:
        return self.policies[-1]

    def __iter__(self):
        # solutions, expls, runtimes = solve(...)
        return iter((self.policies, self.exploitabilities, self.runtimes))


IterationCallback = Callable[[int, float, float, float], None]


def check_stop(settings: SolveSettings, expl_0: float, expl_n: float) -> bool:
    return expl_n <= settings.atol + settings.rtol * expl_0


def run(
    env: Environment,
    steps: Iterator[np.ndarray],
    settings: SolveSettings,
    callback: IterationCallback | None = None,
) -> SolveResult:
    """Drive a policy iterator until the stopping rule or ``max_iter``.

    ``steps`` yields the policy of iteration 0, 1, ...; iterations
    ``0..max_iter`` are evaluated, so at most ``max_iter`` updates happen.
    Exploitability is computed only at recorded iterations and the stopping
    rule is checked there.  ``callback(n, expl, best_expl, elapsed)`` fires
    once per recorded iteration.
    """
    result = SolveResult()
    start = time.perf_counter()
    expl_0 = None
    best = np.inf
    for n, policy in enumerate(steps):
        last = n == settings.max_iter
        if n % settings.record_every and not last:
            continue
        if not np.all(np.isfinite(policy)):
            raise NumericalError("non-finite policy", n)
        expl = exploitability(env, policy)
        if not np.isfinite(expl):
            raise NumericalError("non-finite exploitability", n)
        elapsed = time.perf_counter() - start
        if expl_0 is None:
            expl_0 = expl
        best = min(best, expl)
        result.policies.append(np.array(policy, copy=True))
        result.exploitabilities.append(expl)
        result.runtimes.append(elapsed)
        result.iterations.append(n)
        result.iterations_run = n
        if callback is not None:
            callback(n, expl, best, elapsed)
        if check_stop(settings, expl_0, expl):
            result.converged = True
            break
        if last:
            break
    return result
