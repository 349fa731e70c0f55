"""
Next-Best-View selection and the non-learning baselines.

Every baseline repeatedly asks ``nbv`` for the view maximizing the score of the
covered union, with lambda fixed (lambda = 0 is the purely greedy method) or
alternating 0, 1, 0, ... after an initial greedy step, until the relative
coverage criterion (RCC) is met.
"""
import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from ..exceptions import CoverageError
from .mesh_core import Submesh, score, union_coverage
from .visibility import CoverageTable

logger = logging.getLogger(__name__)

COVERAGE_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class CoverageState:
    """Views chosen so far (a bitmask over view indices) and the submesh they cover."""

    chosen: int
    covered: Submesh
    step: int

    @classmethod
    def initial(cls, table: CoverageTable) -> "CoverageState":
        return cls(0, Submesh.empty(table.mesh), 0)

    @classmethod
    def from_views(cls, table: CoverageTable, views: Iterable[int]) -> "CoverageState":
        state = cls.initial(table)
        for view in views:
            state = state.with_view(table, view)
        return state

    def contains(self, view: int) -> bool:
        return bool(self.chosen >> view & 1)

    def views(self) -> list[int]:
        return [i for i in range(self.chosen.bit_length()) if self.contains(i)]

    def with_view(self, table: CoverageTable, view: int) -> "CoverageState":
        if not 0 <= view < len(table):
            raise CoverageError(f"View index {view} out of range [0, {len(table)})")
        view = int(view)
        if self.contains(view):
            return self
        return CoverageState(
            self.chosen | 1 << view,
            union_coverage(self.covered, table.coverage[view]),
            self.step + 1,
        )

    def vector(self, n: int) -> np.ndarray:
        """The N-entry 0/1 state vector."""
        bits = np.zeros(n, dtype=np.float64)
        bits[self.views()] = 1.0
        return bits


@dataclass(frozen=True)
class Plan:
    order: tuple[int, ...]
    lambdas: tuple[float, ...]
    final_coverage_fraction: float
    method: str
    complete: bool = True
    runtime_seconds: float = 0.0

    def __len__(self) -> int:
        return len(self.order)


def _check_state(state: CoverageState, table: CoverageTable) -> None:
    if state.covered.mesh is not table.mesh or state.chosen >> len(table):
        raise CoverageError("Coverage state does not belong to this coverage table")


def coverage_fraction(state: CoverageState, table: CoverageTable) -> float:
    achievable = table.achievable.area
    if achievable == 0.0:
        return 1.0
    return state.covered.area / achievable


def is_terminal(state: CoverageState, table: CoverageTable, rcc: float) -> bool:
    """True once the covered area reaches ``rcc`` times the achievable area."""
    if not 0.0 <= rcc <= 1.0:
        raise ValueError(f"rcc must lie in [0, 1], got {rcc}")
    if state.covered.covers(table.achievable):
        return True
    return coverage_fraction(state, table) >= rcc - COVERAGE_TOLERANCE


def nbv(state: CoverageState, table: CoverageTable, lam: float) -> int | None:
    """
    Next best view for the current coverage.

    Only unchosen views that add at least one triangle are candidates. Among
    them, those overlapping the covered submesh are preferred; the overlap
    requirement is waived when none does (disconnected coverage). Ties go to
    the lowest view index.

    Returns:
        The chosen view index, or None when no view adds coverage
    """
    _check_state(state, table)
    covered = state.covered
    gaining = [
        i for i, f in enumerate(table.coverage)
        if not state.contains(i) and covered.gain(f) > 0
    ]
    if not gaining:
        return None

    candidates = gaining
    if not covered.is_empty:
        overlapping = [i for i in gaining if covered.overlaps(table.coverage[i])]
        if overlapping:
            candidates = overlapping
        else:
            logger.debug(f"No view overlaps the covered submesh at step {state.step}; starting a new component")

    best, best_score = None, -math.inf
    for i in candidates:
        value = score(union_coverage(covered, table.coverage[i]), lam)
        if value > best_score:
            best, best_score = i, value
    return best


def _run(table: CoverageTable, rcc: float, schedule: Callable[[int], float], method: str,
         start: int | None = None) -> Plan:
    started = time.perf_counter()
    state = CoverageState.initial(table)
    order: list[int] = []
    lambdas: list[float] = []
    if start is not None:
        state = state.with_view(table, start)
        order.append(start)

    complete = True
    while state.step == 0 or not is_terminal(state, table, rcc):
        lam = schedule(state.step + 1)
        choice = nbv(state, table, lam)
        if choice is None and table.achievable.is_empty:
            logger.info(f"{method}: no view sees any triangle, nothing to cover")
            break
        if choice is None:
            complete = False
            logger.warning(
                f"{method}: no view adds coverage at {coverage_fraction(state, table):.4f} "
                f"of achievable area (rcc={rcc})"
            )
            break
        state = state.with_view(table, choice)
        order.append(choice)
        lambdas.append(lam)

    return Plan(
        order=tuple(order),
        lambdas=tuple(lambdas),
        final_coverage_fraction=coverage_fraction(state, table),
        method=method,
        complete=complete,
        runtime_seconds=time.perf_counter() - started,
    )


def run_fixed_lambda(table: CoverageTable, lam: float, rcc: float, start: int | None = None) -> Plan:
    method = "greedy" if lam == 0 else f"fixed-lambda-{lam:g}"
    return _run(table, rcc, lambda step: lam, method, start)


def alternating_lambda(step: int) -> float:
    """Greedy first step, then 1, 0, 1, ... (lambda = 1 on even steps)."""
    return 1.0 if step % 2 == 0 else 0.0


def run_alternating(table: CoverageTable, rcc: float, start: int | None = None) -> Plan:
    return _run(table, rcc, alternating_lambda, "alt-lambda", start)
