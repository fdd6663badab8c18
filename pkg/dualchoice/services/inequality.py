"""
Multi-attribute social evaluation of allocations.

Individuals are equally weighted rows; an allocation is evaluated as the
Yaari functional of its empirical distribution (a generalized Gini
evaluation function).
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from dualchoice.core.config import settings
from dualchoice.core.errors import (
    DimensionMismatch,
    DomainError,
    EmptyInput,
    InvalidTransfer,
)
from dualchoice.models.measure import DiscreteMeasure, as_rows, from_samples
from dualchoice.services.evaluate import RankedEntry, WeightScheme, gamma, rank_by_value

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Allocation:
    """n individuals (rows) by d nonnegative attributes (columns)"""
    matrix: NDArray[np.float64]
    labels: Optional[List[str]] = None

    def __post_init__(self) -> None:
        matrix = as_rows(self.matrix)
        if np.any(matrix < 0):
            raise DomainError("attributes must be nonnegative")
        if self.labels is not None and len(self.labels) != matrix.shape[1]:
            raise DimensionMismatch(f"{len(self.labels)} labels for {matrix.shape[1]} attributes")
        matrix = matrix.copy()
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def individuals(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def empirical(self) -> DiscreteMeasure:
        return from_samples(self.matrix)


def gini_evaluate(a: Allocation, ws: WeightScheme) -> float:
    """Generalized Gini evaluation: gamma of the equal-weight row distribution"""
    if a.dim != ws.dim:
        raise DimensionMismatch(f"allocation has d = {a.dim}, scheme has d = {ws.dim}")
    return gamma(ws, a.empirical()).value


def pigou_dalton_transfer(a: Allocation, i: int, j: int, delta: ArrayLike) -> Allocation:
    """
    Move ``delta`` from individual i to individual j.

    The transfer must be a T-transform: ``delta = s * (a_i - a_j)`` for one
    share ``s`` in [0, 1/2] applied to every attribute. Rows then move toward
    each other along the segment joining them and stop at or before the
    midpoint, so the result is a doubly stochastic smoothing of ``a``.
    """
    step = np.ravel(np.asarray(delta, dtype=float))
    if step.size == 1:
        step = np.full(a.dim, step[0])
    if step.size != a.dim:
        raise InvalidTransfer(f"transfer has {step.size} components, allocation has d = {a.dim}")
    if not np.all(np.isfinite(step)):
        raise InvalidTransfer("transfer must be finite")
    if not (0 <= i < a.individuals and 0 <= j < a.individuals) or i == j:
        raise InvalidTransfer(f"invalid individuals {i}, {j}")
    difference = a.matrix[i] - a.matrix[j]
    gap = float(difference @ difference)
    if gap == 0.0:
        if np.any(step != 0):
            raise InvalidTransfer("individuals are equally endowed; only a zero transfer is allowed")
        return a
    share = float(step @ difference) / gap
    tol = settings.EXACT_TOL
    if np.linalg.norm(step - share * difference) > tol * max(1.0, np.sqrt(gap)):
        raise InvalidTransfer("transfer must be one share of the gap applied to every attribute")
    if share < -tol:
        raise InvalidTransfer("transfer must go from the richer to the poorer individual")
    if share > 0.5 + tol:
        raise InvalidTransfer("transfer overshoots the midpoint")
    step = min(max(share, 0.0), 0.5) * difference
    matrix = np.array(a.matrix)
    matrix[i] = matrix[i] - step
    matrix[j] = matrix[j] + step
    return Allocation(matrix=matrix, labels=a.labels)


def rank_allocations(allocs: Sequence[Allocation], ws: WeightScheme) -> List[RankedEntry]:
    """Allocations ranked by evaluation, best first; ties keep input order"""
    if not allocs:
        raise EmptyInput("no allocations to rank")
    dims = {alloc.dim for alloc in allocs}
    if len(dims) != 1:
        raise DimensionMismatch(f"allocations have dimensions {sorted(dims)}")
    with ThreadPoolExecutor(max_workers=settings.MAX_WORKERS) as pool:
        values = list(pool.map(lambda alloc: gini_evaluate(alloc, ws), allocs))
    logger.info("Ranked %d allocations", len(values))
    return rank_by_value(values)
