"""
Discrete probability measures on R^d.

A ``DiscreteMeasure`` is both a reference distribution (mu) and a prospect:
finitely many distinct atoms with strictly positive weights summing to one.
Atoms are kept in lexicographic order so that every downstream solver sees
the same input for the same law.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from dualchoice.core.config import settings
from dualchoice.core.errors import (
    CountMismatch,
    DimensionMismatch,
    DomainError,
    EmptyInput,
    NegativeWeight,
    NonFiniteValue,
)

logger = logging.getLogger(__name__)


def _frozen(array: NDArray[np.float64]) -> NDArray[np.float64]:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """
    Empirical probability measure: ``atoms`` is n x d, ``weights`` has length n.

    Use ``from_samples`` to build one from raw rows; the constructor only
    validates already canonical data.
    """
    atoms: NDArray[np.float64]
    weights: NDArray[np.float64]
    renormalized: bool = False

    def __post_init__(self) -> None:
        atoms = np.array(self.atoms, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if atoms.ndim != 2 or atoms.shape[0] == 0 or atoms.shape[1] == 0:
            raise EmptyInput("a measure needs at least one atom of dimension >= 1")
        if weights.shape != (atoms.shape[0],):
            raise DimensionMismatch(
                f"{weights.shape[0] if weights.ndim == 1 else weights.shape} weights for {atoms.shape[0]} atoms"
            )
        if not np.all(np.isfinite(atoms)) or not np.all(np.isfinite(weights)):
            raise NonFiniteValue("atoms and weights must be finite")
        if np.any(weights <= 0):
            raise NegativeWeight("weights must be strictly positive")
        if abs(weights.sum() - 1.0) > settings.WEIGHT_TOL:
            raise NegativeWeight(f"weights sum to {weights.sum()!r}, not 1")
        object.__setattr__(self, "atoms", _frozen(atoms))
        object.__setattr__(self, "weights", _frozen(weights))

    @property
    def n(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def is_equal_weight(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.weights - 1.0 / self.n) <= tol))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return (
            self.atoms.shape == other.atoms.shape
            and np.array_equal(self.atoms, other.atoms)
            and np.allclose(self.weights, other.weights, rtol=0.0, atol=1e-14)
        )

    def __hash__(self) -> int:
        return hash((self.atoms.tobytes(), self.atoms.shape))

    def __repr__(self) -> str:
        return f"<DiscreteMeasure(n={self.n}, d={self.dim})>"


def as_rows(rows: Union[ArrayLike, Sequence[Sequence[float]]]) -> NDArray[np.float64]:
    """
    Coerce raw rows to an n x d float array; scalars per row mean d = 1.
    """
    if isinstance(rows, np.ndarray):
        array = rows.astype(float)
    else:
        rows = list(rows)
        if not rows:
            raise EmptyInput("no rows given")
        lengths = {np.size(row) for row in rows}
        if len(lengths) != 1:
            raise DimensionMismatch(f"rows have unequal lengths {sorted(lengths)}")
        array = np.array([np.ravel(np.asarray(row, dtype=float)) for row in rows], dtype=float)
    if array.ndim == 1:
        array = array.reshape(-1, 1)
    if array.ndim != 2:
        raise DimensionMismatch(f"rows must form a matrix, got shape {array.shape}")
    if array.shape[0] == 0:
        raise EmptyInput("no rows given")
    if array.shape[1] == 0:
        raise DimensionMismatch("rows must have at least one coordinate")
    if not np.all(np.isfinite(array)):
        raise NonFiniteValue("rows contain NaN or infinite coordinates")
    return array


def from_samples(
    rows: Union[ArrayLike, Sequence[Sequence[float]]],
    weights: Optional[ArrayLike] = None,
) -> DiscreteMeasure:
    """
    Build a validated measure from sample rows.

    Absent weights mean 1/n each. Duplicate rows (exact coordinate equality)
    are merged by summing their weights, and weights further than
    ``WEIGHT_TOL`` from summing to one are renormalized.
    """
    points = as_rows(rows)
    n = points.shape[0]
    if weights is None:
        raw = np.full(n, 1.0 / n)
    else:
        raw = np.ravel(np.asarray(weights, dtype=float))
        if raw.shape[0] != n:
            raise DimensionMismatch(f"{raw.shape[0]} weights for {n} rows")
        if not np.all(np.isfinite(raw)):
            raise NonFiniteValue("weights contain NaN or infinite values")
        if np.any(raw < 0):
            raise NegativeWeight("weights must be nonnegative")
        if raw.sum() <= 0:
            raise NegativeWeight("weights sum to zero")

    # unique(axis=0) returns rows in lexicographic order
    atoms, inverse = np.unique(points, axis=0, return_inverse=True)
    merged = np.bincount(np.ravel(inverse), weights=raw, minlength=atoms.shape[0])
    keep = merged > 0
    atoms, merged = atoms[keep], merged[keep]

    total = merged.sum()
    renormalized = abs(total - 1.0) > settings.WEIGHT_TOL
    if renormalized:
        if weights is not None:
            logger.warning("Weights sum to %r; renormalizing", total)
        merged = merged / total
    return DiscreteMeasure(atoms=atoms, weights=merged, renormalized=renormalized and weights is not None)


def mean(m: DiscreteMeasure) -> NDArray[np.float64]:
    """Weighted average of the atoms (a d-vector)"""
    return m.weights @ m.atoms


def point_mass(c: ArrayLike) -> DiscreteMeasure:
    """Dirac measure at ``c``"""
    return from_samples([np.ravel(np.asarray(c, dtype=float))])


def uniform_grid(d: int, k: int) -> DiscreteMeasure:
    """
    Equal-weight product grid of the midpoints (i - 0.5)/k on every axis of [0,1]^d.
    """
    if d < 1 or k < 1:
        raise DomainError(f"uniform grid needs d >= 1 and k >= 1, got d={d}, k={k}")
    axis = (np.arange(1, k + 1) - 0.5) / k
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    return from_samples(np.stack([g.ravel() for g in mesh], axis=1))


def negated(m: DiscreteMeasure) -> DiscreteMeasure:
    return from_samples(-m.atoms, m.weights)


def scaled(m: DiscreteMeasure, a: float) -> DiscreteMeasure:
    return from_samples(a * m.atoms, m.weights)


def shifted(m: DiscreteMeasure, b: ArrayLike) -> DiscreteMeasure:
    return from_samples(m.atoms + np.ravel(np.asarray(b, dtype=float)), m.weights)


def check_same_dimension(*measures: DiscreteMeasure) -> int:
    dims = {m.dim for m in measures}
    if len(dims) != 1:
        raise DimensionMismatch(f"measures have dimensions {sorted(dims)}")
    return dims.pop()


def minimal_sample_size(m: DiscreteMeasure, limit: Optional[int] = None) -> int:
    """
    Smallest n for which every weight is a multiple of 1/n.
    """
    limit = limit or settings.MAX_EXPANSION
    for n in range(m.n, limit + 1):
        counts = m.weights * n
        rounded = np.rint(counts)
        if np.all(rounded >= 1) and np.allclose(counts, rounded, rtol=0.0, atol=1e-6) and rounded.sum() == n:
            return n
    raise CountMismatch(f"weights of {m!r} are not multiples of 1/n for any n <= {limit}")


def common_sample_size(*measures: DiscreteMeasure) -> int:
    """Least common equal-weight sample size of several measures"""
    size = math.lcm(*(minimal_sample_size(m) for m in measures))
    if size > settings.MAX_EXPANSION:
        raise CountMismatch(f"common sample size {size} exceeds {settings.MAX_EXPANSION}")
    return size


def as_equal_weight_samples(m: DiscreteMeasure, n: Optional[int] = None) -> NDArray[np.float64]:
    """
    Expand ``m`` into n equal-weight sample rows (atoms repeated by count).
    """
    if n is None:
        n = minimal_sample_size(m)
    counts = m.weights * n
    rounded = np.rint(counts).astype(int)
    if not np.allclose(counts, rounded, rtol=0.0, atol=1e-6) or rounded.sum() != n or np.any(rounded < 1):
        raise CountMismatch(f"weights of {m!r} are not multiples of 1/{n}")
    return np.repeat(m.atoms, rounded, axis=0)
