"""
mu-comonotonicity of aligned samples and the c-comonotonic comparison.

Prospects given as aligned samples share one sample index: row k of every
array is the outcome in the same state, so pointwise sums are defined.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from dualchoice.core.config import settings
from dualchoice.core.errors import (
    AlignmentError,
    CountMismatch,
    DimensionMismatch,
    EmptyInput,
    NonAssignment,
    PreconditionUnmet,
)
from dualchoice.models.measure import (
    DiscreteMeasure,
    as_equal_weight_samples,
    as_rows,
    check_same_dimension,
    from_samples,
)
from dualchoice.services.quantile import mu_quantile
from dualchoice.services.transport import max_correlation

logger = logging.getLogger(__name__)

# Two pairs (X, Y) and (Y, Z) that are each optimal quadratic couplings while
# (X, Z) is not: c-comonotonicity is not transitive.
C_COMONOTONE_COUNTEREXAMPLE = {
    "x": np.array([[1.0, 0.0], [0.0, 0.0]]),
    "y": np.array([[1.0, 1.0], [0.0, 0.0]]),
    "z": np.array([[-0.5, 1.0], [0.0, 0.0]]),
}


@dataclass(frozen=True)
class ComonotonicityCertificate:
    """
    Both sides of the additivity test: rho(sum X_i) against sum rho(X_i).
    ``gap`` = sum_of_rho - rho_of_sum is never significantly negative.
    """
    comonotonic: bool
    rho_of_sum: float
    sum_of_rho: float
    gap: float
    tol: float

    def __bool__(self) -> bool:
        return self.comonotonic


def aligned(prospects: Sequence[ArrayLike]) -> List[NDArray[np.float64]]:
    """Validate that all samples share one index and one dimension"""
    if not prospects:
        raise EmptyInput("no prospects given")
    arrays = [as_rows(p) for p in prospects]
    counts = {a.shape[0] for a in arrays}
    if len(counts) != 1:
        raise AlignmentError(f"aligned samples have different sizes {sorted(counts)}")
    dims = {a.shape[1] for a in arrays}
    if len(dims) != 1:
        raise DimensionMismatch(f"aligned samples have dimensions {sorted(dims)}")
    return arrays


def is_mu_comonotonic(
    mu: DiscreteMeasure,
    prospects: Sequence[ArrayLike],
    tol: Optional[float] = None,
) -> ComonotonicityCertificate:
    """
    True iff |rho_mu(sum X_i) - sum rho_mu(X_i)| <= tol * (1 + |sum rho_mu(X_i)|).
    """
    tol = settings.COMONOTONE_TOL if tol is None else tol
    arrays = aligned(prospects)
    if arrays[0].shape[1] != mu.dim:
        raise DimensionMismatch(f"prospects have d = {arrays[0].shape[1]}, reference has d = {mu.dim}")
    rhos = [max_correlation(mu, from_samples(a)).value for a in arrays]
    rho_of_sum = max_correlation(mu, from_samples(np.sum(arrays, axis=0))).value
    sum_of_rho = float(np.sum(rhos))
    gap = sum_of_rho - rho_of_sum
    comonotonic = abs(gap) <= tol * (1.0 + abs(sum_of_rho))
    logger.debug("Comonotonicity gap %.3e over %d prospects", gap, len(arrays))
    return ComonotonicityCertificate(
        comonotonic=bool(comonotonic),
        rho_of_sum=rho_of_sum,
        sum_of_rho=sum_of_rho,
        gap=gap,
        tol=tol,
    )


def comonotonic_rearrangement(
    mu: DiscreteMeasure,
    prospects: Sequence[DiscreteMeasure],
) -> List[NDArray[np.float64]]:
    """
    Rearrange prospects simultaneously so that each is maximally correlated
    with the same U ~ mu: row k of every output is Q_{X_i}(u_k).

    mu must be equal-weight; every prospect must be an n-sample law (weights
    multiples of 1/n) so that the output is a permutation of its sample.
    """
    if not prospects:
        raise EmptyInput("no prospects given")
    check_same_dimension(mu, *prospects)
    if not mu.is_equal_weight():
        raise CountMismatch("reference measure must be equal-weight")
    rearranged = []
    for index, prospect in enumerate(prospects):
        as_equal_weight_samples(prospect, mu.n)
        quantile = mu_quantile(mu, prospect)
        if quantile.kind != "assignment":
            raise NonAssignment(f"prospect {index} is split by the optimal plan; no rearrangement exists")
        rearranged.append(np.array(quantile.values))
    return rearranged


def transitivity_check(
    mu: DiscreteMeasure,
    x: ArrayLike,
    y: ArrayLike,
    z: ArrayLike,
    tol: Optional[float] = None,
) -> bool:
    """
    Check that X, Z are mu-comonotonic given that (X, Y) and (Y, Z) are and
    Y has pairwise distinct outcomes. A False return under the hypotheses
    means a solver defect.
    """
    xs, ys, zs = aligned([x, y, z])
    if np.unique(ys, axis=0).shape[0] != ys.shape[0]:
        raise PreconditionUnmet("middle prospect has repeated outcomes")
    if not is_mu_comonotonic(mu, [xs, ys], tol):
        raise PreconditionUnmet("first pair is not mu-comonotonic")
    if not is_mu_comonotonic(mu, [ys, zs], tol):
        raise PreconditionUnmet("second pair is not mu-comonotonic")
    certificate = is_mu_comonotonic(mu, [xs, zs], tol)
    if not certificate:
        logger.error("Transitivity failed with gap %.3e", certificate.gap)
    return certificate.comonotonic


def c_comonotonic_check(
    x_samples: ArrayLike,
    y_samples: ArrayLike,
    tol: Optional[float] = None,
) -> bool:
    """
    Whether the given pairing of X and Y is an optimal quadratic coupling,
    i.e. attains the maximal correlation of their laws.
    """
    tol = settings.COMONOTONE_TOL if tol is None else tol
    xs, ys = aligned([x_samples, y_samples])
    given = float(np.mean(np.sum(xs * ys, axis=1)))
    optimal = max_correlation(from_samples(xs), from_samples(ys)).value
    return given >= optimal - tol * (1.0 + abs(optimal))
