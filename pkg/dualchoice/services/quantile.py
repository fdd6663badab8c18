"""
mu-quantiles: the optimal-transport generalization of quantile functions.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from dualchoice.core.config import settings
from dualchoice.core.errors import AlignmentError, DimensionError, DomainError
from dualchoice.models.measure import DiscreteMeasure, as_rows, from_samples
from dualchoice.services.transport import TransportPlan, max_correlation

logger = logging.getLogger(__name__)

QuantileKind = Literal["assignment", "barycentric"]


@dataclass(frozen=True, eq=False)
class QuantileMap:
    """
    Value Q_X(u_k) of the mu-quantile of X at every atom of mu.

    ``kind`` is "assignment" when every mu-atom is sent to a single atom of
    X, "barycentric" when the optimal plan splits mass and ``values`` hold
    conditional means.
    """
    mu: DiscreteMeasure
    values: NDArray[np.float64]
    kind: QuantileKind
    plan: TransportPlan
    degenerate: bool = False

    def as_measure(self) -> DiscreteMeasure:
        """Pushforward of mu by the map; equals the prospect for assignment kind"""
        return from_samples(self.values, self.mu.weights)


def has_repeated_coordinates(mu: DiscreteMeasure) -> bool:
    """True when two mu-atoms share a coordinate on some axis"""
    return any(np.unique(mu.atoms[:, axis]).size < mu.n for axis in range(mu.dim))


@lru_cache(maxsize=128)
def _warn_degenerate(mu: DiscreteMeasure) -> None:
    # once per reference; grids repeat coordinates on every axis
    logger.warning("Reference measure %r has repeated coordinates; the quantile may not be unique", mu)


def quantile_from_plan(plan: TransportPlan) -> QuantileMap:
    mu = plan.source
    x = plan.target
    support = plan.support()
    if np.all(support.sum(axis=1) == 1):
        values = x.atoms[np.argmax(support, axis=1)]
        kind: QuantileKind = "assignment"
    else:
        values = (plan.plan @ x.atoms) / mu.weights[:, None]
        kind = "barycentric"
        logger.info("Optimal plan splits mass; using barycentric projection for the quantile")
    degenerate = has_repeated_coordinates(mu)
    if degenerate:
        _warn_degenerate(mu)
    values.setflags(write=False)
    return QuantileMap(mu=mu, values=values, kind=kind, plan=plan, degenerate=degenerate)


def mu_quantile(mu: DiscreteMeasure, x: DiscreteMeasure) -> QuantileMap:
    """
    The mu-quantile of ``x``: the monotone (maximal-correlation) map from
    the atoms of ``mu`` into the support of ``x``.
    """
    return quantile_from_plan(max_correlation(mu, x))


def univariate_quantile(x: DiscreteMeasure, t: float) -> float:
    """
    Q_X(t) = inf{x : Pr(X <= x) > t} for 0 < t < 1.

    The strict inequality makes Q right-continuous at the jumps of the CDF:
    for X uniform on {1, 3}, Q_X(0.5) = 3.
    """
    if x.dim != 1:
        raise DimensionError(f"univariate quantile needs d = 1, got d = {x.dim}")
    if not 0.0 < t < 1.0:
        raise DomainError(f"t must lie in (0, 1), got {t}")
    cdf = np.cumsum(x.weights)
    index = int(np.searchsorted(cdf, t, side="right"))
    return float(x.atoms[min(index, x.n - 1), 0])


def quantile_additivity_check(
    mu: DiscreteMeasure,
    x: ArrayLike,
    y: ArrayLike,
    tol: Optional[float] = None,
) -> bool:
    """
    Whether Q_{X+Y} = Q_X + Q_Y at every mu-atom for aligned equal-weight
    samples ``x`` and ``y`` (holds when X and Y are mu-comonotonic).
    """
    tol = settings.QUANTILE_TOL if tol is None else tol
    xs = as_rows(x)
    ys = as_rows(y)
    if xs.shape != ys.shape:
        raise AlignmentError(f"samples of shapes {xs.shape} and {ys.shape} are not aligned")
    q_x = mu_quantile(mu, from_samples(xs)).values
    q_y = mu_quantile(mu, from_samples(ys)).values
    q_sum = mu_quantile(mu, from_samples(xs + ys)).values
    gap = float(np.linalg.norm(q_sum - q_x - q_y, axis=1).max())
    logger.debug("Quantile additivity gap %.3e", gap)
    return gap <= tol
