"""
Local utility of the risk-averse evaluation at a distribution P.

u(x | P) = -V*_P(x), the negated Legendre-Fenchel conjugate of the transport
potential from mu to P. On discrete data the conjugate is the maximum of the
affine functions x -> u_k . x - psi_k over the atoms of mu.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from dualchoice.core.errors import DimensionError, DimensionMismatch
from dualchoice.models.measure import DiscreteMeasure
from dualchoice.services.transport import max_correlation

logger = logging.getLogger(__name__)


def _points(x: ArrayLike, dim: int) -> NDArray[np.float64]:
    points = np.asarray(x, dtype=float)
    if points.ndim == 0:
        points = points.reshape(1, 1)
    elif points.ndim == 1:
        points = points.reshape(-1, 1) if dim == 1 else points.reshape(1, -1)
    if points.shape[1] != dim:
        raise DimensionMismatch(f"points have d = {points.shape[1]}, expected {dim}")
    return points


def legendre_conjugate(
    atoms: NDArray[np.float64],
    psi: ArrayLike,
    x: ArrayLike,
) -> Union[float, NDArray[np.float64]]:
    """
    Discrete conjugate max_k (u_k . x - psi_k). A single point gives a float,
    several points (rows) an array.
    """
    atoms = np.asarray(atoms, dtype=float)
    psi = np.ravel(np.asarray(psi, dtype=float))
    points = _points(x, atoms.shape[1])
    values = np.max(points @ atoms.T - psi[None, :], axis=1)
    if np.ndim(x) == 0 or (np.ndim(x) == 1 and atoms.shape[1] > 1):
        return float(values[0])
    return values


@dataclass(frozen=True, eq=False)
class LocalUtility:
    """
    u(x | P) = offset - max_k (u_k . x - psi_k).

    ``anchor`` is the point where the function was shifted to zero, or None
    for the raw gauge min(psi) = 0.
    """
    mu: DiscreteMeasure
    psi: NDArray[np.float64]
    anchor: Optional[NDArray[np.float64]] = None
    offset: float = 0.0

    def __call__(self, x: ArrayLike) -> Union[float, NDArray[np.float64]]:
        return self.offset - legendre_conjugate(self.mu.atoms, self.psi, x)

    def anchored_at(self, point: ArrayLike) -> "LocalUtility":
        """Same function shifted so that it vanishes at ``point``"""
        anchor = np.ravel(np.asarray(point, dtype=float))
        raw = legendre_conjugate(self.mu.atoms, self.psi, anchor if self.mu.dim > 1 else anchor[0])
        return LocalUtility(mu=self.mu, psi=self.psi, anchor=anchor, offset=float(raw))


def local_utility_from(mu: DiscreteMeasure, p: DiscreteMeasure) -> LocalUtility:
    """Local utility at P from the dual potentials of the maximal correlation plan"""
    plan = max_correlation(mu, p)
    return LocalUtility(mu=mu, psi=plan.potentials.psi)


def univariate_local_utility_closed_form(
    p: DiscreteMeasure,
    x: ArrayLike,
) -> Union[float, NDArray[np.float64]]:
    """
    -integral_{-inf}^{x} F_P(z) dz for a univariate P; zero at and below the
    smallest atom.
    """
    if p.dim != 1:
        raise DimensionError(f"closed form needs d = 1, got d = {p.dim}")
    atoms = p.atoms[:, 0]
    cdf = np.cumsum(p.weights)
    cdf[-1] = 1.0
    # integral of F up to each atom
    at_atoms = np.concatenate([[0.0], np.cumsum(cdf[:-1] * np.diff(atoms))])
    points = np.atleast_1d(np.asarray(x, dtype=float))
    index = np.searchsorted(atoms, points, side="right") - 1
    below = index < 0
    safe = np.clip(index, 0, None)
    values = at_atoms[safe] + cdf[safe] * (points - atoms[safe])
    values[below] = 0.0
    if np.ndim(x) == 0:
        return float(-values[0])
    return -values
