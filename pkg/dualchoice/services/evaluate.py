"""
Yaari evaluation of prospects through their mu-quantiles.

gamma(X) = sum_k w_k Q_X(u_k) . phi(u_k) for a weight scheme phi tabulated on
the atoms of the reference measure mu, together with the dominance and
risk-aversion checks built on it.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Literal, Optional, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import sparse
from scipy.optimize import linprog

from dualchoice.core.config import settings
from dualchoice.core.errors import (
    DimensionError,
    DimensionMismatch,
    DomainError,
    InvalidScheme,
    MeanMismatch,
    NegativeWeightFunction,
    NonAssignment,
    SolverFailure,
)
from dualchoice.models.measure import (
    DiscreteMeasure,
    as_equal_weight_samples,
    as_rows,
    check_same_dimension,
    common_sample_size,
    from_samples,
    mean,
    negated,
    point_mass,
)
from dualchoice.services.comonotone import aligned
from dualchoice.services.quantile import QuantileMap, mu_quantile
from dualchoice.services.transport import max_correlation

logger = logging.getLogger(__name__)

SchemeForm = Literal["general", "risk_averse", "univariate", "state_price"]


@dataclass(frozen=True, eq=False)
class WeightScheme:
    """
    Weights phi(u_k), one d-vector per atom of ``mu``.

    "general" and "risk_averse" schemes satisfy phi <= 0 componentwise;
    risk-averse ones are phi(u) = -(alpha u + u0) with alpha > 0.
    "univariate" schemes carry the nonnegative quantile weights
    phi(u) = f'(1 - u) of a distortion f. "state_price" schemes are
    risk-averse schemes on mu = -nu for a nonnegative state-price cloud nu.
    """
    mu: DiscreteMeasure
    phi_values: NDArray[np.float64]
    form: SchemeForm = "general"
    alpha: Optional[float] = None
    u0: Optional[NDArray[np.float64]] = None
    risk_averse_univariate: bool = False

    @property
    def dim(self) -> int:
        return self.mu.dim

    @property
    def is_risk_averse(self) -> bool:
        return self.form in ("risk_averse", "state_price")


@dataclass(frozen=True)
class RiskAverseDecomposition:
    """gamma = -alpha * rho - mean_term, with mean_term = u0 . E[X]"""
    rho: float
    mean_term: float


@dataclass(frozen=True, eq=False)
class GammaResult:
    value: float
    quantile_map: QuantileMap
    decomposition: Optional[RiskAverseDecomposition] = None


def _phi_table(mu: DiscreteMeasure, phi_values: ArrayLike) -> NDArray[np.float64]:
    phi = np.array(phi_values, dtype=float)
    if phi.ndim == 1 and mu.dim == 1:
        phi = phi.reshape(-1, 1)
    if phi.shape != (mu.n, mu.dim):
        raise DimensionMismatch(f"phi table has shape {phi.shape}, expected {(mu.n, mu.dim)}")
    if not np.all(np.isfinite(phi)):
        raise InvalidScheme("phi values must be finite")
    phi.setflags(write=False)
    return phi


def general_scheme(mu: DiscreteMeasure, phi_values: ArrayLike) -> WeightScheme:
    phi = _phi_table(mu, phi_values)
    if np.any(phi > 0):
        raise InvalidScheme("phi must take values in the nonpositive orthant")
    return WeightScheme(mu=mu, phi_values=phi, form="general")


def tabulated_scheme(
    rows: ArrayLike,
    phi_rows: ArrayLike,
    weights: Optional[ArrayLike] = None,
) -> WeightScheme:
    """
    General scheme from phi given row by row next to the reference atoms.
    Rows are merged like samples; a repeated atom must repeat its phi.
    """
    points = as_rows(rows)
    phi = np.array(phi_rows, dtype=float)
    if phi.ndim == 1 and points.shape[1] == 1:
        phi = phi.reshape(-1, 1)
    if phi.shape != points.shape:
        raise DimensionMismatch(f"phi rows have shape {phi.shape}, atoms have shape {points.shape}")
    mu = from_samples(points, weights)
    by_atom = {}
    for atom, value in zip(map(tuple, points), phi):
        if atom in by_atom and not np.array_equal(by_atom[atom], value):
            raise InvalidScheme(f"conflicting phi values for atom {atom}")
        by_atom[atom] = value
    return general_scheme(mu, np.array([by_atom[tuple(atom)] for atom in mu.atoms]))


def _affine_phi(mu: DiscreteMeasure, alpha: float, u0: ArrayLike) -> tuple:
    if not alpha > 0:
        raise InvalidScheme(f"alpha must be positive, got {alpha}")
    offset = np.ravel(np.asarray(u0, dtype=float))
    if offset.size == 1:
        offset = np.full(mu.dim, offset[0])
    if offset.size != mu.dim:
        raise DimensionMismatch(f"u0 has {offset.size} components, reference has d = {mu.dim}")
    if not np.all(np.isfinite(offset)):
        raise InvalidScheme("u0 must be finite")
    offset.setflags(write=False)
    return -(alpha * mu.atoms + offset), offset


def risk_averse_scheme(mu: DiscreteMeasure, alpha: float = 1.0, u0: ArrayLike = 0.0) -> WeightScheme:
    """phi(u) = -(alpha u + u0); rejected unless phi <= 0 on the atoms of mu"""
    phi, offset = _affine_phi(mu, alpha, u0)
    if np.any(phi > 0):
        raise InvalidScheme("-(alpha u + u0) must be nonpositive on the support of mu")
    return WeightScheme(mu=mu, phi_values=_phi_table(mu, phi), form="risk_averse", alpha=float(alpha), u0=offset)


def state_price_scheme(nu: DiscreteMeasure, alpha: float = 1.0, u0: ArrayLike = 0.0) -> WeightScheme:
    """
    Risk-averse scheme on mu = -nu for a nonnegative state-price cloud nu:
    gamma(X) = alpha * min E[X . V] (V ~ nu) - u0 . E[X].
    """
    if np.any(nu.atoms < 0):
        raise InvalidScheme("state prices must be nonnegative")
    mu = negated(nu)
    phi, offset = _affine_phi(mu, alpha, u0)
    return WeightScheme(mu=mu, phi_values=_phi_table(mu, phi), form="state_price", alpha=float(alpha), u0=offset)


def risk_neutral_scheme(phi0: ArrayLike, at: Optional[ArrayLike] = None) -> WeightScheme:
    """A reference concentrated at one point: gamma(X) = E[X] . phi0"""
    weights = np.ravel(np.asarray(phi0, dtype=float))
    mu = point_mass(np.zeros_like(weights) if at is None else at)
    return general_scheme(mu, weights.reshape(1, -1))


def midpoint_ranks(n: int) -> NDArray[np.float64]:
    return (np.arange(1, n + 1) - 0.5) / n


def univariate_scheme(
    f_prime: Union[ArrayLike, Callable[[NDArray[np.float64]], ArrayLike]],
    n: Optional[int] = None,
    reflect: bool = True,
) -> WeightScheme:
    """
    Quantile weights of a distortion f on the midpoint ranks t_k = (k - 0.5)/n.

    ``f_prime`` is f' tabulated at t_k (or a callable evaluated there). With
    ``reflect`` the weights are phi(t_k) = f'(1 - t_k); otherwise the table is
    taken as phi itself. gamma is then the midpoint rule for
    integral_0^1 phi(t) Q_X(t) dt.
    """
    if callable(f_prime):
        if n is None:
            raise DomainError("n is required when f_prime is a callable")
        table = np.ravel(np.asarray(f_prime(midpoint_ranks(n)), dtype=float))
    else:
        table = np.ravel(np.asarray(f_prime, dtype=float))
    if table.size == 0:
        raise DomainError("f_prime must tabulate at least one value")
    if not np.all(np.isfinite(table)):
        raise InvalidScheme("f_prime values must be finite")
    if np.any(table < 0):
        raise NegativeWeightFunction("f_prime must be nonnegative (f non-decreasing)")
    phi = table[::-1] if reflect else table
    mu = from_samples(midpoint_ranks(table.size))
    # convex f <=> phi nonincreasing in rank
    risk_averse = bool(np.all(np.diff(phi) <= 1e-12))
    return WeightScheme(
        mu=mu,
        phi_values=_phi_table(mu, phi),
        form="univariate",
        risk_averse_univariate=risk_averse,
    )


def gamma(ws: WeightScheme, x: DiscreteMeasure) -> GammaResult:
    """
    gamma(X) = E[Q_X(U) . phi(U)]; risk-averse schemes also report
    -alpha * rho_mu(X) - u0 . E[X].
    """
    check_same_dimension(ws.mu, x)
    quantile = mu_quantile(ws.mu, x)
    value = float(np.sum(ws.mu.weights[:, None] * quantile.values * ws.phi_values))
    decomposition = None
    if ws.is_risk_averse:
        decomposition = RiskAverseDecomposition(
            rho=quantile.plan.value,
            mean_term=float(ws.u0 @ mean(x)),
        )
    return GammaResult(value=value, quantile_map=quantile, decomposition=decomposition)


def gamma_batch(
    ws: WeightScheme,
    prospects: Sequence[DiscreteMeasure],
    max_workers: Optional[int] = None,
) -> List[GammaResult]:
    """Evaluate several prospects concurrently; results keep input order"""
    workers = max_workers or settings.MAX_WORKERS
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda p: gamma(ws, p), prospects))


def certainty_equivalent(ws: WeightScheme, x: DiscreteMeasure) -> float:
    """Sure amount c with gamma(c) = gamma(X); univariate schemes only"""
    if ws.dim != 1:
        raise DimensionError("certainty equivalents are only defined for d = 1")
    total = float(ws.mu.weights @ ws.phi_values[:, 0])
    if total == 0:
        raise DomainError("scheme weights integrate to zero")
    return gamma(ws, x).value / total


def distortion_value(x: DiscreteMeasure, f: Callable[[float], float]) -> float:
    """
    Dual-utility value integral f(1 - F_X(t)) dt of a univariate prospect for
    a distortion with f(0) = 0 and f(1) = 1, computed exactly on the atoms.
    """
    if x.dim != 1:
        raise DimensionError(f"distortion values need d = 1, got d = {x.dim}")
    if abs(f(0.0)) > 1e-12 or abs(f(1.0) - 1.0) > 1e-12:
        raise DomainError("distortion must satisfy f(0) = 0 and f(1) = 1")
    survival = np.concatenate([[1.0], 1.0 - np.cumsum(x.weights)])
    survival[-1] = 0.0
    distorted = np.array([f(float(s)) for s in survival])
    return float(x.atoms[:, 0] @ (distorted[:-1] - distorted[1:]))


class Verdict(str, Enum):
    DOMINATES = "dominates"
    STRICTLY_DOMINATES = "strictly_dominates"
    INCOMPARABLE = "incomparable"
    HOLDS = "holds"
    FAILS = "fails"
    NOT_REFUTED = "not_refuted"


@dataclass(frozen=True, eq=False)
class FosdResult:
    verdict: Verdict
    q_x: NDArray[np.float64]
    q_y: NDArray[np.float64]


def fosd_check(
    mu: DiscreteMeasure,
    x: DiscreteMeasure,
    y: DiscreteMeasure,
    tol: Optional[float] = None,
) -> FosdResult:
    """
    mu-first order dominance of X over Y: Q_X(u_k) >= Q_Y(u_k) componentwise
    at every atom of mu. Both quantiles must be maps.
    """
    tol = settings.EXACT_TOL if tol is None else tol
    q_x = mu_quantile(mu, x)
    q_y = mu_quantile(mu, y)
    if q_x.kind != "assignment" or q_y.kind != "assignment":
        raise NonAssignment("first order dominance needs quantiles that are maps")
    diff = q_x.values - q_y.values
    if np.all(diff >= -tol):
        verdict = Verdict.STRICTLY_DOMINATES if np.any(diff > tol) else Verdict.DOMINATES
    else:
        verdict = Verdict.INCOMPARABLE
    return FosdResult(verdict=verdict, q_x=q_x.values, q_y=q_y.values)


@dataclass(frozen=True, eq=False)
class ConcaveOrderResult:
    """
    Outcome of testing Y <=_cv X. ``certificate`` is the doubly stochastic D
    with X = D Y; a refutation carries the reference measure and both rho.
    """
    verdict: Verdict
    method: str
    certificate: Optional[NDArray[np.float64]] = None
    reference: Optional[DiscreteMeasure] = None
    rho_x: Optional[float] = None
    rho_y: Optional[float] = None
    checked: int = 0


def _check_means(x: DiscreteMeasure, y: DiscreteMeasure, tol: float) -> None:
    mx, my = mean(x), mean(y)
    if np.any(np.abs(mx - my) > tol * (1.0 + np.abs(mx))):
        raise MeanMismatch(f"means differ: {mx.tolist()} vs {my.tolist()}")


def _doubly_stochastic(x: DiscreteMeasure, y: DiscreteMeasure, tol: float) -> ConcaveOrderResult:
    _check_means(x, y, tol)
    size = common_sample_size(x, y)
    xs = as_equal_weight_samples(x, size)
    ys = as_equal_weight_samples(y, size)
    ones = np.ones((1, size))
    a_eq = sparse.vstack([
        sparse.kron(sparse.identity(size), ones),
        sparse.kron(ones, sparse.identity(size)),
        sparse.kron(sparse.identity(size), ys.T),
    ]).tocsr()
    b_eq = np.concatenate([np.ones(size), np.ones(size), xs.ravel()])
    result = linprog(np.zeros(size * size), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if result.status == 2:
        return ConcaveOrderResult(verdict=Verdict.FAILS, method="doubly_stochastic")
    if result.status != 0:
        raise SolverFailure(f"doubly stochastic LP failed: {result.message}")
    matrix = result.x.reshape(size, size)
    matrix[matrix < 0] = 0.0
    return ConcaveOrderResult(verdict=Verdict.HOLDS, method="doubly_stochastic", certificate=matrix)


def _rho_battery(
    x: DiscreteMeasure,
    y: DiscreteMeasure,
    references: Optional[Sequence[DiscreteMeasure]],
    battery_size: int,
    atoms: Optional[int],
    seed: int,
    tol: float,
) -> ConcaveOrderResult:
    dim = check_same_dimension(x, y)
    if references is None:
        rng = np.random.default_rng(seed)
        count = atoms or max(x.n, y.n)
        references = [from_samples(rng.uniform(size=(count, dim))) for _ in range(battery_size)]
    for checked, reference in enumerate(references, start=1):
        rho_x = max_correlation(reference, x).value
        rho_y = max_correlation(reference, y).value
        if rho_x > rho_y + tol * (1.0 + abs(rho_y)):
            logger.info("Concave order refuted by reference %d: %.6g > %.6g", checked, rho_x, rho_y)
            return ConcaveOrderResult(
                verdict=Verdict.FAILS,
                method="rho_battery",
                reference=reference,
                rho_x=rho_x,
                rho_y=rho_y,
                checked=checked,
            )
    return ConcaveOrderResult(verdict=Verdict.NOT_REFUTED, method="rho_battery", checked=len(references))


def concave_order_check(
    x: DiscreteMeasure,
    y: DiscreteMeasure,
    method: Literal["doubly_stochastic", "rho_battery"] = "doubly_stochastic",
    references: Optional[Sequence[DiscreteMeasure]] = None,
    battery_size: Optional[int] = None,
    atoms: Optional[int] = None,
    seed: Optional[int] = None,
    tol: Optional[float] = None,
) -> ConcaveOrderResult:
    """
    Test Y <=_cv X (X is less risky than Y).

    "doubly_stochastic" decides it by LP feasibility of X = D Y over equal
    weight samples; "rho_battery" searches for a reference mu with
    rho_mu(X) > rho_mu(Y) and can only refute.
    """
    tol = settings.EXACT_TOL if tol is None else tol
    check_same_dimension(x, y)
    if method == "doubly_stochastic":
        return _doubly_stochastic(x, y, tol)
    if method == "rho_battery":
        return _rho_battery(
            x,
            y,
            references,
            battery_size or settings.BATTERY_SIZE,
            atoms,
            settings.DEFAULT_SEED if seed is None else seed,
            tol,
        )
    raise DomainError(f"unknown concave order method {method!r}")


def mps_generate(x: ArrayLike, noise_scale: float, seed: Optional[int] = None) -> NDArray[np.float64]:
    """
    Mean-preserving spread of an equal-weight sample: every row x_i becomes
    the two rows x_i + delta_i and x_i - delta_i, with |delta_i| = noise_scale
    in a random direction.
    """
    if noise_scale < 0:
        raise DomainError(f"noise_scale must be nonnegative, got {noise_scale}")
    rows = as_rows(x)
    rng = np.random.default_rng(settings.DEFAULT_SEED if seed is None else seed)
    directions = rng.normal(size=rows.shape)
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    delta = noise_scale * directions / norms
    spread = np.empty((2 * rows.shape[0], rows.shape[1]))
    spread[0::2] = rows + delta
    spread[1::2] = rows - delta
    return spread


@dataclass(frozen=True, eq=False)
class DiversificationResult:
    passed: bool
    lambdas: NDArray[np.float64]
    slacks: NDArray[np.float64] = field(repr=False)


def diversification_check(
    ws: WeightScheme,
    x: ArrayLike,
    y: ArrayLike,
    lambdas: Optional[ArrayLike] = None,
    tol: Optional[float] = None,
) -> DiversificationResult:
    """
    Concavity of gamma along the segment between aligned prospects:
    gamma(l X + (1 - l) Y) >= l gamma(X) + (1 - l) gamma(Y) on a grid of l.
    """
    if not ws.is_risk_averse:
        raise InvalidScheme("diversification is checked for risk-averse schemes")
    tol = settings.EXACT_TOL if tol is None else tol
    xs, ys = aligned([x, y])
    grid = np.linspace(0.0, 1.0, 11) if lambdas is None else np.ravel(np.asarray(lambdas, dtype=float))
    gamma_x = gamma(ws, from_samples(xs)).value
    gamma_y = gamma(ws, from_samples(ys)).value
    slacks = np.array([
        gamma(ws, from_samples(lam * xs + (1.0 - lam) * ys)).value - (lam * gamma_x + (1.0 - lam) * gamma_y)
        for lam in grid
    ])
    return DiversificationResult(passed=bool(np.all(slacks >= -tol)), lambdas=grid, slacks=slacks)


@dataclass(frozen=True)
class RankedEntry:
    index: int
    value: float
    rank: int
    tied_with: List[int]


def rank_by_value(values: Sequence[float], tol: float = 1e-12) -> List[RankedEntry]:
    """Descending order; equal values keep input order and are reported as ties"""
    order = sorted(range(len(values)), key=lambda i: -values[i])
    entries = []
    for position, index in enumerate(order, start=1):
        ties = [
            j for j in range(len(values))
            if j != index and abs(values[j] - values[index]) <= tol * (1.0 + abs(values[index]))
        ]
        entries.append(RankedEntry(index=index, value=float(values[index]), rank=position, tied_with=ties))
    return entries


def rank_prospects(ws: WeightScheme, prospects: Sequence[DiscreteMeasure]) -> List[RankedEntry]:
    return rank_by_value([result.value for result in gamma_batch(ws, prospects)])
