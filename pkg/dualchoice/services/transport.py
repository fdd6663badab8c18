"""
Maximal correlation between discrete measures.

The maximal correlation of a prospect X with respect to a reference mu is
the largest E[X . U] over all couplings of U ~ mu with X. It is computed as
an assignment problem when both sides are equal-weight samples of the same
size, as an exact transportation LP otherwise, and optionally with
entropic (Sinkhorn) regularization.
"""
import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Optional, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy import sparse
from scipy.optimize import linear_sum_assignment, linprog
from scipy.special import logsumexp

from dualchoice.core.config import settings
from dualchoice.core.errors import DomainError, NonConvergence, SolverFailure
from dualchoice.models.measure import DiscreteMeasure, check_same_dimension

logger = logging.getLogger(__name__)

# Plan entries at or below this are treated as outside the support
SUPPORT_TOL = 1e-13

# Ratio between successive regularization levels of annealed Sinkhorn
EPSILON_DECAY = 0.5

Sense = Literal["max", "min"]
Solver = Literal["assignment", "network", "sinkhorn"]


@dataclass(frozen=True)
class DualPotentials:
    """
    Transport potential ``psi`` at the source atoms and its conjugate
    ``psi_star`` at the target atoms, gauge-fixed by min(psi) = 0.
    """
    psi: NDArray[np.float64]
    psi_star: NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """
    Coupling of ``source`` (rows) and ``target`` (columns).

    ``value`` is always the attained correlation sum_kj plan_kj (u_k . x_j);
    ``sense`` records whether it was maximized or minimized.
    """
    source: DiscreteMeasure
    target: DiscreteMeasure
    plan: NDArray[np.float64]
    value: float
    sense: Sense = "max"
    solver: Solver = "network"
    iterations: int = 0
    dual: Optional[DualPotentials] = field(default=None, repr=False)

    @cached_property
    def correlation(self) -> NDArray[np.float64]:
        """Matrix of inner products u_k . x_j"""
        return self.source.atoms @ self.target.atoms.T

    @cached_property
    def surplus(self) -> NDArray[np.float64]:
        """The objective matrix being maximized (negated correlations for sense='min')"""
        return self.correlation if self.sense == "max" else -self.correlation

    @cached_property
    def potentials(self) -> DualPotentials:
        if self.dual is not None:
            return self.dual
        return central_potentials(self.surplus, self.support())

    def support(self, tol: float = SUPPORT_TOL) -> NDArray[np.bool_]:
        return self.plan > tol

    def is_map(self) -> bool:
        """True when every source atom is sent to exactly one target atom"""
        return bool(np.all(self.support().sum(axis=1) == 1))

    def marginal_error(self) -> float:
        rows = np.abs(self.plan.sum(axis=1) - self.source.weights).max()
        cols = np.abs(self.plan.sum(axis=0) - self.target.weights).max()
        return float(max(rows, cols))

    def monotonicity_gap(self) -> float:
        """
        Smallest s_kj + s_k'j' - s_kj' - s_k'j over pairs of support cells;
        nonnegative (up to rounding) for an optimal plan.
        """
        rows, cols = np.nonzero(self.support())
        if rows.size < 2:
            return 0.0
        s = self.surplus
        on = s[rows, cols]
        swapped = s[rows[:, None], cols[None, :]]
        gap = on[:, None] + on[None, :] - swapped - swapped.T
        return float(gap.min())

    def dual_value(self) -> float:
        """Dual objective of the surplus problem (equals -value when sense='min')"""
        pot = self.potentials
        return float(self.source.weights @ pot.psi + self.target.weights @ pot.psi_star)


def central_potentials(surplus: NDArray[np.float64], support: NDArray[np.bool_]) -> DualPotentials:
    """
    Dual potentials certifying a plan with the given support.

    Feasibility psi_k + psi*_j >= s_kj and equality on the support are
    difference constraints on the bipartite graph; they are solved by
    longest-path relaxation from the first source atom in both directions.
    Where the support leaves the offset between components free, the
    midpoint of the feasible interval is taken.
    """
    n, m = surplus.shape
    masked = np.where(support, -surplus, -np.inf)  # k -> j edges, weight -s_kj
    rounds = n + m + 1

    # forward: lowest admissible value of every node relative to the root
    up_src = np.full(n, -np.inf)
    up_tgt = np.full(m, -np.inf)
    up_src[0] = 0.0
    for _ in range(rounds):
        new_tgt = np.maximum(up_tgt, np.max(up_src[:, None] + masked, axis=0))
        new_src = np.maximum(up_src, np.max(new_tgt[None, :] + surplus, axis=1))
        if np.array_equal(new_src, up_src) and np.array_equal(new_tgt, up_tgt):
            break
        up_src, up_tgt = new_src, new_tgt

    # backward: longest path from every node back to the root
    down_src = np.full(n, -np.inf)
    down_tgt = np.full(m, -np.inf)
    down_src[0] = 0.0
    for _ in range(rounds):
        new_tgt = np.maximum(down_tgt, np.max(surplus + down_src[:, None], axis=0))
        new_src = np.maximum(down_src, np.max(masked + new_tgt[None, :], axis=1))
        if np.array_equal(new_src, down_src) and np.array_equal(new_tgt, down_tgt):
            break
        down_src, down_tgt = new_src, new_tgt

    if not all(np.all(np.isfinite(v)) for v in (up_src, up_tgt, down_src, down_tgt)):
        raise SolverFailure("plan support does not connect the dual graph")

    psi = 0.5 * (up_src - down_src)
    phi = 0.5 * (up_tgt - down_tgt)
    psi_star = -phi
    shift = psi.min()
    return DualPotentials(psi=psi - shift, psi_star=psi_star + shift)


def _assignment(surplus: NDArray[np.float64]) -> Tuple[NDArray[np.float64], float]:
    n = surplus.shape[0]
    rows, cols = linear_sum_assignment(surplus, maximize=True)
    plan = np.zeros_like(surplus)
    plan[rows, cols] = 1.0 / n
    return plan, float(surplus[rows, cols].sum() / n)


def _network(surplus: NDArray[np.float64], a: NDArray[np.float64], b: NDArray[np.float64]) -> NDArray[np.float64]:
    n, m = surplus.shape
    row_sums = sparse.kron(sparse.identity(n), np.ones((1, m)))
    col_sums = sparse.kron(np.ones((1, n)), sparse.identity(m))
    a_eq = sparse.vstack([row_sums, col_sums]).tocsr()
    result = linprog(
        -surplus.ravel(),
        A_eq=a_eq,
        b_eq=np.concatenate([a, b]),
        bounds=(0, None),
        method="highs-ds",
    )
    if result.status != 0:
        raise SolverFailure(f"transportation LP failed: {result.message}")
    plan = result.x.reshape(n, m)
    plan[plan <= SUPPORT_TOL] = 0.0
    return plan


def _solve(mu: DiscreteMeasure, x: DiscreteMeasure, sense: Sense) -> TransportPlan:
    check_same_dimension(mu, x)
    correlation = mu.atoms @ x.atoms.T
    surplus = correlation if sense == "max" else -correlation
    if mu.n == x.n and mu.is_equal_weight() and x.is_equal_weight():
        plan, assigned = _assignment(surplus)
        solver: Solver = "assignment"
        # negation is exact, so this is the row-ordered sum over the chosen pairs
        value = assigned if sense == "max" else -assigned
    else:
        plan = _network(surplus, mu.weights, x.weights)
        solver = "network"
        value = float(np.sum(plan * correlation))
    logger.debug("Solved %s-correlation %dx%d with %s solver: %r", sense, mu.n, x.n, solver, value)
    return TransportPlan(source=mu, target=x, plan=plan, value=value, sense=sense, solver=solver)


def max_correlation(mu: DiscreteMeasure, x: DiscreteMeasure) -> TransportPlan:
    """
    Optimal coupling maximizing E[X . U] with U ~ mu and X ~ x.
    """
    return _solve(mu, x, "max")


def min_correlation(mu: DiscreteMeasure, x: DiscreteMeasure) -> TransportPlan:
    """
    Optimal coupling minimizing E[X . U]; equals the negated maximal
    correlation against the reflected reference -U.
    """
    return _solve(mu, x, "min")


def _epsilon_schedule(surplus: NDArray[np.float64], epsilon: float) -> NDArray[np.float64]:
    """Geometric ladder from the surplus range down to ``epsilon``"""
    start = max(float(np.ptp(surplus)), epsilon)
    stages = int(np.ceil((np.log(start) - np.log(epsilon)) / np.log(1.0 / EPSILON_DECAY)))
    return np.maximum(start * EPSILON_DECAY ** np.arange(stages + 1), epsilon)


def _sinkhorn_sweeps(
    f: NDArray[np.float64],
    g: NDArray[np.float64],
    surplus: NDArray[np.float64],
    log_a: NDArray[np.float64],
    log_b: NDArray[np.float64],
    epsilon: float,
    max_iter: int,
    tol: float,
) -> Tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64], float, int]:
    weights = np.exp(log_a)
    error = np.inf
    sweeps = 0
    for sweeps in range(1, max_iter + 1):
        f = epsilon * log_a - epsilon * logsumexp((g[None, :] + surplus) / epsilon, axis=1)
        g = epsilon * log_b - epsilon * logsumexp((f[:, None] + surplus) / epsilon, axis=0)
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(g))):
            raise NonConvergence(f"Sinkhorn potentials overflow at epsilon={epsilon:g}")
        plan = np.exp((f[:, None] + g[None, :] + surplus) / epsilon)
        error = float(np.abs(plan.sum(axis=1) - weights).max())
        if not np.isfinite(error):
            raise NonConvergence(f"Sinkhorn plan overflows at epsilon={epsilon:g}")
        if error <= tol:
            break
    return f, g, plan, error, sweeps


def sinkhorn_correlation(
    mu: DiscreteMeasure,
    x: DiscreteMeasure,
    epsilon: Optional[float] = None,
    max_iter: Optional[int] = None,
    tol: Optional[float] = None,
) -> TransportPlan:
    """
    Entropically regularized maximal correlation (log-domain Sinkhorn).

    The regularization is annealed from the range of the correlations down
    to ``epsilon``, each stage warm-started from the previous potentials;
    every stage gets at most ``max_iter`` sweeps. Raises NonConvergence when
    the row marginals at the final ``epsilon`` are still off by more than
    ``tol``, or when the potentials leave the float range.
    """
    epsilon = settings.SINKHORN_EPSILON if epsilon is None else epsilon
    max_iter = settings.SINKHORN_MAX_ITER if max_iter is None else max_iter
    tol = settings.ENTROPIC_TOL if tol is None else tol
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    if max_iter < 1:
        raise DomainError(f"max_iter must be at least 1, got {max_iter}")
    check_same_dimension(mu, x)

    correlation = mu.atoms @ x.atoms.T
    log_a = np.log(mu.weights)
    log_b = np.log(x.weights)
    f = np.zeros(mu.n)
    g = np.zeros(x.n)
    iterations = 0
    for stage in _epsilon_schedule(correlation, epsilon):
        # intermediate stages only warm-start the next one
        stage_tol = tol * stage / epsilon
        f, g, plan, error, sweeps = _sinkhorn_sweeps(f, g, correlation, log_a, log_b, stage, max_iter, stage_tol)
        iterations += sweeps
        logger.debug("Sinkhorn stage epsilon=%g: %d sweeps, error %.2e", stage, sweeps, error)
    if error > tol:
        raise NonConvergence(
            f"Sinkhorn marginal error {error:.3e} after {max_iter} iterations (epsilon={epsilon})"
        )
    logger.info("Sinkhorn converged in %d iterations (epsilon=%g, error=%.2e)", iterations, epsilon, error)

    psi = -f
    psi_star = -g
    shift = psi.min()
    dual = DualPotentials(psi=psi - shift, psi_star=psi_star + shift)
    return TransportPlan(
        source=mu,
        target=x,
        plan=plan,
        value=float(np.sum(plan * correlation)),
        sense="max",
        solver="sinkhorn",
        iterations=iterations,
        dual=dual,
    )


def brute_force_correlation(mu: DiscreteMeasure, x: DiscreteMeasure, sense: Sense = "max") -> float:
    """
    Best correlation over all n! pairings of two equal-weight measures of
    the same size. Only meant for small n.
    """
    check_same_dimension(mu, x)
    if mu.n != x.n or not (mu.is_equal_weight() and x.is_equal_weight()):
        raise DomainError("brute force needs equal-weight measures with the same number of atoms")
    correlation = mu.atoms @ x.atoms.T
    rows = np.arange(mu.n)
    values = [correlation[rows, list(perm)].sum() / mu.n for perm in itertools.permutations(range(x.n))]
    return float(max(values) if sense == "max" else min(values))
