"""
Tests for the maximal correlation solvers
"""
import numpy as np
import pytest

from dualchoice.core.errors import DimensionMismatch, DomainError, NonConvergence
from dualchoice.models.measure import from_samples, mean, point_mass, scaled, shifted, uniform_grid
from dualchoice.services.transport import (
    brute_force_correlation,
    max_correlation,
    min_correlation,
    sinkhorn_correlation,
)


def _random_pair(rng, weighted):
    n = int(rng.integers(1, 6))
    m = int(rng.integers(1, 6))
    d = int(rng.integers(1, 4))
    mu_weights = rng.uniform(0.1, 1.0, n) if weighted else None
    x_weights = rng.uniform(0.1, 1.0, m) if weighted else None
    mu = from_samples(rng.uniform(size=(n, d)), mu_weights)
    x = from_samples(rng.normal(size=(m, d)), x_weights)
    return mu, x


def test_fixture_value(mu3, x123):
    """Monotone pairing of {0.1, 0.5, 0.9} with {1, 2, 3}"""
    plan = max_correlation(mu3, x123)
    assert plan.solver == "assignment"
    assert plan.value == pytest.approx(3.8 / 3, abs=1e-12)
    assert plan.is_map()


def test_fixture_min_value(mu3, x123):
    plan = min_correlation(mu3, x123)
    assert plan.sense == "min"
    assert plan.value == pytest.approx(2.2 / 3, abs=1e-12)


def test_two_point_fixtures():
    mu = from_samples([0.1, 0.9])
    assert max_correlation(mu, from_samples([1.0, 3.0])).value == pytest.approx(1.4, abs=1e-12)
    assert max_correlation(mu, from_samples([2.0, 2.0])).value == pytest.approx(1.0, abs=1e-12)


def test_network_solver_splits_mass(mu3):
    """Three equal atoms against two: the middle atom is split"""
    plan = max_correlation(mu3, from_samples([1.0, 2.0]))
    assert plan.solver == "network"
    assert plan.value == pytest.approx(5.3 / 6, abs=1e-9)
    assert not plan.is_map()
    np.testing.assert_allclose(plan.plan, [[1 / 3, 0.0], [1 / 6, 1 / 6], [0.0, 1 / 3]], atol=1e-12)


def test_dimension_mismatch(mu3):
    with pytest.raises(DimensionMismatch):
        max_correlation(mu3, from_samples([[1.0, 2.0]]))


def test_matches_brute_force(rng):
    """500 random equal-weight instances agree with the permutation oracle"""
    for _ in range(500):
        n = int(rng.integers(1, 8))
        d = int(rng.integers(1, 4))
        mu = from_samples(rng.uniform(size=(n, d)))
        x = from_samples(rng.normal(size=(n, d)))
        if mu.n != n or x.n != n:
            continue
        assert max_correlation(mu, x).value == brute_force_correlation(mu, x)


def test_min_matches_brute_force(rng):
    for _ in range(200):
        n = int(rng.integers(1, 8))
        mu = from_samples(rng.uniform(size=(n, 2)))
        x = from_samples(rng.normal(size=(n, 2)))
        expected = brute_force_correlation(mu, x, sense="min")
        assert min_correlation(mu, x).value == expected


def test_brute_force_needs_equal_weights(mu3):
    with pytest.raises(DomainError):
        brute_force_correlation(mu3, from_samples([1.0, 2.0]))


@pytest.mark.parametrize("weighted", [False, True])
def test_duality_and_slackness(rng, weighted):
    """Primal equals dual, potentials are feasible and tight on the support"""
    for _ in range(100):
        mu, x = _random_pair(rng, weighted)
        for plan in (max_correlation(mu, x), min_correlation(mu, x)):
            pot = plan.potentials
            slack = pot.psi[:, None] + pot.psi_star[None, :] - plan.surplus
            primal = plan.value if plan.sense == "max" else -plan.value
            assert plan.dual_value() == pytest.approx(primal, abs=1e-9)
            assert slack.min() >= -1e-9
            assert np.abs(slack[plan.support()]).max() <= 1e-9
            assert pot.psi.min() == 0.0
            assert plan.marginal_error() <= 1e-9
            assert plan.monotonicity_gap() >= -1e-9


def test_min_is_reflected_max(rng):
    for _ in range(20):
        mu, x = _random_pair(rng, weighted=True)
        reflected = from_samples(-mu.atoms, mu.weights)
        assert min_correlation(mu, x).value == pytest.approx(-max_correlation(reflected, x).value, abs=1e-9)


def test_sinkhorn_approaches_exact_value(mu3, x123):
    exact = max_correlation(mu3, x123).value
    coarse = sinkhorn_correlation(mu3, x123, epsilon=0.5)
    fine = sinkhorn_correlation(mu3, x123, epsilon=0.25)
    assert fine.solver == "sinkhorn"
    assert fine.iterations >= 1
    assert fine.value <= exact + 1e-5
    assert fine.value >= coarse.value - 1e-5
    assert coarse.value >= min_correlation(mu3, x123).value
    assert fine.marginal_error() <= 1e-5


def test_sinkhorn_potentials_are_gauged(mu3, x123):
    plan = sinkhorn_correlation(mu3, x123, epsilon=0.5)
    assert plan.potentials.psi.min() == 0.0


def test_sinkhorn_non_convergence(mu3):
    """One sweep per stage cannot balance a plan that splits mass"""
    with pytest.raises(NonConvergence):
        sinkhorn_correlation(mu3, from_samples([1.0, 2.0]), epsilon=0.5, max_iter=1, tol=1e-15)


@pytest.mark.parametrize("kwargs", [{"epsilon": 0.0}, {"epsilon": -1.0}, {"max_iter": 0}])
def test_sinkhorn_rejects_bad_parameters(mu3, x123, kwargs):
    with pytest.raises(DomainError):
        sinkhorn_correlation(mu3, x123, **kwargs)


def test_identity_pairing_in_two_dimensions():
    basis = from_samples([[1.0, 0.0], [0.0, 1.0]])
    assert max_correlation(basis, basis).value == pytest.approx(1.0, abs=1e-12)
    assert min_correlation(basis, basis).value == pytest.approx(0.0, abs=1e-12)


def test_point_mass_prospect():
    """A point mass forces the coupling: value is c . E[U]"""
    mu = uniform_grid(2, 2)
    c = point_mass([2.0, 3.0])
    assert max_correlation(mu, c).value == pytest.approx(2.5, abs=1e-9)
    assert min_correlation(mu, c).value == pytest.approx(2.5, abs=1e-9)


def test_positive_homogeneity_and_translation(rng):
    for _ in range(200):
        mu, x = _random_pair(rng, weighted=True)
        value = max_correlation(mu, x).value
        a = float(rng.uniform(0.0, 5.0))
        c = rng.normal(size=x.dim)
        assert max_correlation(mu, scaled(x, a)).value == pytest.approx(a * value, abs=1e-9 * (1 + abs(a * value)))
        expected = value + float(c @ mean(mu))
        assert max_correlation(mu, shifted(x, c)).value == pytest.approx(expected, abs=1e-9 * (1 + abs(expected)))


def test_symmetry(rng):
    for _ in range(200):
        mu, x = _random_pair(rng, weighted=True)
        assert max_correlation(mu, x).value == pytest.approx(max_correlation(x, mu).value, abs=1e-9)


def test_subadditivity(rng):
    """rho(X + Y) <= rho(X) + rho(Y) for prospects on a common index"""
    for _ in range(200):
        n = int(rng.integers(1, 7))
        d = int(rng.integers(1, 4))
        k = int(rng.integers(1, 7))
        mu = from_samples(rng.uniform(size=(k, d)), rng.uniform(0.1, 1.0, size=k))
        xs = rng.normal(size=(n, d))
        ys = rng.normal(size=(n, d))
        joint = max_correlation(mu, from_samples(xs + ys)).value
        separate = max_correlation(mu, from_samples(xs)).value + max_correlation(mu, from_samples(ys)).value
        assert joint <= separate + 1e-9


def test_sinkhorn_small_epsilon(mu3, x123):
    """Annealing reaches epsilon = 1e-3 within the default sweep budget"""
    plan = sinkhorn_correlation(mu3, x123, epsilon=1e-3)
    assert plan.value == pytest.approx(3.8 / 3, abs=1e-2)
    assert plan.marginal_error() <= 1e-6


def test_sinkhorn_large_epsilon_is_product_coupling(mu3, x123):
    plan = sinkhorn_correlation(mu3, x123, epsilon=1e6)
    np.testing.assert_allclose(plan.plan, np.full((3, 3), 1 / 9), atol=1e-5)
    assert plan.value == pytest.approx(float(mean(mu3) @ mean(x123)), abs=1e-5)


def test_sinkhorn_point_masses_are_exact():
    plan = sinkhorn_correlation(point_mass([0.5]), point_mass([2.0]), epsilon=1e-3)
    assert plan.value == pytest.approx(1.0, abs=1e-12)
