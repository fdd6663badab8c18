"""
Tests for mu-comonotonicity
"""
import numpy as np
import pytest

from dualchoice.core.errors import AlignmentError, CountMismatch, DimensionMismatch, EmptyInput, PreconditionUnmet
from dualchoice.models.measure import from_samples
from dualchoice.services.comonotone import (
    C_COMONOTONE_COUNTEREXAMPLE,
    c_comonotonic_check,
    comonotonic_rearrangement,
    is_mu_comonotonic,
    transitivity_check,
)


def _spd(rng, d):
    a = rng.normal(size=(d, d))
    return a @ a.T + 0.1 * np.eye(d)


def test_anti_monotone_fixture():
    """X = (1, 2) and Y = (20, 10) move in opposite directions: gap 0.5"""
    mu = from_samples([0.0, 1.0])
    certificate = is_mu_comonotonic(mu, [[1.0, 2.0], [20.0, 10.0]])
    assert not certificate
    assert certificate.gap == pytest.approx(0.5, abs=1e-9)
    assert certificate.rho_of_sum == pytest.approx(10.5, abs=1e-9)
    assert certificate.sum_of_rho == pytest.approx(11.0, abs=1e-9)


def test_monotone_fixture():
    mu = from_samples([0.0, 1.0])
    certificate = is_mu_comonotonic(mu, [[1.0, 2.0], [10.0, 20.0]])
    assert certificate.comonotonic
    assert certificate.gap == pytest.approx(0.0, abs=1e-12)


def test_single_prospect_is_comonotonic(mu3, x123):
    assert is_mu_comonotonic(mu3, [[3.0, 1.0, 2.0]])


@pytest.mark.parametrize(
    "prospects, error",
    [
        ([], EmptyInput),
        ([[1.0, 2.0, 3.0], [1.0, 2.0]], AlignmentError),
        ([[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]], DimensionMismatch),
    ],
)
def test_invalid_prospects(mu3, prospects, error):
    with pytest.raises(error):
        is_mu_comonotonic(mu3, prospects)


def test_rearrangement_is_comonotonic(rng):
    """Rearranged families pass the additivity test and keep their laws"""
    for _ in range(50):
        n = int(rng.integers(2, 7))
        d = int(rng.integers(1, 4))
        mu = from_samples(rng.uniform(size=(n, d)))
        prospects = [from_samples(rng.normal(size=(n, d))) for _ in range(3)]
        rearranged = comonotonic_rearrangement(mu, prospects)
        for original, rows in zip(prospects, rearranged):
            assert from_samples(rows) == original
        certificate = is_mu_comonotonic(mu, rearranged)
        assert abs(certificate.gap) <= 1e-9 * (1.0 + abs(certificate.sum_of_rho))


def test_rearrangement_needs_equal_weights(x123):
    mu = from_samples([0.1, 0.5, 0.9], weights=[1.0, 2.0, 1.0])
    with pytest.raises(CountMismatch):
        comonotonic_rearrangement(mu, [x123])


def test_rearrangement_needs_prospects(mu3):
    with pytest.raises(EmptyInput):
        comonotonic_rearrangement(mu3, [])


def test_transitivity(rng):
    """1000 valid instances: (X, Y) and (Y, Z) comonotone imply (X, Z)"""
    for _ in range(1000):
        n = int(rng.integers(2, 6))
        d = int(rng.integers(1, 3))
        u = rng.uniform(size=(n, d))
        mu = from_samples(u)
        x, y, z = (u @ _spd(rng, d) for _ in range(3))
        assert transitivity_check(mu, x, y, z)


def test_transitivity_preconditions(mu3):
    with pytest.raises(PreconditionUnmet):
        transitivity_check(mu3, [1.0, 2.0, 3.0], [1.0, 1.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(PreconditionUnmet):
        transitivity_check(mu3, [3.0, 2.0, 1.0], [1.0, 2.0, 3.0], [1.0, 2.0, 3.0])


def test_c_comonotonicity_is_not_transitive():
    x = C_COMONOTONE_COUNTEREXAMPLE["x"]
    y = C_COMONOTONE_COUNTEREXAMPLE["y"]
    z = C_COMONOTONE_COUNTEREXAMPLE["z"]
    assert c_comonotonic_check(x, y)
    assert c_comonotonic_check(y, z)
    assert not c_comonotonic_check(x, z)
