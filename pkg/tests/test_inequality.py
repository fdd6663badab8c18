"""
Tests for generalized Gini evaluation of allocations
"""
import numpy as np
import pytest

from dualchoice.core.errors import DimensionMismatch, DomainError, EmptyInput, InvalidTransfer
from dualchoice.models.measure import from_samples, uniform_grid
from dualchoice.services.evaluate import Verdict, concave_order_check, risk_averse_scheme, univariate_scheme
from dualchoice.services.inequality import (
    Allocation,
    gini_evaluate,
    pigou_dalton_transfer,
    rank_allocations,
)


@pytest.fixture
def square_scheme():
    """Convex distortion f(t) = t^2 on three ranks"""
    return univariate_scheme(lambda t: 2.0 * t, n=3)


def test_allocation_validation():
    with pytest.raises(DomainError):
        Allocation(matrix=[[1.0], [-1.0]])
    with pytest.raises(DimensionMismatch):
        Allocation(matrix=[[1.0, 2.0]], labels=["income"])
    a = Allocation(matrix=[[1.0, 2.0], [3.0, 4.0]], labels=["income", "health"])
    assert a.individuals == 2
    assert a.dim == 2


def test_gini_evaluation(square_scheme):
    assert gini_evaluate(Allocation(matrix=[[1.0], [2.0], [3.0]]), square_scheme) == pytest.approx(14 / 9, abs=1e-12)


def test_gini_dimension_mismatch(square_scheme):
    with pytest.raises(DimensionMismatch):
        gini_evaluate(Allocation(matrix=[[1.0, 2.0]]), square_scheme)


def test_pigou_dalton_transfer():
    # Setup
    a = Allocation(matrix=[[1.0], [5.0]])

    # Execute
    moved = pigou_dalton_transfer(a, 1, 0, 1.0)

    # Assert
    np.testing.assert_array_equal(moved.matrix[:, 0], [2.0, 4.0])
    np.testing.assert_array_equal(a.matrix[:, 0], [1.0, 5.0])


@pytest.mark.parametrize(
    "i, j, delta",
    [
        (1, 0, 3.0),   # past the midpoint
        (0, 1, 1.0),   # from poorer to richer
        (0, 0, 1.0),
        (0, 5, 1.0),
        (1, 0, float("inf")),
    ],
)
def test_invalid_transfers(i, j, delta):
    with pytest.raises(InvalidTransfer):
        pigou_dalton_transfer(Allocation(matrix=[[1.0], [5.0]]), i, j, delta)


def test_transfers_improve_univariate_evaluation(square_scheme, rng):
    for _ in range(50):
        a = Allocation(matrix=rng.uniform(0.0, 10.0, size=(3, 1)))
        rich, poor = int(np.argmax(a.matrix[:, 0])), int(np.argmin(a.matrix[:, 0]))
        if rich == poor:
            continue
        share = float(rng.uniform(0.0, 0.5))
        moved = pigou_dalton_transfer(a, rich, poor, share * (a.matrix[rich] - a.matrix[poor]))
        assert gini_evaluate(moved, square_scheme) >= gini_evaluate(a, square_scheme) - 1e-12


def test_transfers_improve_risk_averse_evaluation(rng):
    """A proportional transfer between two rows is a doubly stochastic smoothing"""
    ws = risk_averse_scheme(uniform_grid(2, 2))
    for _ in range(50):
        matrix = rng.uniform(0.0, 10.0, size=(4, 2))
        matrix[0] = matrix[1] + rng.uniform(0.5, 2.0, size=2)
        a = Allocation(matrix=matrix)
        share = float(rng.uniform(0.0, 0.5))
        moved = pigou_dalton_transfer(a, 0, 1, share * (a.matrix[0] - a.matrix[1]))
        assert gini_evaluate(moved, ws) >= gini_evaluate(a, ws) - 1e-9


def test_rank_allocations(square_scheme):
    equal = Allocation(matrix=[[2.0], [2.0], [2.0]])
    unequal = Allocation(matrix=[[1.0], [2.0], [3.0]])
    ranking = rank_allocations([unequal, equal, equal], square_scheme)
    assert [entry.index for entry in ranking] == [1, 2, 0]
    assert ranking[0].tied_with == [2]
    assert ranking[0].value == pytest.approx(2.0, abs=1e-12)


def test_rank_allocations_errors(square_scheme):
    with pytest.raises(EmptyInput):
        rank_allocations([], square_scheme)
    with pytest.raises(DimensionMismatch):
        rank_allocations([Allocation(matrix=[[1.0]]), Allocation(matrix=[[1.0, 2.0]])], square_scheme)


def test_transfer_must_be_proportional():
    """A transfer of one attribute only is not a smoothing of the two rows"""
    a = Allocation(matrix=[[0.0, 0.0], [2.0, 2.0]])
    with pytest.raises(InvalidTransfer):
        pigou_dalton_transfer(a, 1, 0, [1.0, 0.0])
    with pytest.raises(InvalidTransfer):
        pigou_dalton_transfer(a, 1, 0, [1.0, 0.5])


def test_equalizing_transfer_is_less_risky():
    """rows {(0,0),(2,2)} meet at (1,1); the evaluation rises and the concave order is certified"""
    # Setup
    a = Allocation(matrix=[[0.0, 0.0], [2.0, 2.0]])
    ws = risk_averse_scheme(from_samples([[1.0, 0.0], [0.0, 1.0]]))

    # Execute
    moved = pigou_dalton_transfer(a, 1, 0, [1.0, 1.0])

    # Assert
    np.testing.assert_array_equal(moved.matrix, [[1.0, 1.0], [1.0, 1.0]])
    assert gini_evaluate(moved, ws) == pytest.approx(-1.0, abs=1e-12)
    assert gini_evaluate(a, ws) == pytest.approx(-1.0, abs=1e-12)
    assert concave_order_check(moved.empirical(), a.empirical()).verdict == Verdict.HOLDS


def test_zero_transfer_leaves_allocation_unchanged():
    a = Allocation(matrix=[[1.0, 4.0], [3.0, 2.0]])
    np.testing.assert_array_equal(pigou_dalton_transfer(a, 0, 1, [0.0, 0.0]).matrix, a.matrix)
    equal = Allocation(matrix=[[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(InvalidTransfer):
        pigou_dalton_transfer(equal, 0, 1, [0.5, 0.0])


def test_wrong_transfer_length():
    with pytest.raises(InvalidTransfer):
        pigou_dalton_transfer(Allocation(matrix=[[0.0, 0.0], [2.0, 2.0]]), 1, 0, [1.0, 1.0, 1.0])


def test_random_transfers_are_certified(rng):
    """Every accepted multi-attribute transfer is dominated in the concave order and never hurts"""
    for _ in range(50):
        matrix = rng.uniform(0.0, 5.0, size=(3, 2))
        a = Allocation(matrix=matrix)
        share = float(rng.uniform(0.0, 0.5))
        moved = pigou_dalton_transfer(a, 0, 2, share * (matrix[0] - matrix[2]))
        np.testing.assert_allclose(moved.matrix.mean(axis=0), matrix.mean(axis=0), atol=1e-12)
        assert concave_order_check(moved.empirical(), a.empirical()).verdict == Verdict.HOLDS
        for _ in range(5):
            ws = risk_averse_scheme(from_samples(rng.uniform(size=(3, 2))))
            assert gini_evaluate(moved, ws) >= gini_evaluate(a, ws) - 1e-9


def test_product_grid_matches_per_attribute_ginis(rng):
    """Independent attributes and a product reference: the evaluation splits by attribute"""
    for k in (2, 3):
        first = np.sort(rng.uniform(0.0, 5.0, size=k))
        second = np.sort(rng.uniform(0.0, 5.0, size=k))
        rows = np.array([[p, q] for p in first for q in second])
        joint = gini_evaluate(Allocation(matrix=rows), risk_averse_scheme(uniform_grid(2, k)))
        marginal = risk_averse_scheme(uniform_grid(1, k))
        separate = (
            gini_evaluate(Allocation(matrix=first.reshape(-1, 1)), marginal)
            + gini_evaluate(Allocation(matrix=second.reshape(-1, 1)), marginal)
        )
        assert joint == pytest.approx(separate, abs=1e-12)


def test_product_grid_fixture():
    """Attributes {1, 2} and {3, 5} against the 2 x 2 grid: -(0.875 + 2.25)"""
    rows = [[1.0, 3.0], [1.0, 5.0], [2.0, 3.0], [2.0, 5.0]]
    ws = risk_averse_scheme(uniform_grid(2, 2))
    assert gini_evaluate(Allocation(matrix=rows), ws) == pytest.approx(-3.125, abs=1e-12)
