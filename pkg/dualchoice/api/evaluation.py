"""
API endpoints for evaluating prospects and allocations
"""
import logging
from typing import List

from fastapi import APIRouter, HTTPException

from dualchoice.core.errors import DualChoiceError, InvalidScheme
from dualchoice.models.measure import DiscreteMeasure, from_samples
from dualchoice.schemas.requests import (
    ComonotoneRequest,
    ComonotoneResponse,
    GammaRequest,
    GammaResponse,
    InequalityRequest,
    InequalityResponse,
    MeasureIn,
    RankedOut,
    SchemeIn,
)
from dualchoice.services.comonotone import is_mu_comonotonic
from dualchoice.services.evaluate import (
    RankedEntry,
    WeightScheme,
    gamma_batch,
    rank_by_value,
    risk_averse_scheme,
    state_price_scheme,
    tabulated_scheme,
    univariate_scheme,
)
from dualchoice.services.inequality import Allocation, rank_allocations

logger = logging.getLogger(__name__)

router = APIRouter()


def _measure(body: MeasureIn) -> DiscreteMeasure:
    return from_samples(body.atoms, body.weights)


def _scheme(body: SchemeIn) -> WeightScheme:
    if body.name == "univariate":
        if body.f_prime is None:
            raise InvalidScheme("the univariate scheme needs f_prime")
        return univariate_scheme(body.f_prime)
    if body.reference is None:
        raise InvalidScheme(f"the {body.name} scheme needs a reference measure")
    if body.name == "general":
        if body.phi is None:
            raise InvalidScheme("the general scheme needs phi")
        return tabulated_scheme(body.reference.atoms, body.phi, body.reference.weights)
    build = risk_averse_scheme if body.name == "risk-averse" else state_price_scheme
    return build(_measure(body.reference), alpha=body.alpha, u0=body.u0)


def _ranked(entries: List[RankedEntry]) -> List[RankedOut]:
    return [
        RankedOut(index=e.index, value=e.value, rank=e.rank, tied_with=e.tied_with)
        for e in entries
    ]


@router.post("/gamma", response_model=GammaResponse)
def evaluate_prospects(request: GammaRequest):
    """
    Yaari evaluation of every prospect under one weight scheme, with ranking
    """
    try:
        ws = _scheme(request.scheme)
        results = gamma_batch(ws, [_measure(p) for p in request.prospects])
    except DualChoiceError as e:
        raise HTTPException(status_code=422, detail=str(e))

    values = [r.value for r in results]
    response = GammaResponse(values=values, ranking=_ranked(rank_by_value(values)))
    if ws.is_risk_averse:
        response.rho = [r.decomposition.rho for r in results]
        response.mean_term = [r.decomposition.mean_term for r in results]
    return response


@router.post("/comonotone", response_model=ComonotoneResponse)
def check_comonotonicity(request: ComonotoneRequest):
    """
    Additivity test of the maximal correlation over aligned samples
    """
    try:
        certificate = is_mu_comonotonic(_measure(request.reference), request.prospects, tol=request.tol)
    except DualChoiceError as e:
        raise HTTPException(status_code=422, detail=str(e))
    return ComonotoneResponse(
        comonotonic=certificate.comonotonic,
        gap=certificate.gap,
        rho_of_sum=certificate.rho_of_sum,
        sum_of_rho=certificate.sum_of_rho,
        tol=certificate.tol,
    )


@router.post("/inequality", response_model=InequalityResponse)
def evaluate_allocations(request: InequalityRequest):
    """
    Generalized Gini evaluation and ranking of allocations
    """
    try:
        ws = _scheme(request.scheme)
        ranking = rank_allocations([Allocation(matrix=a) for a in request.allocations], ws)
    except DualChoiceError as e:
        raise HTTPException(status_code=422, detail=str(e))

    evaluations = [0.0] * len(ranking)
    for entry in ranking:
        evaluations[entry.index] = entry.value
    logger.info("Evaluated %d allocations", len(evaluations))
    return InequalityResponse(evaluations=evaluations, ranking=_ranked(ranking))
