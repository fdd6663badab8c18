"""
Pydantic schemas for the evaluation endpoints
"""
from typing import List, Literal, Optional

from pydantic import BaseModel, Field


class MeasureIn(BaseModel):
    """Atoms (one row per atom) with optional weights, 1/n each when omitted"""
    atoms: List[List[float]] = Field(..., min_length=1)
    weights: Optional[List[float]] = None


class SchemeIn(BaseModel):
    """Weight scheme: reference measure plus the parameters of its form"""
    name: Literal["risk-averse", "state-price", "general", "univariate"] = "risk-averse"
    reference: Optional[MeasureIn] = Field(None, description="mu, or the state-price cloud nu")
    alpha: float = Field(1.0, gt=0)
    u0: List[float] = Field(default_factory=lambda: [0.0])
    phi: Optional[List[List[float]]] = Field(None, description="phi rows aligned with reference atoms")
    f_prime: Optional[List[float]] = Field(None, description="f' at the midpoint ranks")


class RankedOut(BaseModel):
    index: int
    value: float
    rank: int
    tied_with: List[int]


class GammaRequest(BaseModel):
    scheme: SchemeIn
    prospects: List[MeasureIn] = Field(..., min_length=1)


class GammaResponse(BaseModel):
    values: List[float]
    rho: Optional[List[float]] = None
    mean_term: Optional[List[float]] = None
    ranking: List[RankedOut]


class ComonotoneRequest(BaseModel):
    reference: MeasureIn
    prospects: List[List[List[float]]] = Field(..., min_length=1, description="aligned samples")
    tol: Optional[float] = Field(None, gt=0)


class ComonotoneResponse(BaseModel):
    comonotonic: bool
    gap: float
    rho_of_sum: float
    sum_of_rho: float
    tol: float


class InequalityRequest(BaseModel):
    scheme: SchemeIn
    allocations: List[List[List[float]]] = Field(..., min_length=1, description="individuals by attributes")


class InequalityResponse(BaseModel):
    evaluations: List[float]
    ranking: List[RankedOut]
