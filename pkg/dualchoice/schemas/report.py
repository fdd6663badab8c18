"""
Pydantic schemas for batch runs and the reports they write
"""
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from dualchoice.core.config import settings

Command = Literal["eval", "rank", "dominance", "comonotone", "quantile", "local-utility", "inequality"]
SchemeName = Literal["risk-averse", "state-price", "general", "univariate"]

# number of input files each command accepts: (minimum, maximum or None)
INPUT_COUNTS = {
    "eval": (1, None),
    "rank": (1, None),
    "dominance": (2, 2),
    "comonotone": (2, None),
    "quantile": (1, 1),
    "local-utility": (1, 2),
    "inequality": (1, None),
}

# commands that weight quantiles and therefore need a scheme
SCHEME_COMMANDS = {"eval", "rank", "inequality"}


class RunConfig(BaseModel):
    """One batch invocation"""
    command: Command
    inputs: List[str] = Field(..., description="Dataset CSV paths, in command order")
    mu: Optional[str] = Field(None, description="Reference measure: CSV path or uniform-grid:D:K")
    scheme: SchemeName = "risk-averse"
    alpha: float = Field(1.0, gt=0)
    u0: List[float] = Field(default_factory=lambda: [0.0])
    phi: Optional[str] = Field(None, description="CSV with coordinate and phi_ columns")
    f_prime: Optional[str] = Field(None, description="Single-column CSV tabulating f'")
    order: Literal["fosd", "concave"] = "fosd"
    method: Literal["doubly_stochastic", "rho_battery"] = "doubly_stochastic"
    tol: Optional[float] = Field(None, gt=0)
    seed: int = settings.DEFAULT_SEED
    out: Optional[str] = None

    @model_validator(mode="after")
    def check_required_inputs(self) -> "RunConfig":
        low, high = INPUT_COUNTS[self.command]
        if len(self.inputs) < low or (high is not None and len(self.inputs) > high):
            expected = f"{low}" if low == high else f"at least {low}" if high is None else f"{low} to {high}"
            raise ValueError(f"{self.command} takes {expected} input files, got {len(self.inputs)}")
        if self.command in SCHEME_COMMANDS:
            if self.scheme == "general" and self.phi is None:
                raise ValueError("the general scheme needs --phi")
            if self.scheme == "univariate" and self.f_prime is None:
                raise ValueError("the univariate scheme needs --f-prime")
            if self.scheme in ("risk-averse", "state-price") and self.mu is None:
                raise ValueError(f"the {self.scheme} scheme needs --mu")
        elif self.mu is None and not (self.command == "dominance" and self.order == "concave"):
            raise ValueError(f"{self.command} needs a reference measure (--mu)")
        return self


class InputDigest(BaseModel):
    path: str
    sha256: str


class SchemeSummary(BaseModel):
    name: SchemeName
    reference: InputDigest
    alpha: Optional[float] = None
    u0: Optional[List[float]] = None
    risk_averse: bool


class Report(BaseModel):
    """
    Top-level report object. Field order is the serialized key order; floats
    are written in their shortest round-trip form.
    """
    command: Command
    status: Literal["ok", "failed"]
    inputs: List[InputDigest]
    scheme: Optional[SchemeSummary] = None
    values: Dict[str, Any] = Field(default_factory=dict)
    certificates: Dict[str, Any] = Field(default_factory=dict)
    tolerances: Dict[str, float] = Field(default_factory=dict)
    seed: int
