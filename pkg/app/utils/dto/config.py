from pathlib import Path
from typing import List, Literal, Optional, Union

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from app.core.config import settings
from app.core.exceptions import ConfigError

ONE_OVER_ALPHA = "one_over_alpha"


def parse_float_list(value) -> Optional[List[float]]:
    if value is None or value == "":
        return None
    if isinstance(value, str):
        return [float(part) for part in value.split(",") if part.strip()]
    if isinstance(value, (int, float)):
        return [float(value)]
    return [float(v) for v in value]


class RunConfig(BaseModel):
    """A backtest or sweep request, as read from a flat key=value file."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    phi: Literal["cross_entropy", "neg_half_sq_norm", "diversity"] = "cross_entropy"
    phi_pi: Optional[List[float]] = None  # None means equal weights
    phi_lambda: Optional[float] = None
    scheme: Literal["multiplicative", "additive", "alpha_c"] = "alpha_c"
    alpha: Optional[List[float]] = None
    C: Union[float, Literal["one_over_alpha"]] = ONE_OVER_ALPHA
    v0: float = settings.DEFAULT_V0
    normalize_barycenter: bool = True
    output: Optional[str] = None
    format: Literal["csv", "json"] = "csv"

    @field_validator("phi_pi", "alpha", mode="before")
    @classmethod
    def _split_lists(cls, value):
        return parse_float_list(value)

    @field_validator("C", mode="before")
    @classmethod
    def _parse_c(cls, value):
        if isinstance(value, str) and value.strip() != ONE_OVER_ALPHA:
            return float(value)
        return value.strip() if isinstance(value, str) else value

    @model_validator(mode="after")
    def _compatible(self):
        if self.phi == "diversity" and self.phi_lambda is None:
            raise ValueError("phi=diversity needs phi_lambda")
        if self.scheme == "alpha_c":
            if not self.alpha:
                raise ValueError("scheme=alpha_c needs at least one alpha")
            if any(a < 0 for a in self.alpha):
                raise ValueError(f"alpha values must be nonnegative, got {self.alpha}")
            if self.C != ONE_OVER_ALPHA and self.C < 0:
                raise ValueError(f"C must be nonnegative, got {self.C}")
        return self

    @property
    def alphas(self) -> List[float]:
        return list(self.alpha or [])

    def resolve_c(self, alpha: float) -> float:
        if self.C == ONE_OVER_ALPHA:
            if alpha == 0:
                raise ValueError("C = 1/alpha is undefined at alpha = 0")
            return 1.0 / alpha
        return float(self.C)

    @classmethod
    def from_file(cls, path: Union[str, Path], **overrides) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        raw = {k: v for k, v in dotenv_values(path, encoding="utf-8").items() if v is not None}
        raw.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls.model_validate(raw)
        except ValidationError as e:
            raise ConfigError(f"invalid config {path}: {e.errors(include_url=False)}") from e
