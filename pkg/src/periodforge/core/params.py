"""Parameter tuple of one member of the CL family.

The tuple (x, rho, lambda, y, alpha, c) fixes the hyperelliptic curve, the
Weierstrass data and therefore the immersed surface. Derived quantities
X, Y are properties so they can never go stale.
"""

import cmath
import math
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class SurfaceParams(BaseModel):
    """One member of the family, validated on construction."""

    model_config = ConfigDict(
        frozen=True, populate_by_name=True, arbitrary_types_allowed=True
    )

    x: float = Field(..., description="Real branch point in (0, 1)")
    y: complex = Field(..., description="Top end position, Im y > 0, |y| < 1")
    alpha: float = Field(math.pi / 2, description="Angle of the highest point p")
    c: float = Field(1.0, description="Scale factor in g = i c w")
    rho: float = Field(0.0, description="Free angle in (-pi/2, 0]")
    lam: Optional[float] = Field(
        None, alias="lambda", description="Continuation parameter, > 1"
    )

    @model_validator(mode="after")
    def check_invariants(self) -> "SurfaceParams":
        if not 0.0 < self.x < 1.0:
            raise ValueError(f"x must lie in (0, 1), got {self.x}")
        if not self.y.imag > 0.0:
            raise ValueError(f"Im y must be positive, got {self.y}")
        if not abs(self.y) < 1.0:
            raise ValueError(f"|y| must be below 1, got {abs(self.y)}")
        if not 0.0 < self.alpha < math.pi:
            raise ValueError(f"alpha must lie in (0, pi), got {self.alpha}")
        if not self.c > 0.0:
            raise ValueError(f"c must be positive, got {self.c}")
        if not -math.pi / 2 < self.rho <= 0.0:
            raise ValueError(f"rho must lie in (-pi/2, 0], got {self.rho}")
        if self.lam is not None and not self.lam > 1.0:
            raise ValueError(f"lambda must exceed 1, got {self.lam}")
        return self

    @property
    def X(self) -> float:
        return self.x + 1.0 / self.x

    @property
    def Y(self) -> complex:
        return self.y + 1.0 / self.y

    @property
    def ybar(self) -> complex:
        return self.y.conjugate()

    @property
    def cos_alpha(self) -> float:
        return math.cos(self.alpha)

    @property
    def p(self) -> complex:
        """Highest point e^{i alpha} of the planar symmetry curve."""
        return cmath.exp(1j * self.alpha)

    def replace(self, **changes: Any) -> "SurfaceParams":
        """Return a validated copy with some fields changed."""
        data: Dict[str, Any] = self.model_dump()
        data.update(changes)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        return SurfaceParams(**data)

    def to_record(self) -> Dict[str, Any]:
        """Flat JSON-friendly record."""
        return {
            "x": self.x,
            "rho": self.rho,
            "lambda": self.lam,
            "y_re": self.y.real,
            "y_im": self.y.imag,
            "alpha": self.alpha,
            "c": self.c,
        }

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "SurfaceParams":
        return cls(
            x=float(record["x"]),
            y=complex(float(record["y_re"]), float(record["y_im"])),
            alpha=float(record["alpha"]),
            c=float(record["c"]),
            rho=float(record.get("rho", 0.0)),
            lam=record.get("lambda"),
        )
