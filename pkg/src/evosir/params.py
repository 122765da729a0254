from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

from .errors import ParameterError


class InfectionModel(str, enum.Enum):
    FIXED = "fixed"  # infected for exactly one time unit
    EXPONENTIAL = "exponential"  # infected for an Exp(1) time


class Variant(str, enum.Enum):
    STATIC = "static"
    DEL = "del"
    EVO = "evo"


def as_enum(enum_cls, value):
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(str(value).lower())
    except ValueError:
        choices = ", ".join(m.value for m in enum_cls)
        raise ParameterError(f"unknown {enum_cls.__name__}: {value!r} (choose from {choices})") from None


@dataclass(frozen=True)
class EpidemicParams:
    """Rates and structure of one epidemic setting.

    ``rho`` is the rate at which a susceptible breaks an edge to an infected
    neighbour. For ``Variant.STATIC`` it is ignored (see :attr:`rho_eff`).
    """

    mu: float
    lam: float
    rho: float = 0.0
    infection_model: InfectionModel = InfectionModel.EXPONENTIAL
    variant: Variant = Variant.EVO
    n: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "infection_model", as_enum(InfectionModel, self.infection_model))
        object.__setattr__(self, "variant", as_enum(Variant, self.variant))
        if not self.mu > 0:
            raise ParameterError(f"mean degree must be positive, got {self.mu}")
        if not self.lam >= 0:
            raise ParameterError(f"infection rate must be non-negative, got {self.lam}")
        if not self.rho >= 0:
            raise ParameterError(f"rewiring rate must be non-negative, got {self.rho}")
        if self.n is not None and self.n < 1:
            raise ParameterError(f"population must be positive, got {self.n}")

    @property
    def rho_eff(self) -> float:
        return 0.0 if self.variant is Variant.STATIC else float(self.rho)

    @property
    def fixed(self) -> bool:
        return self.infection_model is InfectionModel.FIXED

    def with_(self, **changes) -> "EpidemicParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "mu": self.mu,
            "lambda": self.lam,
            "rho": self.rho,
            "model": self.infection_model.value,
            "variant": self.variant.value,
        }
