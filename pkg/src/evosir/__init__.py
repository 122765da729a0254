"""SIR epidemics on Erdős–Rényi graphs with edge deletion and rewiring."""
from .errors import GraphConsistencyError, NoEpidemicError, NumericError, ParameterError
from .graph import EvolvingGraph, components, generate_er
from .params import EpidemicParams, InfectionModel, Variant

__version__ = "0.1.0"

__all__ = [
    "EpidemicParams",
    "EvolvingGraph",
    "GraphConsistencyError",
    "InfectionModel",
    "NoEpidemicError",
    "NumericError",
    "ParameterError",
    "Variant",
    "__version__",
    "components",
    "generate_er",
]
