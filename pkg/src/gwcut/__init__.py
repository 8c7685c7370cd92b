"""Critical Galton-Watson trees conditioned on their leaf count, their cut-trees,
and exact and statistical checks of their laws and scaling limits."""

from .offspring import BINARY, MIXED, TERNARY, TEST_LAWS, OffspringDist, norming
from .trees import PlanarTree, from_degree_sequence, hat_transform

__version__ = "0.1.0"

__all__ = [
    "BINARY",
    "MIXED",
    "OffspringDist",
    "PlanarTree",
    "TERNARY",
    "TEST_LAWS",
    "from_degree_sequence",
    "hat_transform",
    "norming",
]
