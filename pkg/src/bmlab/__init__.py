"""Certified Banach-Mazur distance computations for small symmetric bodies."""

__version__ = "0.1.0"

from .body import SymmetricBody, Tolerance, cross_polytope, cube, regular_polygon  # noqa: E402
from .distance import SearchOptions, bm_planar, bm_to_ball, bm_to_parallelogram  # noqa: E402

__all__ = ["SymmetricBody", "Tolerance", "cube", "cross_polytope", "regular_polygon",
           "SearchOptions", "bm_to_ball", "bm_planar", "bm_to_parallelogram", "__version__"]
