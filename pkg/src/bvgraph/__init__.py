"""Exact symbolic toolkit for BV calculus, Wick contractions and graph complexes."""
from .graded_poly import Generator, GradedPoly, berezin, derive, normalize, substitute

__all__ = ["Generator", "GradedPoly", "berezin", "derive", "normalize", "substitute"]
__version__ = "0.1.0"
