"""Maslov indices of bundle pairs over surfaces via Chern-Weil integrals.

Three routes compute the same integer: a connection-free winding number, a
curvature-plus-boundary integral for an abstract bundle pair, and, for a
surface immersed in a Kahler manifold with totally real boundary, the Ricci
form plus Maslov 1-form integral.
"""

from .errors import InputError, MaslovError, NumericalError

__version__ = "0.1.0"

__all__ = ["InputError", "MaslovError", "NumericalError", "__version__"]
