"""Computational toolkit for quadratic dynamics on two parameter slices.

The package builds, exactly, the invariant lamination of the Basilica
polynomial z^2 - 1, decides the wake and strip combinatorics of periodic
angle pairs, traces external, parameter, and bubble rays numerically, tests
membership in the Mandelbrot set and in the non-escape locus of the
superattracting 2-cycle slice a/(z^2 + 2z), and renders the corresponding
pictures.
"""

__version__ = "0.1.0"

from .circle import Angle, OrbitClass  # noqa: F401
