"""Survival exponent of the root edge under peeling of random planar maps.

Subpackages and modules
-----------------------
numerics   quadrature with endpoint singularities, bracketing root finder
exponent   Laplace exponent of the Lamperti Levy process and the constant c
levy       first-passage Monte Carlo of that Levy process
peeling    conditioned perimeter walk, boundary ring and survival estimators
cli        command-line front end
"""

__version__ = "0.1.0"
