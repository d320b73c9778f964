"""Numerical gluing of a catenoidal core to translating Grim ends.

Submodules:

* :mod:`formal_series` exact rational recurrences for the large- and small-scale expansions
* :mod:`profiles` radial soliton ODE solvers, comparison and parameter admissibility
* :mod:`geometry` graphs, surfaces of revolution and the soliton functional
* :mod:`operators` mode discretisations of the Jacobi operators and the D/E split
* :mod:`surgery` the glued surface and its deficiency fields
* :mod:`greens` ping-pong right inverse assembled from the compact and end inverses
* :mod:`norms` weighted Hölder and Sobolev norm estimators
* :mod:`verify` the acceptance checks
"""

__version__ = "0.1.0"
