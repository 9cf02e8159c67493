"""Numerical toolkit for four-dimensional curvature and gradient Ricci solitons.

Submodules:

``lambda2``     bivectors, Hodge star, SO(4) action on two-forms
``curvature``   algebraic curvature operators and their decomposition
``framework``   soliton framework tensors and pointwise identities
``chart``       curvature of explicit metrics on coordinate charts
``zoo``         closed-form example geometries
``verify``      batch verification harness and CLI

``chart``, ``zoo`` and ``verify`` import jax; the others need only numpy.
"""

__version__ = "0.1.0"
