"""Correlator coefficients of spectral moments for sparse bipartite random matrices.

Three independent routes to the same numbers:

* :mod:`bipcorr.recurrence` evaluates a closed recurrence system exactly,
* :mod:`bipcorr.walks` enumerates the walk pairs the coefficients count,
* :mod:`bipcorr.simulate` measures finite-size correlators by Monte Carlo.

The :mod:`bipcorr.cli` module exposes all three plus the cross-checks.
"""

__version__ = "0.1.0"
