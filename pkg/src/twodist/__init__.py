"""Certified upper bounds for spherical two-distance sets.

A two-distance set on the unit sphere S^{n-1} realizes exactly two
distinct pairwise inner products a > b.  This package computes upper
bounds on the largest such set for each dimension n by linear and
semidefinite programming over positive-definite zonal kernels, and can
certify the semidefinite bounds rigorously over whole parameter
intervals through sums-of-squares duality.
"""

from .gegenbauer import GegenbauerTable, gegenbauer_coeffs

__version__ = "0.1.0"
