"""Exact q-series toolkit for one-weighted crank statistics.

Subpackages:
  series      truncated Laurent arithmetic over exact rationals
  qproducts   eta-style infinite products, the expression language, eta-product normal forms
  partitions  brute-force partition statistics (ground truth)
  lambert     Lambert-type series and their signed theta variants
  modular     cusps of Gamma1(N), order bounds, certification
  verifier    the identity corpus and suite runner
  cli         command-line front end
"""

__version__ = "0.1.0"
