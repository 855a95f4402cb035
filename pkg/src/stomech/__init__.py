"""Stochastic-mechanics laboratory.

Simulates Nelson diffusions, their colored-noise smoothings, the associated
phase-space processes and a box-quantized scalar field, and estimates
forward/backward stochastic derivatives against Schrodinger-equation oracles.
"""

__version__ = "0.1.0"
