"""kpzlab: stochastic simulators and exact analytic formulas for
point-interacting Brownian motions, cross-checked against each other."""

__version__ = "0.1.0"
