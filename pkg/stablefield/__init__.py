"""
stablefield - simulation and subsampling inference for stable marked point processes.

Simulates symmetric alpha-stable random fields observed at Poisson-scattered
locations, builds subsampling confidence intervals for the mean, and runs
seeded coverage studies together with limit-theory oracles.
"""

__version__ = "1.0.0"
