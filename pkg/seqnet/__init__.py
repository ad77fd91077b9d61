"""
Sequential network design.

Greedy, optimal and delegated design of networks that grow one link (or one
unit of link weight) per period, with walk-count, Katz-Bonacich, diffusion,
spectral and equilibrium-welfare objectives.
"""

__version__ = "0.1.0"
