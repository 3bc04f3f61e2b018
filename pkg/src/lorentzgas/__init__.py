"""Simulation and numerics toolkit for the two-dimensional periodic Lorentz
gas in the Boltzmann-Grad limit: exact microscopic billiard dynamics, the
explicit limiting transition kernel, the memory-two random flight process,
and a space-of-lattices Monte Carlo cross-validator."""

__version__ = "0.1.0"
