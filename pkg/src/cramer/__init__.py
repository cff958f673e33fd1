"""Simulation and verification toolkit for the Cramér random model of primes."""

__version__ = "0.1.0"
