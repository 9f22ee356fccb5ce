"""Parallel solve/verify/refine experiment engine with a two-state Markov analytics core."""

__version__ = "0.1.0"
