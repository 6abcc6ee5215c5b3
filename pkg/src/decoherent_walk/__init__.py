"""Discrete-time Hadamard walk on the line with a decoherent coin."""

__version__ = "0.1.0"
