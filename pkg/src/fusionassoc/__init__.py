"""Symbolic-numeric tools for log-power series, Fuchsian systems and
free-boson fusion correlators."""

__version__ = "0.1.0"
