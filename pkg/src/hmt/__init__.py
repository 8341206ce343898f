"""Numerical laboratory for the singular Hardy-Moser-Trudinger problem on the unit disc."""

__version__ = "0.1.0"
