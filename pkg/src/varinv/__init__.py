"""Exact inverse problem of the calculus of variations: symbolic toolkit."""

__version__ = "0.1.0"
