"""Supercompilation-based safety verifier for a strict first-order
functional language with an associative append constructor."""

__version__ = "0.1.0"
