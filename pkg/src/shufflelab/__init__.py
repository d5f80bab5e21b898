"""Cryptanalysis lab for a sum/product-based verifiable shuffle."""

__version__ = "0.1.0"
