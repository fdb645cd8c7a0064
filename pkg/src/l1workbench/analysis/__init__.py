"""Finite-scale analysis: separated sequences, RIS, the Basic Inequality, exact pairs, spreading constants."""

__all__ = ["separated", "ris", "basic_inequality", "exact_pairs", "spreading"]
