"""Norm evaluation: exact values, ground and extension norms, dual and quotient norms."""

__all__ = ["values", "ground_norm", "extension", "dual", "averages", "l2sum"]
