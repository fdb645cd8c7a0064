"""Norming sets: ground set, rule sets, attractors and the auxiliary sets W_j0."""

__all__ = ["ground", "attractors", "rules", "auxiliary", "builders"]
