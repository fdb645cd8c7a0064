"""Ordinals, regular families and finite trees."""

__all__ = ["ordinal", "families", "trees"]
