"""Exact vectors and functionals, parameter profiles and coding registries."""

__all__ = ["linspace", "profiles", "coding"]
