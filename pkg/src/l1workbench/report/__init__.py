"""Batch suites and JSON-lines reports."""

__all__ = ["storage", "generator"]
