"""Utility helpers."""

__all__ = ["logger", "config", "errors"]
