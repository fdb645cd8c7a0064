"""The S_xi-game: spaces, the referee and strategies."""

__all__ = ["spaces", "engine", "strategies"]
