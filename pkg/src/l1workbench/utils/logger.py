"""Logging setup for command-line entry points."""
import logging
from typing import Optional

from rich.logging import RichHandler

_CONFIGURED = False


def setup_logging(level: int = logging.INFO, fmt: Optional[str] = None) -> None:
    """
    Configure the root logger once with a rich console handler.

    Args:
        level: Logging level for the root logger
        fmt: Optional message format (RichHandler renders time and level itself)
    """
    global _CONFIGURED
    if _CONFIGURED:
        logging.getLogger().setLevel(level)
        return

    logging.basicConfig(
        level=level,
        format=fmt or "%(name)s - %(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=True, show_path=False)],
    )
    _CONFIGURED = True
