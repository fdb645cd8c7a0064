"""Configuration helpers.

The config file is TOML with top-level keys only (lists are arrays of
integers). Environment variables (optionally read from a `.env` file) override
the profile name and output directory.
"""
import json
import logging
import os

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from l1workbench.utils.errors import ParseError, PreconditionError

logger = logging.getLogger(__name__)

load_dotenv()

PROFILE_ENV = "WORKBENCH_PROFILE"
OUTPUT_ENV = "WORKBENCH_OUTPUT_DIR"


@dataclass
class Config:
    """Runtime settings for the CLI and the batch suites."""

    profile: str = "micro"
    registry_sigma1: str = "registry/sigma1.tsv"
    registry_sigma: str = "registry/sigma.tsv"
    enum_cap: int = 20000
    depth_cap: int = 3
    family_cap: int = 30
    time_budget: int = 60
    output_dir: str = "reports"
    seed: int = 12345
    mini_m: List[int] = field(default_factory=lambda: [2, 4, 8, 16, 32, 64])
    mini_n: List[int] = field(default_factory=lambda: [4, 8, 16, 32, 64, 128])

    def validate(self) -> "Config":
        for name in ("enum_cap", "depth_cap", "family_cap", "time_budget"):
            if getattr(self, name) <= 0:
                raise PreconditionError(f"Config cap '{name}' must be positive, got {getattr(self, name)}")
        return self


def _check(name: str, value, default):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ParseError(f"Config key '{name}' must be true or false, got {value!r}")
    elif isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ParseError(f"Config key '{name}' must be an integer, got {value!r}")
    elif isinstance(default, list):
        if not isinstance(value, list) or any(isinstance(v, bool) or not isinstance(v, int) for v in value):
            raise ParseError(f"Config key '{name}' must be an array of integers, got {value!r}")
    elif not isinstance(value, str):
        raise ParseError(f"Config key '{name}' must be a string, got {value!r}")
    return value


def parse_config(text: str) -> Config:
    """
    Parse TOML config text into a Config.

    Args:
        text: Contents of a config file

    Returns:
        Validated Config

    Raises:
        ParseError: invalid TOML, an unknown key or a value of the wrong type
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ParseError(f"Invalid config file: {e}")
    config = Config()
    known = {f.name: getattr(config, f.name) for f in fields(Config)}
    for key, value in data.items():
        if key not in known:
            raise ParseError(f"Unknown config key '{key}'")
        setattr(config, key, _check(key, value, known[key]))
    return config.validate()


def dump_config(config: Config) -> str:
    """Render a Config as TOML read back by parse_config."""
    lines = []
    for name, value in asdict(config).items():
        if isinstance(value, list):
            value = "[" + ", ".join(str(v) for v in value) + "]"
        elif isinstance(value, str):
            value = json.dumps(value)
        lines.append(f"{name} = {value}")
    return "\n".join(lines) + "\n"


def load_config(path: Optional[Path] = None) -> Config:
    """
    Load configuration from a file and apply environment overrides.

    Args:
        path: Config file path (defaults are used when None)

    Returns:
        Config with WORKBENCH_PROFILE / WORKBENCH_OUTPUT_DIR applied
    """
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise PreconditionError(f"Config file not found: {path}")
        config = parse_config(path.read_text())
        logger.info(f"Config loaded from {path}")
    else:
        config = Config()

    env_profile = os.getenv(PROFILE_ENV)
    if env_profile:
        logger.info(f"Profile overridden by {PROFILE_ENV}: {env_profile}")
        config.profile = env_profile
    env_output = os.getenv(OUTPUT_ENV)
    if env_output:
        config.output_dir = env_output
    return config.validate()
