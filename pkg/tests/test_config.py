"""Tests for the config file format and environment overrides."""
import pytest

from l1workbench.spaces.profiles import profile_from_config
from l1workbench.utils.config import Config, dump_config, load_config, parse_config
from l1workbench.utils.errors import ParseError, PreconditionError


def test_defaults():
    config = Config()
    assert config.profile == "micro"
    assert config.depth_cap == 3
    assert config.mini_n == [4, 8, 16, 32, 64, 128]


def test_parse_and_dump():
    config = parse_config("# caps\nprofile = \"mini\"\ndepth_cap = 2  # shallow\nmini_m = [2, 4, 8]\n")
    assert config.profile == "mini"
    assert config.depth_cap == 2
    assert config.mini_m == [2, 4, 8]
    assert parse_config(dump_config(config)) == config


@pytest.mark.parametrize("text", [
    "colour = \"red\"",
    "depth_cap = deep",
    "depth_cap = \"deep\"",
    "mini_m = [2, \"x\"]",
    "profile = 3",
    "profile",
    "[caps]\ndepth_cap = 2",
])
def test_bad_config_text(text):
    with pytest.raises(ParseError):
        parse_config(text)


def test_caps_must_be_positive():
    with pytest.raises(PreconditionError):
        parse_config("enum_cap = 0")


def test_load_config_applies_environment(clean_env, monkeypatch):
    path = clean_env / "workbench.toml"
    path.write_text("profile = \"mini\"\nseed = 7\n")
    assert load_config(path).profile == "mini"

    monkeypatch.setenv("WORKBENCH_PROFILE", "paper")
    monkeypatch.setenv("WORKBENCH_OUTPUT_DIR", str(clean_env / "out"))
    config = load_config(path)
    assert config.profile == "paper"
    assert config.seed == 7
    assert config.output_dir == str(clean_env / "out")
    assert profile_from_config(config).name == "paper"


def test_missing_config_file(clean_env):
    with pytest.raises(PreconditionError):
        load_config(clean_env / "absent.toml")
    assert load_config(None) == Config()
