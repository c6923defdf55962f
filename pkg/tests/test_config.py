import json

import pytest
from hypothesis import given, strategies as st

from hexaspec.config import (RunConfig, config_from_dict, config_to_dict, dump_config,
                             load_config)
from hexaspec.errors import ConfigError


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_empty_gives_defaults(tmp_path):
    cfg = load_config(write(tmp_path, "c.json", "{}"))
    assert cfg == RunConfig()
    assert cfg.lambda_.min == -50 and cfg.lambda_.max == 1000 and cfg.lambda_.grid == 2000
    assert cfg.theta.grid == 181 and cfg.output.format == "csv"


def test_toml(tmp_path):
    cfg = load_config(write(tmp_path, "c.toml",
                            "[potential]\ncosine = [1.5, -0.5]\n[lambda]\nmax = 300.0\n"))
    assert cfg.potential.cosine == (1.5, -0.5)
    assert cfg.lambda_.max == 300.0


@pytest.mark.parametrize("data,key", [
    ({"perturbation": {"c1": 1.5}}, "perturbation.c1"),
    ({"perturbation": {"epsilon": 0.6}}, "perturbation.epsilon"),
    ({"lambda": {"min": 10, "max": 5}}, "lambda.max"),
    ({"lambda": {"grid": 1}}, "lambda.grid"),
    ({"theta": {"grid": 2.5}}, "theta.grid"),
    ({"tolerances": {"integrator": 0}}, "tolerances.integrator"),
    ({"output": {"format": "xml"}}, "output.format"),
    ({"lambda": {"mx": 1}}, "lambda.mx"),
    ({"potential": {"cosine": [1, "a"]}}, "potential.cosine[1]"),
    ({"potential": {"cosine": 3}}, "potential.cosine"),
    ({"lambda": {"max": True}}, "lambda.max"),
])
def test_invalid_values_name_the_key(data, key):
    with pytest.raises(ConfigError) as info:
        config_from_dict(data)
    assert info.value.key == key
    assert key in str(info.value)


def test_unknown_section():
    with pytest.raises(ConfigError, match="unknown section"):
        config_from_dict({"bogus": {}})


def test_parse_errors_carry_line(tmp_path):
    with pytest.raises(ConfigError, match="line 2"):
        load_config(write(tmp_path, "c.json", '{\n  "lambda": }'))
    with pytest.raises(ConfigError, match="line"):
        load_config(write(tmp_path, "c.toml", "[lambda]\nmax = = 3\n"))
    with pytest.raises(ConfigError, match="extension"):
        load_config(write(tmp_path, "c.yaml", "{}"))


configs = st.builds(
    lambda cos, lo, width, grid, c1, eps, fmt: config_from_dict({
        "potential": {"cosine": cos},
        "lambda": {"min": lo, "max": lo + width, "grid": grid},
        "perturbation": {"c1": c1, "epsilon": eps},
        "output": {"format": fmt}}),
    st.lists(st.floats(-50, 50, allow_nan=False), max_size=4),
    st.floats(-100, 100, allow_nan=False), st.floats(1e-3, 1e4), st.integers(2, 10 ** 5),
    st.floats(-1, 1), st.floats(-0.5, 0.5), st.sampled_from(["csv", "json"]))


@given(configs)
def test_round_trip(cfg):
    assert config_from_dict(config_to_dict(cfg)) == cfg
    assert config_from_dict(json.loads(dump_config(cfg, "json"))) == cfg
    import tomli
    assert config_from_dict(tomli.loads(dump_config(cfg, "toml"))) == cfg
