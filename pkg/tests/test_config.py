import json

import pytest

from hardsphere.exceptions import ConfigError
from hardsphere.experiments import CONFIG_TYPES, config_hash, load_config, parse_config


@pytest.mark.parametrize("sub", sorted(CONFIG_TYPES))
def test_defaults_validate(sub):
    cfg = parse_config(sub, {})
    assert cfg.seed == 0
    assert len(config_hash(cfg)) == 64


def test_seed_override_changes_hash():
    a = parse_config("mig", {"seed": 1})
    b = parse_config("mig", {"seed": 1}, seed_override=2)
    assert b.seed == 2 and config_hash(a) != config_hash(b)


def test_hash_stable_under_key_order():
    a = parse_config("regret", {"sigma": 0.2, "T_list": [100, 200]})
    b = parse_config("regret", {"T_list": [100, 200], "sigma": 0.2})
    assert config_hash(a) == config_hash(b)


@pytest.mark.parametrize("sub,payload,field", [
    ("mig", {"bogus": 1}, "bogus"),
    ("mig", {"d": 1.5}, "d"),
    ("mig", {"noise_var": "x"}, "noise_var"),
    ("mig", {"theta": -1}, "theta"),
    ("regret", {"delta": 1.5}, "delta"),
    ("regret", {"eps": 2.0, "B": 1.0}, "eps"),
    ("certify", {"trials": 10}, "trials"),
    ("certify", {"delta": 0.4}, "delta"),
    ("certify", {"event": "other"}, "event"),
    ("verify", {"seed": -1}, "seed"),
    ("instance", {"class_eps": 0.01}, "B"),
])
def test_invalid_fields_named(sub, payload, field):
    with pytest.raises(ConfigError, match=f"^{field}:"):
        parse_config(sub, payload)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.json", "mig")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(bad, "mig")
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(arr, "mig")
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"T_list": [64, 128]}))
    assert load_config(good, "mig").T_list == (64, 128)


def test_unknown_subcommand():
    with pytest.raises(ConfigError):
        parse_config("train", {})
