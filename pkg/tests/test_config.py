import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from dicke_battery.config import (
    DEFAULTS,
    SWEEP_DEFAULTS,
    ConfigError,
    parse_config,
    serialize_config,
)

# a valid file value and a different valid flag value for every key
VALUES = {
    "mode": ("sweep", "oracle"),
    "omega0": (1.5, 2.5),
    "omega": (1.5, 2.5),
    "amplitude": (0.3, 0.7),
    "gamma": (0.1, 0.06),
    "nbar": (0.5, 0.0),
    "n_atoms": (3, 4),
    "t_max": (50.0, 60.0),
    "dt": (0.01, 0.005),
    "record_stride": (5, 7),
    "ss_tolerance": (1e-5, 1e-7),
    "positivity_tolerance": (1e-9, 1e-7),
    "output_dir": ("a", "b"),
    "drive_convention": ("spin", "pauli"),
    "hp_truncation": (20, 30),
    "n_min": (2, 3),
    "n_max": (10, 12),
    "gamma_list": ([0.1, 0.2], [0.3]),
    "amplitude_list": ([0.5], [0.6, 0.7]),
    "nbar_list": ([0.0], [1.0]),
    "objective": ("deltaF_per_atom", "deltaF"),
}


def resolved(cfg, key):
    d = cfg.to_dict()
    return d["sweep"][key] if key in SWEEP_DEFAULTS else d[key]


def test_every_key_has_precedence_values():
    assert set(VALUES) == set(DEFAULTS) | set(SWEEP_DEFAULTS)


def test_empty_input_needs_mode():
    with pytest.raises(ConfigError) as info:
        parse_config("")
    assert info.value.key == "mode"
    cfg = parse_config("", {"mode": "simulate"})
    assert cfg.params.gamma == 0.06 and cfg.params.amplitude == 1.0
    assert cfg.params.omega == cfg.params.omega0 == 2.0 and cfg.params.nbar == 0.2


@pytest.mark.parametrize("key", sorted(VALUES))
def test_precedence_per_key(key):
    file_value, flag_value = VALUES[key]
    doc = {"mode": "simulate"}
    if key in SWEEP_DEFAULTS:
        doc["sweep"] = {key: file_value}
    else:
        doc[key] = file_value
    text = yaml.safe_dump(doc)
    default = parse_config(None, {"mode": "simulate"})
    from_file = parse_config(text)
    from_flag = parse_config(text, {key: flag_value})
    if key != "mode":
        assert resolved(default, key) == DEFAULTS.get(key, SWEEP_DEFAULTS.get(key))
        assert from_file.provenance[key if key in DEFAULTS else f"sweep.{key}"] == "file"
    assert resolved(from_file, key) == file_value
    assert resolved(from_flag, key) == flag_value


def test_flag_string_values_are_coerced():
    cfg = parse_config("gamma: 0.1\nmode: simulate\n", {"gamma": "0.06", "gamma_list": "0.1,0.2"})
    assert cfg.params.gamma == 0.06
    assert cfg.sweep.gamma_list == [0.1, 0.2]
    assert cfg.provenance["gamma"] == "flag"


def test_unknown_keys_listed():
    with pytest.raises(ConfigError) as info:
        parse_config("mode: simulate\nfoo: 1\nbar: 2\nsweep:\n  baz: 3\n")
    assert info.value.key == "bar, foo, sweep.baz"


@pytest.mark.parametrize("text,key", [
    ("mode: simulate\ngamma: fast\n", "gamma"),
    ("mode: simulate\nn_atoms: 2.5\n", "n_atoms"),
    ("mode: simulate\nn_atoms: true\n", "n_atoms"),
    ("mode: simulate\noutput_dir: 3\n", "output_dir"),
    ("mode: simulate\nsweep:\n  gamma_list: 0.1\n", "gamma_list"),
    ("mode: teleport\n", "mode"),
    ("mode: simulate\ngamma: -0.1\n", "gamma"),
    ("mode: simulate\ndt: 0.1\n", "dt"),
    ("mode: simulate\ndrive_convention: other\n", "drive_convention"),
    ("mode: sweep\nsweep:\n  n_min: 5\n  n_max: 2\n", "sweep.n_min"),
    ("mode: sweep\nsweep:\n  objective: work\n", "sweep.objective"),
    ("- a\n- b\n", "<document>"),
])
def test_invalid_values_name_key(text, key):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == key


def test_metadata_document_accepted():
    cfg = parse_config(None, {"mode": "simulate", "n_atoms": 3})
    meta = yaml.safe_dump({"version": "x", "columns": ["t"], "config": cfg.to_dict()})
    assert parse_config(meta) == cfg


def test_population_scan_round_trip():
    for n in (1, 10, 28):
        cfg = parse_config(None, {"mode": "simulate", "n_atoms": n, "amplitude": 1.0, "nbar": 0.2})
        assert parse_config(serialize_config(cfg)) == cfg


@given(
    st.sampled_from(["simulate", "sweep", "oracle", "hp-compare", "parallel-compare"]),
    st.floats(0.5, 4), st.floats(0, 3), st.floats(0, 1), st.floats(0, 2), st.integers(1, 40),
    st.floats(1, 500), st.integers(1, 20),
    st.one_of(st.none(), st.lists(st.floats(0, 1), min_size=1, max_size=4)),
)
def test_serialize_parse_round_trip(mode, omega, amp, gamma, nbar, n, t_max, stride, glist):
    flags = {"mode": mode, "omega": omega, "omega0": omega, "amplitude": amp, "gamma": gamma,
             "nbar": nbar, "n_atoms": n, "t_max": t_max, "record_stride": stride,
             "gamma_list": glist}
    cfg = parse_config(None, flags)
    assert parse_config(serialize_config(cfg)) == cfg


def test_provenance_log(caplog):
    with caplog.at_level("INFO", logger="dicke_battery.config"):
        parse_config("mode: simulate\ngamma: 0.1\n", {"n_atoms": 2})
    text = caplog.text
    assert "gamma = 0.1 (file)" in text
    assert "n_atoms = 2 (flag)" in text
    assert "nbar = 0.2 (default)" in text
    assert "sweep.objective = 'deltaF' (default)" in text
