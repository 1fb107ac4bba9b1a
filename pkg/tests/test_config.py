import json

import pytest

from fraccache.config import (
    DEFAULT_DISTANCE_GRID_M,
    DEFAULT_SNR_GRID_DB,
    ConfigError,
    ExperimentConfig,
    config_from_dict,
    parse_config,
)
from fraccache.distance import TabulatedPdf, UniformDisk


def test_defaults_reproduce_operating_point():
    cfg = ExperimentConfig()
    lib, params, mean = cfg.point(25.0)
    assert lib.F == 20 and lib.q_min == 0.2 and lib.q_max == 1.0
    assert lib.M == pytest.approx(5.2)
    assert lib.A == 1.0 and lib.T == 1.0
    assert params.B == 5e6 and params.beta == 3.0
    assert params.psi == pytest.approx(10**2.5)
    assert params.upsilon == pytest.approx(10**0.5)
    assert mean == 40.0
    assert cfg.sweep.values == DEFAULT_SNR_GRID_DB


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("  \n")
    assert parse_config(path) == ExperimentConfig()


def test_full_round_trip(tmp_path):
    data = {
        "library": {"F": 5, "zipf_exponent": 0.8, "M_kb": 325},
        "channel": {"psi_db": 20, "r0_m": 1.75},
        "distance": {"kind": "uniform", "mean_distance_m": 30},
        "sweep": {"axis": "mean_distance_m"},
        "sim": {"n_trials": 1000, "seed": 9},
        "output": {"directory": "out", "formats": ["csv", "json"]},
    }
    path = tmp_path / "c.json"
    path.write_text(json.dumps(data))
    cfg = parse_config(path)
    assert cfg.library.M == pytest.approx(2.6)
    assert cfg.sweep.values == DEFAULT_DISTANCE_GRID_M
    lib, params, mean = cfg.point(50.0)
    assert mean == 50.0 and lib.F == 5
    assert params.r0 == 1.75
    assert cfg.distance.build(mean_distance_m=mean) == UniformDisk(75.0)
    assert cfg.output.formats == ("csv", "json")


def test_numeric_strings_are_coerced():
    cfg = config_from_dict({"library": {"F": "10"}, "sim": {"seed": " 4 "}})
    assert cfg.library.F == 10 and cfg.sim.seed == 4


def test_tabulated_distance_block():
    cfg = config_from_dict({"distance": {"kind": "tabulated", "grid": [0, 10, 50], "density": [0, 1, 1]}})
    assert isinstance(cfg.distance.build(), TabulatedPdf)


@pytest.mark.parametrize(
    "data, field",
    [
        ({"bogus": {}}, "config.bogus"),
        ({"library": {"F": 0}}, "library.F"),
        ({"library": {"F": 2.5}}, "library.F"),
        ({"library": {"F": True}}, "library.F"),
        ({"library": {"q_min": 2.0}}, "library.q_min"),
        ({"library": {"M": 1, "M_kb": 1}}, "library.M_kb"),
        ({"library": {"colour": 1}}, "library.colour"),
        ({"channel": {"bandwidth_mhz": -5}}, "channel.bandwidth_mhz"),
        ({"channel": {"beta": "steep"}}, "channel.beta"),
        ({"distance": {"kind": "lognormal"}}, "distance.kind"),
        ({"distance": {"kind": "tabulated"}}, "distance.grid"),
        ({"distance": {"kind": "tabulated", "grid": [0, 1], "density": [0, 0]}}, "distance.density"),
        ({"sweep": {"axis": "bandwidth"}}, "sweep.axis"),
        ({"sweep": {"axis": "mean_distance_m", "values": [10, -1]}}, "sweep.values[1]"),
        ({"sweep": {"values": []}}, "sweep.values"),
        ({"sim": {"seed": -1}}, "sim.seed"),
        ({"sim": {"seed": 2**64}}, "sim.seed"),
        ({"sim": {"n_trials": 0}}, "sim.n_trials"),
        ({"output": {"formats": ["xml"]}}, "output.formats[0]"),
        ({"output": {"directory": ""}}, "output.directory"),
        ({"library": []}, "library"),
    ],
)
def test_invalid_entries_name_their_field(data, field):
    with pytest.raises(ConfigError) as info:
        config_from_dict(data)
    assert info.value.field == field


def test_malformed_json_reports_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "library": {\n    "F": 20,\n  }\n}\n')
    with pytest.raises(ConfigError) as info:
        parse_config(path)
    assert info.value.line == 4
    assert "line 4" in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "nope.json")


def test_replace_block():
    cfg = ExperimentConfig().replace("sim", seed=5)
    assert cfg.sim.seed == 5 and cfg.sim.n_trials == 100_000
    assert cfg.to_dict()["sim"]["seed"] == 5
