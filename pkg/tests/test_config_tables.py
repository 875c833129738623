import json

import pytest

from nlteleport.channel import OpticalConfig
from nlteleport.config import ConfigError, format_config, load_config, parse_config
from nlteleport.tables import Table

BASE = "n_p = 1.8\nn_a = 1.8\nn_b = 1.8\nn_c = 1.8\n"


def test_minimal_config_uses_defaults():
    s = parse_config(BASE)
    assert s.config == OpticalConfig.default()
    assert s.grid_qmax is None


def test_units_are_applied():
    s = parse_config(BASE + "w_0_um = 80  # mode waist\nl_p_mm = 2\ngrid_n = 64\ngrid_qmax = 2e5\n")
    assert s.config.w_0 == pytest.approx(80e-6)
    assert s.config.L_p == pytest.approx(2e-3)
    assert s.grid().n == 64 and s.grid().q_max == 2e5


@pytest.mark.parametrize(
    "text",
    ["n_p = 1.8\n", BASE + "w_p = 3\n", BASE + "w_p_um 3\n", BASE + "n_p = 1.9\n", BASE + "w_0_um = -4\n", BASE + "grid_n = 48\n"],
)
def test_bad_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_format_round_trip(tmp_path):
    cfg = OpticalConfig.default(w_0=73e-6, n=1.7)
    p = tmp_path / "c.cfg"
    p.write_text(format_config(cfg))
    back = load_config(p).config
    for name in ("w_0", "w_p", "L_p", "n_C", "lambda_B"):
        assert getattr(back, name) == pytest.approx(getattr(cfg, name), rel=1e-11)


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def test_table_csv_and_json_share_payload():
    t = Table(["a", "b", "c"])
    t.add(1, 0.1, "x,y")
    t.add(2, 1e-20, "z")
    lines = t.to_csv().splitlines()
    assert lines == ["a,b,c", '1,0.1,"x,y"', "2,1e-20,z"]
    assert json.loads(t.to_json()) == {"a": [1, 2], "b": [0.1, 1e-20], "c": ["x,y", "z"]}
    with pytest.raises(ValueError):
        t.add(1, 2)
