import numpy as np
import pytest
import tomli

from platoon_mrac.config import (PRESETS, ConfigError, config_from_dict, config_to_dict,
                                 load_config, load_preset, parse_config_text, preset_path)

MINIMAL = """
schema = 1
[graph]
edges = [[0, 1]]
[reference]
a1 = -0.25
a2 = -0.5
b1 = 1.0
[[agents]]
a1 = -1.25
a2 = 1.0
b1 = 0.5
"""


def test_bundled_fig2():
    cfg = load_config(preset_path("fig2"))
    assert cfg.n_agents == 6
    assert cfg.controller.gamma == 10.0
    np.testing.assert_array_equal(cfg.Q, np.diag([100.0, 1.0]))
    assert cfg.topology.edges() == [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6)]


@pytest.mark.parametrize("preset", PRESETS)
def test_every_preset_validates(preset):
    assert load_preset(preset).problems() == []


def test_defaults_applied():
    cfg = parse_config_text(MINIMAL)
    assert cfg.integration.dt == 0.001
    assert cfg.integration.t_end == 40.0
    assert cfg.integration.method == "rk4"
    assert cfg.diagnostics.record_stride == 10
    assert cfg.controller.m == 6


def test_negative_q_rejected():
    text = MINIMAL + "[controller]\nQ = [[-1.0, 0.0], [0.0, 1.0]]\n"
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text)
    assert exc.value.kind == "validation-error"
    assert "Q not positive definite" in exc.value.problems


def test_every_violation_listed():
    text = MINIMAL.replace("edges = [[0, 1]]", "edges = [[1, 1]]").replace("a2 = -0.5", "a2 = 0.5")
    text += "[controller]\nQ = [[-1.0, 0.0], [0.0, 1.0]]\nbogus = 3\n[integration]\ndt = 0.0\n"
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text)
    joined = "\n".join(exc.value.problems)
    for needle in ("bogus", "Q not positive definite", "not Hurwitz", "dt must be positive",
                   "graph invalid"):
        assert needle in joined


def test_cycle_reported():
    text = """
schema = 1
[graph]
edges = [[0, 1], [1, 2], [2, 3], [3, 2]]
[reference]
a1 = -0.25
a2 = -0.5
b1 = 1.0
""" + "[[agents]]\na1 = -1.0\na2 = 1.0\nb1 = 1.0\n" * 3
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text)
    assert any("cycle-detected" in p and "[2, 3]" in p for p in exc.value.problems)


def test_parse_error_has_position():
    with pytest.raises(ConfigError) as exc:
        parse_config_text("schema = 1\n[graph\n")
    assert exc.value.kind == "parse-error"
    assert "line 2" in exc.value.problems[0]


def test_schema_version_checked():
    with pytest.raises(ConfigError, match="schema"):
        parse_config_text(MINIMAL.replace("schema = 1", "schema = 2"))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError) as exc:
        load_config(tmp_path / "nope.toml")
    assert exc.value.kind == "parse-error"


def test_general_matrix_form_and_round_trip():
    cfg = load_preset("fig3")
    doc = config_to_dict(cfg)
    again = config_from_dict(doc)
    assert again.controller == cfg.controller
    assert again.integration == cfg.integration
    for a, b in zip(again.plants, cfg.plants):
        np.testing.assert_array_equal(a.A, b.A)
        assert a.uncertainty == b.uncertainty
    assert again.topology.edges() == cfg.topology.edges()


def test_per_agent_mode_list():
    doc = tomli.loads(preset_path("fig2").read_text())
    doc["controller"]["mode"] = ["communicated", "estimated"] * 3
    cfg = config_from_dict(doc)
    assert cfg.controller.modes(6)[1] == "estimated"
    doc["controller"]["mode"] = ["estimated"]
    with pytest.raises(ConfigError, match="mode needs 6 entries"):
        config_from_dict(doc)


def test_unknown_preset():
    with pytest.raises(KeyError):
        load_preset("fig9")
