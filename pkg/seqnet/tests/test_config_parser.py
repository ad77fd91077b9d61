import pytest

from seqnet.core.errors import ConfigError, InvalidParameterError, InvalidScheduleError
from seqnet.models.request import RunMode, UtilityName
from seqnet.services.planner import UtilityKind
from seqnet.utils.config_parser import (
    build_utility,
    load_experiment_config,
    parse_discount,
    parse_experiment_config,
    parse_response,
)

EXAMPLE = """\
[experiment]
nodes = 7
horizon = 8
mode = optimal

[utility]
kind = kb2
phi = 0.01

[discount]
schedule = farsighted
"""


# Test experiment files
def test_parse_experiment_config():
    config = parse_experiment_config(EXAMPLE)
    assert config.experiment.nodes == 7
    assert config.experiment.mode is RunMode.OPTIMAL
    assert config.utility.kind is UtilityName.KB2
    assert config.discount.schedule == "farsighted"
    assert config.output.formats == ["dot", "csv", "json"]


def test_parse_lists_and_flags():
    text = """\
[experiment]
nodes = 4
horizon = 3
mode = delegate
agents = 1, 2, 1
restrict_nsg = true

[utility]
kind = walks
coeffs = 1, 0.5
theta = 1;1;2;1

[output]
formats = csv
"""
    config = parse_experiment_config(text)
    assert config.experiment.agents == [1, 2, 1]
    assert config.experiment.restrict_nsg is True
    assert config.utility.coeffs == [1.0, 0.5]
    assert config.utility.theta == [1.0, 1.0, 2.0, 1.0]
    assert config.output.formats == ["csv"]


def test_unknown_key_reports_line():
    text = EXAMPLE.replace("phi = 0.01", "phi = 0.01\nbogus = 3")
    with pytest.raises(ConfigError) as e:
        parse_experiment_config(text)
    assert e.value.line == 9
    assert "bogus" in str(e.value)


def test_invalid_value_reports_line():
    with pytest.raises(ConfigError) as e:
        parse_experiment_config(EXAMPLE.replace("nodes = 7", "nodes = 0"))
    assert e.value.line == 2
    assert str(e.value).startswith("line 2:")


def test_section_level_errors():
    # Horizon beyond capacity points at the section header
    with pytest.raises(ConfigError) as e:
        parse_experiment_config(EXAMPLE.replace("horizon = 8", "horizon = 30"))
    assert e.value.line == 1

    with pytest.raises(ConfigError) as e:
        parse_experiment_config(EXAMPLE + "\n[extras]\nx = 1\n")
    assert e.value.line == 13

    with pytest.raises(ConfigError, match="welfare"):
        parse_experiment_config(EXAMPLE.replace("kind = kb2", "kind = welfare"))
    with pytest.raises(ConfigError, match="agents"):
        parse_experiment_config(EXAMPLE.replace("mode = optimal", "mode = delegate"))


def test_syntax_errors():
    with pytest.raises(ConfigError) as e:
        parse_experiment_config("nodes = 3\n")
    assert e.value.line == 1

    with pytest.raises(ConfigError) as e:
        parse_experiment_config("[experiment]\nnodes = 3\nnodes = 4\nhorizon = 2\n")
    assert e.value.line == 3

    with pytest.raises(ConfigError):
        parse_experiment_config(EXAMPLE.replace("schedule = farsighted", "schedule = hyperbolic"))


def test_load_experiment_config(tmp_path):
    path = tmp_path / "example.ini"
    path.write_text(EXAMPLE, encoding="utf-8")
    assert load_experiment_config(str(path)).experiment.horizon == 8

    with pytest.raises(ConfigError, match="cannot read"):
        load_experiment_config(str(tmp_path / "missing.ini"))


# Test discount schedules
def test_parse_discount(tmp_path):
    assert parse_discount("farsighted", 3).values == (0.0, 0.0, 1.0)
    assert parse_discount("geometric:0.5", 3).values == (1.0, 0.5, 0.25)
    assert parse_discount("myopic", 2).values == pytest.approx((1.0, 1e-4))

    (tmp_path / "weights.txt").write_text("1.0, 0.5\n0.25\n", encoding="utf-8")
    assert parse_discount("file:weights.txt", 3, base_dir=str(tmp_path)).values == (1.0, 0.5, 0.25)

    with pytest.raises(InvalidScheduleError):
        parse_discount("file:weights.txt", 4, base_dir=str(tmp_path))
    with pytest.raises(InvalidScheduleError):
        parse_discount("file:absent.txt", 3, base_dir=str(tmp_path))
    with pytest.raises(InvalidScheduleError):
        parse_discount("geometric:abc", 3)
    with pytest.raises(InvalidScheduleError):
        parse_discount("geometric:2", 3)
    with pytest.raises(InvalidScheduleError):
        parse_discount("hyperbolic", 3)


# Test best responses and utilities
def test_parse_response():
    psi = parse_response("quad:1, 0.1, 0.01")
    assert psi(10.0) == pytest.approx(3.0)
    assert parse_response("linear:1,0.1")(2.0) == pytest.approx(1.2)

    with pytest.raises(InvalidParameterError, match="Unknown"):
        parse_response("cubic:1,2")
    with pytest.raises(InvalidParameterError, match="takes 2"):
        parse_response("linear:1")
    with pytest.raises(InvalidParameterError):
        parse_response("exp:a,b")


def test_build_utility():
    assert build_utility("kb2", phi=0.02).kind is UtilityKind.KB_SQUARED
    assert build_utility("kb", phi=0.02, theta=[1.0, 2.0]).theta == (1.0, 2.0)
    assert build_utility("walks", coeffs=[1.0]).coeffs == (1.0,)
    welfare = build_utility("welfare", psi="linear:1,0.05", transform="square")
    assert welfare.kind is UtilityKind.EQUILIBRIUM_WELFARE
    assert welfare.transform == "square"

    with pytest.raises(InvalidParameterError):
        build_utility("katz")
    with pytest.raises(InvalidParameterError):
        build_utility("kb2", theta=[1.0, 1.0])
    with pytest.raises(InvalidParameterError, match="best response"):
        build_utility("welfare")
