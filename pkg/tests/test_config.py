import io

import pytest

from src.config import Config, _float_env, _int_env
from src.errors import ConfigError
from src.formula import parse
from src.interfaces import TextCLI
from src.models import Algorithm, MinimizeConfig, QbfMode
from src.pipeline import MinimizationPipeline


def test_int_env(monkeypatch):
    monkeypatch.setenv("BOOLMIN_TEST_CAP", "12")
    assert _int_env("BOOLMIN_TEST_CAP", 3) == 12
    monkeypatch.setenv("BOOLMIN_TEST_CAP", "")
    assert _int_env("BOOLMIN_TEST_CAP", 3) == 3
    monkeypatch.setenv("BOOLMIN_TEST_CAP", "many")
    with pytest.raises(ConfigError):
        _int_env("BOOLMIN_TEST_CAP", 3)


def test_float_env(monkeypatch):
    monkeypatch.setenv("BOOLMIN_TEST_TIMEOUT", "2.5")
    assert _float_env("BOOLMIN_TEST_TIMEOUT", 60.0) == 2.5
    monkeypatch.setenv("BOOLMIN_TEST_TIMEOUT", "soon")
    with pytest.raises(ConfigError):
        _float_env("BOOLMIN_TEST_TIMEOUT", 60.0)


def test_validate_rejects_missing_solver(monkeypatch, tmp_path):
    monkeypatch.setattr(Config, "SAT_SOLVER", str(tmp_path / "nope"))
    with pytest.raises(ConfigError):
        Config.validate()


def test_validate_rejects_non_positive_caps(monkeypatch):
    monkeypatch.setattr(Config, "SAT_SOLVER", None)
    monkeypatch.setattr(Config, "QBF_SOLVER", None)
    monkeypatch.setattr(Config, "EXPANSION_CAP", 0)
    with pytest.raises(ConfigError):
        Config.validate()


def test_default_backends(monkeypatch):
    monkeypatch.setattr(Config, "SAT_SOLVER", None)
    monkeypatch.setattr(Config, "QBF_SOLVER", "/opt/caqe")
    assert Config.default_sat_backend() == "internal"
    assert Config.default_qbf_backend() == "external:/opt/caqe"
    assert MinimizeConfig().qbf_solver == "external:/opt/caqe"


def test_pipeline_sets_qbf_mode(monkeypatch):
    monkeypatch.setattr(Config, "SAT_SOLVER", None)
    monkeypatch.setattr(Config, "QBF_SOLVER", None)
    pipeline = MinimizationPipeline(MinimizeConfig(qbf_mode=QbfMode.EXACT))
    assert pipeline.config_for(Algorithm.QBF_FAST).qbf_mode is QbfMode.FAST
    assert pipeline.config_for(Algorithm.BRUTE) is pipeline.cfg
    result = pipeline.run(parse("q | q & p"), Algorithm.QBF_FAST)
    assert result.algorithm is Algorithm.QBF_FAST
    assert str(result.output) == "q"


def test_algorithm_names():
    assert Algorithm.parse("qbf") is Algorithm.QBF_FAST
    assert Algorithm.parse("QBF", QbfMode.EXACT) is Algorithm.QBF_EXACT
    assert Algorithm.parse(" sat ") is Algorithm.SAT
    with pytest.raises(ValueError):
        Algorithm.parse("espresso")


def test_text_cli_streams():
    out, err = io.StringIO(), io.StringIO()
    cli = TextCLI(out, err)
    cli.output("p & q")
    cli.diagnostic("# seed=1")
    cli.diagnostic("bad", error=True)
    assert out.getvalue() == "p & q\n"
    # no colour codes when stderr is not a terminal
    assert err.getvalue() == "# seed=1\nbad\n"
