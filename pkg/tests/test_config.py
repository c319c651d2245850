import numpy as np
import pytest
from hypothesis import given, strategies as st

from lrpath.config import (ConfigError, McBlock, RunConfig, load_config, override, parse_config,
                           serialize_config)

SAMPLE = """
# Cauchy reproduction
[problem]
name = cauchy
T = 1
sigma = 0.5

[grid]
n = 32, 64, 128, 256
N_x = 4000

[solver]
eps_c = 1e-10   # cross accuracy
dense_switch_k = 20

[mc]
K = 1000000
seed = 5
x0 = 0

[output]
timings = false
"""


def test_parse_sample():
    cfg = parse_config(SAMPLE)
    assert cfg.problem == "cauchy" and cfg.T == 1.0 and cfg.sigma == 0.5
    assert cfg.n == (32, 64, 128, 256) and cfg.N_x == 4000
    assert cfg.eps_c == 1e-10 and cfg.mc == McBlock(K=1_000_000, seed=5, x0=0.0)
    assert cfg.timings is False


def test_round_trip():
    cfg = parse_config(SAMPLE)
    text = serialize_config(cfg)
    assert parse_config(text) == cfg
    assert serialize_config(parse_config(text)) == text


def test_defaults_round_trip():
    assert parse_config(serialize_config(RunConfig())) == RunConfig()


@given(st.sampled_from(["harmonic", "cauchy", "impurity"]),
       st.lists(st.integers(1, 2**12), min_size=1, max_size=5).map(tuple),
       st.floats(1e-14, 0.5), st.floats(0.01, 10), st.integers(0, 40), st.booleans())
def test_round_trip_property(problem, n, eps_c, a_x, dsk, timings):
    cfg = RunConfig(problem=problem, n=n, eps_c=eps_c, a_x=a_x, dense_switch_k=dsk,
                    timings=timings)
    assert parse_config(serialize_config(cfg)) == cfg


def test_custom_problem_round_trip_and_build():
    text = "[problem]\nname = custom\nV = x^2/(t+1)\nf = exp(-x^2)/sqrt(pi)\nsigma = 0.25\nT = 2\n"
    cfg = parse_config(text)
    assert parse_config(serialize_config(cfg)) == cfg
    p = cfg.build_problem()
    assert p.V(2.0, 1.0) == pytest.approx(2.0)
    assert p.f(np.zeros(3)).shape == (3,)


def test_problem_parameters():
    cfg = parse_config("[problem]\nname = harmonic\nbeta = 2.5\n")
    assert cfg.params == {"beta": 2.5}
    assert cfg.build_problem().params["beta"] == 2.5
    assert parse_config(serialize_config(cfg)) == cfg


@pytest.mark.parametrize("text,line,key", [
    ("[grid]\nn = 32, x\n", 2, "n"),
    ("[grid]\nN_x = 4.5\n", 2, "N_x"),
    ("[grid]\nbogus = 1\n", 2, "bogus"),
    ("[nowhere]\n", 1, None),
    ("n = 4\n", 1, "n"),
    ("[grid]\njust text\n", 2, None),
    ("[grid]\nn = 4\nn = 8\n", 3, "n"),
    ("[output]\ntimings = maybe\n", 2, "timings"),
    ("[grid\n", 1, None),
])
def test_diagnostics(text, line, key):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.line == line and err.value.key == key
    assert f"line {line}" in str(err.value)


@pytest.mark.parametrize("text,key", [
    ("[solver]\neps_c = -1\n", "eps_c"),
    ("[grid]\nn = 0\n", "n"),
    ("[problem]\nname = custom\nsigma = 1\nT = 1\n", "problem"),
    ("[problem]\nname = nope\n", "name"),
    ("[mc]\nseed = 3\n", "K"),
    ("[grid]\ntime_rule = simpson\n", "time_rule"),
])
def test_semantic_errors_name_the_field(text, key):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.key == key


def test_bad_expression_is_config_error():
    cfg = parse_config("[problem]\nname = custom\nV = x^\nf = 1\nsigma = 1\nT = 1\n")
    with pytest.raises(ConfigError):
        cfg.build_problem()


def test_unknown_problem_parameter():
    with pytest.raises(ConfigError):
        parse_config("[problem]\nname = cauchy\nbeta = 2\n").build_problem()


def test_doubling_check():
    parse_config("[grid]\nn = 8, 16, 32\n").require_doubling()
    with pytest.raises(ConfigError):
        parse_config("[grid]\nn = 8, 12\n").require_doubling()


def test_override_flags_win():
    cfg = override(parse_config(SAMPLE), n=(8, 16), K=10, mc_seed=1, eps_c=None)
    assert cfg.n == (8, 16) and cfg.mc.K == 10 and cfg.mc.seed == 1 and cfg.eps_c == 1e-10
    assert override(RunConfig(), K=7).mc == McBlock(K=7)
    with pytest.raises(ConfigError):
        override(RunConfig(), r0=0)


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "absent.cfg"))
