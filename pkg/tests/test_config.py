import pytest

from bugnav.bugs import Algorithm
from bugnav.config import PRESETS, ConfigError, Experiment, dump_experiment, parse_config, preset
from bugnav.noise import NoiseConfig

GOOD = """
[odo]
envs = 4
algorithms = com1, ALG2
odom_sigma = 0, 0.1  # two levels
p_fn = 0.5
time_limit = 30
"""


def test_parse_good():
    (exp,) = parse_config(GOOD)
    assert exp.name == "odo"
    assert exp.envs == 4
    assert exp.algorithms == (Algorithm.COM1, Algorithm.ALG2)
    assert exp.noise_grid() == [NoiseConfig(0.0, 0.0, 0.5), NoiseConfig(0.1, 0.0, 0.5)]
    assert exp.n_runs == 4 * 2 * 2
    assert exp.time_limit == 30.0


def test_defaults():
    (exp,) = parse_config("[plain]\n")
    assert exp == Experiment("plain")
    assert exp.algorithms == tuple(Algorithm)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_round_trip(name):
    for exp in preset(name):
        assert parse_config(dump_experiment(exp)) == [exp]


def test_fig14_fp_grid():
    fp = next(e for e in preset("fig14_fp_fn") if e.name == "fig14_fp")
    assert fp.p_fp == (0.0, 0.005, 0.01, 0.015, 0.02, 0.025)
    assert fp.fp_mode == "per_episode"


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("", "no [experiment]"),
        ("[a]\nwhatever = 1\n", "[a] whatever: unknown key"),
        ("[a]\nenvs = zero\n", "[a] envs: expected an integer"),
        ("[a]\nenvs = 0\n", "[a] envs: must be >= 1"),
        ("[a]\nodom_sigma = 0, , 1\n", "[a] odom_sigma"),
        ("[a]\np_fp = 2\n", "p_fp must lie in [0, 1]"),
        ("[a]\nalgorithms = bug9\n", "[a] algorithms: unknown algorithm"),
        ("[a]\nfp_mode = hourly\n", "[a] fp_mode"),
        ("[a]\ntime_limit = -3\n", "[a] time_limit"),
        ("[a]\ngoal_radius = nan\n", "[a] goal_radius"),
        ("envs = 3\n", "cannot parse"),
    ],
)
def test_errors_name_the_key(text, fragment):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert fragment in str(exc.value)


def test_unknown_preset():
    with pytest.raises(ConfigError):
        preset("fig99")
