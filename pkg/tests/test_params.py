import pytest

from herdbook.params import (
    ConfigError,
    ModelParams,
    RunConfig,
    apply_overrides,
    parse_config_text,
    run_setup_from_config,
)
from herdbook.presets import BTC_CALIBRATED, DENSE_TRADING, config_text


def test_valid_params_roundtrip():
    d = DENSE_TRADING.as_dict()
    assert ModelParams.from_dict(d) == DENSE_TRADING


@pytest.mark.parametrize(
    "field,value",
    [
        ("n_agents", 0),
        ("n_agents", 2.5),
        ("lambda_e", 0.0),
        ("lambda_e", -1e-7),
        ("eps_cf", 0.0),
        ("eps_fc", -1.0),
        ("xi0", 0.0),
        ("xi0", 1.5),
        ("lambda_m", -0.1),
        ("lambda_0", -0.1),
        ("alpha", -0.5),
        ("gamma_k", 0.0),
        ("gamma_theta", -1.0),
        ("p_f", 0.0),
        ("lambda_tc", -1.0),
        ("lambda_tf", float("nan")),
    ],
)
def test_param_bounds_rejected(field, value):
    d = DENSE_TRADING.as_dict()
    d[field] = value
    with pytest.raises(ConfigError):
        ModelParams.from_dict(d)


def test_xi0_upper_bound_is_inclusive():
    d = DENSE_TRADING.as_dict()
    d["xi0"] = 1.0
    assert ModelParams.from_dict(d).xi0 == 1.0


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(horizon_s=-1.0, sample_interval_s=60.0, seed=1)
    with pytest.raises(ConfigError):
        RunConfig(horizon_s=1e5, sample_interval_s=0.0, seed=1)
    with pytest.raises(ConfigError):
        RunConfig(horizon_s=1e5, sample_interval_s=60.0, seed=1, burn_in_s=1e5)
    run = RunConfig(horizon_s=1e5, sample_interval_s=60.0, seed=1)
    assert run.burn_in == pytest.approx(1e4)  # default 10% of horizon
    assert run.n_samples == 1500


def test_parse_config_roundtrip():
    text = config_text(BTC_CALIBRATED, horizon_s=1e6, sample_interval_s=60.0, seed=7)
    cfg = parse_config_text(text)
    params, run, redraw = run_setup_from_config(cfg)
    assert params == BTC_CALIBRATED
    assert run.seed == 7 and run.sample_interval_s == 60.0
    assert redraw is True


def test_parse_config_comments_and_errors():
    cfg = parse_config_text("# comment\n n_agents = 500 # trailing\n\nxi0=0.2\n")
    assert cfg == {"n_agents": 500, "xi0": 0.2}
    with pytest.raises(ConfigError):
        parse_config_text("n_agents 500")
    with pytest.raises(ConfigError):
        parse_config_text("n_agents = five hundred")


def test_missing_key_named():
    text = config_text(DENSE_TRADING, horizon_s=1e6, sample_interval_s=60.0, seed=1)
    cfg = parse_config_text(text)
    del cfg["lambda_m"]
    with pytest.raises(ConfigError, match="lambda_m"):
        run_setup_from_config(cfg)


def test_unknown_key_rejected():
    text = config_text(DENSE_TRADING, horizon_s=1e6, sample_interval_s=60.0, seed=1)
    cfg = parse_config_text(text)
    cfg["lambda_typo"] = 1.0
    with pytest.raises(ConfigError, match="lambda_typo"):
        run_setup_from_config(cfg)


def test_overrides_last_write_wins():
    cfg = {"xi0": 0.2}
    out = apply_overrides(cfg, ["xi0=0.5", "xi0=0.9", "seed=3"])
    assert out["xi0"] == 0.9 and out["seed"] == 3
    with pytest.raises(ConfigError):
        apply_overrides(cfg, ["xi0"])
