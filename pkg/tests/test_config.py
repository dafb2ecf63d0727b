import math

import numpy as np
import pytest

from slowlight.config import (
    CONFIG_KEYS,
    Config,
    ConfigError,
    ControlSchedule,
    MediumConfig,
    Region,
    SolitonConfig,
    background_field,
    default_config,
    dump_config,
    format_complex,
    load_config,
    parse_complex,
    region_array,
    region_of,
    validate_config,
)


def test_defaults_match_the_reference_parameter_set(cfg):
    assert cfg.medium.nu0 == 4.5 and cfg.medium.delta == 0.0
    assert cfg.schedule.omega0 == 3.0 and cfg.schedule.alpha == 4.0
    assert cfg.schedule.t1 == 1.0 and cfg.schedule.t_revive == 4.0
    assert cfg.soliton.lam == -4.1j
    assert cfg.warnings == ()


def test_schedule_derives_cut_and_revival_from_alpha():
    s = ControlSchedule(alpha=2.0)
    assert s.t1 == 2.0 and s.t_revive == 5.0
    assert s.boundaries == (0.0, 2.0, 5.0)


@pytest.mark.parametrize(
    "kwargs, message",
    [
        ({"schedule": ControlSchedule(alpha=-1.0)}, "decay constant must be positive"),
        ({"schedule": ControlSchedule(alpha=0.0, t1=1.0)}, "decay constant must be positive"),
        ({"soliton": SolitonConfig(lam=4.1)}, "Im(lambda) must be nonzero"),
        ({"medium": MediumConfig(nu0=0.0)}, "nu0 must be positive"),
        ({"schedule": ControlSchedule(t1=2.0, t_revive=1.0)}, "0 < t1 <= t_revive"),
        ({"schedule": ControlSchedule(omega0=-3.0)}, "omega0 must be positive"),
        ({"medium": MediumConfig(nu0=float("nan"))}, "non-finite"),
    ],
)
def test_validation_rejects(kwargs, message):
    with pytest.raises(ConfigError, match=message.replace("(", r"\(").replace(")", r"\)")):
        validate_config(**kwargs)


def test_integer_bessel_index_is_rejected():
    # gamma = (alpha + i lambda) / (2 alpha) = 1 for lambda = -i alpha
    with pytest.raises(ConfigError, match="degenerate parameters"):
        validate_config(soliton=SolitonConfig(lam=-4.0j))


def test_coupling_mismatch_is_only_a_warning():
    c = validate_config(medium=MediumConfig(nu0=1.0))
    assert len(c.warnings) == 1 and "nu0" in c.warnings[0]


def test_with_params_revalidates(cfg):
    c = cfg.with_params(omega0=0.5, nu0=0.125, lam=-3j)
    assert c.schedule.omega0 == 0.5 and c.medium.nu0 == 0.125 and c.soliton.lam == -3j
    assert c.warnings == ()
    with pytest.raises(ConfigError):
        cfg.with_params(alpha=-2.0)
    with pytest.raises(ConfigError, match="unknown parameter"):
        cfg.with_params(speed=1.0)


def test_configs_hash_by_value(cfg):
    assert hash(cfg) == hash(default_config())
    assert cfg.with_params(phi0=1.0) != cfg


@pytest.mark.parametrize(
    "tau, region",
    [(-1.0, Region.D0), (0.0, Region.D0), (0.5, Region.D1), (1.0, Region.D1), (2.0, Region.D2), (4.0, Region.D2), (4.0001, Region.D3)],
)
def test_boundaries_belong_to_the_earlier_region(cfg, tau, region):
    assert region_of(tau, cfg.schedule) is region
    assert region_array([tau], cfg.schedule)[0] == region


def test_background_profile(cfg):
    sch = cfg.schedule
    assert background_field(-2.0, sch) == 3.0
    assert background_field(0.5, sch) == pytest.approx(3 * math.exp(-2))
    assert background_field(1.0, sch) == pytest.approx(3 * math.exp(-4))
    assert background_field(2.5, sch) == 0.0
    assert background_field(4.0, sch) == 0.0
    assert background_field(4.5, sch) == 3.0
    arr = background_field(np.array([-1.0, 0.0, 4.5]), sch)
    np.testing.assert_array_equal(arr, [3.0, 3.0, 3.0])


@pytest.mark.parametrize(
    "text, value",
    [("-4.1i", -4.1j), ("0.5-4.1i", 0.5 - 4.1j), ("i", 1j), ("-i", -1j), ("2", 2 + 0j), ("1e-3+2j", 0.001 + 2j), (" 3 - 1 i ", 3 - 1j)],
)
def test_parse_complex(text, value):
    assert parse_complex(text) == value


@pytest.mark.parametrize("bad", ["", "abc", "1+", "i2"])
def test_parse_complex_rejects(bad):
    with pytest.raises(ValueError):
        parse_complex(bad)


def test_format_complex_round_trips():
    for z in (-4.1j, 0.1 + 0.2j, -1e-300 - 3.3j, 2.0 + 0j):
        assert parse_complex(format_complex(z)) == z


def test_empty_file_gives_defaults_and_lists_every_key(tmp_path, cfg):
    p = tmp_path / "empty.cfg"
    p.write_text("# nothing here\n\n")
    c, defaulted = load_config(p)
    assert c == cfg
    assert defaulted == list(CONFIG_KEYS)


def test_load_config_values_and_comments(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("omega0 = 0.5   # weak control\nnu0=0.125\nlambda = 0.2-3i\n")
    c, defaulted = load_config(p)
    assert c.schedule.omega0 == 0.5 and c.medium.nu0 == 0.125 and c.soliton.lam == 0.2 - 3j
    assert "omega0" not in defaulted and "alpha" in defaulted


@pytest.mark.parametrize("text, message", [("speed = 3\n", "unknown key"), ("omega0 3\n", "key=value"), ("alpha = x\n", "could not convert")])
def test_load_config_errors(tmp_path, text, message):
    p = tmp_path / "bad.cfg"
    p.write_text(text)
    with pytest.raises(ConfigError, match=f"bad.cfg:1: .*{message}"):
        load_config(p)


def test_dump_and_reload_is_identity(tmp_path, cfg):
    c = cfg.with_params(phi0=-1.3920573707362294, delta=0.7, lam=0.5 - 4.1j)
    p = tmp_path / "round.cfg"
    p.write_text(dump_config(c))
    again, defaulted = load_config(p)
    assert again == c and defaulted == []


def test_config_is_immutable(cfg):
    with pytest.raises(AttributeError):
        cfg.medium = MediumConfig()
    assert isinstance(cfg, Config)
