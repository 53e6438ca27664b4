import pytest

from morreylab.config import KEYS, ConfigError, RunConfig, default_config_text, load_config, parse_config


def test_defaults_documented_and_parse_back():
    text = default_config_text()
    for key in KEYS:
        assert f"{key} = " in text
    assert parse_config(text) == RunConfig()


def test_empty_config_is_default(tmp_path):
    p = tmp_path / "empty.cfg"
    p.write_text("# nothing here\n\n")
    assert load_config(p) == RunConfig()
    assert load_config(None) == RunConfig()


def test_parse_values_and_comments():
    cfg = parse_config("""
        grid.dim = 2      # plane
        grid.N = 32
        bank.alpha = 0.5
        cone.apertures = 2, 4
        corpus.exponents = 0 -0.5
        cone.t_min = auto
        experiments = T1.1 INEQ6
    """)
    assert cfg.dim == 2 and cfg.points == 32 and cfg.alpha == 0.5
    assert cfg.apertures == (2.0, 4.0)
    assert cfg.weight_exponents() == (0.0, -0.5)
    assert cfg.t_min is None
    assert cfg.experiments == ("T1.1", "INEQ6")


@pytest.mark.parametrize("line,key", [
    ("bank.alpha = 1.5", "bank.alpha"),
    ("bank.alpha = 0", "bank.alpha"),
    ("morrey.kappa = 1", "morrey.kappa"),
    ("grid.N = 100", "grid.N"),
    ("grid.dim = 3", "grid.dim"),
    ("gstar.lambda = 1", "gstar.lambda"),
    ("cone.t_min = 0.001", "cone.t_min"),
    ("cone.m = 1", "cone.m"),
    ("bank.size = 0", "bank.size"),
    ("corpus.exponents = -1", "corpus.exponents"),
    ("output.format = xml", "output.format"),
    ("bank.seed = seven", "bank.seed"),
    ("nosuch.key = 1", "nosuch.key"),
])
def test_invalid_values_name_key(line, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(line)
    assert exc.value.key == key
    assert key in str(exc.value)


def test_malformed_line():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("just words")


def test_builders_follow_config():
    cfg = RunConfig(dim=1, points=64, bank_size=5, scales_per_octave=3, lam=7.0)
    g = cfg.grid()
    assert g.points_per_axis == 64
    assert len(cfg.bank(g)) == 5
    cone = cfg.cone(g)
    assert cone.t_min == pytest.approx(4 * g.spacing) and cone.t_max == 0.5
    assert cone.scales_per_octave == 3
    gs = cfg.gstar(g)
    assert gs.lam == 7.0 and gs.covers(g)
    assert cfg.family(g).meta["stride"] == 4
    assert cfg.morrey().kappa == 0.5


def test_with_key_and_as_dict():
    cfg = RunConfig().with_key("grid.N", "128").with_key("bank.size", 4)
    assert cfg.points == 128 and cfg.bank_size == 4
    d = cfg.as_dict()
    assert d["grid.N"] == 128 and set(d) == set(KEYS)
    with pytest.raises(ConfigError):
        cfg.with_key("grid.M", 3)
