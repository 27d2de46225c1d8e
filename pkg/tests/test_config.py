import math

import pytest

from spinquench.config import PRESETS, ConfigError, RunConfig, from_ini_text, load, preset
from spinquench.params import BOHR, DensityConvention


def test_defaults():
    c = RunConfig()
    assert (c.grid.nx, c.grid.nz, c.grid.dx, c.grid.dz) == (64, 512, 0.5, 0.5)
    assert c.evolve.dt == 0.01 and not c.trap
    assert c.protocol.q_final == 2.0 and c.protocol.ramp_duration == 5.0
    assert c.analysis.region_um == (16.0, 124.0) and c.analysis.t_m == 77.0
    assert c.seed.mode == "vacuum"


def test_round_trip():
    c = preset("trapped")
    c2 = from_ini_text(c.to_ini())
    assert c2.to_ini() == c.to_ini()
    assert c2.params == c.params and c2.grid == c.grid and c2.protocol == c.protocol
    assert tuple(c2.evolve.record_times) == tuple(c.evolve.record_times)


@pytest.mark.parametrize("name", PRESETS)
def test_presets(name):
    c = preset(name)
    assert from_ini_text(c.to_ini()).to_ini() == c.to_ini()


def test_unknown_preset():
    with pytest.raises(ConfigError):
        preset("nope")


def test_parse_values(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text("""
[params]
delta_a_bohr = -1.2
density_convention = mean-column
trap_hz_x = 40
[grid]
nx = 32
nz = 128
[seed]
mode = thermal
n_pm = 300
rng_seed = 17
[evolve]
qf_hz = 4
record_ms = 10, 20 30
trap = yes
ramp_shape = field
[analysis]
region_um = 8 60
resolution_um = 0
profile = radial
""")
    c = load(p)
    assert math.isclose(c.params.delta_a, -1.2 * BOHR)
    assert c.convention is DensityConvention.MEAN_COLUMN
    assert math.isclose(c.params.trap_frequencies[0], 2 * math.pi * 40)
    assert (c.grid.nx, c.grid.nz) == (32, 128)
    assert c.seed.mode == "thermal" and c.seed.thermal_population == 300 and c.seed.rng_seed == 17
    assert c.protocol.q_final == 4 and c.protocol.shape == "field"
    assert tuple(c.evolve.record_times) == (10.0, 20.0, 30.0) and c.trap
    assert c.analysis.region_um == (8.0, 60.0) and c.analysis.resolution_um is None
    assert c.analysis.profile == "radial"


def test_errors_name_keys():
    text = """
[grid]
nx = 30
[seed]
mode = laser
[evolve]
dt_ms = abc
bogus = 1
[extra]
a = 1
"""
    with pytest.raises(ConfigError) as e:
        from_ini_text(text)
    msg = " ".join(e.value.errors)
    assert "evolve.dt_ms" in msg and "evolve.bogus" in msg and "extra" in msg


def test_validation_errors_collected():
    with pytest.raises(ConfigError) as e:
        from_ini_text("[grid]\nnx = 30\n[seed]\nmode = laser\n[analysis]\nregion_um = 1\n")
    msg = " ".join(e.value.errors)
    assert "grid" in msg and "seed" in msg and "analysis.region_um" in msg


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load(tmp_path / "none.ini")


def test_syntax_error():
    with pytest.raises(ConfigError):
        from_ini_text("no section header")


def test_with_helpers():
    c = RunConfig()
    d = c.with_qf(6.0).with_seed(9)
    assert d.protocol.q_final == 6.0 and d.seed.rng_seed == 9
    assert c.protocol.q_final == 2.0 and c.seed.rng_seed == 0
