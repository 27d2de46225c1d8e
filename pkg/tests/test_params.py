import math
import warnings

import pytest
from hypothesis import given, strategies as st

from spinquench.params import (
    BOHR,
    HBAR,
    H,
    DensityConvention,
    PhysicalParams,
    ZeemanConfig,
    derive_scales,
    kinetic_coefficient,
    printed_healing_length,
    q_microwave,
    q_static,
    spin_interaction,
    thomas_fermi_column_density,
)


def test_q_static_values():
    assert q_static(0.0) == 0.0
    assert q_static(1.0) == 70.0
    assert math.isclose(q_static(0.23), 70 * 0.23**2, rel_tol=1e-15)


@given(st.floats(0, 10, allow_nan=False), st.floats(1.01, 3))
def test_q_static_quadratic(b, s):
    assert q_static(b) >= 0
    assert math.isclose(q_static(s * b), s * s * q_static(b), rel_tol=1e-12, abs_tol=1e-300)


def test_q_static_rejects_negative_field():
    with pytest.raises(ValueError):
        q_static(-0.1)


def test_q_microwave_sign_follows_detuning():
    rabi = 2 * math.pi * 5e3
    assert q_microwave(rabi, 2 * math.pi * 35e3) < 0
    assert q_microwave(rabi, -2 * math.pi * 35e3) > 0
    with pytest.raises(ValueError):
        q_microwave(rabi, 0.0)


def test_q_microwave_formula():
    # -hbar Omega^2 / (4 delta) expressed in Hz
    rabi, det = 2 * math.pi * 3e3, 2 * math.pi * -20e3
    assert math.isclose(q_microwave(rabi, det), -HBAR * rabi**2 / (4 * det) / H, rel_tol=1e-12)


def test_zeeman_config_sums_contributions():
    z = ZeemanConfig(static_field=0.2, rabi_frequency=2 * math.pi * 4e3,
                     microwave_detuning=2 * math.pi * 30e3)
    assert math.isclose(z.q_hz, q_static(0.2) + q_microwave(z.rabi_frequency, z.microwave_detuning))


def test_spin_interaction_rb87():
    c2 = spin_interaction(-1.4 * BOHR)
    assert c2 < 0
    m = PhysicalParams().atomic_mass
    assert math.isclose(c2, 4 * math.pi * HBAR**2 * (-1.4 * BOHR) / (3 * m), rel_tol=1e-14)


def test_default_scales():
    s = derive_scales(PhysicalParams())
    assert math.isclose(s.q0_hz, 15.0, rel_tol=1e-12)
    assert math.isclose(s.tau_max_ms, 1e3 / (2 * math.pi * 15.0), rel_tol=1e-12)
    assert abs(s.tau_max_ms - 10.61) < 0.01
    assert abs(s.spin_healing_length_um - 2.5) < 0.05
    assert math.isclose(s.kinetic_coeff, kinetic_coefficient(), rel_tol=0)


def test_kinetic_coefficient_value():
    # hbar / (4 pi m) in Hz um^2
    m = PhysicalParams().atomic_mass
    assert math.isclose(kinetic_coefficient(), HBAR / (4 * math.pi * m) * 1e12, rel_tol=1e-14)
    assert abs(kinetic_coefficient() - 58.15) < 0.05


def test_density_conventions():
    p = PhysicalParams()
    peak = derive_scales(p, DensityConvention.PEAK_COLUMN).q0_hz
    mean = derive_scales(p, "mean-column").q0_hz
    assert math.isclose(mean / peak, 0.8, rel_tol=1e-12)
    # 4/5 of the peak density reproduces the quoted critical point
    assert abs(mean - 15.0) < 0.2


def test_printed_healing_length_ratio():
    p = PhysicalParams()
    s = derive_scales(p)
    assert math.isclose(s.spin_healing_length / printed_healing_length(p), math.sqrt(3),
                        rel_tol=1e-12)


def test_column_density_estimate():
    p = PhysicalParams()
    n2 = thomas_fermi_column_density(p) * 1e-12
    assert 400 < n2 < 700


def test_degenerate_delta_a_warns():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        p = PhysicalParams(delta_a=0.0)
        s = derive_scales(p, DensityConvention.PEAK_COLUMN)
    assert s.degenerate and s.q0 == 0 and math.isinf(s.spin_healing_length)
    assert len(w) >= 1


@pytest.mark.parametrize("kw", [dict(atomic_mass=-1), dict(peak_density_3d=0),
                                dict(atom_number=0), dict(trap_frequencies=(1.0, 2.0))])
def test_invalid_params(kw):
    with pytest.raises(ValueError):
        PhysicalParams(**kw)


def test_positive_delta_a_warns():
    with pytest.warns(UserWarning):
        PhysicalParams(delta_a=1.0 * BOHR)
