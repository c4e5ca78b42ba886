import math

import pytest

from cbjjsim.config import ConfigError, format_number, parse_config, serialize_config
from cbjjsim.drive import ContinuousWave, PhotonPulse

MINIMAL = """
[junction]
I0_uA = 8.586
R_ohm = 29
C_fF = 2700

[operating]
i_b = 0.789
T_mK = 50
"""


def test_minimal_config_defaults():
    doc = parse_config(MINIMAL)
    sim = doc.sim_config()
    assert sim.dt == 1e-4
    assert sim.phi_star == math.pi
    assert sim.initial_phase_range == (-0.1, 0.1)
    assert doc.noise["calibration_factor"] == 1.0
    assert doc.drive_signal() is None
    assert doc.seed == 42
    params = doc.junction_params()
    assert params.I0 == pytest.approx(8.586e-6)
    assert params.C == pytest.approx(2700e-15)


def test_bias_out_of_range_names_key():
    bad = MINIMAL.replace("i_b = 0.789", "i_b = 1.5")
    with pytest.raises(ConfigError) as err:
        parse_config(bad)
    assert "operating.i_b" in str(err.value)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config(MINIMAL + "\n[junction]\nL_pH = 3\n")
    assert "junction" in str(err.value) and "L_pH" in str(err.value).replace("l_ph", "L_pH")


def test_unknown_section_rejected():
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "\n[amplifier]\ngain = 3\n")


def test_missing_required_key():
    with pytest.raises(ConfigError) as err:
        parse_config("[junction]\nI0_uA = 1\nR_ohm = 2\n\n[operating]\ni_b = 0.5\nT_mK = 10\n")
    assert "C_fF" in str(err.value)


def test_cw_drive_section():
    text = MINIMAL + "\n[drive]\nkind = cw\ni_mw_over_i0 = 0.001\nf_signal_GHz = 12.25\n"
    doc = parse_config(text)
    sig = doc.drive_signal()
    assert isinstance(sig, ContinuousWave)
    assert sig.i_mw == 0.001
    assert sig.omega_s_norm == pytest.approx(2 * math.pi * 12.25e9 / 9.83e10, rel=1e-2)


def test_cw_auto_frequency_is_biased_plasma():
    text = MINIMAL + "\n[drive]\nkind = cw\ni_mw_over_i0 = 0.001\nf_signal_GHz = auto\n"
    sig = parse_config(text).drive_signal()
    assert sig.omega_s_norm == pytest.approx((1 - 0.789**2) ** 0.25, rel=1e-12)


def test_pulse_drive_section():
    text = MINIMAL + (
        "\n[drive]\nkind = pulse\nphotons = 30\nf_photon_GHz = 12.25\n"
        "t_ph_ns = 0.005\nt_d_ns = 0.125\n"
    )
    sig = parse_config(text).drive_signal()
    assert isinstance(sig, PhotonPulse)
    assert sig.N == 30
    assert sig.amp_norm == pytest.approx(0.0276 * math.sqrt(30), rel=2e-2)


def test_drive_key_cross_validation():
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "\n[drive]\nkind = cw\nphotons = 3\ni_mw_over_i0 = 0.1\nf_signal_GHz = 1\n")
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "\n[drive]\nkind = pulse\nphotons = 3\n")
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "\n[drive]\nkind = maser\n")


def test_round_trip_identity():
    text = MINIMAL + (
        "\n[simulation]\ndt = 0.0001\ntau_max = 12345.678\n\n[noise]\ncalibration_factor = 152.5\n"
        "\n[drive]\nkind = cw\ni_mw_over_i0 = 0.001\nf_signal_GHz = auto\n"
    )
    doc = parse_config(text)
    again = parse_config(serialize_config(doc))
    assert again == doc
    assert parse_config(serialize_config(again)) == again


def test_format_number_round_trips():
    for x in (0.1, 1 / 3, math.pi, 1e-300, 6.62607e-34, 2e5, 152.49999999999997):
        assert float(format_number(x)) == x
    assert format_number(7) == "7"
    assert format_number(True) == "true"


def test_bad_numeric_value_cites_key():
    with pytest.raises(ConfigError) as err:
        parse_config(MINIMAL.replace("T_mK = 50", "T_mK = fifty"))
    assert "operating.t_mk" in str(err.value).lower()
