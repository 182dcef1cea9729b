import math

import pytest
from hypothesis import given, strategies as st

from melsched.wireless import (
    ChannelSpec,
    dbm_to_watt,
    link_rate,
    pathloss_db,
    pathloss_gain,
    snr,
    watt_to_dbm,
)

# Reference values below come from a 40-digit mpmath evaluation of the same formulas.


def test_pathloss_at_one_km_is_intercept():
    assert pathloss_db(1000.0) == 128.0
    assert pathloss_gain(1000.0) == pytest.approx(10 ** -12.8, rel=1e-14)


def test_pathloss_at_500m():
    assert pathloss_db(500.0) == pytest.approx(116.83178716086630, rel=1e-14)
    assert pathloss_gain(500.0) == pytest.approx(2.0740598475330533e-12, rel=1e-12)


def test_pathloss_at_100m():
    assert pathloss_db(100.0) == pytest.approx(90.9, rel=1e-14)


def test_table_channel_snr_and_rate():
    spec = ChannelSpec(bandwidth_hz=5e6, tx_power_dbm=23, noise_psd_dbm_hz=-174, distance_m=500)
    assert snr(spec) == pytest.approx(20.789846347249862, rel=1e-12)
    assert link_rate(spec) == pytest.approx(22227920.590519078, rel=1e-12)
    assert round(snr(spec), 2) == 20.79
    assert link_rate(spec) == pytest.approx(2.22e7, rel=2e-3)


def test_unit_snr_gives_rate_equal_to_bandwidth():
    W = 1e6
    noise = dbm_to_watt(-174) * W
    gain = noise / dbm_to_watt(23)
    spec = ChannelSpec(bandwidth_hz=W, pathloss_gain=gain)
    assert snr(spec) == pytest.approx(1.0, rel=1e-14)
    assert link_rate(spec) == pytest.approx(W, rel=1e-13)


def test_gain_override_takes_precedence():
    spec = ChannelSpec(distance_m=500, pathloss_gain=1e-10)
    assert spec.gain == 1e-10


@pytest.mark.parametrize("kwargs", [
    dict(bandwidth_hz=0), dict(bandwidth_hz=-1), dict(distance_m=0),
    dict(pathloss_gain=0.0), dict(pathloss_gain=1.5), dict(tx_power_dbm=math.nan),
])
def test_invalid_channels_rejected(kwargs):
    with pytest.raises(ValueError):
        ChannelSpec(**kwargs)


def test_nonpositive_distance_rejected():
    with pytest.raises(ValueError):
        pathloss_db(-3.0)


@given(st.floats(-150, 60))
def test_dbm_round_trip(dbm):
    assert watt_to_dbm(dbm_to_watt(dbm)) == pytest.approx(dbm, rel=1e-12, abs=1e-12)


@given(st.floats(1e3, 1e8), st.floats(10, 5000))
def test_rate_grows_with_bandwidth_at_fixed_psd(W, distance):
    narrow = ChannelSpec(bandwidth_hz=W, distance_m=distance)
    wide = ChannelSpec(bandwidth_hz=2 * W, distance_m=distance)
    assert link_rate(wide) > link_rate(narrow)


@given(st.floats(1, 1e5), st.floats(1, 1e5))
def test_gain_decreases_with_distance(a, b):
    near, far = sorted((a, b))
    assert pathloss_gain(near) >= pathloss_gain(far)
