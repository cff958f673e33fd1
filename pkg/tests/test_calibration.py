import pytest

from cramer import calibration


def test_frozen_constants_match_live_measurement():
    frozen = calibration.frozen()["constants"]
    live = calibration.measure()
    assert set(frozen) == set(live) == set(calibration.CALIBRATION_POINTS)
    for name, value in live.items():
        assert value == pytest.approx(frozen[name], rel=1e-9), name


def test_constants_positive():
    assert all(v > 0 for v in calibration.frozen()["constants"].values())
