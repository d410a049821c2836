import warnings

import numpy as np
import pytest

from presstrack import kalman as K
from presstrack.geometry import Box


def with_velocity(box, vcx=0.0, vcy=0.0, varea=0.0):
    ks = K.initiate(box)
    ks.mean[4:7] = (vcx, vcy, varea)
    return ks


def test_zero_velocity_keeps_box():
    b = Box(3, 4, 6, 10)
    for steps in (0, 1, 5):
        got = K.cv_predict(K.initiate(b), steps)
        assert got == pytest.approx(b, abs=1e-12)


def test_unit_velocity_three_steps():
    b = Box(3, 4, 6, 10)
    got = K.cv_predict(with_velocity(b, vcx=1.0), 3)
    assert got.center[0] == pytest.approx(b.center[0] + 3, abs=1e-12)
    assert got.center[1] == pytest.approx(b.center[1], abs=1e-12)
    assert (got.w, got.h) == pytest.approx((b.w, b.h), abs=1e-12)


def test_two_observation_fit_extrapolates():
    # (0,0,4,4) then (2,0,4,4): left edge 0 -> 2 -> predicted 6 two frames on
    ks = K.initiate(Box(0, 0, 4, 4))
    ks = K.update(K.predict(ks), Box(2, 0, 4, 4))
    got = K.cv_predict(ks, 2)
    assert got.x == pytest.approx(6.0, abs=0.05)
    assert got.center[0] == pytest.approx(8.0, abs=0.05)
    assert got.y == pytest.approx(0.0, abs=1e-9)


def test_aspect_held_constant():
    b = Box(0, 0, 5, 20)
    got = K.cv_predict(with_velocity(b, varea=10.0), 4)
    assert got.w / got.h == pytest.approx(b.w / b.h, rel=1e-12)
    assert got.w * got.h == pytest.approx(b.w * b.h + 40.0, rel=1e-12)


def test_nonpositive_area_is_clamped_with_warning():
    ks = with_velocity(Box(0, 0, 2, 2), varea=-3.0)
    with pytest.warns(K.AreaClampWarning):
        got = K.cv_predict(ks, 2)
    assert got.w * got.h == pytest.approx(K.MIN_AREA)


def test_negative_steps_rejected():
    with pytest.raises(ValueError):
        K.cv_predict(K.initiate(Box(0, 0, 1, 1)), -1)


def test_covariance_stays_symmetric_psd():
    rng = np.random.default_rng(0)
    ks = K.initiate(Box(10, 10, 8, 20))
    for _ in range(200):
        ks = K.predict(ks)
        b = Box(*(rng.normal([10, 10], 2)), *rng.uniform([5, 10], [20, 60]))
        ks = K.update(ks, b)
        assert np.allclose(ks.covariance, ks.covariance.T)
        assert np.linalg.eigvalsh(ks.covariance).min() > -1e-9
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", K.AreaClampWarning)
            box = K.cv_predict(ks, 0)
        assert box.w > 0 and box.h > 0
