import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimo_pcrb.array import (
    ArrayConfig,
    SceneConfig,
    channel,
    rx_deriv_norm_sq,
    steering_rx,
    steering_rx_deriv,
    steering_tx,
    steering_tx_deriv,
)

angles = st.floats(0.0, 2 * np.pi, allow_nan=False)
small = ArrayConfig(2, 2, 0.5)


def test_broadside_is_all_ones(cfg):
    np.testing.assert_allclose(steering_tx(0.0, cfg), np.ones(cfg.n_tx))
    np.testing.assert_allclose(steering_rx(0.0, cfg), np.ones(cfg.n_rx))


def test_endfire_two_elements():
    # exponent -j pi 0.5 (2 - 2i + 1) for i = 1, 2 -> -j pi/2, +j pi/2
    np.testing.assert_allclose(steering_tx(np.pi / 2, small), [-1j, 1j], atol=1e-15)
    np.testing.assert_allclose(steering_rx(np.pi / 2, small), [-1j, 1j], atol=1e-15)


def test_derivative_examples():
    np.testing.assert_allclose(steering_tx_deriv(np.pi / 2, small), 0, atol=1e-15)
    np.testing.assert_allclose(steering_rx_deriv(np.pi / 2, small), 0, atol=1e-15)
    np.testing.assert_allclose(steering_tx_deriv(0.0, small), [-1j * np.pi / 2, 1j * np.pi / 2])


def test_vectorised_shape(cfg):
    theta = np.linspace(0, 1, 7)
    assert steering_tx(theta, cfg).shape == (7, cfg.n_tx)
    np.testing.assert_allclose(steering_tx(theta, cfg)[3], steering_tx(theta[3], cfg))


@settings(max_examples=200)
@given(angles)
def test_unit_modulus_and_orthogonality(theta):
    cfg = ArrayConfig(10, 12, 0.5)
    a, b = steering_tx(theta, cfg), steering_rx(theta, cfg)
    da, db = steering_tx_deriv(theta, cfg), steering_rx_deriv(theta, cfg)
    np.testing.assert_allclose(np.abs(a), 1, atol=1e-12)
    np.testing.assert_allclose(np.abs(b), 1, atol=1e-12)
    assert abs(a.conj() @ da) <= 1e-10 * max(np.linalg.norm(da), 1.0) * np.linalg.norm(a)
    assert abs(b.conj() @ db) <= 1e-10 * max(np.linalg.norm(db), 1.0) * np.linalg.norm(b)


def test_bulk_invariants(cfg):
    theta = np.random.default_rng(0).uniform(0, 2 * np.pi, 1000)
    a, da = steering_tx(theta, cfg), steering_tx_deriv(theta, cfg)
    b, db = steering_rx(theta, cfg), steering_rx_deriv(theta, cfg)
    assert np.max(np.abs(np.abs(a) - 1)) < 1e-12
    assert np.max(np.abs(np.abs(b) - 1)) < 1e-12
    na = np.linalg.norm(a, axis=1) * np.maximum(np.linalg.norm(da, axis=1), 1)
    nb = np.linalg.norm(b, axis=1) * np.maximum(np.linalg.norm(db, axis=1), 1)
    assert np.all(np.abs(np.sum(a.conj() * da, axis=1)) <= 1e-10 * na)
    assert np.all(np.abs(np.sum(b.conj() * db, axis=1)) <= 1e-10 * nb)


@given(angles)
def test_rx_conjugate_symmetry(theta):
    b = steering_rx(theta, ArrayConfig(3, 7, 0.4))
    np.testing.assert_allclose(b, b[::-1].conj(), atol=1e-14)


def test_rx_derivative_norm_closed_form():
    rng = np.random.default_rng(1)
    for theta in rng.uniform(0, 2 * np.pi, 20):
        got = np.linalg.norm(steering_rx_deriv(theta, small)) ** 2
        assert got == pytest.approx(np.pi**2 / 2 * np.cos(theta) ** 2, rel=1e-10, abs=1e-14)
    cfg = ArrayConfig(10, 12, 0.5)
    for theta in rng.uniform(0, 2 * np.pi, 20):
        assert rx_deriv_norm_sq(theta, cfg) == pytest.approx(
            np.linalg.norm(steering_rx_deriv(theta, cfg)) ** 2, rel=1e-10, abs=1e-12
        )


@pytest.mark.parametrize("steer,deriv", [(steering_tx, steering_tx_deriv), (steering_rx, steering_rx_deriv)])
def test_derivative_against_central_difference(cfg, steer, deriv):
    rng = np.random.default_rng(2)
    for theta in rng.uniform(0, 2 * np.pi, 10):
        errs = []
        for h in (1e-3, 1e-4):
            fd = (steer(theta + h, cfg) - steer(theta - h, cfg)) / (2 * h)
            errs.append(np.linalg.norm(fd - deriv(theta, cfg)))
        # second-order decay: a 10x smaller step cuts the error ~100x
        assert errs[1] <= errs[0] / 50 + 1e-9
        assert errs[0] <= 1e-4 * max(np.linalg.norm(deriv(theta, cfg)), 1.0)


def test_channel(cfg):
    g = channel(0.0, SceneConfig(1.0, 1.0), cfg)
    np.testing.assert_allclose(g, np.ones((cfg.n_rx, cfg.n_tx)))
    rng = np.random.default_rng(3)
    for _ in range(20):
        alpha = complex(*rng.standard_normal(2))
        theta = rng.uniform(0, 2 * np.pi)
        g = channel(theta, SceneConfig(alpha, 1.0), cfg)
        s = np.linalg.svd(g, compute_uv=False)
        assert s[1] <= 1e-10 * s[0]
        assert np.linalg.norm(g) ** 2 == pytest.approx(abs(alpha) ** 2 * cfg.n_tx * cfg.n_rx, rel=1e-10)


def test_config_validation():
    with pytest.raises(ValueError):
        ArrayConfig(0, 2, 0.5)
    with pytest.raises(ValueError):
        ArrayConfig(2, 2, 0.0)
    with pytest.raises(ValueError):
        SceneConfig(0.0, 1.0)
    s = SceneConfig.from_path_loss(0.01, 1.0, 1 + 0j, 1e-15)
    assert s.reflection_gain == pytest.approx(0.01)
    with pytest.raises(ValueError):
        SceneConfig(0.5, 1.0, range_m=1.0, ref_power=0.01, rcs=1.0)
