import numpy as np
import pytest

from shoewear.engine.gradcheck import (ADJOINT_TOLERANCE, LAYER_TOLERANCE, adjoint_gap,
                                       max_relative_error, numeric_gradient, run_layer_suite)
from shoewear.model.delta import DeltaMode
from shoewear.model.gradcheck import NETWORK_TOLERANCE, check_network
from shoewear.model.wear_net import NetworkConfig, build


def test_numeric_gradient_of_quadratic():
    """Test central differences on sum(x^2)."""
    x = np.array([1.0, -2.0, 0.5])
    grad = numeric_gradient(lambda: float(np.sum(x ** 2)), x)
    np.testing.assert_allclose(grad, 2 * x, rtol=1e-8)
    np.testing.assert_array_equal(x, [1.0, -2.0, 0.5])


def test_max_relative_error_scale():
    """Test that the error is relative to the largest gradient magnitude."""
    assert max_relative_error(np.array([10.0, 0.0]), np.array([10.0, 1e-3])) == pytest.approx(1e-4)
    assert max_relative_error(np.zeros(3), np.zeros(3)) == 0.0


def test_layer_suite_passes():
    """Test that every layer gradient matches finite differences."""
    report = run_layer_suite(seed=0, adjoint_trials=20)
    assert list(report.columns) == ['check', 'max_rel_error', 'tolerance', 'passed']
    assert report['passed'].all(), report.loc[~report['passed']].to_string()
    layer_rows = report[report['check'] != 'adjoint.conv_tconv']
    assert (layer_rows['max_rel_error'] < LAYER_TOLERANCE).all()


def test_conv_and_tconv_are_adjoint():
    """Test <conv(x), y> == <x, tconv(y)> on random conforming shapes."""
    rng = np.random.default_rng(11)
    assert max(adjoint_gap(rng) for _ in range(100)) < ADJOINT_TOLERANCE


@pytest.mark.parametrize('mode', [DeltaMode.SCALAR, DeltaMode.ONEHOT52])
def test_network_gradients(mode):
    """Test end-to-end back-propagation through the tiny network in both delta modes."""
    errors = check_network(seed=0, per_tensor=6, delta_mode=mode)
    assert set(errors) == set(build(NetworkConfig.tiny(mode), 0).tensors)
    worst = max(errors, key=errors.get)
    assert errors[worst] < NETWORK_TOLERANCE, f"{worst}: {errors[worst]:.3e}"
