import numpy as np
import pytest

from apps.approximator import network
from apps.approximator.network import Direction, Gradients, MlpParams
from apps.core.exceptions import ContractViolation, NumericalDivergenceError
from apps.core.utils import make_rng

FD_STEP = 1e-5


def random_params(rng, input_size=4, hidden_size=6, output_size=3):
    return MlpParams(
        w1=rng.normal(size=(hidden_size, input_size)),
        b1=rng.normal(size=hidden_size),
        w2=rng.normal(size=(output_size, hidden_size)),
        b2=rng.normal(size=output_size),
    )


def finite_difference(fn, params):
    """Central differences of a scalar function of the parameters."""
    grads = []
    for index, array in enumerate(params.arrays()):
        grad = np.zeros_like(array)
        for position in np.ndindex(array.shape):
            arrays = [a.copy() for a in params.arrays()]
            arrays[index][position] += FD_STEP
            plus = fn(MlpParams(*arrays))
            arrays[index][position] -= 2 * FD_STEP
            minus = fn(MlpParams(*arrays))
            grad[position] = (plus - minus) / (2 * FD_STEP)
        grads.append(grad)
    return Gradients(*grads)


class TestForward:
    def test_zero_network(self):
        params = network.zero_params(3, 4, 2)
        np.testing.assert_array_equal(network.forward(params, np.ones(3)), np.zeros(2))

    def test_rectifier(self):
        params = MlpParams(w1=[[1.0]], b1=[0.0], w2=[[1.0]], b2=[0.0])
        assert network.forward(params, np.array([2.0]))[0] == 2.0
        assert network.forward(params, np.array([-2.0]))[0] == 0.0

    def test_matches_direct_formula(self):
        rng = make_rng(0)
        params = random_params(rng)
        x = rng.normal(size=4)
        hidden = [max(0.0, sum(params.w1[j, k] * x[k] for k in range(4)) + params.b1[j]) for j in range(6)]
        expected = [sum(params.w2[o, j] * hidden[j] for j in range(6)) + params.b2[o] for o in range(3)]
        np.testing.assert_allclose(network.forward(params, x), expected, rtol=0, atol=1e-12)

    def test_output_layer_scale_covariance(self):
        rng = make_rng(1)
        params = random_params(rng)
        doubled = MlpParams(params.w1, params.b1, 2 * params.w2, 2 * params.b2)
        x = rng.normal(size=4)
        np.testing.assert_array_equal(network.forward(doubled, x), 2 * network.forward(params, x))

    def test_shape_mismatch(self):
        with pytest.raises(ContractViolation):
            network.forward(network.zero_params(3, 4, 2), np.ones(4))

    def test_parameters_are_read_only(self):
        params = network.zero_params(2, 2, 1)
        with pytest.raises(ValueError):
            params.w1[0, 0] = 1.0

    def test_inconsistent_shapes(self):
        with pytest.raises(ContractViolation):
            MlpParams(w1=np.zeros((3, 2)), b1=np.zeros(2), w2=np.zeros((1, 3)), b2=np.zeros(1))


class TestBackward:
    def test_zero_cotangent(self):
        rng = make_rng(2)
        params = random_params(rng)
        grads = network.backward(params, rng.normal(size=4), np.zeros(3))
        assert grads.max_abs() == 0.0

    def test_dead_unit_has_no_incoming_gradient(self):
        params = MlpParams(w1=[[1.0], [-1.0]], b1=[0.0, 0.0], w2=[[1.0, 1.0]], b2=[0.0])
        grads = network.backward(params, np.array([2.0]), np.ones(1))
        assert grads.w1[1, 0] == 0.0
        assert grads.b1[1] == 0.0
        assert grads.w1[0, 0] == 2.0

    def test_matches_finite_differences(self):
        rng = make_rng(3)
        for _ in range(100):
            params = random_params(rng, input_size=3, hidden_size=4, output_size=2)
            x = rng.normal(size=3)
            cotangent = rng.normal(size=2)
            analytic = network.backward(params, x, cotangent)
            numeric = finite_difference(lambda p: cotangent @ network.forward(p, x), params)
            np.testing.assert_allclose(analytic.flat(), numeric.flat(), rtol=1e-4, atol=1e-7)

    def test_cotangent_shape(self):
        params = network.zero_params(2, 2, 2)
        with pytest.raises(ContractViolation):
            network.backward(params, np.ones(2), np.ones(3))


class TestSgdStep:
    def test_zero_gradients(self):
        params = random_params(make_rng(4))
        updated = network.sgd_step(params, Gradients.zeros_like(params), 0.1)
        assert updated.allclose(params)

    def test_ascent_arithmetic(self):
        params = MlpParams(w1=[[1.0]], b1=[0.0], w2=[[0.0]], b2=[0.0])
        grads = Gradients(w1=[[0.5]], b1=[0.0], w2=[[0.0]], b2=[0.0])
        updated = network.sgd_step(params, grads, 0.1, Direction.ASCENT)
        assert updated.w1[0, 0] == pytest.approx(1.05, abs=1e-15)

    def test_descent_then_ascent(self):
        rng = make_rng(5)
        params = random_params(rng)
        grads = Gradients(*(rng.normal(size=a.shape) for a in params.arrays()))
        there = network.sgd_step(params, grads, 0.01, Direction.DESCENT)
        back = network.sgd_step(there, grads, 0.01, Direction.ASCENT)
        assert back.allclose(params, atol=1e-15)

    def test_divergence_is_reported(self):
        params = MlpParams(w1=[[1e308]], b1=[0.0], w2=[[0.0]], b2=[0.0])
        grads = Gradients(w1=[[1e308]], b1=[0.0], w2=[[0.0]], b2=[0.0])
        with pytest.raises(NumericalDivergenceError) as excinfo:
            network.sgd_step(params, grads, 10.0, label="seed 3")
        assert excinfo.value.label == "seed 3"

    def test_learning_rate_must_be_positive(self):
        params = network.zero_params(1, 1, 1)
        with pytest.raises(ValueError):
            network.sgd_step(params, Gradients.zeros_like(params), 0.0)


class TestSerialization:
    def test_layout(self):
        params = MlpParams(w1=[[1.0, 2.0]], b1=[3.0], w2=[[4.0]], b2=[5.0])
        data = network.to_bytes(params)
        np.testing.assert_array_equal(np.frombuffer(data, dtype="<i8", count=4), [1, 2, 1, 1])
        np.testing.assert_array_equal(np.frombuffer(data, dtype="<f8", offset=32), [1, 2, 3, 4, 5])
        assert network.record_size(data) == len(data)

    def test_restores_parameters(self):
        params = random_params(make_rng(6))
        restored = network.from_bytes(network.to_bytes(params))
        assert restored.shape == params.shape
        assert restored.allclose(params)
