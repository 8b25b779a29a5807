import numpy as np
import pytest

from apps.core.exceptions import ConfigurationError, DrLabError, NumericalDivergenceError
from apps.core.utils import derive_rng, derive_seed, make_rng
from apps.core.validators import (
    validate_discount,
    validate_learning_rate,
    validate_n_agents,
    validate_probability,
    validate_seeds,
)


class TestValidators:
    def test_learning_rate_must_be_positive(self):
        validate_learning_rate(1e-3)
        for bad in (0.0, -1e-3, float("nan"), float("inf")):
            with pytest.raises(ConfigurationError):
                validate_learning_rate(bad)

    def test_discount_range(self):
        validate_discount(1.0)
        validate_discount(0.95)
        with pytest.raises(ConfigurationError):
            validate_discount(0.0)
        with pytest.raises(ConfigurationError):
            validate_discount(1.5)

    def test_probability_bounds(self):
        validate_probability(0.5)
        validate_probability(0.0, open_interval=False)
        with pytest.raises(ConfigurationError):
            validate_probability(1.0)

    def test_team_size(self):
        validate_n_agents(2)
        with pytest.raises(ConfigurationError):
            validate_n_agents(1)

    def test_seeds_non_empty_and_distinct(self):
        validate_seeds([0, 1, 2])
        with pytest.raises(ConfigurationError):
            validate_seeds([])
        with pytest.raises(ConfigurationError):
            validate_seeds([3, 3])

    def test_configuration_error_is_a_value_error(self):
        assert issubclass(ConfigurationError, ValueError)
        assert issubclass(ConfigurationError, DrLabError)


def test_divergence_error_carries_label():
    error = NumericalDivergenceError("boom", label="coma/seed3")
    assert error.label == "coma/seed3"
    assert str(error) == "[coma/seed3] boom"


class TestSeeding:
    def test_make_rng_accepts_negative_seeds(self):
        assert make_rng(-1).integers(1 << 30) == make_rng(-1).integers(1 << 30)

    def test_derived_seeds_are_reproducible_and_distinct(self):
        assert derive_seed(7, 0) == derive_seed(7, 0)
        assert len({derive_seed(7, i) for i in range(100)}) == 100
        assert derive_seed(7, 0) != derive_seed(8, 0)

    def test_derived_streams_are_reproducible(self):
        a = derive_rng(1, 2).random(5)
        b = derive_rng(1, 2).random(5)
        np.testing.assert_array_equal(a, b)
