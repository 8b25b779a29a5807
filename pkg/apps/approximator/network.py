"""
Feedforward network ``y = w2 @ relu(w1 @ x + b1) + b2`` used for policies,
critics and reward networks.

Parameters are immutable values: updates return new records, so a snapshot
can be read from several threads while a run keeps training.
"""
import enum
import logging
from dataclasses import dataclass, fields

import numpy as np

from apps.core.exceptions import ContractViolation, NumericalDivergenceError
from apps.core.validators import validate_learning_rate

logger = logging.getLogger(__name__)

HEADER_DTYPE = np.dtype("<i8")
VALUE_DTYPE = np.dtype("<f8")


class Direction(enum.Enum):
    ASCENT = "ascent"
    DESCENT = "descent"


def _frozen_array(values, ndim):
    array = np.array(values, dtype=np.float64, copy=True)
    if array.ndim != ndim:
        raise ContractViolation(f"expected a {ndim}-d array, got shape {array.shape}")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ParameterSet:
    """Four arrays w1 (hidden x input), b1 (hidden), w2 (output x hidden), b2 (output)."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        for name, ndim in (("w1", 2), ("b1", 1), ("w2", 2), ("b2", 1)):
            object.__setattr__(self, name, _frozen_array(getattr(self, name), ndim))
        hidden, _ = self.w1.shape
        output, hidden_out = self.w2.shape
        if self.b1.shape != (hidden,) or hidden_out != hidden or self.b2.shape != (output,):
            raise ContractViolation(
                f"inconsistent shapes w1={self.w1.shape} b1={self.b1.shape} "
                f"w2={self.w2.shape} b2={self.b2.shape}"
            )

    @property
    def input_size(self):
        return self.w1.shape[1]

    @property
    def hidden_size(self):
        return self.w1.shape[0]

    @property
    def output_size(self):
        return self.w2.shape[0]

    @property
    def shape(self):
        return (self.input_size, self.hidden_size, self.output_size)

    def arrays(self):
        return tuple(getattr(self, f.name) for f in fields(self))

    def map(self, fn, *others):
        """Apply ``fn`` array-wise (together with matching arrays of ``others``)."""
        columns = zip(self.arrays(), *(other.arrays() for other in others))
        return type(self)(*(fn(*column) for column in columns))

    def is_finite(self):
        return all(np.isfinite(array).all() for array in self.arrays())

    def allclose(self, other, rtol=0.0, atol=0.0):
        return all(
            np.allclose(a, b, rtol=rtol, atol=atol) for a, b in zip(self.arrays(), other.arrays())
        )

    def max_abs(self):
        return max(float(np.abs(array).max(initial=0.0)) for array in self.arrays())

    def flat(self):
        return np.concatenate([array.reshape(-1) for array in self.arrays()])


class MlpParams(ParameterSet):
    """Weights and biases of one approximator."""


class Gradients(ParameterSet):
    """Additive gradient record with the same shapes as MlpParams."""

    def __add__(self, other):
        return self.map(np.add, other)

    def __mul__(self, factor):
        return self.map(lambda array: array * factor)

    __rmul__ = __mul__

    @classmethod
    def zeros_like(cls, params):
        return cls(*(np.zeros_like(array) for array in params.arrays()))


def init_params(input_size, hidden_size, output_size, rng):
    """
    Fresh parameters: weights uniform in +-1/sqrt(fan_in), biases zero.

    Args:
        input_size: Width of the input vector
        hidden_size: Number of rectified hidden units
        output_size: Width of the linear output
        rng: numpy Generator owned by the run
    """
    bound1 = 1.0 / np.sqrt(input_size)
    bound2 = 1.0 / np.sqrt(hidden_size)
    return MlpParams(
        w1=rng.uniform(-bound1, bound1, size=(hidden_size, input_size)),
        b1=np.zeros(hidden_size),
        w2=rng.uniform(-bound2, bound2, size=(output_size, hidden_size)),
        b2=np.zeros(output_size),
    )


def zero_params(input_size, hidden_size, output_size):
    return MlpParams(
        w1=np.zeros((hidden_size, input_size)),
        b1=np.zeros(hidden_size),
        w2=np.zeros((output_size, hidden_size)),
        b2=np.zeros(output_size),
    )


def _check_input(params, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.input_size,):
        raise ContractViolation(f"input of shape {x.shape} does not match {params.input_size} inputs")
    return x


def forward(params, x):
    """Network output for a single input vector."""
    x = _check_input(params, x)
    return params.w2 @ np.maximum(params.w1 @ x + params.b1, 0.0) + params.b2


def backward(params, x, cotangent):
    """
    Reverse-mode gradients of <cotangent, forward(params, x)> w.r.t. every parameter.

    Args:
        params: MlpParams
        x: Input vector
        cotangent: Vector with one entry per output

    Returns:
        Gradients
    """
    x = _check_input(params, x)
    cotangent = np.asarray(cotangent, dtype=np.float64)
    if cotangent.shape != (params.output_size,):
        raise ContractViolation(
            f"cotangent of shape {cotangent.shape} does not match {params.output_size} outputs"
        )
    pre_activation = params.w1 @ x + params.b1
    hidden = np.maximum(pre_activation, 0.0)
    d_hidden = (params.w2.T @ cotangent) * (pre_activation > 0.0)
    return Gradients(
        w1=np.outer(d_hidden, x),
        b1=d_hidden,
        w2=np.outer(cotangent, hidden),
        b2=cotangent,
    )


def sgd_step(params, gradients, learning_rate, direction=Direction.ASCENT, label=""):
    """
    One plain SGD step: ``params +/- learning_rate * gradients``.

    Raises:
        NumericalDivergenceError if any resulting entry is not finite
    """
    validate_learning_rate(learning_rate)
    direction = Direction(direction)
    sign = 1.0 if direction is Direction.ASCENT else -1.0
    updated = MlpParams(
        *(p + sign * learning_rate * g for p, g in zip(params.arrays(), gradients.arrays()))
    )
    if not updated.is_finite():
        logger.error(f"Non-finite parameters after {direction.value} step (lr={learning_rate}) {label}")
        raise NumericalDivergenceError(
            f"parameters became non-finite after an SGD {direction.value} step", label=label
        )
    return updated


# -- serialization -------------------------------------------------------------


def to_bytes(params):
    """Header of 4 shape integers, then row-major float64 w1, b1, w2, b2."""
    header = np.array(
        [params.w1.shape[0], params.w1.shape[1], params.w2.shape[0], params.w2.shape[1]],
        dtype=HEADER_DTYPE,
    )
    return header.tobytes() + params.flat().astype(VALUE_DTYPE).tobytes()


def record_size(data, offset=0):
    """Number of bytes taken by the record starting at ``offset``."""
    hidden, inputs, outputs, _ = np.frombuffer(data, dtype=HEADER_DTYPE, count=4, offset=offset)
    n_values = hidden * inputs + hidden + outputs * hidden + outputs
    return 4 * HEADER_DTYPE.itemsize + int(n_values) * VALUE_DTYPE.itemsize


def from_bytes(data, offset=0):
    """Inverse of ``to_bytes`` for the record starting at ``offset``."""
    hidden, inputs, outputs, hidden_out = (
        int(v) for v in np.frombuffer(data, dtype=HEADER_DTYPE, count=4, offset=offset)
    )
    if hidden_out != hidden:
        raise ContractViolation(f"corrupt parameter header: w1 rows {hidden} != w2 columns {hidden_out}")
    sizes = (hidden * inputs, hidden, outputs * hidden, outputs)
    values = np.frombuffer(
        data, dtype=VALUE_DTYPE, count=sum(sizes), offset=offset + 4 * HEADER_DTYPE.itemsize
    )
    cuts = np.cumsum(sizes)[:-1]
    w1, b1, w2, b2 = np.split(values, cuts)
    return MlpParams(
        w1=w1.reshape(hidden, inputs), b1=b1, w2=w2.reshape(outputs, hidden), b2=b2
    )
