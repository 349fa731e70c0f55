"""
One-hidden-layer sigmoid value approximator with explicit gradients.

    Phi(x) = b + sum_i w_i * sigmoid(b_i + sum_j w_ij * x_j)

All parameters live in one flat float64 vector laid out as
[hidden_weights (row-major), hidden_biases, output_weights, output_bias];
eligibility traces and gradients share that layout.
"""
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..exceptions import TrainingError

logger = logging.getLogger(__name__)

DEFAULT_HIDDEN = 200
DEFAULT_INIT_SCALE = 0.1


@dataclass(frozen=True)
class NetworkConfig:
    input_dim: int
    hidden: int = DEFAULT_HIDDEN
    init_scale: float = DEFAULT_INIT_SCALE
    seed: int = 0

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.hidden < 1:
            raise ValueError(f"hidden must be >= 1, got {self.hidden}")
        if self.init_scale < 0:
            raise ValueError(f"init_scale must be >= 0, got {self.init_scale}")

    @property
    def parameter_count(self) -> int:
        return self.hidden * self.input_dim + 2 * self.hidden + 1


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Logistic function, branching on sign so large |z| never overflows."""
    e = np.exp(-np.abs(z))
    return np.where(z >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))


class ValueNetwork:
    def __init__(self, config: NetworkConfig, parameters: np.ndarray | None = None):
        self.config = config
        if parameters is None:
            parameters = np.zeros(config.parameter_count)
        parameters = np.ascontiguousarray(parameters, dtype=np.float64)
        if parameters.shape != (config.parameter_count,):
            raise ValueError(
                f"Expected {config.parameter_count} parameters for {config}, got {parameters.shape}"
            )
        self.parameters = parameters

    # Views into the flat parameter vector

    @property
    def _split(self) -> tuple[int, int, int]:
        h, n = self.config.hidden, self.config.input_dim
        return h * n, h * n + h, h * n + 2 * h

    @property
    def hidden_weights(self) -> np.ndarray:
        return self.parameters[: self._split[0]].reshape(self.config.hidden, self.config.input_dim)

    @property
    def hidden_biases(self) -> np.ndarray:
        first, second, _ = self._split
        return self.parameters[first:second]

    @property
    def output_weights(self) -> np.ndarray:
        _, second, third = self._split
        return self.parameters[second:third]

    @property
    def output_bias(self) -> float:
        return float(self.parameters[-1])

    def _check_input(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.config.input_dim,):
            raise ValueError(f"Input has shape {x.shape}, network expects ({self.config.input_dim},)")
        return x

    def _hidden(self, x: np.ndarray) -> np.ndarray:
        return sigmoid(self.hidden_weights @ x + self.hidden_biases)

    def forward(self, x) -> float:
        x = self._check_input(x)
        return self.output_bias + float(self.output_weights @ self._hidden(x))

    def gradient(self, x) -> np.ndarray:
        """d Phi / d theta in the flat parameter layout."""
        return self.value_and_gradient(x)[1]

    def value_and_gradient(self, x) -> tuple[float, np.ndarray]:
        x = self._check_input(x)
        sigma = self._hidden(x)
        w = self.output_weights
        local = w * sigma * (1.0 - sigma)
        grad = np.empty_like(self.parameters)
        first, second, third = self._split
        grad[:first] = np.outer(local, x).ravel()
        grad[first:second] = local
        grad[second:third] = sigma
        grad[-1] = 1.0
        return self.output_bias + float(w @ sigma), grad

    def new_trace(self) -> np.ndarray:
        return np.zeros_like(self.parameters)

    def apply_update(self, trace: np.ndarray, delta: float, alpha: float) -> "ValueNetwork":
        """theta <- theta + alpha * delta * e; the only mutator."""
        updated = self.parameters + (alpha * delta) * trace
        if not np.isfinite(updated).all():
            raise TrainingError(f"Non-finite network parameters after update (delta={delta}, alpha={alpha})")
        self.parameters[:] = updated
        return self

    def copy(self) -> "ValueNetwork":
        return ValueNetwork(self.config, self.parameters.copy())

    def __repr__(self) -> str:
        return f"ValueNetwork(input_dim={self.config.input_dim}, hidden={self.config.hidden})"


def init_network(config: NetworkConfig, rng: np.random.Generator | None = None) -> ValueNetwork:
    """
    Parameters i.i.d. uniform in [-init_scale, init_scale].

    Draws from ``rng`` when given (a training run shares one stream), otherwise
    from a generator seeded with ``config.seed``.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    scale = config.init_scale
    return ValueNetwork(config, rng.uniform(-scale, scale, config.parameter_count))


def encode(state: Sequence[float] | np.ndarray, action_idx: int | None, action_count: int) -> np.ndarray:
    """State bits followed by a one-hot action (no action part when ``action_idx`` is None)."""
    state = np.asarray(state, dtype=np.float64)
    if action_idx is None:
        return state.copy()
    if not 0 <= action_idx < action_count:
        raise ValueError(f"Action index {action_idx} out of range [0, {action_count})")
    action = np.zeros(action_count)
    action[action_idx] = 1.0
    return np.concatenate([state, action])
