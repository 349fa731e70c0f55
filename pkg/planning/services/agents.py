"""
Reinforcement-learning agents that learn which lambda to use at each step.

The environment is the view-planning MDP: a state is the set of chosen views,
an action is a lambda from the admissible set, the transition adds the view
``nbv`` picks for that lambda and every transition is rewarded with -1 (no
discounting). SARSA and Watkins-Q learn action values q(s, lambda) over the
state bits concatenated with a one-hot action; TD learns state values v(s)
and acts by comparing the successors reachable with each lambda.
"""
import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable

import numpy as np

from ..exceptions import CoverageError, TrainingError
from .planner import CoverageState, Plan, coverage_fraction, is_terminal, nbv
from .value_net import NetworkConfig, ValueNetwork, encode, init_network
from .visibility import CoverageTable

logger = logging.getLogger(__name__)

REWARD = -1.0
# entries per memo cache; one entry per visited chosen-view set
STATE_CACHE_SIZE = 65_536


class Algorithm(str, Enum):
    SARSA = "sarsa"
    WATKINS_Q = "watkins_q"
    TD = "td"

    @classmethod
    def parse(cls, value: "str | Algorithm") -> "Algorithm":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).replace("-", "_").lower())
        except ValueError:
            raise ValueError(f"Unknown algorithm {value!r}; expected one of sarsa, watkins-q, td") from None

    @property
    def uses_actions(self) -> bool:
        return self is not Algorithm.TD


@dataclass(frozen=True)
class TrainConfig:
    algorithm: Algorithm
    lambda_set: tuple[float, ...] = (0.0, 1.0)
    alpha: float = 0.01
    mu_e: float = 0.5
    max_episodes: int = 100_000
    rcc: float = 0.99
    epsilon: float = 0.1
    epsilon_episodes: int = 50_000
    gamma: float = 1.0
    hidden: int = 200
    init_scale: float = 0.1
    seed: int = 0
    log_every: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm.parse(self.algorithm))
        object.__setattr__(self, "lambda_set", tuple(float(lam) for lam in self.lambda_set))
        if not self.lambda_set:
            raise ValueError("The lambda set must not be empty")
        if any(lam < 0 for lam in self.lambda_set):
            raise ValueError(f"Lambda values must be non-negative, got {self.lambda_set}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0.0 <= self.mu_e <= 1.0:
            raise ValueError(f"mu_e must lie in [0, 1], got {self.mu_e}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not 0.0 <= self.rcc <= 1.0:
            raise ValueError(f"rcc must lie in [0, 1], got {self.rcc}")
        if self.gamma != 1.0:
            raise ValueError("gamma is fixed at 1 (undiscounted episodic task)")
        if self.max_episodes < 0 or self.epsilon_episodes < 0:
            raise ValueError("Episode counts must be non-negative")

    def network_config(self, view_count: int) -> NetworkConfig:
        input_dim = view_count + len(self.lambda_set) if self.algorithm.uses_actions else view_count
        return NetworkConfig(input_dim=input_dim, hidden=self.hidden, init_scale=self.init_scale, seed=self.seed)


@dataclass(frozen=True)
class EpisodeRecord:
    length: int
    episode_return: float


@dataclass(frozen=True)
class StepRecord:
    """What an instrumented run sees after every action selection."""

    episode: int
    step: int
    action: int
    exploratory: bool
    trace: np.ndarray


@dataclass
class TrainedModel:
    network: ValueNetwork
    config: TrainConfig
    table_digest: bytes
    mesh_digest: bytes
    episode_log: list[EpisodeRecord] = field(default_factory=list)

    @property
    def view_count(self) -> int:
        input_dim = self.network.config.input_dim
        return input_dim - len(self.config.lambda_set) if self.config.algorithm.uses_actions else input_dim


class CoverageEnvironment:
    """
    The coverage table seen as an MDP, with ``nbv`` transitions memoized per
    (chosen views, lambda). ``nbv`` is pure, so memoizing never changes a result.

    Every cache is keyed on the chosen-view bitmask and holds at most
    ``cache_size`` entries, least recently used first out.
    """

    def __init__(self, table: CoverageTable, rcc: float, cache_size: int = STATE_CACHE_SIZE):
        if cache_size < 1:
            raise CoverageError(f"cache_size must be positive, got {cache_size}")
        self.table = table
        self.rcc = rcc
        self.cache_size = cache_size
        self._state = lru_cache(maxsize=cache_size)(self._build_state)
        self._transition = lru_cache(maxsize=cache_size)(self._build_transition)
        self._terminal = lru_cache(maxsize=cache_size)(self._build_terminal)
        self._vector = lru_cache(maxsize=cache_size)(self._build_vector)

    def __len__(self) -> int:
        return len(self.table)

    def cache_sizes(self) -> dict[str, int]:
        return {
            "states": self._state.cache_info().currsize,
            "transitions": self._transition.cache_info().currsize,
            "terminal": self._terminal.cache_info().currsize,
            "vectors": self._vector.cache_info().currsize,
        }

    @staticmethod
    def _bits(chosen: int) -> list[int]:
        return [i for i in range(chosen.bit_length()) if chosen >> i & 1]

    def _build_state(self, chosen: int) -> CoverageState:
        return CoverageState.from_views(self.table, self._bits(chosen))

    def _build_transition(self, chosen: int, lam: float) -> int | None:
        return nbv(self._state(chosen), self.table, lam)

    def _build_terminal(self, chosen: int) -> bool:
        return is_terminal(self._state(chosen), self.table, self.rcc)

    def _build_vector(self, chosen: int) -> np.ndarray:
        vector = np.zeros(len(self.table), dtype=np.float64)
        vector[self._bits(chosen)] = 1.0
        vector.flags.writeable = False
        return vector

    def state(self, chosen: int) -> CoverageState:
        return self._state(chosen)

    def start(self, view: int) -> CoverageState:
        return self._state(1 << view)

    def transition(self, state: CoverageState, lam: float) -> int | None:
        """The view ``nbv`` adds for ``lam``, or None when no view adds coverage."""
        return self._transition(state.chosen, lam)

    def successor(self, state: CoverageState, view: int) -> CoverageState:
        return self._state(state.chosen | 1 << int(view))

    def is_terminal(self, state: CoverageState) -> bool:
        return self._terminal(state.chosen)

    def vector(self, chosen: int) -> np.ndarray:
        """The read-only 0/1 state vector of a chosen-view bitmask."""
        return self._vector(chosen)


class Agent(ABC):
    """Shared machinery: the network, the seeded stream, input encoding and the episode loop."""

    def __init__(self, table: CoverageTable, config: TrainConfig, network: ValueNetwork | None = None,
                 on_step: Callable[[StepRecord], None] | None = None):
        self.table = table
        self.config = config
        self.lambdas = config.lambda_set
        self.env = CoverageEnvironment(table, config.rcc)
        self.rng = np.random.default_rng(config.seed)
        self.network = network if network is not None else init_network(config.network_config(len(table)), self.rng)
        if self.network.config.input_dim != config.network_config(len(table)).input_dim:
            raise CoverageError(
                f"Network expects {self.network.config.input_dim} inputs, "
                f"table has {len(table)} views and {len(self.lambdas)} lambdas"
            )
        self.on_step = on_step
        self._starts = [view for view in range(len(table)) if not table.coverage[view].is_empty]
        self._encoded = lru_cache(maxsize=self.env.cache_size)(self._encode)

    def _encode(self, chosen: int, action: int | None) -> np.ndarray:
        return encode(self.env.vector(chosen), action, len(self.lambdas))

    def _input(self, state: CoverageState, action: int | None = None) -> np.ndarray:
        return self._encoded(state.chosen, action)

    def _update(self, trace: np.ndarray, delta: float) -> None:
        self.network.apply_update(trace, delta, self.config.alpha)

    def _advance(self, env: CoverageEnvironment, state: CoverageState, action: int) -> CoverageState:
        view = env.transition(state, self.lambdas[action])
        if view is None:
            raise TrainingError(f"No view adds coverage from non-terminal state {state.views()}")
        return env.successor(state, view)

    def _notify(self, episode: int, step: int, action: int, exploratory: bool, trace: np.ndarray) -> None:
        if self.on_step is not None:
            self.on_step(StepRecord(episode, step, action, exploratory, trace.copy()))

    @abstractmethod
    def run_episode(self, episode: int, state: CoverageState) -> tuple[int, float]:
        """Play one episode from ``state``; returns (transitions, return)."""

    @abstractmethod
    def state_value(self, state: CoverageState) -> float:
        """Estimated value of a state under the greedy policy."""

    @abstractmethod
    def greedy_action(self, env: CoverageEnvironment, state: CoverageState) -> int | None:
        """Index of the lambda the greedy policy takes in ``state``."""

    def train(self) -> TrainedModel:
        config = self.config
        episode_log: list[EpisodeRecord] = []
        started = time.perf_counter()
        logger.info(
            f"Training {config.algorithm.value} on {len(self.table)} views for {config.max_episodes} episodes "
            f"(lambdas={list(self.lambdas)}, alpha={config.alpha}, mu_e={config.mu_e}, seed={config.seed})"
        )
        if config.max_episodes and not self._starts:
            raise TrainingError("No view covers any triangle, there is nothing to learn")
        for episode in range(config.max_episodes):
            start = self._starts[int(self.rng.integers(len(self._starts)))]
            try:
                transitions, episode_return = self.run_episode(episode, self.env.start(start))
            except TrainingError as e:
                raise TrainingError(f"Training aborted at episode {episode}: {e}") from e
            if episode_return != -transitions:
                raise TrainingError(
                    f"Return accounting violated at episode {episode}: "
                    f"return {episode_return} for {transitions} transitions"
                )
            episode_log.append(EpisodeRecord(transitions, episode_return))

            if config.log_every and (episode + 1) % config.log_every == 0:
                recent = episode_log[-config.log_every:]
                mean_length = sum(record.length for record in recent) / len(recent)
                logger.info(
                    f"Episode {episode + 1}/{config.max_episodes}: mean length {mean_length:.3f} "
                    f"({time.perf_counter() - started:.1f}s)"
                )

        return TrainedModel(
            network=self.network,
            config=config,
            table_digest=self.table.digest(),
            mesh_digest=self.table.mesh_digest,
            episode_log=episode_log,
        )

    def plan(self, rcc: float) -> Plan:
        """
        Follow the greedy policy from the best single-view state until the RCC is met.

        Only views that see something are first-view candidates. A table where no
        view sees anything yields an empty, complete plan.
        """
        started = time.perf_counter()
        env = self.env if rcc == self.env.rcc else CoverageEnvironment(self.table, rcc, self.env.cache_size)
        state = env.state(0)
        order, lambdas = [], []
        if self._starts:
            values = [self.state_value(env.start(view)) for view in self._starts]
            first = self._starts[int(np.argmax(values))]
            state = env.start(first)
            order.append(first)

        complete = True
        while order and not env.is_terminal(state):
            action = self.greedy_action(env, state)
            view = None if action is None else env.transition(state, self.lambdas[action])
            if view is None:
                complete = False
                logger.warning(f"Policy stalled at {coverage_fraction(state, self.table):.4f} of achievable area")
                break
            state = env.successor(state, view)
            order.append(view)
            lambdas.append(self.lambdas[action])

        return Plan(
            order=tuple(order),
            lambdas=tuple(lambdas),
            final_coverage_fraction=coverage_fraction(state, self.table),
            method=self.config.algorithm.value,
            complete=complete,
            runtime_seconds=time.perf_counter() - started,
        )


class _ActionValueAgent(Agent):
    def q_values(self, state: CoverageState) -> np.ndarray:
        return np.array([self.network.forward(self._input(state, a)) for a in range(len(self.lambdas))])

    def state_value(self, state):
        return float(self.q_values(state).max())

    def greedy_action(self, env, state):
        return int(np.argmax(self.q_values(state)))


class WatkinsQAgent(_ActionValueAgent):
    """
    Off-policy Q(lambda): epsilon-greedy during the first ``epsilon_episodes``
    episodes, bootstrapping on the greedy value; an exploratory action zeroes
    the eligibility trace.
    """

    def _select(self, state: CoverageState, epsilon: float) -> tuple[int, bool]:
        if epsilon > 0.0 and self.rng.random() < epsilon:
            return int(self.rng.integers(len(self.lambdas))), True
        return int(np.argmax(self.q_values(state))), False

    def run_episode(self, episode, state):
        epsilon = self.config.epsilon if episode < self.config.epsilon_episodes else 0.0
        trace = self.network.new_trace()
        transitions, episode_return = 0, 0.0

        action, exploratory = self._select(state, epsilon)
        self._notify(episode, 0, action, exploratory, trace)
        while True:
            value, grad = self.network.value_and_gradient(self._input(state, action))
            trace += grad
            delta = REWARD - value
            if self.env.is_terminal(state):
                self._update(trace, delta)
                break
            state = self._advance(self.env, state, action)
            transitions += 1
            episode_return += REWARD
            delta += float(self.q_values(state).max())
            self._update(trace, delta)

            action, exploratory = self._select(state, epsilon)
            if exploratory:
                trace[:] = 0.0
            else:
                trace *= self.config.mu_e
            self._notify(episode, transitions, action, exploratory, trace)
        return transitions, episode_return


class SarsaAgent(_ActionValueAgent):
    """On-policy SARSA(lambda) with greedy action selection; bootstraps on the action taken next."""

    def run_episode(self, episode, state):
        trace = self.network.new_trace()
        transitions, episode_return = 0, 0.0

        action = self.greedy_action(self.env, state)
        self._notify(episode, 0, action, False, trace)
        while True:
            value, grad = self.network.value_and_gradient(self._input(state, action))
            trace += grad
            delta = REWARD - value
            if self.env.is_terminal(state):
                self._update(trace, delta)
                break
            state = self._advance(self.env, state, action)
            transitions += 1
            episode_return += REWARD

            action = self.greedy_action(self.env, state)
            delta += self.network.forward(self._input(state, action))
            self._update(trace, delta)
            trace *= self.config.mu_e
            self._notify(episode, transitions, action, False, trace)
        return transitions, episode_return


class TdAgent(Agent):
    """TD(lambda) on state values; moves to the successor with the highest estimated value."""

    def state_value(self, state):
        return self.network.forward(self._input(state))

    def _best_successor(self, env: CoverageEnvironment, state: CoverageState) -> tuple[int, CoverageState] | None:
        best = None
        best_value = -np.inf
        for action, lam in enumerate(self.lambdas):
            view = env.transition(state, lam)
            if view is None:
                continue
            successor = env.successor(state, view)
            value = self.state_value(successor)
            if best is None or value > best_value:
                best, best_value = (action, successor), value
        return best

    def greedy_action(self, env, state):
        best = self._best_successor(env, state)
        return None if best is None else best[0]

    def run_episode(self, episode, state):
        trace = self.network.new_trace()
        transitions, episode_return = 0, 0.0
        while True:
            value, grad = self.network.value_and_gradient(self._input(state))
            trace += grad
            delta = REWARD - value
            if self.env.is_terminal(state):
                self._update(trace, delta)
                break
            best = self._best_successor(self.env, state)
            if best is None:
                raise TrainingError(f"No view adds coverage from non-terminal state {state.views()}")
            action, state = best
            transitions += 1
            episode_return += REWARD
            delta += self.state_value(state)
            self._update(trace, delta)
            trace *= self.config.mu_e
            self._notify(episode, transitions, action, False, trace)
        return transitions, episode_return


AGENTS: dict[Algorithm, type[Agent]] = {
    Algorithm.SARSA: SarsaAgent,
    Algorithm.WATKINS_Q: WatkinsQAgent,
    Algorithm.TD: TdAgent,
}


def _train(expected: Algorithm, table: CoverageTable, config: TrainConfig,
           on_step: Callable[[StepRecord], None] | None) -> TrainedModel:
    if config.algorithm is not expected:
        raise ValueError(f"Config is for {config.algorithm.value}, not {expected.value}")
    return AGENTS[expected](table, config, on_step=on_step).train()


def train_watkins_q(table: CoverageTable, config: TrainConfig, on_step=None) -> TrainedModel:
    return _train(Algorithm.WATKINS_Q, table, config, on_step)


def train_sarsa(table: CoverageTable, config: TrainConfig, on_step=None) -> TrainedModel:
    return _train(Algorithm.SARSA, table, config, on_step)


def train_td(table: CoverageTable, config: TrainConfig, on_step=None) -> TrainedModel:
    return _train(Algorithm.TD, table, config, on_step)


def train(table: CoverageTable, config: TrainConfig, on_step=None) -> TrainedModel:
    return _train(config.algorithm, table, config, on_step)


def plan_with_model(model: TrainedModel, table: CoverageTable, rcc: float) -> Plan:
    """Plan greedily with respect to the model's value estimates."""
    if model.table_digest != table.digest():
        logger.warning("Model was trained on a different coverage table; planning anyway")
    agent = AGENTS[model.config.algorithm](table, model.config, network=model.network)
    return agent.plan(rcc)
