"""
Weight-update rules applied by the parameter server

vanilla:  W' = W - eta * g
rmsprop:  r_1 = v_1 (|g| elementwise), then r_t = beta * r_{t-1} + (1 - beta) * g^2,
          W' = W - eta * g / sqrt(r_t + eps)
adagrad:  r_t = r_{t-1} + g^2,  W' = W - eta * g / sqrt(r_t + eps)

The state is owned by the server context only; workers never hold it.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .exceptions import ConfigError, NumericError

logger = logging.getLogger(__name__)


class Rule(str, Enum):
    VANILLA = 'vanilla'
    RMSPROP = 'rmsprop'
    ADAGRAD = 'adagrad'


class RMSpropInit(str, Enum):
    PAPER = 'paper'    # r_1 = v_1
    SQUARE = 'square'  # r_1 = v_1^2


@dataclass
class OptimizerState:
    rule: Rule = Rule.VANILLA
    eta: float = 0.2
    beta: float = 0.9
    epsilon: float = 1e-8
    rmsprop_init: RMSpropInit = RMSpropInit.PAPER
    accumulator: Optional[np.ndarray] = None
    step_count: int = 0

    def __post_init__(self):
        self.rule = Rule(self.rule)
        self.rmsprop_init = RMSpropInit(self.rmsprop_init)
        if self.eta <= 0:
            raise ConfigError(f"Learning rate must be positive, got {self.eta}")
        if not 0.0 < self.beta < 1.0:
            raise ConfigError(f"RMSprop beta must lie in (0, 1), got {self.beta}")
        if self.epsilon <= 0:
            raise ConfigError(f"Epsilon must be positive, got {self.epsilon}")

    def step(self, W: np.ndarray, g: np.ndarray) -> np.ndarray:
        """Apply the configured rule and return the new weights"""
        return STEP_FUNCTIONS[self.rule](self, W, g)


def _check(state: OptimizerState, W: np.ndarray, g: np.ndarray):
    if W.shape != g.shape:
        raise NumericError(f"Gradient shape {g.shape} does not match weights {W.shape}", step=state.step_count + 1)
    if not np.all(np.isfinite(g)):
        raise NumericError("Non-finite gradient entry", step=state.step_count + 1)


def step_vanilla(state: OptimizerState, W: np.ndarray, g: np.ndarray) -> np.ndarray:
    _check(state, W, g)
    state.step_count += 1
    return W - state.eta * g


def step_rmsprop(state: OptimizerState, W: np.ndarray, g: np.ndarray) -> np.ndarray:
    _check(state, W, g)
    if state.accumulator is None:
        if state.rmsprop_init is RMSpropInit.PAPER:
            # r_1 = v_1, kept non-negative so the root stays real
            state.accumulator = np.abs(g)
        else:
            state.accumulator = g * g
    else:
        state.accumulator = state.beta * state.accumulator + (1.0 - state.beta) * g * g
    state.step_count += 1
    return W - state.eta * g / np.sqrt(state.accumulator + state.epsilon)


def step_adagrad(state: OptimizerState, W: np.ndarray, g: np.ndarray) -> np.ndarray:
    _check(state, W, g)
    if state.accumulator is None:
        state.accumulator = np.zeros_like(g)
    state.accumulator = state.accumulator + g * g
    state.step_count += 1
    return W - state.eta * g / np.sqrt(state.accumulator + state.epsilon)


STEP_FUNCTIONS = {
    Rule.VANILLA: step_vanilla,
    Rule.RMSPROP: step_rmsprop,
    Rule.ADAGRAD: step_adagrad,
}
