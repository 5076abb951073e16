"""
Guided delay compensation

The parameter server records, for every applied mini-batch, how the batch's
own error and the verification-set error moved across that update. Every rho
applied updates it replays the few batches whose two error changes agree in
sign and improve the verification error the most.
"""

import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np

from . import logistic
from .data import Dataset, MiniBatch
from .exceptions import ConfigError
from .optim import OptimizerState

logger = logging.getLogger(__name__)


class RankBy(str, Enum):
    VERIF = 'verif'
    SELF = 'self'


@dataclass(frozen=True)
class GuidedConfig:
    rho: int = 10
    replay_cap: int = 4
    rank_by: RankBy = RankBy.VERIF

    def __post_init__(self):
        if self.rho < 1:
            raise ConfigError(f"Delay tolerance rho must be at least 1, got {self.rho}")
        if not 1 <= self.replay_cap <= self.rho:
            raise ConfigError(f"Replay cap must lie in [1, rho={self.rho}], got {self.replay_cap}")
        object.__setattr__(self, 'rank_by', RankBy(self.rank_by))


@dataclass(frozen=True)
class ConsistencyRecord:
    batch_id: int
    delta_verif: float
    delta_self: float
    batch: MiniBatch

    @property
    def is_consistent(self) -> bool:
        return np.sign(self.delta_verif) == np.sign(self.delta_self) and self.delta_verif > 0


class ConsistencyLedger:
    """Rolling window of the last rho consistency records"""

    def __init__(self, rho: int):
        self.rho = rho
        self.records = deque(maxlen=rho)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def record(self, batch: MiniBatch, e_before_self: float, e_after_self: float,
               e_bar_before: float, e_bar_after: float) -> 'ConsistencyLedger':
        """Append one record; the oldest is evicted once rho are held"""
        entry = ConsistencyRecord(
            batch_id=batch.id,
            delta_verif=e_bar_before - e_bar_after,
            delta_self=e_before_self - e_after_self,
            batch=batch,
        )
        self.records.append(entry)
        logger.debug(
            f"[Guided] Batch {batch.id}: delta_self={entry.delta_self:.3g} "
            f"delta_verif={entry.delta_verif:.3g}"
        )
        return self


def approximate_avg_error(W: np.ndarray, verification_set: Dataset) -> float:
    """Estimate of the average training error on the verification split"""
    return logistic.loss(W, verification_set)


def select_most_consistent(ledger: ConsistencyLedger, cap: int,
                           rank_by: RankBy = RankBy.VERIF) -> List[MiniBatch]:
    """
    Consistent and improving records, best first, at most ``cap`` of them

    Ties on the ranking key go to the lower batch id.
    """
    candidates = [entry for entry in ledger if entry.is_consistent]
    if RankBy(rank_by) is RankBy.SELF:
        ranked = sorted(candidates, key=lambda entry: (-entry.delta_self, entry.batch_id))
    else:
        ranked = sorted(candidates, key=lambda entry: (-entry.delta_verif, entry.batch_id))
    return [entry.batch for entry in ranked[:cap]]


def replay(W: np.ndarray, state: OptimizerState,
           selected: Sequence[MiniBatch]) -> Tuple[np.ndarray, OptimizerState]:
    """Apply the optimizer once per selected batch, recomputing each gradient at the current weights"""
    for batch in selected:
        W = state.step(W, logistic.gradient(W, batch))
    return W, state
