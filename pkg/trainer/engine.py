"""
Training engine

Sequential mini-batch SGD (optionally guided) and the parameter-server
architecture with c workers in synchronous or asynchronous mode. Every mode
funnels its updates through ParameterServer.apply, so with c = 1 the parallel
modes replay the sequential trajectory exactly.
"""

import logging
import time
from collections import Counter, deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional

import numpy as np

from . import guided, logistic
from .guided import GuidedConfig, RankBy
from .data import Splits, make_batches
from .exceptions import ConfigError, DivergenceError, NumericError, WorkerFailure
from .optim import OptimizerState, RMSpropInit, Rule
from .scheduler import EventKind, LatencyModel, simulated_schedule
from .workers import ConcurrentWorkerPool, GradientMessage, compute_gradient

logger = logging.getLogger(__name__)


class Mode(str, Enum):
    SEQUENTIAL = 'sequential'
    SYNC = 'sync'
    ASYNC = 'async'


class SchedulerKind(str, Enum):
    SIMULATED = 'simulated'
    CONCURRENT = 'concurrent'


@dataclass
class EngineConfig:
    mode: Mode = Mode.SEQUENTIAL
    guided: bool = False
    rule: Rule = Rule.VANILLA
    workers: int = 10
    epochs: int = 50
    max_updates: int = 0  # 0 = bounded by epochs only
    eta: float = 0.2
    rho: int = 10
    replay_cap: int = 4
    rank_by: RankBy = RankBy.VERIF
    batch_size: int = 10
    seed: int = 0
    scheduler: SchedulerKind = SchedulerKind.SIMULATED
    latency: LatencyModel = field(default_factory=LatencyModel)
    beta: float = 0.9
    epsilon: float = 1e-8
    rmsprop_init: RMSpropInit = RMSpropInit.PAPER
    init_range: float = 0.05
    divergence_threshold: float = 1e6

    def __post_init__(self):
        self.mode = Mode(self.mode)
        self.rule = Rule(self.rule)
        self.scheduler = SchedulerKind(self.scheduler)
        if self.workers < 1:
            raise ConfigError(f"Worker count must be at least 1, got {self.workers}")
        if self.epochs < 1:
            raise ConfigError(f"Epochs must be at least 1, got {self.epochs}")
        if self.max_updates < 0:
            raise ConfigError(f"max_updates must be non-negative, got {self.max_updates}")
        if self.batch_size < 1:
            raise ConfigError(f"Batch size must be at least 1, got {self.batch_size}")
        if self.mode is not Mode.SEQUENTIAL:
            self.latency.check_workers(self.workers)

    def guided_config(self) -> Optional[GuidedConfig]:
        if not self.guided:
            return None
        return GuidedConfig(rho=self.rho, replay_cap=min(self.replay_cap, self.rho), rank_by=self.rank_by)

    def optimizer_state(self) -> OptimizerState:
        return OptimizerState(
            rule=self.rule,
            eta=self.eta,
            beta=self.beta,
            epsilon=self.epsilon,
            rmsprop_init=self.rmsprop_init,
        )


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    train_loss: float
    val_loss: float
    val_accuracy: float
    updates: int
    replays: int
    mean_staleness: float


@dataclass
class RunResult:
    seed: int
    mode: Mode
    guided: bool
    rule: Rule
    workers: int
    epochs: List[EpochMetrics] = field(default_factory=list)
    test_accuracy: float = float('nan')
    staleness_histogram: Dict[int, int] = field(default_factory=dict)
    update_count: int = 0
    applied_count: int = 0
    replay_count: int = 0
    guided_evaluations: int = 0
    examples_per_epoch: List[int] = field(default_factory=list)
    wall_time: float = 0.0
    diverged: bool = False
    error: Optional[str] = None

    @property
    def train_loss(self) -> List[float]:
        return [row.train_loss for row in self.epochs]

    @property
    def val_loss(self) -> List[float]:
        return [row.val_loss for row in self.epochs]

    @property
    def val_accuracy(self) -> List[float]:
        return [row.val_accuracy for row in self.epochs]


def _freeze(W: np.ndarray) -> np.ndarray:
    W.setflags(write=False)
    return W


class ParameterServer:
    """
    Single authority over the weights, optimizer state and consistency ledger

    Weights are replaced, never mutated, so a snapshot handed to a worker
    stays valid after later updates.
    """

    def __init__(self, weights: np.ndarray, optimizer: OptimizerState, verification_set,
                 guided_config: Optional[GuidedConfig] = None, track_staleness: bool = False):
        self.weights = _freeze(np.array(weights, dtype=float))
        self.optimizer = optimizer
        self.verification_set = verification_set
        self.guided_config = guided_config
        self.ledger = guided.ConsistencyLedger(guided_config.rho) if guided_config else None
        self.track_staleness = track_staleness
        self.version = 0
        self.applied_count = 0
        self.replay_count = 0
        self.guided_evaluations = 0
        self.staleness = Counter()
        self.epoch_staleness = []
        self._avg_error = None

    def read(self):
        """Current weight snapshot and its version"""
        return self.weights, self.version

    def _verification_error(self) -> float:
        self.guided_evaluations += 1
        return guided.approximate_avg_error(self.weights, self.verification_set)

    def _set_weights(self, W: np.ndarray):
        if not np.all(np.isfinite(W)):
            raise DivergenceError(f"Non-finite weights after update {self.version + 1}")
        self.weights = _freeze(W)
        self.version += 1

    def apply(self, msg: GradientMessage):
        """Apply one worker gradient, then run the guided bookkeeping"""
        if not np.all(np.isfinite(msg.gradient)):
            raise NumericError(f"Non-finite gradient from worker {msg.worker_id}", step=self.version + 1)

        if self.track_staleness:
            staleness = self.version - msg.read_version
            self.staleness[staleness] += 1
            self.epoch_staleness.append(staleness)

        if self.ledger is not None:
            e_bar_before = self._avg_error if self._avg_error is not None else self._verification_error()
            e_self_before = logistic.loss(self.weights, msg.batch)

        self._set_weights(self.optimizer.step(self.weights, msg.gradient))
        self.applied_count += 1

        if self.ledger is not None:
            e_self_after = logistic.loss(self.weights, msg.batch)
            self._avg_error = self._verification_error()
            self.ledger.record(msg.batch, e_self_before, e_self_after, e_bar_before, self._avg_error)
            if self.applied_count % self.guided_config.rho == 0:
                self._replay()

    def _replay(self):
        selected = guided.select_most_consistent(
            self.ledger, self.guided_config.replay_cap, self.guided_config.rank_by
        )
        for batch in selected:
            W, self.optimizer = guided.replay(self.weights, self.optimizer, [batch])
            self._set_weights(W)
            self.replay_count += 1
        if selected:
            self._avg_error = None
            logger.debug(
                f"[Server] Replayed {len(selected)} consistent batches "
                f"{[batch.id for batch in selected]} at version {self.version}"
            )


def server_apply(server: ParameterServer, msg: GradientMessage) -> ParameterServer:
    server.apply(msg)
    return server


class TrainingRun:
    """One seeded training run over fixed splits"""

    def __init__(self, cfg: EngineConfig, splits: Splits,
                 on_epoch: Optional[Callable[[EpochMetrics], None]] = None):
        self.cfg = cfg
        self.splits = splits
        self.on_epoch = on_epoch
        rng = np.random.default_rng(cfg.seed)
        weights = logistic.init_weights(
            splits.train.n_classes, splits.train.n_features, rng, cfg.init_range
        )
        self.server = ParameterServer(
            weights,
            cfg.optimizer_state(),
            splits.validation,
            guided_config=cfg.guided_config(),
            track_staleness=cfg.mode is not Mode.SEQUENTIAL,
        )
        self.result = RunResult(
            seed=cfg.seed,
            mode=cfg.mode,
            guided=cfg.guided,
            rule=cfg.rule,
            workers=1 if cfg.mode is Mode.SEQUENTIAL else cfg.workers,
        )
        self._events = None
        self._worker_pool = None

    @property
    def budget_left(self) -> int:
        if not self.cfg.max_updates:
            return -1
        return self.cfg.max_updates - self.server.applied_count

    def _exhausted(self, in_flight: int = 0) -> bool:
        return bool(self.cfg.max_updates) and self.server.applied_count + in_flight >= self.cfg.max_updates

    def execute(self) -> RunResult:
        started = time.perf_counter()
        logger.info(
            f"[Engine] Run seed={self.cfg.seed} mode={self.cfg.mode.value} guided={self.cfg.guided} "
            f"rule={self.cfg.rule.value} workers={self.result.workers} scheduler={self.cfg.scheduler.value}"
        )
        try:
            for epoch in range(self.cfg.epochs):
                batches = make_batches(self.splits.train, self.cfg.batch_size, self.cfg.seed, epoch)
                self.server.epoch_staleness = []
                if self.cfg.mode is Mode.SEQUENTIAL:
                    consumed = self._sequential_epoch(batches)
                elif self.cfg.mode is Mode.SYNC:
                    consumed = self._sync_epoch(batches)
                else:
                    consumed = self._async_epoch(batches)
                self._end_epoch(epoch, consumed)
                if self._exhausted():
                    break
            self.result.test_accuracy = logistic.accuracy(self.server.weights, self.splits.test)
        except (NumericError, DivergenceError, WorkerFailure) as e:
            logger.error(f"[Engine] Run seed={self.cfg.seed} aborted: {e}")
            self.result.diverged = True
            self.result.error = str(e)
        finally:
            self._close_pool()
            self.result.wall_time = time.perf_counter() - started
            self.result.update_count = self.server.version
            self.result.applied_count = self.server.applied_count
            self.result.replay_count = self.server.replay_count
            self.result.guided_evaluations = self.server.guided_evaluations
            self.result.staleness_histogram = dict(sorted(self.server.staleness.items()))
        return self.result

    def _sequential_epoch(self, batches) -> int:
        consumed = 0
        for batch in batches:
            if self._exhausted():
                break
            weights, version = self.server.read()
            self.server.apply(compute_gradient(0, batch, weights, version))
            consumed += len(batch)
        return consumed

    def _sync_epoch(self, batches) -> int:
        consumed = 0
        c = self.cfg.workers
        for start in range(0, len(batches), c):
            if self._exhausted():
                break
            round_batches = batches[start:start + c]
            if self.budget_left > 0:
                round_batches = round_batches[:self.budget_left]
            messages = self._gather_round(round_batches)
            assert len({msg.read_version for msg in messages}) == 1, "sync round mixed weight versions"
            # all c gradients are in before any is applied
            for msg in sorted(messages, key=lambda m: m.worker_id):
                self.server.apply(msg)
                consumed += len(msg.batch)
        return consumed

    def _gather_round(self, round_batches) -> List[GradientMessage]:
        weights, version = self.server.read()
        if self.cfg.scheduler is SchedulerKind.CONCURRENT:
            pool = self._pool()
            for worker_id, batch in enumerate(round_batches):
                pool.submit(worker_id, (batch, weights, version))
            return [pool.receive() for _ in round_batches]
        return [compute_gradient(worker_id, batch, weights, version)
                for worker_id, batch in enumerate(round_batches)]

    def _async_epoch(self, batches) -> int:
        if self.cfg.scheduler is SchedulerKind.CONCURRENT:
            per_worker = self._async_epoch_concurrent(deque(batches))
        else:
            per_worker = self._async_epoch_simulated(deque(batches))
        consumed = sum(per_worker.values())
        if not self._exhausted():
            assert consumed == len(self.splits.train), "async epoch skipped or repeated examples"
        logger.debug(f"[Engine] Async epoch examples per worker: {dict(sorted(per_worker.items()))}")
        return consumed

    def _async_epoch_simulated(self, pending: deque) -> Counter:
        if self._events is None:
            self._events = simulated_schedule(self.cfg.seed, self.cfg.latency, self.cfg.workers)
        in_flight = {}
        per_worker = Counter()
        while in_flight or (pending and not self._exhausted(len(in_flight))):
            event = next(self._events)
            if event.kind is EventKind.READ:
                if pending and not self._exhausted(len(in_flight)):
                    weights, version = self.server.read()
                    in_flight[event.worker_id] = (pending.popleft(), weights, version)
            elif event.worker_id in in_flight:
                batch, weights, version = in_flight.pop(event.worker_id)
                self.server.apply(compute_gradient(event.worker_id, batch, weights, version))
                per_worker[event.worker_id] += len(batch)
        return per_worker

    def _async_epoch_concurrent(self, pending: deque) -> Counter:
        pool = self._pool()
        in_flight = set()
        per_worker = Counter()

        def dispatch(worker_id):
            if pending and not self._exhausted(len(in_flight)):
                weights, version = self.server.read()
                pool.submit(worker_id, (pending.popleft(), weights, version))
                in_flight.add(worker_id)

        for worker_id in range(self.cfg.workers):
            dispatch(worker_id)
        while in_flight:
            msg = pool.receive()
            in_flight.discard(msg.worker_id)
            self.server.apply(msg)
            per_worker[msg.worker_id] += len(msg.batch)
            dispatch(msg.worker_id)
        return per_worker

    def _pool(self) -> ConcurrentWorkerPool:
        if self._worker_pool is None:
            self._worker_pool = ConcurrentWorkerPool(self.cfg.workers)
            self._worker_pool.start()
        return self._worker_pool

    def _close_pool(self):
        if self._worker_pool is not None:
            self._worker_pool.stop()
            self._worker_pool = None

    def _end_epoch(self, epoch: int, consumed: int):
        weights = self.server.weights
        val_loss = logistic.loss(weights, self.splits.validation)
        staleness = self.server.epoch_staleness
        row = EpochMetrics(
            epoch=epoch + 1,
            train_loss=logistic.loss(weights, self.splits.train),
            val_loss=val_loss,
            val_accuracy=logistic.accuracy(weights, self.splits.validation),
            updates=self.server.version,
            replays=self.server.replay_count,
            mean_staleness=float(np.mean(staleness)) if staleness else 0.0,
        )
        self.result.epochs.append(row)
        self.result.examples_per_epoch.append(consumed)
        logger.debug(
            f"[Engine] Epoch {row.epoch}: train_loss={row.train_loss:.5g} val_loss={row.val_loss:.5g} "
            f"val_acc={row.val_accuracy:.5g} updates={row.updates} replays={row.replays}"
        )
        if self.on_epoch:
            self.on_epoch(row)
        if not np.isfinite(val_loss) or val_loss > self.cfg.divergence_threshold:
            raise DivergenceError(f"Validation loss {val_loss:.5g} exceeded {self.cfg.divergence_threshold:g} in epoch {row.epoch}")


def run_sequential(cfg: EngineConfig, splits: Splits, on_epoch=None) -> RunResult:
    if cfg.mode is not Mode.SEQUENTIAL:
        raise ConfigError(f"run_sequential needs mode=sequential, got {cfg.mode.value}")
    return TrainingRun(cfg, splits, on_epoch).execute()


def run_parallel(cfg: EngineConfig, splits: Splits, on_epoch=None) -> RunResult:
    if cfg.mode not in (Mode.SYNC, Mode.ASYNC):
        raise ConfigError(f"run_parallel needs mode=sync or async, got {cfg.mode.value}")
    return TrainingRun(cfg, splits, on_epoch).execute()


def run(cfg: EngineConfig, splits: Splits, on_epoch=None) -> RunResult:
    if cfg.mode is Mode.SEQUENTIAL:
        return run_sequential(cfg, splits, on_epoch)
    return run_parallel(cfg, splits, on_epoch)
