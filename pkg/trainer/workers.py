"""
Gradient workers

A worker holds nothing but its id: it receives an immutable weight snapshot
tagged with a version plus a mini-batch, computes the gradient and reports a
GradientMessage. The concurrent backend runs each worker in its own thread and
talks to the server through queues.
"""

import logging
import queue
import threading
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import logistic
from .data import MiniBatch
from .exceptions import WorkerFailure

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GradientMessage:
    worker_id: int
    batch_id: int
    gradient: np.ndarray
    read_version: int
    batch_loss_at_read: float
    batch: MiniBatch


def compute_gradient(worker_id: int, batch: MiniBatch, weights: np.ndarray, version: int) -> GradientMessage:
    """Gradient of the batch at the snapshot the worker read"""
    return GradientMessage(
        worker_id=worker_id,
        batch_id=batch.id,
        gradient=logistic.gradient(weights, batch),
        read_version=version,
        batch_loss_at_read=logistic.loss(weights, batch),
        batch=batch,
    )


@dataclass(frozen=True)
class _WorkerError:
    worker_id: int
    error: Exception


Task = Tuple[MiniBatch, np.ndarray, int]


class GradientWorker(threading.Thread):
    """Worker thread: pulls (batch, snapshot, version) tasks and replies on the outbox"""

    def __init__(self, worker_id: int, outbox: queue.Queue):
        super().__init__(name=f"gradient-worker-{worker_id}", daemon=True)
        self.worker_id = worker_id
        self.inbox = queue.Queue()
        self.outbox = outbox

    def run(self):
        while True:
            task = self.inbox.get()
            if task is None:
                break
            batch, weights, version = task
            try:
                self.outbox.put(compute_gradient(self.worker_id, batch, weights, version))
            except Exception as e:
                logger.error(f"[Worker] Worker {self.worker_id} failed on batch {batch.id}: {e}")
                self.outbox.put(_WorkerError(self.worker_id, e))


class ConcurrentWorkerPool:
    """c real worker threads sharing one ordered message queue to the server"""

    def __init__(self, workers: int, timeout: Optional[float] = 600.0):
        self.timeout = timeout
        self.outbox = queue.Queue()
        self.workers = [GradientWorker(worker_id, self.outbox) for worker_id in range(workers)]
        self.running = False

    def start(self):
        for worker in self.workers:
            worker.start()
        self.running = True
        logger.info(f"[Worker] Started {len(self.workers)} worker threads")

    def submit(self, worker_id: int, task: Task):
        self.workers[worker_id].inbox.put(task)

    def receive(self) -> GradientMessage:
        """Next message in arrival order; a worker error aborts the run"""
        try:
            item = self.outbox.get(timeout=self.timeout)
        except queue.Empty:
            raise WorkerFailure(f"No gradient arrived within {self.timeout}s") from None
        if isinstance(item, _WorkerError):
            raise WorkerFailure(f"Worker {item.worker_id} failed: {item.error}") from item.error
        return item

    def stop(self):
        if not self.running:
            return
        for worker in self.workers:
            worker.inbox.put(None)
        for worker in self.workers:
            worker.join()
        self.running = False
        logger.info("[Worker] Worker threads stopped")

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.stop()
