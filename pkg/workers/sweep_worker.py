"""
workers.sweep_worker module.

This module contains the threaded fan-out for sweep sub-runs:
- Worker threads report through a shared queue
- Cancellation support
- Results gathered back in sub-run order
"""

import queue
import threading
import traceback
from typing import Any, Callable, List, Sequence, Tuple

from utils.errors import MqpError
from utils.logger import dbg

Task = Tuple[int, Callable[[], Any]]


class SweepWorker(threading.Thread):
    """Worker che esegue una parte dei punti di uno sweep"""

    def __init__(self, tasks: Sequence[Task], q: queue.Queue, name: str = "sweep"):
        super().__init__(daemon=True, name=name)
        self.tasks = list(tasks)
        self.q = q
        self._stop_event = threading.Event()

    def cancel(self):
        """Richiede la cancellazione del worker"""
        dbg(f"Richiesta cancellazione {self.name}")
        self._stop_event.set()

    def is_cancelled(self) -> bool:
        return self._stop_event.is_set()

    def run(self):
        for index, fn in self.tasks:
            if self.is_cancelled():
                self.q.put(("cancelled", index, None))
                return
            self.q.put(("status", index, f"{self.name}: punto {index}"))
            try:
                result = fn()
            except Exception as e:
                dbg(f"Errore nel punto {index}: {traceback.format_exc()}")
                self.q.put(("err", index, e))
                return
            self.q.put(("done", index, result))


def run_sweep(tasks: Sequence[Callable[[], Any]], workers: int = 1) -> List[Any]:
    """
    Run independent sub-runs on `workers` threads.

    Each task must be a pure function of its own inputs (its own seed), so
    the returned list, ordered by task index, does not depend on the
    number of workers.

    Raises:
        The first exception raised by a task, after cancelling the others.
    """
    indexed = list(enumerate(tasks))
    if not indexed:
        return []
    n = max(1, min(int(workers), len(indexed)))
    q: queue.Queue = queue.Queue()
    pool = [SweepWorker(indexed[i::n], q, name=f"sweep-{i}") for i in range(n)]
    for w in pool:
        w.start()

    results: List[Any] = [None] * len(indexed)
    pending = len(indexed)
    error = None
    while pending:
        kind, index, payload = q.get()
        if kind == "status":
            dbg(payload)
        elif kind == "done":
            results[index] = payload
            pending -= 1
        elif kind == "err":
            error = payload
            for w in pool:
                w.cancel()
            break
        elif kind == "cancelled":
            break
    for w in pool:
        w.join()
    if error is not None:
        raise error
    if pending:
        raise MqpError("sweep cancelled before completion")
    return results
