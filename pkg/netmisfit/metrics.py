"""Process-local counters for tests, failures and Monte Carlo throughput."""
from __future__ import annotations

import functools
import threading
import time
from collections import Counter
from typing import Dict, List


class Metrics:
    def __init__(self):
        self._lock = threading.Lock()
        self.reset()

    def reset(self) -> None:
        with self._lock:
            self.counters: Dict[str, int] = {
                "tests_total": 0,
                "replications_total": 0,
                "failures_total": 0,
            }
            self.decisions: Counter = Counter()
            self.failures: Counter = Counter()
            self.durations: Dict[str, List[float]] = {"test_latency_ms": []}

    def record_test(self, model: str, decision: str) -> None:
        with self._lock:
            self.counters["tests_total"] += 1
            self.decisions[f"{model}:{decision}"] += 1

    def record_failure(self, reason: str, count: int = 1) -> None:
        with self._lock:
            self.counters["failures_total"] += count
            self.failures[reason] += count

    def record_replications(self, count: int) -> None:
        with self._lock:
            self.counters["replications_total"] += int(count)

    def record_latency(self, ms: float) -> None:
        with self._lock:
            self.durations["test_latency_ms"].append(ms)

    def snapshot(self) -> Dict[str, object]:
        with self._lock:
            latencies = self.durations["test_latency_ms"]
            avg_latency = sum(latencies) / len(latencies) if latencies else 0.0
            return {
                "counters": dict(self.counters),
                "decisions": dict(self.decisions),
                "failures": dict(self.failures),
                "average_latency_ms": round(avg_latency, 2),
            }


metrics = Metrics()


def timed(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        try:
            return fn(*args, **kwargs)
        finally:
            metrics.record_latency((time.perf_counter() - start) * 1000)

    return wrapper
