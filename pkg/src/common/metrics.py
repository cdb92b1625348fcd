"""
In-process run counters.

Tracks how much solver work a run did (solves, interior point iterations,
smoothing fallbacks, skipped replications) and how long the stages took.
Nothing numerical reads these values back; the CLI logs a summary at the end
of each command.

Each joblib worker process has its own collector, so with ``--threads > 1``
the counts describe the parent process only.
"""

import logging
import time
from collections import defaultdict
from contextlib import contextmanager
from threading import Lock
from typing import Any, Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)

Tags = Optional[Mapping[str, Any]]
MetricKey = Tuple[str, Tuple[Tuple[str, str], ...]]


def _key(name: str, tags: Tags) -> MetricKey:
    return name, tuple(sorted((str(k), str(v)) for k, v in (tags or {}).items()))


def _label(key: MetricKey) -> str:
    name, tags = key
    if not tags:
        return name
    return name + "{" + ",".join(f"{k}={v}" for k, v in tags) + "}"


def _describe(samples: List[float], unit: str = "") -> Dict[str, float]:
    if not samples:
        return {"count": 0}
    values = np.asarray(samples, dtype=float)
    p50, p95 = np.percentile(values, [50, 95])
    stats = {
        "min": values.min(),
        "max": values.max(),
        "avg": values.mean(),
        "p50": p50,
        "p95": p95,
    }
    described: Dict[str, float] = {"count": int(values.size)}
    described.update({name + unit: float(value) for name, value in stats.items()})
    return described


class MetricsCollector:
    """Counters, sample distributions and stage durations, keyed by name and tags."""

    def __init__(self) -> None:
        self._lock = Lock()
        self._counts: Dict[MetricKey, float] = defaultdict(float)
        self._samples: Dict[MetricKey, List[float]] = defaultdict(list)
        self._durations: Dict[MetricKey, List[float]] = defaultdict(list)

    def increment(self, name: str, value: float = 1.0, tags: Tags = None) -> None:
        with self._lock:
            self._counts[_key(name, tags)] += value

    def histogram(self, name: str, value: float, tags: Tags = None) -> None:
        """Record one observation, e.g. the iteration count of a solve."""
        with self._lock:
            self._samples[_key(name, tags)].append(float(value))

    def timing(self, name: str, value_ms: float, tags: Tags = None) -> None:
        with self._lock:
            self._durations[_key(name, tags)].append(float(value_ms))

    @contextmanager
    def timer(self, name: str, tags: Tags = None) -> Iterator[None]:
        """
        Time the enclosed block in milliseconds.

        Example:
            with get_metrics().timer("sqe.estimate_path"):
                path = estimate_path(design, weights, grid)
        """
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed_ms = 1000.0 * (time.perf_counter() - start)
            self.timing(name, elapsed_ms, tags)
            logger.debug("%s: %.1f ms", name, elapsed_ms)

    def get_counter(self, name: str, tags: Tags = None) -> float:
        with self._lock:
            return self._counts.get(_key(name, tags), 0.0)

    def get_histogram_stats(self, name: str, tags: Tags = None) -> Dict[str, float]:
        """Return count, min, max, avg, p50 and p95 of a recorded distribution."""
        with self._lock:
            samples = list(self._samples.get(_key(name, tags), ()))
        return _describe(samples)

    def get_timer_stats(self, name: str, tags: Tags = None) -> Dict[str, float]:
        """Like ``get_histogram_stats`` with ``_ms`` suffixed to every statistic."""
        with self._lock:
            samples = list(self._durations.get(_key(name, tags), ()))
        return _describe(samples, unit="_ms")

    def get_all_metrics(self) -> Dict[str, Any]:
        with self._lock:
            counts = dict(self._counts)
            samples = {k: list(v) for k, v in self._samples.items()}
            durations = {k: list(v) for k, v in self._durations.items()}
        return {
            "counters": {_label(k): v for k, v in counts.items()},
            "histograms": {_label(k): _describe(v) for k, v in samples.items()},
            "timers": {_label(k): _describe(v, unit="_ms") for k, v in durations.items()},
        }

    def reset(self) -> None:
        with self._lock:
            self._counts.clear()
            self._samples.clear()
            self._durations.clear()


_collector: Optional[MetricsCollector] = None


def get_metrics() -> MetricsCollector:
    """Process-wide collector, created on first use."""
    global _collector
    if _collector is None:
        _collector = MetricsCollector()
    return _collector


def increment(name: str, value: float = 1.0, tags: Tags = None) -> None:
    get_metrics().increment(name, value, tags)


def histogram(name: str, value: float, tags: Tags = None) -> None:
    get_metrics().histogram(name, value, tags)


def timer(name: str, tags: Tags = None):
    return get_metrics().timer(name, tags)


# ============================================================================
# Solver and replication counters
# ============================================================================

def record_solve_metrics(iterations: int, used_fallback: bool, polished: bool) -> None:
    """
    Account for one weighted quantile regression solve.

    Args:
        iterations: Interior point iterations taken
        used_fallback: The smoothing homotopy produced the solution
        polished: The vertex polish replaced the interior iterate
    """
    collector = get_metrics()
    collector.increment("qreg.solves")
    collector.histogram("qreg.ip_iterations", iterations)
    if used_fallback:
        collector.increment("qreg.fallbacks")
    if polished:
        collector.increment("qreg.polished")


def record_replication_failure(stage: str) -> None:
    """Count a replication dropped by ``stage`` ("bootstrap" or "harness")."""
    get_metrics().increment(f"{stage}.failed_reps")


def log_run_summary(log: logging.Logger = logger) -> None:
    """Log solver counters and stage timings at INFO."""
    snapshot = get_metrics().get_all_metrics()
    counters = snapshot["counters"]
    if counters:
        log.info("counters: " + ", ".join(f"{k}={v:g}" for k, v in sorted(counters.items())))
    for name, stats in sorted(snapshot["timers"].items()):
        if stats["count"]:
            log.debug(f"{name}: {stats['count']} calls, avg {stats['avg_ms']:.1f} ms")
