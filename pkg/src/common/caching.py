"""
Memoization of stationary Monte Carlo draws.

The bias oracle evaluates its population score many times at the same frozen
volatility level: once per Newton step, once per Jacobian, and again for
every neighbouring tau. Simulating the stationary windows dominates that cost,
while the draws themselves depend only on the model, omega(s), the sizes and
the seed. They are therefore kept in a least-recently-used table, keyed by a
hash of those inputs and bounded both by entry count and by total bytes.
"""

import hashlib
import json
import logging
from collections import OrderedDict
from dataclasses import dataclass
from threading import RLock
from typing import Any, Dict, Hashable, Optional, Tuple

from common.io_utils import to_jsonable
from config import DRAW_CACHE_MAX_BYTES, DRAW_CACHE_MAX_ENTRIES

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CacheConfig:
    max_size: int = DRAW_CACHE_MAX_ENTRIES
    # None disables the byte bound
    max_bytes: Optional[int] = DRAW_CACHE_MAX_BYTES

    def __post_init__(self) -> None:
        if self.max_size < 1:
            raise ValueError(f"max_size must be positive, got {self.max_size}")
        if self.max_bytes is not None and self.max_bytes < 1:
            raise ValueError(f"max_bytes must be positive, got {self.max_bytes}")


def value_nbytes(value: Any) -> int:
    """Memory held by a cached value: its ``nbytes`` if it has one, else 0."""
    return int(getattr(value, "nbytes", 0) or 0)


class LRUCache:
    """
    Bounded mapping that drops the least recently read or written key.

    Entries are evicted oldest first until both the entry count and the byte
    total are within bounds. The newest entry is always kept, even when it
    alone exceeds ``max_bytes``.

    ``get`` returns None on a miss, so None cannot be stored as a value.
    """

    def __init__(self, config: Optional[CacheConfig] = None):
        self.config = config or CacheConfig()
        self._entries: "OrderedDict[Hashable, Tuple[Any, int]]" = OrderedDict()
        self._bytes = 0
        self._lock = RLock()
        self._counts = {"hits": 0, "misses": 0, "evictions": 0}

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: Hashable) -> Optional[Any]:
        with self._lock:
            if key not in self._entries:
                self._counts["misses"] += 1
                return None
            self._entries.move_to_end(key)
            self._counts["hits"] += 1
            return self._entries[key][0]

    def set(self, key: Hashable, value: Any) -> None:
        if value is None:
            raise ValueError("None cannot be cached")
        size = value_nbytes(value)
        with self._lock:
            if key in self._entries:
                self._bytes -= self._entries.pop(key)[1]
            self._entries[key] = (value, size)
            self._bytes += size
            while len(self._entries) > 1 and self._over_limit():
                evicted, (_, freed) = self._entries.popitem(last=False)
                self._bytes -= freed
                self._counts["evictions"] += 1
                logger.debug(f"Evicted cache entry {str(evicted)[:12]} ({freed} bytes)")

    def _over_limit(self) -> bool:
        if len(self._entries) > self.config.max_size:
            return True
        return self.config.max_bytes is not None and self._bytes > self.config.max_bytes

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()
            self._bytes = 0

    def get_stats(self) -> Dict[str, Any]:
        with self._lock:
            lookups = self._counts["hits"] + self._counts["misses"]
            return {
                "size": len(self._entries),
                "max_size": self.config.max_size,
                "bytes": self._bytes,
                "max_bytes": self.config.max_bytes,
                **self._counts,
                "hit_rate": self._counts["hits"] / lookups if lookups else 0.0,
            }


def make_cache_key(*args: Any, **kwargs: Any) -> str:
    """
    Hash arguments into a hex key.

    Arrays, numpy scalars and pydantic models are first converted to plain
    JSON, so ``np.array([1.0])`` and ``[1.0]`` give the same key.
    """
    canonical = json.dumps([to_jsonable(list(args)), to_jsonable(kwargs)], sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


_draw_cache: Optional[LRUCache] = None


def get_draw_cache() -> LRUCache:
    """Process-wide cache of stationary draws used by the bias oracle."""
    global _draw_cache
    if _draw_cache is None:
        _draw_cache = LRUCache()
    return _draw_cache


def clear_all_caches() -> None:
    if _draw_cache is not None:
        stats = _draw_cache.get_stats()
        _draw_cache.clear()
        logger.info(f"Cleared draw cache ({stats['hits']} hits, {stats['misses']} misses)")
