"""
线程安全的结果缓存，用于在网格点之间共享数据集、折划分与分组矩
"""

import functools
import logging
from threading import RLock
from typing import Any, Callable, Hashable

logger = logging.getLogger(__name__)

_MISSING = object()


class CacheManager:
    """
    通用缓存管理类

    特性：
    - 线程安全：可重入锁，get_or_compute 在锁外计算，同一键并发计算时保留先写入的结果
    - 统计功能：记录命中率

    示例：
    cache = CacheManager()
    fold = cache.get_or_compute(("fold", seed, 0), lambda: center_pair(...))

    @cache.cached()
    def load(path, attr):
        ...
    """

    def __init__(self):
        self._store = {}
        self._lock = RLock()
        self._stats = {"hits": 0, "misses": 0, "sets": 0}

    def set(self, key: Hashable, value: Any) -> None:
        with self._lock:
            self._store[key] = value
            self._stats["sets"] += 1

    def get(self, key: Hashable, default: Any = None) -> Any:
        """
        获取缓存值，未找到时返回 default
        """
        with self._lock:
            if key not in self._store:
                self._stats["misses"] += 1
                return default
            self._stats["hits"] += 1
            return self._store[key]

    def get_or_compute(self, key: Hashable, compute: Callable[[], Any]) -> Any:
        value = self.get(key, _MISSING)
        if value is not _MISSING:
            return value
        value = compute()
        with self._lock:
            if key in self._store:
                return self._store[key]
            self.set(key, value)
        return value

    def cached(self):
        """
        缓存装饰器，参数必须可哈希；None 结果同样缓存
        """

        def decorator(func: Callable):
            @functools.wraps(func)
            def wrapper(*args, **kwargs):
                key = (func.__qualname__, args, tuple(sorted(kwargs.items())))
                return self.get_or_compute(key, lambda: func(*args, **kwargs))

            return wrapper

        return decorator

    def clear(self, key: Hashable = None) -> None:
        """
        清除缓存，key 为 None 时清除全部
        """
        with self._lock:
            if key is None:
                self._store = {}
            else:
                self._store.pop(key, None)

    def __len__(self):
        with self._lock:
            return len(self._store)

    def get_stats(self) -> dict:
        with self._lock:
            hits = self._stats["hits"]
            misses = self._stats["misses"]
            total = hits + misses
            return {
                "total_items": len(self._store),
                "hits": hits,
                "misses": misses,
                "hit_rate": hits / total if total > 0 else 0,
                "sets": self._stats["sets"],
            }
