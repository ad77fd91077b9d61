"""
Memo table implementation.

This module provides the shared utility store used by the dynamic program,
with insert-if-absent semantics that are safe under concurrent writers.
"""
import threading
from typing import Any, Callable, Dict, Hashable, Optional
import logging

logger = logging.getLogger(__name__)


class MemoryMemoService:
    """In-memory memo table guarded by a lock."""

    def __init__(self):
        self.table: Dict[Hashable, Any] = {}
        self._lock = threading.Lock()

    def get(self, key: Hashable) -> Optional[Any]:
        """
        Get a value from the table.

        Args:
            key: Memo key

        Returns:
            Stored value or None if not found
        """
        with self._lock:
            return self.table.get(key)

    def set_if_absent(self, key: Hashable, value: Any) -> Any:
        """
        Store a value unless the key is already present.

        Returns:
            The value held by the table after the call
        """
        with self._lock:
            # The first writer wins; racers compute identical values
            return self.table.setdefault(key, value)

    def get_or_compute(self, key: Hashable, compute: Callable[[], Any]) -> Any:
        """Return the stored value, computing it outside the lock when missing."""
        value = self.get(key)
        if value is None:
            value = self.set_if_absent(key, compute())
        return value

    def __len__(self) -> int:
        return len(self.table)
