"""Frontier policies for the graph search."""

import heapq
from abc import ABC, abstractmethod
from collections import deque
from typing import Callable, Deque, Generic, List, Tuple, TypeVar

T = TypeVar("T")


class Frontier(ABC, Generic[T]):
    """Open list of search nodes."""

    @abstractmethod
    def push(self, item: T) -> None:
        """Add a node."""
        raise NotImplementedError

    @abstractmethod
    def pop(self) -> T:
        """Remove and return the next node to expand.

        Raises:
            IndexError: If the frontier is empty
        """
        raise NotImplementedError

    @abstractmethod
    def __len__(self) -> int:
        raise NotImplementedError

    def __bool__(self) -> bool:
        return len(self) > 0


class ScoreFrontier(Frontier[T]):
    """Max-priority queue on a score; ties pop in insertion order."""

    def __init__(self, score: Callable[[T], float]) -> None:
        self._score = score
        self._heap: List[Tuple[float, int, T]] = []
        self._seq = 0

    def push(self, item: T) -> None:
        heapq.heappush(self._heap, (-self._score(item), self._seq, item))
        self._seq += 1

    def pop(self) -> T:
        return heapq.heappop(self._heap)[2]

    def __len__(self) -> int:
        return len(self._heap)


class FifoFrontier(Frontier[T]):
    """Breadth-first order."""

    def __init__(self) -> None:
        self._queue: Deque[T] = deque()

    def push(self, item: T) -> None:
        self._queue.append(item)

    def pop(self) -> T:
        return self._queue.popleft()

    def __len__(self) -> int:
        return len(self._queue)


class LifoFrontier(Frontier[T]):
    """Depth-first order."""

    def __init__(self) -> None:
        self._stack: List[T] = []

    def push(self, item: T) -> None:
        self._stack.append(item)

    def pop(self) -> T:
        return self._stack.pop()

    def __len__(self) -> int:
        return len(self._stack)


def make_frontier(policy: str, score: Callable[[T], float]) -> Frontier[T]:
    """Build the frontier named by ``policy`` (``score``, ``fifo`` or ``lifo``)."""
    if policy == "score":
        return ScoreFrontier(score)
    if policy == "fifo":
        return FifoFrontier()
    if policy == "lifo":
        return LifoFrontier()
    raise ValueError(f"Unknown frontier policy: {policy}")
