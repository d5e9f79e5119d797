"""Reachability oracle interface.

An oracle estimates how many control steps a goal-conditioned controller needs to move
from one state to another. The graph builder treats it as a black box and never assumes
symmetry.
"""

from abc import ABC, abstractmethod
from typing import Sequence

import numpy as np

State = Sequence[float]


class ReachabilityOracle(ABC):
    """Estimated transition steps ``dhat(s, g)`` between states.

    Attributes:
        k: Control steps per graph edge (one signal step)
    """

    def __init__(self, k: int) -> None:
        if k < 1:
            raise ValueError(f"k must be at least 1, got {k}")
        self.k = k

    @abstractmethod
    def distance(self, s: State, g: State) -> float:
        """Estimated control steps from ``s`` to ``g``; ``inf`` when unreachable."""
        raise NotImplementedError

    def distances(self, sources: Sequence[State], g: State) -> np.ndarray:
        """Distances from every source to a single goal.

        Subclasses override this when a batched query is cheaper than repeated calls.
        """
        return np.array([self.distance(s, g) for s in sources], dtype=float)

    def pairwise(self, states: Sequence[State]) -> np.ndarray:
        """Matrix ``D[i, j] = distance(states[i], states[j])``."""
        n = len(states)
        matrix = np.empty((n, n), dtype=float)
        for j, g in enumerate(states):
            matrix[:, j] = self.distances(states, g)
        return matrix
