import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List

import numpy as np

from models.series import ReturnsMode, ReturnsSeries
from utils.errors import (ContractError, DegenerateRangeError, DomainError,
                          InfeasibleAlphabetError, SizeError)

logger = logging.getLogger(__name__)


class QuantizerMethod(Enum):
    EQUAL_COUNT = "count"
    EQUAL_WIDTH = "width"
    COMBINED = "combined"


@dataclass(frozen=True)
class Quantizer:
    """State alphabet: interval boundaries and a representative increment per state

    State i (1-based) covers [boundaries[i-2], boundaries[i-1]); the first and
    the last states are unbounded below and above.
    """
    s: int
    boundaries: np.ndarray
    means: np.ndarray
    method: QuantizerMethod
    mode: ReturnsMode
    step: int
    counts: np.ndarray

    def __post_init__(self):
        boundaries = np.array(self.boundaries, dtype=float)
        means = np.array(self.means, dtype=float)
        counts = np.array(self.counts, dtype=int)
        if len(boundaries) != self.s - 1 or len(means) != self.s or len(counts) != self.s:
            raise ContractError("Quantizer arrays do not match its alphabet size",
                                {"s": self.s})
        if np.any(np.diff(boundaries) <= 0):
            raise ContractError("Quantizer boundaries must be strictly increasing")
        for array in (boundaries, means, counts):
            array.setflags(write=False)
        object.__setattr__(self, 'boundaries', boundaries)
        object.__setattr__(self, 'means', means)
        object.__setattr__(self, 'counts', counts)

    @classmethod
    def single_state(cls, value: float, step: int, mode: ReturnsMode,
                     count: int = 1) -> 'Quantizer':
        """One-state alphabet for a level whose returns take a single value"""
        return cls(1, np.empty(0), np.array([value]), QuantizerMethod.EQUAL_COUNT,
                   mode, step, np.array([count]))

    def state_of(self, value: float) -> int:
        """1-based state whose half-open interval holds the value"""
        return int(np.searchsorted(self.boundaries, value, side='right')) + 1

    def to_dict(self) -> Dict[str, Any]:
        """JSON form used in the level diagnostics"""
        return {
            's': self.s,
            'step': self.step,
            'mode': self.mode.value,
            'method': self.method.value,
            'boundaries': self.boundaries.tolist(),
            'means': self.means.tolist(),
            'counts': self.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Quantizer':
        """Inverse of `to_dict`"""
        return cls(
            int(data['s']),
            np.array(data['boundaries'], dtype=float),
            np.array(data['means'], dtype=float),
            QuantizerMethod(data['method']),
            ReturnsMode(data['mode']),
            int(data['step']),
            np.array(data['counts'], dtype=int),
        )


@dataclass(frozen=True)
class StateSequence:
    """Discrete states in [1..s] at sampling step `step`"""
    states: np.ndarray
    s: int
    step: int

    def __post_init__(self):
        states = np.array(self.states, dtype=int)
        if states.size and (states.min() < 1 or states.max() > self.s):
            raise DomainError(f"States must lie in [1..{self.s}]")
        states.setflags(write=False)
        object.__setattr__(self, 'states', states)

    def __len__(self) -> int:
        return len(self.states)

    def tail(self, length: int) -> tuple:
        return tuple(int(x) for x in self.states[len(self.states) - length:])


def _equal_count_boundaries(ordered: np.ndarray, s: int) -> List[float]:
    n = len(ordered)
    positions = np.rint(np.arange(1, s) * n / s).astype(int)
    positions = np.clip(positions, 1, n - 1)
    return [(ordered[p - 1] + ordered[p]) / 2.0 for p in positions]


def _equal_width_boundaries(low: float, high: float, s: int) -> List[float]:
    return [low + (high - low) * j / s for j in range(1, s)]


def _combined_boundaries(values: np.ndarray, s: int, k: float) -> List[float]:
    mean, sigma = float(np.mean(values)), float(np.std(values))
    if s == 2:
        return [mean]
    return list(np.linspace(mean - k * sigma, mean + k * sigma, s - 1))


def _counts(values: np.ndarray, boundaries: List[float], s: int) -> np.ndarray:
    states = np.searchsorted(np.asarray(boundaries, dtype=float), values, side='right')
    return np.bincount(states, minlength=s)


def _split_point(members: np.ndarray):
    """Cut between distinct values closest to the middle of a sorted state"""
    distinct = np.unique(members)
    if len(distinct) < 2:
        return None
    ordered = np.sort(members)
    middle = len(ordered) / 2.0
    best = None
    for left, right in zip(distinct[:-1], distinct[1:]):
        position = np.searchsorted(ordered, right, side='left')
        distance = abs(position - middle)
        if best is None or distance < best[0]:
            best = (distance, (left + right) / 2.0)
    return best[1]


def _repair(values: np.ndarray, boundaries: List[float], s: int) -> List[float]:
    """Merge empty states into a neighbour and re-split the most populous state"""
    boundaries = sorted(boundaries)
    ordered = np.sort(values)
    iterations = 0
    while True:
        counts = _counts(ordered, boundaries, s)
        empty = np.flatnonzero(counts == 0)
        if len(empty) == 0:
            return boundaries
        iterations += 1
        state = int(empty[0])
        # merge toward the lower neighbour when there is one
        del boundaries[state - 1 if state > 0 else 0]

        merged_counts = _counts(ordered, boundaries, s - 1)
        edges = [-np.inf] + boundaries + [np.inf]
        candidates = sorted(range(s - 1), key=lambda i: (-merged_counts[i], i))
        for target in candidates:
            members = ordered[(ordered >= edges[target]) & (ordered < edges[target + 1])]
            cut = _split_point(members)
            if cut is not None:
                boundaries.insert(target, cut)
                break
        else:
            raise InfeasibleAlphabetError("Cannot repair the state division", {"s": s})
        logger.debug(f"Quantizer repair {iterations}: merged state {state + 1}, "
                     f"re-split state {target + 1}")


def build_quantizer(returns: ReturnsSeries, s: int,
                    method: QuantizerMethod = QuantizerMethod.EQUAL_COUNT,
                    k: float = 3.0) -> Quantizer:
    """Build the state alphabet from a returns sample"""
    values = np.asarray(returns.values, dtype=float)
    if s < 2:
        raise DomainError(f"Number of states must be at least 2, got {s}")
    if len(values) < s:
        raise SizeError(f"Need at least {s} returns to build {s} states, got {len(values)}",
                        {"s": s, "length": int(len(values))})
    distinct = len(np.unique(values))
    if distinct == 1:
        raise DegenerateRangeError("All returns are identical", {"value": float(values[0])})
    if s > distinct:
        raise InfeasibleAlphabetError(
            f"{s} states requested but only {distinct} distinct returns",
            {"s": s, "distinct": distinct})

    if method is QuantizerMethod.EQUAL_COUNT:
        boundaries = _equal_count_boundaries(np.sort(values), s)
    elif method is QuantizerMethod.EQUAL_WIDTH:
        boundaries = _equal_width_boundaries(float(values.min()), float(values.max()), s)
    else:
        if k <= 0:
            raise DomainError(f"Combined-method multiplier must be positive, got {k}")
        boundaries = _combined_boundaries(values, s, k)

    boundaries = _repair(values, boundaries, s)
    states = np.searchsorted(np.asarray(boundaries), values, side='right')
    counts = np.bincount(states, minlength=s)
    means = np.array([values[states == i].mean() for i in range(s)])
    return Quantizer(s, np.asarray(boundaries), means, method, returns.mode, returns.step, counts)


def classify(returns: ReturnsSeries, q: Quantizer) -> StateSequence:
    """Map every return to the state whose half-open interval contains it"""
    if returns.mode is not q.mode or returns.step != q.step:
        raise ContractError("Returns do not match the quantizer's mode and step",
                            {"returns_step": returns.step, "quantizer_step": q.step,
                             "returns_mode": returns.mode.value, "quantizer_mode": q.mode.value})
    states = np.searchsorted(q.boundaries, returns.values, side='right') + 1
    return StateSequence(states, q.s, q.step)


def dequantize(states: StateSequence, q: Quantizer) -> np.ndarray:
    """Replace each state with its representative increment"""
    if states.s != q.s:
        raise ContractError(f"Alphabet size {states.s} does not match quantizer size {q.s}")
    indices = np.asarray(states.states, dtype=int)
    if indices.size == 0:
        return np.empty(0)
    if indices.min() < 1 or indices.max() > q.s:
        raise DomainError(f"States must lie in [1..{q.s}]")
    return q.means[indices - 1]
