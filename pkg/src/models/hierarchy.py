import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Tuple

import numpy as np

from models.quantizer import Quantizer, StateSequence, dequantize
from models.series import ReturnsMode
from utils.errors import ContractError, DomainError, SizeError

# tolerance for comparing the anchors of the two spliced sequences
ANCHOR_TOLERANCE = 1e-9


class HierarchyKind(Enum):
    POWERS_OF_TWO = "pow2"
    SMOOTH_PRODUCTS = "smooth"


@dataclass(frozen=True)
class Hierarchy:
    """Ascending sampling steps and the horizon they cover"""
    steps: Tuple[int, ...]
    kind: HierarchyKind
    horizon: int
    requested_horizon: int

    @property
    def max_step(self) -> int:
        return self.steps[-1]


@dataclass(frozen=True)
class LevelForecast:
    """Restored path of one sampling level over indices 0..horizon"""
    step: int
    values: np.ndarray
    system_indices: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        indices = np.array(self.system_indices, dtype=int)
        values.setflags(write=False)
        indices.setflags(write=False)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'system_indices', indices)

    @property
    def horizon(self) -> int:
        return len(self.values) - 1

    @property
    def anchor(self) -> float:
        return float(self.values[0])


def _powers_of_two(limit: int) -> list:
    steps = [1]
    while steps[-1] * 2 <= limit:
        steps.append(steps[-1] * 2)
    return steps


def _smooth_products(limit: int) -> list:
    steps = set()
    power_of_two = 1
    while power_of_two <= limit:
        value = power_of_two
        while value <= limit:
            steps.add(value)
            value *= 3
        power_of_two *= 2
    return sorted(steps)


def build_hierarchy(horizon: int, kind: HierarchyKind = HierarchyKind.POWERS_OF_TWO) -> Hierarchy:
    """Generate the hierarchy of time increments for a prediction horizon"""
    if horizon < 1:
        raise DomainError(f"Horizon must be at least 1, got {horizon}")
    if kind is HierarchyKind.POWERS_OF_TWO:
        steps = _powers_of_two(horizon)
    else:
        steps = _smooth_products(horizon)
    effective = (horizon // steps[-1]) * steps[-1]
    return Hierarchy(tuple(steps), kind, effective, horizon)


def system_indices(step: int, horizon: int) -> np.ndarray:
    """System points of a level: every `step`-th index from 0 to the horizon"""
    return np.arange(0, horizon + 1, step)


def blocks_needed(step: int, horizon: int) -> int:
    """Number of predicted states covering the horizon at this step"""
    return math.ceil(horizon / step)


def restore_series(anchor: float, states: StateSequence, q: Quantizer, step: int,
                   horizon: int) -> LevelForecast:
    """Restore a price path from predicted states

    System points accumulate the state means; points in between are linear
    interpolations of their two neighbouring system points.
    """
    if q.step != step:
        raise ContractError(f"Quantizer step {q.step} does not match level step {step}")
    blocks = blocks_needed(step, horizon)
    if len(states) != blocks:
        raise SizeError(f"Level {step} needs {blocks} states for horizon {horizon}, got {len(states)}",
                        {"step": step, "expected": blocks, "length": len(states)})

    increments = dequantize(states, q)
    if q.mode is ReturnsMode.ABSOLUTE:
        system = anchor + np.concatenate([[0.0], np.cumsum(increments)])
    else:
        # inverse of r = (p_t - p_{t-dt}) / p_t
        factors = 1.0 - increments
        if np.any(factors <= 0):
            raise DomainError("Relative increment of 1 or more cannot be restored",
                              {"step": step})
        system = anchor / np.concatenate([[1.0], np.cumprod(factors)])

    offsets = np.arange(step) / step
    inner = system[:-1, None] + offsets[None, :] * np.diff(system)[:, None]
    values = np.concatenate([inner.ravel(), system[-1:]])[:horizon + 1]
    return LevelForecast(step, values, system_indices(step, horizon))


def splice(fine: Sequence[float], coarse: LevelForecast, step: int) -> np.ndarray:
    """Pin the fine sequence to the coarse level's system points

    The correction y - g at the coarse system points is interpolated linearly
    in between and added to g, so the result keeps g's detail between system
    points and equals y on them.
    """
    g = np.asarray(fine, dtype=float)
    y = coarse.values
    if len(g) != len(y):
        raise ContractError(f"Spliced sequences differ in length: {len(g)} vs {len(y)}",
                            {"fine": len(g), "coarse": len(y)})
    if not math.isclose(g[0], y[0], rel_tol=ANCHOR_TOLERANCE, abs_tol=ANCHOR_TOLERANCE):
        raise ContractError("Spliced sequences do not share an anchor",
                            {"fine": float(g[0]), "coarse": float(y[0])})
    horizon = len(g) - 1
    nodes = system_indices(step, horizon)
    if nodes[-1] != horizon:
        nodes = np.append(nodes, horizon)
    correction = y[nodes] - g[nodes]
    return g + np.interp(np.arange(horizon + 1), nodes, correction)
