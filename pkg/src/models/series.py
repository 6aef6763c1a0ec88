from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from utils.errors import ContractError, DegenerateRangeError, DomainError, SizeError


class ReturnsMode(Enum):
    ABSOLUTE = "abs"
    RELATIVE = "rel"


def _frozen_array(values, dtype=float) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class PriceSeries:
    """Uniformly sampled price levels p(t0 + i*dt)"""
    values: np.ndarray
    origin_index: int = 0
    step_label: str = "1"

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.ndim != 1:
            raise ContractError("Price series must be one-dimensional")
        if len(values) < 2:
            raise SizeError(f"Price series needs at least 2 values, got {len(values)}",
                            {"length": int(len(values))})
        if not np.all(np.isfinite(values)):
            raise DomainError("Price series contains non-finite values")
        object.__setattr__(self, 'values', values)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def last(self) -> float:
        return float(self.values[-1])

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.origin_index, self.origin_index + len(self.values))

    def tail(self, length: int) -> 'PriceSeries':
        """Suffix window of the given length ending at the last sample"""
        if length < 2 or length > len(self):
            raise SizeError(f"Cannot take a window of {length} from a series of {len(self)}",
                            {"length": length, "available": len(self)})
        start = len(self) - length
        return PriceSeries(self.values[start:], self.origin_index + start, self.step_label)

    def has_zero_variance(self) -> bool:
        return bool(np.max(self.values) == np.min(self.values))


@dataclass(frozen=True)
class ReturnsSeries:
    """Increments of a price series at lag `step`"""
    values: np.ndarray
    step: int
    mode: ReturnsMode

    def __post_init__(self):
        object.__setattr__(self, 'values', _frozen_array(self.values))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class TrendLine:
    intercept: float
    slope: float

    def __post_init__(self):
        if not (np.isfinite(self.intercept) and np.isfinite(self.slope)):
            raise DomainError("Trend coefficients must be finite")

    def at(self, index) -> np.ndarray:
        """Evaluate intercept + slope * index"""
        return self.intercept + self.slope * np.asarray(index, dtype=float)

    def continuation(self, anchor: float, horizon: int) -> np.ndarray:
        """Slope continued from the anchor price over indices 0..horizon"""
        return anchor + self.slope * np.arange(horizon + 1, dtype=float)


def _returns(earlier: np.ndarray, later: np.ndarray, mode: ReturnsMode) -> np.ndarray:
    diff = later - earlier
    if mode is ReturnsMode.ABSOLUTE:
        return diff
    # divides by the later price
    zero = np.flatnonzero(later == 0.0)
    if len(zero):
        raise DomainError("Relative returns need nonzero prices at the later position",
                          {"positions": zero[:10].tolist()})
    return diff / later


def compute_returns(series: PriceSeries, step: int, mode: ReturnsMode) -> ReturnsSeries:
    """Overlapping returns r[k] = f(p[k], p[k + step]) for every k"""
    if step < 1:
        raise DomainError(f"Returns step must be positive, got {step}")
    if step >= len(series):
        raise SizeError(f"Returns step {step} needs more than {len(series)} values",
                        {"step": step, "length": len(series)})
    values = series.values
    return ReturnsSeries(_returns(values[:-step], values[step:], mode), step, mode)


def sample_offset(length: int, step: int) -> int:
    """First position of the step-sampling grid that ends at the last sample"""
    return (length - 1) % step


def sample_returns(series: PriceSeries, step: int, mode: ReturnsMode) -> ReturnsSeries:
    """Non-overlapping returns of the series sampled every `step` points

    The sampling grid is aligned so that its last point is the last known
    price, which is where every level's prediction is anchored.
    """
    if step < 1:
        raise DomainError(f"Returns step must be positive, got {step}")
    if step >= len(series):
        raise SizeError(f"Sampling step {step} needs more than {len(series)} values",
                        {"step": step, "length": len(series)})
    sampled = series.values[sample_offset(len(series), step)::step]
    return ReturnsSeries(_returns(sampled[:-1], sampled[1:], mode), step, mode)


def normalize(values: Sequence[float]) -> np.ndarray:
    """Min-max normalization to [0, 1]"""
    y = np.asarray(values, dtype=float)
    if y.size == 0:
        raise SizeError("Cannot normalize an empty sequence")
    low, high = np.min(y), np.max(y)
    if not high > low:
        raise DegenerateRangeError("Cannot normalize a constant sequence",
                                   {"value": float(low)})
    return (y - low) / (high - low)


def fit_linear_trend(series: PriceSeries) -> TrendLine:
    """Least-squares line over (position, value) of all known points"""
    index = np.arange(len(series), dtype=float)
    design = np.column_stack([np.ones_like(index), index])
    (intercept, slope), *_ = np.linalg.lstsq(design, series.values, rcond=None)
    return TrendLine(float(intercept), float(slope))
