import logging
import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from controllers.forecast_engine import build_level_alphabet, check_series, try_forecast
from models.config import ForecastConfig
from models.hierarchy import build_hierarchy, restore_series, splice
from models.series import PriceSeries
from utils.errors import (ConfigurationError, ContractError, InputNotFoundError,
                          InputParseError, SizeError)

logger = logging.getLogger(__name__)


class ErrorStats(NamedTuple):
    max_abs: float
    rms: float

    @classmethod
    def of(cls, error: np.ndarray) -> 'ErrorStats':
        """Maximum absolute and root-mean-square error"""
        return cls(float(np.max(np.abs(error))), float(np.sqrt(np.mean(error ** 2))))


@dataclass
class QuantizationReport:
    """Restoration error of the known window from its own state sequences"""
    window: int
    levels: List[Tuple[int, int, ErrorStats]]
    spliced: ErrorStats

    def to_dict(self) -> Dict[str, Any]:
        return {
            'window': self.window,
            'levels': [{'step': step, 's': s, 'max_abs': stats.max_abs, 'rms': stats.rms}
                       for step, s, stats in self.levels],
            'spliced': {'max_abs': self.spliced.max_abs, 'rms': self.spliced.rms},
        }


def quantization_error(series: PriceSeries, config: ForecastConfig) -> QuantizationReport:
    """Sample, classify, restore and splice the known window without prediction

    The window is the longest suffix whose length is a multiple of every
    hierarchy step, so each level's grid starts at the window's first point.
    """
    check_series(series)
    hierarchy = build_hierarchy(config.horizon, config.hierarchy)
    period = int(np.lcm.reduce(np.array(hierarchy.steps)))
    window = ((len(series) - 1) // period) * period
    if window == 0:
        raise ConfigurationError(f"Series of {len(series)} values is shorter than one "
                                 f"period of the hierarchy ({period})",
                                 {"length": len(series), "period": period})
    known = series.tail(window + 1)
    actual = known.values
    check_series(known)

    levels = []
    running = None
    for step in hierarchy.steps:
        alphabet = build_level_alphabet(known, step, config)
        restored = restore_series(float(actual[0]), alphabet.states, alphabet.quantizer,
                                  step, window)
        levels.append((step, alphabet.quantizer.s, ErrorStats.of(restored.values - actual)))
        running = restored.values if running is None else splice(running, restored, step)

    report = QuantizationReport(window, levels, ErrorStats.of(running - actual))
    logger.info(f"Quantization error over {window} steps: rms={report.spliced.rms:.6g} "
                f"max={report.spliced.max_abs:.6g}")
    return report


@dataclass
class EnsembleResult:
    """Forecasts from different learning-set lengths sharing one anchor"""
    members: List[Tuple[int, np.ndarray]]
    mean: np.ndarray
    std: np.ndarray
    anchor_index: int = 0
    skipped: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def indices(self) -> np.ndarray:
        return self.anchor_index + np.arange(len(self.mean))

    def to_columns(self) -> Dict[str, np.ndarray]:
        columns = {'index': self.indices}
        for length, values in self.members:
            columns[f'len_{length}'] = values
        columns['mean'] = self.mean
        columns['std'] = self.std
        return columns


def ensemble_statistics(members: Sequence[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    """Per-index mean and population standard deviation"""
    lengths = {len(m) for m in members}
    if len(lengths) != 1:
        raise ContractError("Ensemble members differ in length", {"lengths": sorted(lengths)})
    matrix = np.vstack(members)
    return matrix.mean(axis=0), matrix.std(axis=0)


def walk_forward(series: PriceSeries, learning_lengths: Sequence[int], config: ForecastConfig,
                 workers: int = 1) -> EnsembleResult:
    """One forecast per learning length, all anchored at the series' last point"""
    if not learning_lengths:
        raise ConfigurationError("No learning lengths given")
    duplicates = sorted(length for length, n in Counter(learning_lengths).items() if n > 1)
    if duplicates:
        raise ConfigurationError(f"Duplicate learning lengths: {duplicates}",
                                 {"duplicates": duplicates})

    def run_member(length: int):
        if length < 2 or length > len(series):
            return None, SizeError(f"Learning length {length} outside [2, {len(series)}]",
                                   {"length": length, "available": len(series)})
        return try_forecast(series.tail(length), config)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_member, learning_lengths))
    else:
        outcomes = [run_member(length) for length in learning_lengths]

    members, skipped = [], []
    for length, (result, error) in zip(learning_lengths, outcomes):
        if error is not None:
            logger.warning(f"Learning length {length} skipped: {error.message}")
            skipped.append({'learning_length': length, 'code': error.code,
                            'message': error.message})
            continue
        members.append((length, result.central()))

    if not members:
        raise ConfigurationError("No feasible learning length", {"skipped": skipped})
    mean, std = ensemble_statistics([values for _, values in members])
    logger.info(f"Ensemble of {len(members)} members, {len(skipped)} skipped")
    return EnsembleResult(members, mean, std, int(series.indices[-1]), skipped)


@dataclass(frozen=True)
class WeightSet:
    labels: Tuple[str, ...]
    weights: Tuple[float, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.weights):
            raise ContractError("Labels and weights differ in count")
        if any(not math.isfinite(w) or w < 0 for w in self.weights):
            raise ConfigurationError("Weights must be finite and nonnegative",
                                     {"weights": list(self.weights)})
        if not sum(self.weights) > 0:
            raise ConfigurationError("Weights must have a positive sum")

    @classmethod
    def uniform(cls, labels: Sequence[str]) -> 'WeightSet':
        return cls(tuple(labels), tuple(1.0 for _ in labels))

    @classmethod
    def from_csv(cls, path: str) -> 'WeightSet':
        """Read a two-column (label, weight) CSV with optional header"""
        if not os.path.isfile(path):
            raise InputNotFoundError(f"Weights file not found: {path}", {"path": path})
        frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False)
        if frame.shape[1] < 2:
            raise InputParseError("Weights file needs two columns (label, weight)", {"path": path})
        weights = pd.to_numeric(frame.iloc[:, 1].str.strip(), errors='coerce')
        if len(frame) and np.isnan(weights.iloc[0]):
            frame, weights = frame.iloc[1:], weights.iloc[1:]
        bad = np.flatnonzero(np.isnan(weights.to_numpy(dtype=float)))
        if len(bad):
            raise InputParseError(f"Non-numeric weight in {path}",
                                  {"path": path, "rows": (bad + 1).tolist()})
        labels = tuple(frame.iloc[:, 0].str.strip())
        return cls(labels, tuple(float(w) for w in weights))

    def aligned(self, labels: Sequence[str]) -> np.ndarray:
        """Weights in the order of the given labels"""
        lookup = dict(zip(self.labels, self.weights))
        missing = [label for label in labels if label not in lookup]
        if missing:
            raise ContractError(f"No weight for {missing}", {"missing": missing})
        return np.array([lookup[label] for label in labels])


def weighted_mean(forecasts: Sequence[Sequence[float]],
                  weights: Union[WeightSet, Sequence[float]]) -> np.ndarray:
    """Per-index weighted average of normalized member sequences"""
    if isinstance(weights, WeightSet):
        w = np.array(weights.weights, dtype=float)
    else:
        w = np.asarray(weights, dtype=float)
    if len(forecasts) == 0:
        raise ContractError("No sequences to average")
    if len(w) != len(forecasts):
        raise ContractError(f"{len(w)} weights for {len(forecasts)} sequences")
    lengths = {len(f) for f in forecasts}
    if len(lengths) != 1:
        raise ContractError("Sequences differ in length", {"lengths": sorted(lengths)})
    if np.any(w < 0) or not w.sum() > 0:
        raise ConfigurationError("Weights must be nonnegative with a positive sum")
    matrix = np.vstack([np.asarray(f, dtype=float) for f in forecasts])
    return w @ matrix / w.sum()
