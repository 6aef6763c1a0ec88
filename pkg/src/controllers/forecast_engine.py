import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from models.config import CenterRule, ForecastConfig
from models.hierarchy import (Hierarchy, LevelForecast, blocks_needed, build_hierarchy,
                              restore_series, splice)
from models.markov import Scenario, TransitionTable, estimate_transitions, generalized_chain, rollout
from models.quantizer import Quantizer, StateSequence, build_quantizer, classify
from models.series import PriceSeries, ReturnsSeries, TrendLine, fit_linear_trend, sample_returns
from utils.errors import ConfigurationError, ForecastError, SizeError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LevelAlphabet:
    """Returns, state alphabet and state sequence of one sampling level"""
    step: int
    returns: ReturnsSeries
    quantizer: Quantizer
    states: StateSequence
    center: int
    warnings: Tuple[str, ...] = ()


@dataclass
class LevelDiagnostics:
    step: int
    s: int
    order: int
    training_states: int
    center: int
    quantizer: Dict[str, Any]
    generalized_states: int
    generalized_transitions: int
    predicted: Dict[str, List[int]] = field(default_factory=dict)
    bifurcations: Dict[str, List[int]] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'step': self.step,
            's': self.s,
            'order': self.order,
            'training_states': self.training_states,
            'center': self.center,
            'quantizer': self.quantizer,
            'generalized_states': self.generalized_states,
            'generalized_transitions': self.generalized_transitions,
            'predicted_states': self.predicted,
            'bifurcations': self.bifurcations,
            'warnings': self.warnings,
        }


@dataclass
class ForecastResult:
    """Spliced forecast per scenario, the trend continuation and diagnostics"""
    scenarios: Dict[Scenario, np.ndarray]
    trend: TrendLine
    trend_path: np.ndarray
    hierarchy: Hierarchy
    anchor: float
    anchor_index: int
    levels: List[LevelDiagnostics] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return self.hierarchy.horizon

    @property
    def indices(self) -> np.ndarray:
        return self.anchor_index + np.arange(self.horizon + 1)

    @property
    def bifurcation_count(self) -> int:
        return sum(len(b) for level in self.levels for b in level.bifurcations.values())

    def central(self) -> np.ndarray:
        """Mean of the computed scenario sequences"""
        return np.mean([self.scenarios[s] for s in Scenario if s in self.scenarios], axis=0)

    def to_columns(self) -> Dict[str, np.ndarray]:
        columns = {'index': self.indices}
        for scenario in Scenario:
            if scenario in self.scenarios:
                columns[scenario.value] = self.scenarios[scenario]
        columns['trend'] = self.trend_path
        return columns

    def diagnostics(self) -> Dict[str, Any]:
        return {
            'anchor': self.anchor,
            'anchor_index': self.anchor_index,
            'requested_horizon': self.hierarchy.requested_horizon,
            'effective_horizon': self.horizon,
            'hierarchy': {'kind': self.hierarchy.kind.value, 'steps': list(self.hierarchy.steps)},
            'trend': {'intercept': self.trend.intercept, 'slope': self.trend.slope},
            'bifurcation_count': self.bifurcation_count,
            'levels': [level.to_dict() for level in self.levels],
        }


def check_series(series: PriceSeries) -> None:
    """Reject a series that cannot form more than one state"""
    if series.has_zero_variance():
        raise ConfigurationError("Series has zero variance; no states can be formed",
                                 {"value": series.last})


def _center_state(returns: ReturnsSeries, q: Quantizer, rule: CenterRule) -> int:
    """Centre of the returns distribution as a state index"""
    if rule is CenterRule.MIDDLE:
        return (q.s + 2) // 2
    # state holding the median training return
    return q.state_of(float(np.median(returns.values)))


def build_level_alphabet(series: PriceSeries, step: int, config: ForecastConfig) -> LevelAlphabet:
    """Returns at this sampling and their state sequence"""
    try:
        returns = sample_returns(series, step, config.returns_mode)
    except SizeError as exc:
        raise ConfigurationError(f"Level {step}: not enough data ({exc.message})",
                                 {"level": step, **exc.context})
    if len(returns) == 0:
        raise ConfigurationError(f"Level {step}: no returns at this sampling", {"level": step})

    warnings = []
    distinct = len(np.unique(returns.values))
    s = config.states_for(step)
    if distinct == 1:
        message = f"Level {step}: returns take a single value, using one state"
        warnings.append(message)
        logger.warning(message)
        q = Quantizer.single_state(float(returns.values[0]), step, returns.mode, len(returns))
    else:
        if s > distinct:
            message = f"Level {step}: {s} states requested but only {distinct} distinct returns"
            warnings.append(message)
            logger.warning(message)
            s = distinct
        q = build_quantizer(returns, s, config.quantizer, config.combined_k)

    states = classify(returns, q)
    return LevelAlphabet(step, returns, q, states, _center_state(returns, q, config.center),
                         tuple(warnings))


def build_level_table(alphabet: LevelAlphabet, order: int) -> TransitionTable:
    """Transition statistics of the level's generalized states"""
    if len(alphabet.states) < order + 1:
        raise ConfigurationError(
            f"Level {alphabet.step}: {len(alphabet.states)} states, order {order} needs {order + 1}",
            {"level": alphabet.step, "states": len(alphabet.states), "order": order})
    return estimate_transitions(alphabet.states, order)


def forecast(series: PriceSeries, config: ForecastConfig) -> ForecastResult:
    """Multiscale forecast: per-level predictions spliced coarse over fine, then the trend"""
    check_series(series)
    hierarchy = build_hierarchy(config.horizon, config.hierarchy)
    horizon = hierarchy.horizon
    if horizon != config.horizon:
        logger.info(f"Horizon {config.horizon} rounded down to {horizon}")
    anchor = series.last
    scenarios = config.scenario.scenarios

    running: Dict[Scenario, Optional[np.ndarray]] = {scenario: None for scenario in scenarios}
    levels = []
    for step in hierarchy.steps:
        alphabet = build_level_alphabet(series, step, config)
        order = config.order_for(step)
        table = build_level_table(alphabet, order)
        chain = generalized_chain(table)
        diagnostics = LevelDiagnostics(
            step=step, s=alphabet.quantizer.s, order=order,
            training_states=len(alphabet.states), center=alphabet.center,
            quantizer=alphabet.quantizer.to_dict(),
            generalized_states=chain.number_of_nodes(),
            generalized_transitions=chain.number_of_edges(),
            warnings=list(alphabet.warnings))

        seed = alphabet.states.tail(order)
        for scenario in scenarios:
            path = rollout(table, seed, blocks_needed(step, horizon), config.delta, config.n_min,
                           alphabet.center, scenario, step)
            restored = restore_series(anchor, path.states, alphabet.quantizer, step, horizon)
            if running[scenario] is None:
                running[scenario] = restored.values
            else:
                running[scenario] = splice(running[scenario], restored, step)
            diagnostics.predicted[scenario.value] = path.states.states.tolist()
            diagnostics.bifurcations[scenario.value] = list(path.bifurcations)

        logger.info(f"Level {step}: s={alphabet.quantizer.s} r={order} "
                    f"states={len(alphabet.states)} "
                    f"bifurcations={sum(len(b) for b in diagnostics.bifurcations.values())}")
        levels.append(diagnostics)

    trend = fit_linear_trend(series)
    trend_path = trend.continuation(anchor, horizon)
    trend_level = LevelForecast(horizon, trend_path, np.array([0, horizon]))
    final = {scenario: splice(running[scenario], trend_level, horizon) for scenario in scenarios}

    return ForecastResult(final, trend, trend_path, hierarchy, anchor,
                          int(series.indices[-1]), levels)


def try_forecast(series: PriceSeries, config: ForecastConfig) -> Tuple[Optional[ForecastResult], Optional[ForecastError]]:
    """Forecast, returning the error instead of raising it"""
    try:
        return forecast(series, config), None
    except ForecastError as exc:
        return None, exc
