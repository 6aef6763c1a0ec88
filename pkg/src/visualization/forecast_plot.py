import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from controllers.evaluation import EnsembleResult
from controllers.forecast_engine import ForecastResult
from models.markov import Scenario
from models.series import PriceSeries

# Colors
HISTORY_COLOR = (0.38, 0.69, 0.94)
SCENARIO_COLORS = {Scenario.LOWER: (0.88, 0.42, 0.46), Scenario.UPPER: (0.60, 0.76, 0.47)}
TREND_COLOR = (0.6, 0.6, 0.6)


def _finish(fig, ax, path: str, title: str) -> None:
    ax.set_title(title)
    ax.set_xlabel("index")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def plot_forecast(series: PriceSeries, result: ForecastResult, path: str,
                  history_points: int = 200) -> None:
    """Known tail, both scenarios and the trend continuation"""
    fig, ax = plt.subplots(figsize=(10, 5))
    shown = min(history_points, len(series))
    ax.plot(series.indices[-shown:], series.values[-shown:], color=HISTORY_COLOR, label="known")
    for scenario, values in result.scenarios.items():
        ax.plot(result.indices, values, color=SCENARIO_COLORS[scenario], label=scenario.value)
    ax.plot(result.indices, result.trend_path, color=TREND_COLOR, linestyle="--", label="trend")
    _finish(fig, ax, path, f"Forecast, horizon {result.horizon}")


def plot_ensemble(result: EnsembleResult, path: str) -> None:
    """Members with the mean and a one-std band"""
    fig, ax = plt.subplots(figsize=(10, 5))
    for length, values in result.members:
        ax.plot(result.indices, values, linewidth=0.8, alpha=0.6, label=f"learning {length}")
    ax.plot(result.indices, result.mean, color="black", linewidth=1.6, label="mean")
    ax.fill_between(result.indices, result.mean - result.std, result.mean + result.std,
                    color=TREND_COLOR, alpha=0.3, label="std")
    _finish(fig, ax, path, f"Ensemble of {len(result.members)} learning lengths")
