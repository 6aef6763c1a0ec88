import os
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

from models.hierarchy import HierarchyKind
from models.markov import Scenario
from models.quantizer import QuantizerMethod
from models.series import ReturnsMode
from utils.errors import ConfigurationError, InputNotFoundError


class ScenarioSelection(Enum):
    LOWER = "lower"
    UPPER = "upper"
    BOTH = "both"

    @property
    def scenarios(self) -> Tuple[Scenario, ...]:
        if self is ScenarioSelection.BOTH:
            return (Scenario.LOWER, Scenario.UPPER)
        return (Scenario(self.value),)


class CenterRule(Enum):
    MEDIAN_STATE = "median"
    MIDDLE = "middle"


@dataclass(frozen=True)
class ForecastConfig:
    """Parameters of the multiscale prediction"""
    states: int = 4
    order: int = 2
    delta: float = 0.0
    n_min: int = 1
    horizon: int = 16
    hierarchy: HierarchyKind = HierarchyKind.POWERS_OF_TWO
    returns_mode: ReturnsMode = ReturnsMode.RELATIVE
    quantizer: QuantizerMethod = QuantizerMethod.EQUAL_COUNT
    combined_k: float = 3.0
    scenario: ScenarioSelection = ScenarioSelection.BOTH
    center: CenterRule = CenterRule.MEDIAN_STATE
    level_states: Mapping[int, int] = field(default_factory=dict)
    level_orders: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        """Validate configuration parameters"""
        if self.states < 2:
            raise ConfigurationError("Number of states must be at least 2", {"states": self.states})
        if self.order < 1:
            raise ConfigurationError("Markov order must be at least 1", {"order": self.order})
        if not 0.0 <= self.delta <= 1.0:
            raise ConfigurationError("Delta must lie in [0, 1]", {"delta": self.delta})
        if self.n_min < 1:
            raise ConfigurationError("Minimal number of transitions must be at least 1",
                                     {"nmin": self.n_min})
        if self.horizon < 1:
            raise ConfigurationError("Horizon must be at least 1", {"horizon": self.horizon})
        if self.combined_k <= 0:
            raise ConfigurationError("Combined-method multiplier must be positive",
                                     {"combined_k": self.combined_k})
        for name, overrides, minimum in (("level_states", self.level_states, 2),
                                         ("level_orders", self.level_orders, 1)):
            for step, value in overrides.items():
                if step < 1 or value < minimum:
                    raise ConfigurationError(f"Invalid {name} override {step}:{value}",
                                             {name: dict(overrides)})
        object.__setattr__(self, 'level_states', dict(sorted(self.level_states.items())))
        object.__setattr__(self, 'level_orders', dict(sorted(self.level_orders.items())))

    def states_for(self, step: int) -> int:
        return self.level_states.get(step, self.states)

    def order_for(self, step: int) -> int:
        return self.level_orders.get(step, self.order)

    def to_text(self) -> str:
        """Serialize to the flat key-value file format"""
        lines = []
        for key, attribute in FILE_KEYS.items():
            lines.append(f"{key} = {_format_value(getattr(self, attribute))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, base: Optional['ForecastConfig'] = None) -> 'ForecastConfig':
        return (base or cls()).with_values(parse_config_text(text))

    def with_values(self, values: Mapping[str, Any]) -> 'ForecastConfig':
        """Copy with file-key values (strings or typed) applied"""
        changes = {}
        for key, raw in values.items():
            if raw is None:
                continue
            if key not in FILE_KEYS:
                raise ConfigurationError(f"Unknown configuration key '{key}'", {"key": key})
            attribute = FILE_KEYS[key]
            changes[attribute] = _PARSERS[attribute](raw) if isinstance(raw, str) else raw
        try:
            return replace(self, **changes)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(str(exc)) from exc


def _parse_overrides(text: str) -> Dict[int, int]:
    overrides = {}
    for item in filter(None, (part.strip() for part in text.split(','))):
        step, _, value = item.partition(':')
        if not value:
            raise ConfigurationError(f"Override '{item}' must be written step:value")
        try:
            overrides[int(step)] = int(value)
        except ValueError:
            raise ConfigurationError(f"Override '{item}' must use integers")
    return overrides


def _enum_parser(enum_cls) -> Callable[[str], Enum]:
    def parse(raw: str) -> Enum:
        try:
            return enum_cls(raw.strip())
        except ValueError:
            choices = ", ".join(e.value for e in enum_cls)
            raise ConfigurationError(f"'{raw}' is not one of: {choices}")
    return parse


def _number_parser(kind: Callable[[str], Any]) -> Callable[[str], Any]:
    def parse(raw: str) -> Any:
        try:
            return kind(raw.strip())
        except ValueError:
            raise ConfigurationError(f"'{raw}' is not a valid {kind.__name__}")
    return parse


def _format_value(value: Any) -> str:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Mapping):
        return ",".join(f"{k}:{v}" for k, v in value.items())
    return repr(value) if isinstance(value, float) else str(value)


# file keys and command-line flag names -> ForecastConfig attributes
FILE_KEYS: Dict[str, str] = {
    'states': 'states',
    'order': 'order',
    'delta': 'delta',
    'nmin': 'n_min',
    'horizon': 'horizon',
    'hierarchy': 'hierarchy',
    'returns': 'returns_mode',
    'quantizer': 'quantizer',
    'combined_k': 'combined_k',
    'scenario': 'scenario',
    'center': 'center',
    'level_states': 'level_states',
    'level_orders': 'level_orders',
}

_PARSERS: Dict[str, Callable[[str], Any]] = {
    'states': _number_parser(int),
    'order': _number_parser(int),
    'delta': _number_parser(float),
    'n_min': _number_parser(int),
    'horizon': _number_parser(int),
    'hierarchy': _enum_parser(HierarchyKind),
    'returns_mode': _enum_parser(ReturnsMode),
    'quantizer': _enum_parser(QuantizerMethod),
    'combined_k': _number_parser(float),
    'scenario': _enum_parser(ScenarioSelection),
    'center': _enum_parser(CenterRule),
    'level_states': _parse_overrides,
    'level_orders': _parse_overrides,
}


def parse_config_text(text: str) -> Dict[str, str]:
    """Parse `key = value` lines, ignoring blanks and # comments"""
    values = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        if not sep:
            raise ConfigurationError(f"Line {number} is not a key = value pair", {"line": number})
        values[key.strip()] = value.strip()
    return values


def load_config(path: Optional[str], overrides: Optional[Mapping[str, Any]] = None) -> ForecastConfig:
    """Layer defaults, the config file, then explicit overrides"""
    config = ForecastConfig()
    if path:
        if not os.path.isfile(path):
            raise InputNotFoundError(f"Config file not found: {path}", {"path": path})
        with open(path, 'r') as f:
            config = ForecastConfig.from_text(f.read())
    if overrides:
        config = config.with_values(overrides)
    return config
