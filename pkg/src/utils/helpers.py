import os
import json
import logging
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'
FLOAT_FORMAT = '%.12g'


def setup_logging(log_file: Optional[str] = None, level: int = logging.INFO) -> logging.Logger:
    """Set up logging configuration"""
    logger = logging.getLogger()
    logger.setLevel(level)
    for handler in list(logger.handlers):
        if getattr(handler, "_markov_forecast", False):
            logger.removeHandler(handler)
            handler.close()

    formatter = logging.Formatter(LOG_FORMAT, datefmt='%Y-%m-%d %H:%M:%S')

    # Console handler
    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)
    console_handler._markov_forecast = True
    logger.addHandler(console_handler)

    # File handler
    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        file_handler._markov_forecast = True
        logger.addHandler(file_handler)

    return logger


def format_float(value: float) -> str:
    """Format a float with 12 significant digits"""
    return FLOAT_FORMAT % value


def write_csv(path: str, columns: Dict[str, Sequence[Any]]) -> None:
    """Write equal-length columns to CSV in the given column order"""
    frame = pd.DataFrame({name: np.asarray(values) for name, values in columns.items()})
    _ensure_parent(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')


def write_json(path: str, document: Dict[str, Any]) -> None:
    """Write a JSON document with sorted keys"""
    _ensure_parent(path)
    with open(path, 'w') as f:
        json.dump(to_jsonable(document), f, indent=2, sort_keys=True)
        f.write('\n')


def to_jsonable(value: Any) -> Any:
    """Convert numpy containers and scalars to plain Python values"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
