"""CSV ingestion for price series."""

import csv
import logging
import os
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from models.series import PriceSeries
from utils.errors import InputNotFoundError, InputParseError, SizeError

logger = logging.getLogger(__name__)


def _detect_delimiter(path: str) -> str:
    """Detect delimiter from a CSV sample, falling back to comma"""
    with open(path, 'r', encoding='utf-8', errors='ignore', newline='') as handle:
        sample = handle.read(8192)
    if not sample.strip():
        return ','
    try:
        dialect = csv.Sniffer().sniff(sample, delimiters=',;\t|')
    except csv.Error:
        return ','
    return dialect.delimiter


def _is_number(text: str) -> bool:
    try:
        float(text)
    except (TypeError, ValueError):
        return False
    return True


def _resolve_column(header: Optional[List[str]], width: int,
                    column: Optional[Union[str, int]]) -> int:
    if column is None or column == '':
        return width - 1
    if isinstance(column, int) or str(column).isdigit():
        position = int(column)
        if position >= width:
            raise InputParseError(f"Column {position} does not exist ({width} columns)",
                                  {"column": position, "columns": width})
        return position
    if header is None or column not in header:
        raise InputParseError(f"Column '{column}' not found", {"column": column, "header": header})
    return header.index(column)


def ingest_csv(path: str, column: Optional[Union[str, int]] = None,
               delimiter: Optional[str] = None) -> PriceSeries:
    """Read one column of a chronological CSV file as a dense price series

    The header is detected by a non-numeric selected cell in the first row.
    Row numbers in errors are 1-based file line numbers.
    """
    if not os.path.exists(path):
        raise InputNotFoundError(f"Input file not found: {path}", {"path": path})
    if not os.path.isfile(path):
        raise InputNotFoundError(f"Input path is not a file: {path}", {"path": path})

    delimiter = delimiter or _detect_delimiter(path)
    try:
        frame = pd.read_csv(path, sep=delimiter, header=None, dtype=str,
                            keep_default_na=False, skip_blank_lines=False)
    except pd.errors.EmptyDataError:
        raise SizeError(f"Input file is empty: {path}", {"path": path, "rows": 0})
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise InputParseError(f"Failed to read CSV: {path}", {"path": path, "reason": str(exc)})
    frame = frame.fillna('')

    first = [cell.strip() for cell in frame.iloc[0].tolist()] if len(frame) else []
    header = None
    position = _resolve_column(first if not str(column).isdigit() else None,
                               frame.shape[1], column)
    if first and not _is_number(first[position]):
        header = first
        position = _resolve_column(header, frame.shape[1], column)
        frame = frame.iloc[1:]

    # trailing blank lines are not data; interior ones still fail below
    blank = frame.apply(lambda col: col.str.strip()).eq('').all(axis=1).to_numpy()
    filled = np.flatnonzero(~blank)
    frame = frame.iloc[:filled[-1] + 1] if len(filled) else frame.iloc[:0]

    line_numbers = np.arange(len(frame)) + (2 if header else 1)
    cells = frame.iloc[:, position].str.strip()
    missing = line_numbers[(cells == '').to_numpy()]
    if len(missing):
        raise InputParseError(f"Missing values in column {position} on rows {missing[:10].tolist()}",
                              {"rows": missing.tolist(), "column": position})
    values = pd.to_numeric(cells, errors='coerce').to_numpy(dtype=float)
    bad = line_numbers[~np.isfinite(values)]
    if len(bad):
        raise InputParseError(f"Non-numeric value in column {position} on row {bad[0]}",
                              {"rows": bad.tolist(), "column": position})
    if len(values) < 2:
        raise SizeError(f"Need at least 2 rows, got {len(values)}", {"rows": int(len(values))})

    logger.info(f"Loaded {len(values)} values from {path} (column {position})")
    return PriceSeries(values, 0, os.path.basename(path))
