"""CSV and JSON report writers.

Floats are printed with a fixed number of significant digits so that equal
inputs give byte-identical reports.
"""

import csv
import json
import logging
import sys
from typing import Any, Iterable

import numpy as np


logger = logging.getLogger(__name__)


FLOAT_FORMAT = '.12g'
STDOUT = '-'


def format_value(value: Any) -> Any:
    """Render a report cell deterministically."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if np.isnan(value):
            return 'nan'
        if np.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return format(value, FLOAT_FORMAT)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return ';'.join(str(format_value(item)) for item in value)
    return value


def _create_dict_writer(csvfile, fields: list[str]) -> csv.DictWriter:
    return csv.DictWriter(csvfile, fieldnames=fields, lineterminator='\n')


def write_csv(out: str | None, fields: list[str],
              rows: Iterable[dict]) -> None:
    """Write rows (dicts keyed by fields) with a header.

    Args:
        out: file path; None or '-' writes to stdout.
        fields: column names, in order.
        rows: one dict per row.
    """
    rows = [{key: format_value(row.get(key)) for key in fields}
            for row in rows]
    if out is None or out == STDOUT:
        writer = _create_dict_writer(sys.stdout, fields)
        writer.writeheader()
        writer.writerows(rows)
        return

    logger.debug(f"Writing {len(rows)} rows to {out}")
    with open(out, 'w', newline='') as csvfile:
        writer = _create_dict_writer(csvfile, fields)
        writer.writeheader()
        writer.writerows(rows)


def write_json(out: str | None, document: dict) -> None:
    """Write a JSON document (sorted keys, indented)."""
    text = json.dumps(document, indent=2, sort_keys=True)
    if out is None or out == STDOUT:
        print(text)
        return
    logger.debug(f"Writing report to {out}")
    with open(out, 'w') as file:
        file.write(text + '\n')
