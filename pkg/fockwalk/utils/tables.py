"""
Table output: CSV with a sibling summary file, or one JSON document. CSV on
stdout is followed by the summary as a single trailing JSON line.
"""

import json
import math
import sys
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger
from tabulate import tabulate

FLOAT_FORMAT = "%.17e"


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def _finite(value):
    # NaN marks a value that was not computed; JSON has null for that
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, dict):
        return {key: _finite(v) for key, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value


def dumps_json(payload, indent: int | None = 2) -> str:
    return json.dumps(_finite(payload), sort_keys=True, indent=indent, default=_plain, allow_nan=False) + "\n"


def summary_path(out: Path) -> Path:
    return out.with_name(out.name + ".summary.json")


def table_json(table: pd.DataFrame, summary: dict) -> str:
    columns = {name: table[name].tolist() for name in table.columns}
    return dumps_json({"columns": columns, "summary": summary})


def table_csv(table: pd.DataFrame) -> str:
    return table.to_csv(index=False, float_format=FLOAT_FORMAT, na_rep="nan", lineterminator="\n")


def write_table(table: pd.DataFrame, summary: dict, out: Path | None, output_format: str = "csv"):
    if output_format == "json":
        text = table_json(table, summary)
    elif output_format == "csv":
        text = table_csv(table)
    else:
        raise ValueError(f"Unknown output format {output_format!r}")
    if out is None:
        sys.stdout.write(text)
        if output_format == "csv":
            sys.stdout.write(dumps_json(summary, indent=None))
        return
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    if output_format == "csv":
        summary_path(out).write_text(dumps_json(summary))
    logger.info(f"Wrote {len(table)} rows to {out}")


def _cell(value):
    if isinstance(value, float):
        return "-" if math.isnan(value) else f"{value:.6g}"
    if value is None:
        return "-"
    if isinstance(value, (list, dict)):
        return f"<{len(value)} entries>"
    return value


def render_summary(summary: dict, skip: tuple[str, ...] = ("config",)) -> str:
    rows = [[key, _cell(value)] for key, value in sorted(summary.items()) if key not in skip]
    return tabulate(rows, headers=["Quantity", "Value"], tablefmt="pipe")
