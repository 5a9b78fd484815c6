"""
Result Tables

Ordered result rows with a metadata header, written as CSV with leading
'#' metadata lines.
"""

import io
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.9g"
METADATA_PREFIX = "# "


@dataclass
class ResultTable:
    """Named columns, ordered rows and run metadata (config hash, seed, version)."""
    columns: List[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    metadata: Dict[str, str] = field(default_factory=dict)

    def add_row(self, **values: Any) -> None:
        unknown = set(values) - set(self.columns)
        if unknown:
            raise KeyError(f"unknown columns: {sorted(unknown)}")
        self.rows.append({c: values.get(c) for c in self.columns})

    def extend(self, rows: List[Dict[str, Any]]) -> None:
        for row in rows:
            self.add_row(**row)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=self.columns)

    def __len__(self) -> int:
        return len(self.rows)


def render_csv(table: ResultTable) -> str:
    """CSV text: metadata comment lines, header, rows with 9 significant digits."""
    buffer = io.StringIO()
    for key, value in table.metadata.items():
        buffer.write(f"{METADATA_PREFIX}{key}: {value}\n")
    table.to_frame().to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buffer.getvalue()


def emit_csv(table: ResultTable, path: Optional[Union[str, Path]] = None) -> None:
    """
    Write a result table as CSV.

    Args:
        table: Table to write
        path: Destination file; None writes to stdout

    Raises:
        OSError: If the file cannot be written; the message names the path
    """
    text = render_csv(table)
    if path is None:
        sys.stdout.write(text)
        return

    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as e:
        logger.error(f"Failed to write results to {path}: {e}")
        raise OSError(f"cannot write result table to {path}: {e}") from e
    logger.info(f"Wrote {len(table)} rows to {path}")


def read_csv(path: Union[str, Path]) -> ResultTable:
    """Parse a file written by emit_csv back into a ResultTable."""
    path = Path(path)
    metadata: Dict[str, str] = {}
    body_lines = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not body_lines and line.startswith(METADATA_PREFIX):
                key, _, value = line[len(METADATA_PREFIX):].rstrip("\n").partition(": ")
                metadata[key] = value
            else:
                body_lines.append(line)

    frame = pd.read_csv(io.StringIO("".join(body_lines)))
    rows = [
        {k: (None if pd.isna(v) else v) for k, v in record.items()}
        for record in frame.to_dict(orient="records")
    ]
    return ResultTable(columns=list(frame.columns), rows=rows, metadata=metadata)
