import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, List, Mapping, Optional, Sequence, Tuple

from .errors import MatrixLiteralError, UsageError


logger = logging.getLogger(__name__)


def read_file_safely(file_path: Path) -> Optional[str]:
    """Read file content safely, handling missing files and encoding errors."""
    try:
        with open(file_path, encoding="utf-8") as f:
            return f.read()
    except FileNotFoundError:
        return None
    except UnicodeDecodeError:
        logger.warning("could not decode %s as UTF-8", file_path)
        return None


def load_json_argument(value: str, what: str = "matrix") -> Any:
    """Parse a JSON literal given inline or as ``@path``."""
    text = value
    if value.startswith("@"):
        text = read_file_safely(Path(value[1:]))
        if text is None:
            raise MatrixLiteralError(f"cannot read {what} file {value[1:]}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MatrixLiteralError(f"{what} literal is not valid JSON: {exc.msg}") from exc


def parse_pair(text: str) -> Tuple[int, int]:
    """``"d,k"`` -> (d, k)."""
    parts = text.replace(" ", "").split(",")
    if len(parts) != 2:
        raise UsageError(f"expected a pair like 1,3, got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise UsageError(f"expected a pair of integers, got {text!r}") from exc


def parse_range(text: str) -> List[int]:
    """``"2-9"`` -> [2, ..., 9]; a single number is a one-element range."""
    try:
        if "-" in text:
            low, high = (int(x) for x in text.split("-", 1))
        else:
            low = high = int(text)
    except ValueError as exc:
        raise UsageError(f"expected a range like 2-9, got {text!r}") from exc
    if low < 2 or high < low:
        raise UsageError(f"invalid modulus range {text!r}")
    return list(range(low, high + 1))


def _columns(rows: Sequence[Mapping[str, Any]]) -> List[str]:
    columns: List[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    return columns


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (list, tuple)):
        return " ".join(str(v) for v in value)
    return str(value)


def format_rows(rows: Sequence[Mapping[str, Any]], output_format: str = "text") -> str:
    """Render rows as an aligned text table, JSON array or CSV."""
    if output_format == "json":
        return json.dumps(list(rows), indent=2, sort_keys=True, default=str)

    columns = _columns(rows)
    if output_format == "csv":
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _cell(row.get(key)) for key in columns})
        return buffer.getvalue().rstrip("\n")

    if not rows:
        return "(no rows)"
    table = [columns] + [[_cell(row.get(key)) for key in columns] for row in rows]
    widths = [max(len(line[i]) for line in table) for i in range(len(columns))]
    return "\n".join(
        "  ".join(value.rjust(width) for value, width in zip(line, widths)).rstrip()
        for line in table
    )


def format_payload(payload: Mapping[str, Any], output_format: str = "text") -> str:
    """Render one result object; text shows ``key: value`` lines."""
    if output_format == "json":
        return json.dumps(payload, indent=2, sort_keys=True, default=str)
    if output_format == "csv":
        flat = {k: v for k, v in payload.items() if not isinstance(v, Mapping)}
        return format_rows([flat], "csv")
    return "\n".join(f"{key}: {_cell(value)}" for key, value in payload.items())


def report_results(title: Optional[str], body: str) -> None:
    """Print a result block to stdout."""
    if title:
        print(f"\n{title}:")
    print(body)
