import csv
import json
import math

import numpy as np

__all__ = ["format_float", "write_csv", "read_csv", "write_json", "read_json", "render"]


def format_float(value):
    """
    Format a number with enough digits to round-trip a double.

    >>> format_float(0.1)
    '0.10000000000000001'
    >>> format_float(None)
    ''
    """
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_float(value) for value in row])


def read_csv(path):
    """
    Read a CSV file written by write_csv() and return a dictionary mapping
    column names to float arrays. Empty cells become NaN.
    """
    with open(path, newline="") as fp:
        reader = csv.reader(fp)
        columns = next(reader)
        rows = [row for row in reader if row]
    special = {"": math.nan, "true": 1.0, "false": 0.0}
    result = {}
    for idx, name in enumerate(columns):
        values = [
            special[row[idx]] if row[idx] in special else float(row[idx])
            for row in rows
        ]
        result[name] = np.array(values, dtype=np.float64)
    return result


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # JSON has no representation for these.
        if math.isnan(value) or math.isinf(value):
            return None
        return value
    return value


def write_json(path, data):
    with open(path, "w") as fp:
        json.dump(_jsonable(data), fp, indent=2, sort_keys=True)
        fp.write("\n")


def read_json(path):
    with open(path) as fp:
        return json.load(fp)


def render(columns, rows):
    """
    Render rows as a plain text table for terminal output.

    >>> print(render(["a", "b"], [[1, "x"]]))
    a  b
    -  -
    1  x
    """
    cells = [[str(c) for c in columns]]
    for row in rows:
        cells.append(
            ["%.6g" % v if isinstance(v, float) else str(v) for v in row]
        )
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cells[0], widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths).rstrip())
    for row in cells[1:]:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines)
