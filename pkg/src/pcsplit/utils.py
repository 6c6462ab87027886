'''
Utility functions and types.
'''

from __future__ import annotations

from pathlib import Path
from typing import Any, NotRequired, TextIO, TypeAlias, TypedDict
import json
import math
import sys

import numpy as np
from numpy.typing import ArrayLike


JsonAtomicValue: TypeAlias = str | int | float | bool | None
'''An atomic JSON value, such as a string, number, boolean, or null.'''
JsonArray: TypeAlias = 'list[JsonValue]'
'''A JSON array, which is a list of JSON values.'''
JsonObject: TypeAlias = 'dict[str, JsonValue]'
'''A JSON object, which is a dictionary with string keys and JSON values.'''
JsonValue: TypeAlias = 'JsonAtomicValue | JsonArray | JsonObject'
'''A JSON value, which can be an atomic value, array, or object.'''


class RunResult(TypedDict):
    """Result structure from a solve, certify or compare run."""
    success: bool
    result: NotRequired[JsonObject]
    error: NotRequired[str]
    exit_code: NotRequired[int]


def error_result(message: str, exit_code: int = 1) -> RunResult:
    """Helper to create an error result."""
    return {
        'success': False,
        'error': message,
        'exit_code': exit_code,
    }


def json_number(value: float) -> JsonValue:
    """Map non-finite floats to null so the output stays valid JSON."""
    value = float(value)
    return value if math.isfinite(value) else None


def to_json_array(values: ArrayLike) -> JsonArray:
    """Convert a vector or matrix to nested JSON lists."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 0:
        return [json_number(arr.item())]
    if arr.ndim == 1:
        return [json_number(v) for v in arr]
    return [to_json_array(row) for row in arr]


def format_float(value: float) -> str:
    """Round-trip precision text for CSV output."""
    return format(float(value), '.17g')


def write_response(result: RunResult | JsonObject, stream: TextIO | None = None) -> None:
    """Helper to write a result to a stream (stdout by default) as JSON."""
    out = stream or sys.stdout
    json.dump(result, out, indent=2)
    out.write('\n')
    out.flush()


def write_json_file(path: Path, data: Any) -> Path:
    """Write `data` as indented JSON, creating parent directories."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(data, f, indent=2)
        f.write('\n')
    return path


def is_run_result(result: Any) -> bool:
    """Check if the result is a valid RunResult."""
    if not isinstance(result, dict):
        return False
    if 'success' not in result or not isinstance(result['success'], bool):
        return False
    if result['success'] and "result" in result:
        return True
    if not result['success'] and "error" in result:
        return True
    return False
