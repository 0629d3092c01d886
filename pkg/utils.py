import json
import math
import os
import sys
from typing import Any, Optional

import pandas as pd
import torch

from open_systems.errors import FormatError
from open_systems.linalg import matrix_from_json
from open_systems.states import DensityMatrix

FLOAT_FORMAT = "%.16e"


def format_float(x: float) -> str:
    """17 significant digits, '.' separator, 'e' exponent."""
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return str(x)
    return FLOAT_FORMAT % x


def dumps_json(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """json.dumps with keys in insertion order and every float rendered by format_float."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        # JSON has no NaN literal
        return format_float(obj) if math.isfinite(obj) else json.dumps(str(obj))
    if isinstance(obj, complex):
        return dumps_json([obj.real, obj.imag], indent, _level)
    if isinstance(obj, torch.Tensor):
        return dumps_json(obj.tolist(), indent, _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # short numeric rows stay on one line
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps_json(v) for v in obj) + "]"
        items = [f"{pad}{dumps_json(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"Cannot serialize {type(obj).__name__}")


def read_json(path: str) -> dict:
    with open(path) as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise FormatError(f"{path} is not valid JSON: {e}") from e


def write_text(text: str, path: Optional[str] = None) -> None:
    """Write to path, or to stdout when path is empty or '-'."""
    if not path or path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="\n") as f:
        f.write(text)


def write_json(obj: Any, path: Optional[str] = None) -> None:
    write_text(dumps_json(obj) + "\n", path)


def frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_csv(frame: pd.DataFrame, path: Optional[str] = None) -> None:
    write_text(frame_to_csv(frame), path)


def load_density_matrix(path: str) -> DensityMatrix:
    """A state file is a matrix literal, optionally wrapped as {"rho": literal}."""
    obj = read_json(path)
    if isinstance(obj, dict) and "rho" in obj:
        obj = obj["rho"]
    if not isinstance(obj, dict):
        raise FormatError(f"{path} does not hold a matrix literal")
    return DensityMatrix(matrix_from_json(obj))
