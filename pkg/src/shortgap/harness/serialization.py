"""JSON and CSV output with 17 significant digits and no NaN/Inf."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np


class NumericOutputError(ValueError):
    """A NaN or infinity reached an output table."""


def _fmt(v: float) -> str:
    s = format(v, ".17g")
    # keep floats recognisable as floats once parsed back
    return s if any(c in s for c in ".en") else s + ".0"


def _clean(obj, where: str = "$"):
    """Convert to plain JSON values, rejecting non-finite floats."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            raise NumericOutputError(f"non-finite value {v} at {where}")
        return v
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}" if obj.denominator != 1 else str(obj.numerator)
    if isinstance(obj, dict):
        return {str(k): _clean(v, f"{where}.{k}") for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v, f"{where}[{i}]") for i, v in enumerate(obj)]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist(), where)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return _clean(obj.to_dict(), where)
    raise TypeError(f"cannot serialise {type(obj).__name__} at {where}")


class _Encoder(json.JSONEncoder):
    def iterencode(self, o, _one_shot=False):
        # the pure-Python encoder path accepts a custom float formatter
        return json.encoder._make_iterencode(
            {}, self.default, json.encoder.py_encode_basestring_ascii, self.indent,
            lambda f: _fmt(float(f)), self.key_separator, self.item_separator,
            self.sort_keys, self.skipkeys, _one_shot,
        )(o, 0)


def dumps_json(obj) -> str:
    return json.dumps(_clean(obj), cls=_Encoder, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> str:
    text = dumps_json(obj)
    Path(path).write_text(text)
    return text


def _cell(v, col: str) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(float(v)):
            raise NumericOutputError(f"non-finite value in column {col}")
        return _fmt(float(v))
    if isinstance(v, Fraction):
        return _cell(float(v), col)
    return str(v)


def csv_text(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        missing = [c for c in columns if c not in row]
        if missing:
            raise ValueError(f"row lacks columns {missing}")
        w.writerow([_cell(row[c], c) for c in columns])
    return buf.getvalue()


def write_csv(path, rows: list[dict], columns: list[str]) -> str:
    text = csv_text(rows, columns)
    Path(path).write_text(text)
    return text


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()
