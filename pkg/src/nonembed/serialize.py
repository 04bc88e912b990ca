"""Canonical JSON rendering.

Keys are sorted, floats carry 17 significant digits and exact rationals are
written as ``"p/q"`` strings, so equal results always produce equal bytes.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Any

import numpy as np


def fraction_str(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def parse_rational(s: Any) -> Fraction:
    """Parse ``"p/q"``, a decimal string, an int or a float into a Fraction."""
    if isinstance(s, Fraction):
        return s
    if isinstance(s, (int, np.integer)):
        return Fraction(int(s))
    if isinstance(s, (float, np.floating)):
        return Fraction(repr(float(s)))
    return Fraction(str(s).strip())


def _float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _render(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_float(float(obj)))
    elif isinstance(obj, Fraction):
        out.append(json.dumps(fraction_str(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj, key=str)):
            if i:
                out.append(", ")
            out.append(json.dumps(str(key)))
            out.append(": ")
            _render(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        out.append("[")
        for i, item in enumerate(seq):
            if i:
                out.append(", ")
            _render(item, out)
        out.append("]")
    elif isinstance(obj, (set, frozenset)):
        _render(sorted(obj), out)
    elif hasattr(obj, "to_dict"):
        _render(obj.to_dict(), out)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    out: list[str] = []
    _render(obj, out)
    return "".join(out)
