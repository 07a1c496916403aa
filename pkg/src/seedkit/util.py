"""Small shared helpers."""

from __future__ import annotations

import json
import os
import tempfile
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path


def format_percent(ratio: Fraction | float, digits: int = 2) -> str:
    """Render a ratio as a percent string with half-up rounding, e.g. '15.14%'.

    Exact for Fraction inputs: 46730/308621 -> '15.14%'.
    """
    if isinstance(ratio, Fraction):
        value = Decimal(ratio.numerator) * 100 / Decimal(ratio.denominator)
    else:
        value = Decimal(repr(float(ratio))) * 100
    quantum = Decimal(1).scaleb(-digits)
    return f"{value.quantize(quantum, rounding=ROUND_HALF_UP)}%"


def write_json_atomic(path: str | Path, obj: object) -> None:
    """Serialize obj to JSON at path via write-temp-then-rename.

    Keys are sorted so identical objects produce byte-identical files.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            json.dump(obj, f, sort_keys=True, indent=2)
            f.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_text_atomic(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
