"""CSV ingestion and atomic report writing."""
import json
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from fusioniv.core import AuxiliarySample, PrimarySample
from fusioniv.errors import CSVFormatError

SCHEMA_VERSION = "1.0"


def read_columns(path, columns: Sequence[str]) -> dict:
    """Read the named numeric columns of a CSV file with a header row.

    Raises :class:`CSVFormatError` naming the file line and the column of the first entry that
    is not a finite number, or the first required column that is missing.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError:
        raise CSVFormatError(f"{path}: no such file", path=path) from None
    except pd.errors.EmptyDataError:
        raise CSVFormatError(f"{path}: empty file", path=path, row=1) from None
    except pd.errors.ParserError as error:
        raise CSVFormatError(f"{path}: {error}", path=path) from None
    except UnicodeDecodeError as error:
        raise CSVFormatError(f"{path}: not valid UTF-8 ({error.reason})", path=path) from None

    frame.columns = [str(column).strip() for column in frame.columns]
    for column in columns:
        if column not in frame.columns:
            raise CSVFormatError(
                f"{path}: missing column '{column}' (header has {list(frame.columns)})",
                path=path,
                row=1,
                column=column,
            )

    data = {}
    for column in columns:
        raw = frame[column].str.strip()
        values = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            # the header is line 1
            row = int(bad[0]) + 2
            value = raw.iloc[bad[0]]
            raise CSVFormatError(
                f"{path}: row {row}, column '{column}': '{value}' is not a finite number",
                path=path,
                row=row,
                column=column,
            )
        data[column] = values
    return data


def read_auxiliary(path) -> AuxiliarySample:
    data = read_columns(path, ("z", "a"))
    return AuxiliarySample(z=data["z"], a=data["a"])


def read_primary(path) -> PrimarySample:
    data = read_columns(path, ("a", "y"))
    return PrimarySample(a=data["a"], y=data["y"])


def read_joint(path) -> np.ndarray:
    data = read_columns(path, ("z", "a", "y"))
    return np.column_stack((data["z"], data["a"], data["y"]))


def to_jsonable(value):
    """Plain JSON values; infinities become the strings ``"inf"``/``"-inf"``, nan becomes null."""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float):
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
    return value


def _write_atomic(path, text):
    if str(path) == "-":
        sys.stdout.write(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temporary = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="\n") as file:
            file.write(text)
        os.replace(temporary, path)
    except BaseException:
        Path(temporary).unlink(missing_ok=True)
        raise


def write_json(path, data):
    text = json.dumps(to_jsonable(data), indent=2, allow_nan=False) + "\n"
    _write_atomic(path, text)


def write_csv(path, frame: pd.DataFrame):
    _write_atomic(path, frame.to_csv(index=False, lineterminator="\n", float_format="%.10g"))
