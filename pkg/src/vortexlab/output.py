# src/vortexlab/output.py

"""
Writers for the files a command leaves behind.

- CSV for curves and tables: a ``# vortexlab <version> config=<hash>`` header
  line, a column row, ``%.12e`` floats, '.' decimal point, '\\n' line ends.
- JSON for metadata and summaries, JSON lines for event logs. Keys are
  sorted, NaN/Inf become null, complex numbers become {"re": .., "im": ..}.
- ``.field`` dumps: raw little-endian binary (``<c16`` or ``<f8``) plus a
  ``.field.json`` sidecar with shape, dtype and metadata.

Every file carries the version and the config hash. Nothing written here
contains timestamps, so identical configs give byte-identical files.
"""

import csv
import json
import math
from dataclasses import asdict, is_dataclass
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence

import numpy as np

from vortexlab import __version__
from vortexlab.config import FLOAT_FORMAT


def to_jsonable(value: Any) -> Any:
    """Recursively converts numpy scalars/arrays, complex numbers and dataclasses."""
    if is_dataclass(value) and not isinstance(value, type):
        return to_jsonable(asdict(value))
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": to_jsonable(float(value.real)), "im": to_jsonable(float(value.imag))}
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dumps(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, allow_nan=False)


def format_cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % float(value)
    return str(value)


def header_line(config_hash: str) -> str:
    return f"# vortexlab {__version__} config={config_hash}"


def write_csv(path: str, columns: Sequence[str], rows: Iterable[Sequence[Any]], config_hash: str) -> str:
    """
    Writes a table.

    Args:
        path: Destination file.
        columns: Column names, in output order.
        rows: Row values; floats are formatted with FLOAT_FORMAT.
        config_hash: Hash stamped into the header line.

    Returns:
        The path written.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(header_line(config_hash) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row has {len(row)} values, expected {len(columns)} ({path})")
            writer.writerow([format_cell(v) for v in row])
    return path


def write_json(path: str, obj: Mapping[str, Any], config_hash: str) -> str:
    body: Dict[str, Any] = dict(to_jsonable(obj))
    body["vortexlab_version"] = __version__
    body["config_hash"] = config_hash
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(body, sort_keys=True, indent=2, allow_nan=False) + "\n")
    return path


def write_jsonl(path: str, records: Iterable[Any], config_hash: str) -> str:
    """JSON lines; the first line is a header object with version and hash."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps({"config_hash": config_hash, "vortexlab_version": __version__}) + "\n")
        for record in records:
            fh.write(dumps(record) + "\n")
    return path


def write_field(path: str, field: np.ndarray, config_hash: str, meta: Optional[Mapping[str, Any]] = None) -> str:
    """
    Raw little-endian dump of a grid field with a JSON sidecar at ``path + '.json'``.
    Complex fields are stored as <c16, real ones as <f8, row-major (index [i, j]).
    """
    arr = np.asarray(field)
    dtype = "<c16" if np.iscomplexobj(arr) else "<f8"
    with open(path, "wb") as fh:
        fh.write(np.ascontiguousarray(arr, dtype=dtype).tobytes(order="C"))
    sidecar = {"shape": list(arr.shape), "dtype": dtype, "order": "C", "meta": dict(meta or {})}
    write_json(path + ".json", sidecar, config_hash)
    return path


def read_field(path: str) -> np.ndarray:
    """Reads a ``.field`` dump back using its sidecar."""
    with open(path + ".json", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    data = np.fromfile(path, dtype=sidecar["dtype"])
    return data.reshape(sidecar["shape"])
