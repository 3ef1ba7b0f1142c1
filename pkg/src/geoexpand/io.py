"""CSV and key=value file formats.

Sample files carry a header ``lon,lat[,alt][,x_<name>...],z`` followed by
one row per sample. Floats are written with Python's shortest round-trip
representation, so every value reads back bit-identical.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .exceptions import ParseError, ValidationError
from .sample_model import SampleSet

__all__ = [
    "fmt",
    "read_table",
    "write_table",
    "read_sample_csv",
    "write_sample_csv",
    "read_points_csv",
    "read_keyvalue",
    "write_keyvalue",
    "load_run_config",
]


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_table(path, header, rows, preamble=()):
    lines = [f"# {p}" for p in preamble]
    lines.append(",".join(header))
    lines.extend(",".join(fmt(c) for c in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_table(path):
    """Header, string rows and their 1-based line numbers.

    Blank lines and lines starting with ``#`` are skipped.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as err:
        raise ParseError(f"{path} is not valid UTF-8") from err
    header, rows, lines = None, [], []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cells = [c.strip() for c in line.split(",")]
        if header is None:
            header = cells
            continue
        if len(cells) != len(header):
            raise ParseError(f"expected {len(header)} cells, found {len(cells)}", lineno)
        rows.append(cells)
        lines.append(lineno)
    if header is None:
        raise ParseError(f"{path} has no header row", 1)
    return header, rows, lines


def _to_float(cell, lineno):
    try:
        x = float(cell)
    except ValueError:
        raise ParseError(f"cannot parse {cell!r} as a number", lineno) from None
    if not math.isfinite(x):
        raise ParseError(f"non-finite value {cell!r}", lineno)
    return x


def read_numeric_table(path):
    header, rows, lines = read_table(path)
    data = np.array(
        [[_to_float(c, ln) for c in row] for row, ln in zip(rows, lines)], dtype=float
    ).reshape(len(rows), len(header))
    return header, data


def _coord_columns(header, path):
    if header[:2] != ["lon", "lat"]:
        raise ParseError(f"{path}: header must start with 'lon,lat'", 1)
    return 3 if len(header) > 2 and header[2] == "alt" else 2


def read_sample_csv(path):
    """Read a sample file.

    Returns
    -------
    SampleSet
        Raises :class:`ValidationError` when there are no data rows.
    list of str
        Covariate names (without the ``x_`` prefix).
    """
    header, data = read_numeric_table(path)
    n_geo = _coord_columns(header, path)
    if header[-1] != "z" or len(header) == n_geo:
        raise ParseError(f"{path}: last column must be 'z'", 1)
    cov_names = header[n_geo:-1]
    for name in cov_names:
        if not name.startswith("x_"):
            raise ParseError(f"{path}: covariate column {name!r} must start with 'x_'", 1)
    if data.shape[0] == 0:
        raise ValidationError(f"{path} contains no samples")
    samples = SampleSet(data[:, :n_geo], data[:, -1], data[:, n_geo:-1], n_geo)
    return samples, [c[2:] for c in cov_names]


def write_sample_csv(path, samples: SampleSet, covariate_names=None):
    geo = ["lon", "lat", "alt"][: samples.n_geo]
    names = covariate_names or [f"{k}" for k in range(samples.covariates.shape[1])]
    header = geo + [f"x_{c}" for c in names] + ["z"]
    rows = np.hstack([samples.geo, samples.covariates, samples.values[:, None]])
    write_table(path, header, rows.tolist())


def read_points_csv(path):
    """Coordinates of a prediction-point file (``lon,lat[,alt]``; other columns ignored)."""
    header, data = read_numeric_table(path)
    n_geo = _coord_columns(header, path)
    return data[:, :n_geo], header[:n_geo]


def write_keyvalue(path, items):
    lines = [f"{k}={fmt(v)}" for k, v in items.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_keyvalue(path):
    out = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"expected key=value, got {line!r}", lineno)
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_run_config(path, known_keys):
    """Parse a ``<command>.<flag>=value`` file, rejecting unknown keys."""
    values = read_keyvalue(path)
    unknown = sorted(set(values) - set(known_keys))
    if unknown:
        raise ParseError(f"{path}: unknown configuration keys: {', '.join(unknown)}")
    return values
