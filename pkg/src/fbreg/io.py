"""
Reading and writing datasets, draws, tables and key-value documents.

All floats are written with 17 significant digits so files round-trip
exactly.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from fbreg.model import Dataset, squeeze as squeeze_responses
from fbreg.sampler import ChainDraws

FLOAT_FMT = "{:.17g}"


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class LoadReport:
    n_rows: int
    n_boundary: int
    squeezed: bool


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return FLOAT_FMT.format(float(x))


def write_table(path, header, columns):
    """Write equal-length columns as CSV with a header row."""
    path = Path(path)
    rows = zip(*columns)
    with path.open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_table(path):
    """Read a numeric CSV written by :func:`write_table`; returns ``(header, array)``."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: non-numeric value in {row!r}") from None
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return [h.strip() for h in header], data


def write_kv(path, items: dict):
    with Path(path).open("w") as fh:
        for key, value in items.items():
            if isinstance(value, (float, np.floating)):
                value = fmt(value)
            fh.write(f"{key} = {value}\n")


def read_kv(path) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if " = " not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split(" = ", 1)
        out[key.strip()] = value.strip()
    return out


def load_dataset(path, squeeze: bool = False):
    """Load a ``y,z`` CSV into a :class:`Dataset` with an intercept column.

    Responses equal to 0 or 1 are an error unless ``squeeze`` is set, in
    which case every response is mapped through ``(y*(n-1) + 0.5)/n``.
    Returns ``(dataset, report)``.
    """
    header, table = read_table(path)
    if header != ["y", "z"]:
        raise DatasetError(f"{path}: header must be 'y,z', got {','.join(header)!r}")
    if table.shape[0] == 0:
        raise DatasetError(f"{path}: no data rows")
    y, z = table[:, 0], table[:, 1]
    # line numbers are 1-based and the header is line 1
    outside = np.flatnonzero((y < 0.0) | (y > 1.0) | ~np.isfinite(y))
    if outside.size:
        raise DatasetError(f"{path}: responses outside [0, 1] on lines {(outside + 2).tolist()}")
    boundary = np.flatnonzero((y == 0.0) | (y == 1.0))
    if boundary.size and not squeeze:
        raise DatasetError(
            f"{path}: responses equal to 0 or 1 on lines {(boundary + 2).tolist()} "
            "(use squeeze to map them inside (0, 1))"
        )
    if squeeze:
        y = squeeze_responses(y)
    try:
        data = Dataset.from_z(y, z)
    except ValueError as exc:
        raise DatasetError(f"{path}: {exc}") from None
    return data, LoadReport(n_rows=y.size, n_boundary=int(boundary.size), squeezed=squeeze)


def write_dataset(path, y, z):
    write_table(path, ["y", "z"], [y, z])


def param_names(k: int):
    return [f"beta{r}" for r in range(k)] + ["phi", "omega", "p"]


def write_draws(path, draws: ChainDraws):
    k = draws.beta.shape[1]
    params = draws.params()
    write_table(path, ["iter"] + param_names(k), [draws.index] + [params[n] for n in param_names(k)])


def read_draws(path, chain_id: int = 0) -> ChainDraws:
    header, table = read_table(path)
    if not header or header[0] != "iter" or header[-3:] != ["phi", "omega", "p"]:
        raise DatasetError(f"{path}: not a draws file (header {header!r})")
    k = len(header) - 4
    if k < 1 or header[1 : 1 + k] != [f"beta{r}" for r in range(k)]:
        raise DatasetError(f"{path}: unexpected beta columns in header {header!r}")
    return ChainDraws(
        beta=table[:, 1 : 1 + k],
        phi=table[:, -3],
        omega=table[:, -2],
        p=table[:, -1],
        chain_id=chain_id,
        index=table[:, 0].astype(int),
    )


_CHAIN_RE = re.compile(r"draws_chain(\d+)\.csv$")


def find_draw_files(run_dir):
    """``[(chain_id, path)]`` for every draws file in ``run_dir``, ordered by chain id."""
    found = []
    for path in Path(run_dir).iterdir():
        m = _CHAIN_RE.match(path.name)
        if m:
            found.append((int(m.group(1)), path))
    return sorted(found)
