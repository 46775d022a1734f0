"""Deterministic CSV/JSON emission with atomic writes.

Floats are written with ``%.{D}g`` where ``D`` defaults to 17 (round-trip
precision) and can be lowered through ``CAVITY_XY_DIGITS``.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile

import numpy as np

from .couplings import CouplingTable
from .errors import ConfigError

DIGITS_ENV = "CAVITY_XY_DIGITS"
DEFAULT_DIGITS = 17


def digits() -> int:
    raw = os.environ.get(DIGITS_ENV)
    if raw is None:
        return DEFAULT_DIGITS
    try:
        d = int(raw)
    except ValueError:
        raise ConfigError(f"{DIGITS_ENV} must be an integer, got {raw!r}") from None
    if not 1 <= d <= 17:
        raise ConfigError(f"{DIGITS_ENV} must lie in 1..17, got {d}")
    return d


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.{digits()}g}"


def atomic_write(path, text: str) -> None:
    """Write ``text`` to a sibling temp file, then rename it over ``path``."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        # round-trip through the configured precision so output is stable
        return float(fmt(obj))
    return obj


def write_json(path, obj) -> None:
    atomic_write(path, json_text(obj))


def coupling_csv(table: CouplingTable, ratio: bool = False) -> str:
    header = ["l", "J"] + (["ratio"] if ratio else [])
    ratios = table.ratios() if ratio else None
    rows = []
    for l, j in zip(table.distances, table.j_of_l):
        rows.append([int(l), j] + ([ratios[l]] if ratio else []))
    return csv_text(header, rows)


def write_couplings(path, table: CouplingTable, ratio: bool = False) -> None:
    atomic_write(path, coupling_csv(table, ratio))


def read_couplings(path) -> CouplingTable:
    """Read an ``l,J[,ratio]`` table; the ring size is ``2 * l_max``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["l", "J"]:
            raise ConfigError(f"{path}: expected header 'l,J'", "header")
        ls, js = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                ls.append(int(row[0]))
                js.append(float(row[1]))
            except (ValueError, IndexError):
                raise ConfigError(f"{path}: malformed row {lineno}", f"line {lineno}") from None
    if ls != list(range(len(ls))) or len(ls) < 2:
        raise ConfigError(f"{path}: distances must run 0, 1, ..., l_max", "l")
    return CouplingTable(2 * (len(ls) - 1), np.array(js))


def profile_csv(times, probabilities) -> str:
    rows = []
    for t, row in zip(times, probabilities):
        for site, p in enumerate(row):
            rows.append([t, site, p])
    return csv_text(["t", "site", "prob"], rows)


def fidelity_csv(times, fidelity) -> str:
    return csv_text(["t", "fidelity"], zip(times, fidelity))


def dispersion_csv(k, energy, velocity) -> str:
    return csv_text(["k", "E", "v"], zip(k, energy, velocity))
