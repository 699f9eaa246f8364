"""CSV / JSON emitters with embedded provenance.

Numbers are written with ``repr`` (shortest round-trip form) so output is
byte-stable and reloads exactly. Every CSV starts with one ``#`` comment
line holding the JSON-encoded configuration that produced it.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .gramian import GramianTable
from .lattice import LatticeParams

__all__ = [
    "fmt",
    "provenance_line",
    "write_csv",
    "read_csv",
    "table_to_csv",
    "table_to_json",
    "read_table_csv",
    "read_table_json",
    "write_json",
    "signal_to_csv",
]


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def provenance_line(config):
    return "# " + json.dumps(config, sort_keys=True, separators=(",", ":"), default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (tuple, set, frozenset)):
        return list(obj)
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_csv(path, header, rows, config=None):
    path = Path(path)
    with path.open("w", newline="") as fh:
        if config is not None:
            fh.write(provenance_line(config) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_csv(path):
    """Return ``(config, header, rows)``; numeric cells are parsed to float."""
    config = None
    with Path(path).open() as fh:
        lines = fh.read().splitlines()
    if lines and lines[0].startswith("#"):
        config = json.loads(lines[0][1:].strip())
        lines = lines[1:]
    reader = csv.reader(lines)
    header = next(reader)
    rows = [[float(c) for c in row] for row in reader]
    return config, header, rows


def write_json(path, payload):
    text = json.dumps(payload, sort_keys=True, indent=2, default=_jsonable)
    Path(path).write_text(text + "\n")


def _table_header(d):
    return [f"i_{k}" for k in range(1, d + 1)] + [f"j_{k}" for k in range(1, d + 1)] + ["value"]


def table_to_csv(table, path, config=None):
    """Write ``i_1..i_d, j_1..j_d, value`` rows in insertion order."""
    rows = [list(i) + list(j) + [v] for (i, j), v in table.entries.items()]
    write_csv(path, _table_header(table.params.d), rows, config)


def _request(table):
    return {
        "d": table.params.d,
        "p": table.params.p,
        "s": table.params.s,
        "t": table.horizon,
        "drivers": [list(a) for a in table.drivers],
    }


def table_to_json(table, path, config=None):
    payload = {
        "request": _request(table),
        "entries": [{"i": list(i), "j": list(j), "value": v} for (i, j), v in table.entries.items()],
    }
    if config is not None:
        payload["config"] = config
    write_json(path, payload)


def read_table_json(path):
    payload = json.loads(Path(path).read_text())
    req = payload["request"]
    entries = {(tuple(e["i"]), tuple(e["j"])): float(e["value"]) for e in payload["entries"]}
    return GramianTable(LatticeParams(req["d"], req["p"], req["s"]),
                        tuple(tuple(a) for a in req["drivers"]), float(req["t"]), entries)


def read_table_csv(path):
    """Entries of a table CSV as ``{(i, j): value}``."""
    _, header, rows = read_csv(path)
    d = (len(header) - 1) // 2
    return {(tuple(int(c) for c in r[:d]), tuple(int(c) for c in r[d:2 * d])): r[-1] for r in rows}


def signal_to_csv(path, times, values, prefix, config=None):
    """Write ``t, <prefix>_1..<prefix>_k`` rows for a sampled signal."""
    values = np.asarray(values).reshape(len(times), -1)
    header = ["t"] + [f"{prefix}_{k}" for k in range(1, values.shape[1] + 1)]
    write_csv(path, header, ([t] + list(v) for t, v in zip(times, values)), config)
