"""Columnar text output: CSV with a one-line provenance header.

Every data file starts with

    # spec_hash=<16 hex> columns=<name,...> units=<unit,...>

so a file separated from its run directory still names the experiment that
produced it. Floats are written with repr (shortest round-trip form), which
makes reruns byte-comparable and read_columnar lossless.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ColumnarData:
    spec_hash: str
    names: tuple
    units: tuple
    columns: dict   # name -> np.ndarray

    def __getitem__(self, name):
        return self.columns[name]


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_columnar(path, spec_hash: str, names, units, columns) -> None:
    names = tuple(names)
    units = tuple(units)
    columns = [np.asarray(c) for c in columns]
    if len(names) != len(units) or len(names) != len(columns):
        raise ValueError("names, units, and columns must align")
    if any("," in s or " " in s for s in names + units):
        raise ValueError("column names and units must not contain ',' or ' '")
    n = len(columns[0]) if columns else 0
    if any(len(c) != n for c in columns):
        raise ValueError("columns must share a length")
    lines = [f"# spec_hash={spec_hash} columns={','.join(names)} "
             f"units={','.join(units)}"]
    for i in range(n):
        lines.append(",".join(_cell(c[i]) for c in columns))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_columnar(path) -> ColumnarData:
    with open(path) as fh:
        header = fh.readline().strip()
        rows = [line.strip() for line in fh if line.strip()]
    fields = {}
    if not header.startswith("# "):
        raise ValueError(f"{path}: missing provenance header")
    for tok in header[2:].split(" "):
        key, _, val = tok.partition("=")
        fields[key] = val
    for key in ("spec_hash", "columns", "units"):
        if key not in fields:
            raise ValueError(f"{path}: header lacks {key}")
    names = tuple(fields["columns"].split(",")) if fields["columns"] else ()
    units = tuple(fields["units"].split(",")) if fields["units"] else ()
    if len(names) != len(units):
        raise ValueError(f"{path}: columns/units length mismatch")
    raw = [r.split(",") for r in rows]
    if any(len(r) != len(names) for r in raw):
        raise ValueError(f"{path}: row width does not match header")
    cols = {}
    for j, name in enumerate(names):
        vals = [r[j] for r in raw]
        try:
            cols[name] = np.array([float(v) for v in vals])
        except ValueError:
            cols[name] = np.array(vals)
    return ColumnarData(spec_hash=fields["spec_hash"], names=names,
                        units=units, columns=cols)
