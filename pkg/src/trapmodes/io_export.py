"""Deterministic writers: CSV tables, JSON reports, legacy VTK and Matrix Market."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.io

from .geometry import Mesh

VTK_CELL_TYPES = {(2, 3): 5, (3, 4): 10}  # (dim, nodes per cell) -> VTK type


def format_number(x) -> str:
    """Shortest decimal string that round-trips to the same double; empty for None.

    Strings pass through unchanged.
    """
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


@dataclass
class CurveTable:
    """Column-named numeric table with a provenance block written to a sidecar JSON."""

    columns: list
    rows: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = list(self.columns)
        self.rows = [list(r) for r in self.rows]
        for i, r in enumerate(self.rows):
            if len(r) != len(self.columns):
                raise ValueError(f"row {i} has {len(r)} entries, expected {len(self.columns)}")

    @classmethod
    def from_dicts(cls, columns, records, provenance=None) -> "CurveTable":
        return cls(columns, [[rec.get(c) for c in columns] for rec in records], dict(provenance or {}))

    def column(self, name) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def content_hash(self) -> str:
        """SHA-256 over the serialized header and rows (provenance excluded)."""
        h = hashlib.sha256()
        h.update(",".join(self.columns).encode())
        for r in self.rows:
            h.update(b"\n" + ",".join(format_number(x) for x in r).encode())
        return h.hexdigest()


def _open_for_write(path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return path.open("w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_csv(table: CurveTable, path, provenance_sidecar: bool = True) -> Path:
    """Write ``table`` as CSV with LF endings; provenance goes to ``<path>.json``."""
    path = Path(path)
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.columns)
        for r in table.rows:
            w.writerow([format_number(x) for x in r])
    if provenance_sidecar and table.provenance:
        prov = dict(table.provenance)
        prov["content_sha256"] = table.content_hash()
        write_json(prov, path.with_suffix(path.suffix + ".json"))
    return path


def read_csv(path) -> CurveTable:
    """Inverse of ``write_csv``; empty cells become None, numbers become floats, other text stays."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        columns = next(rd)
        rows = [[_parse_cell(x) for x in r] for r in rd]
    return CurveTable(columns, rows)


def _parse_cell(text: str):
    if text == "":
        return None
    try:
        return float(text)
    except ValueError:
        return text


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def write_json(data: dict, path) -> Path:
    """Sorted-key, indented JSON; NaN and infinities are written as strings."""
    path = Path(path)
    with _open_for_write(path) as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_vtk(mesh: Mesh, point_field, path, name: str = "u", title: str = "trapmodes") -> Path:
    """Legacy ASCII VTK 3.0 unstructured grid with one scalar point field."""
    values = np.asarray(point_field, dtype=float)
    if values.shape != (mesh.n_vertices,):
        raise ValueError(f"point field has length {values.size}, mesh has {mesh.n_vertices} vertices")
    nodes = mesh.cells.shape[1]
    ctype = VTK_CELL_TYPES[(mesh.dim, nodes)]
    return _write_grid(path, title, _points3(mesh.vertices), mesh.cells, ctype,
                       point_data=(name, values))


def write_boundary_vtk(mesh: Mesh, path, title: str = "trapmodes boundary") -> Path:
    """Boundary facets with their tags as integer CELL_DATA ``boundary_tag``."""
    ctype = 3 if mesh.dim == 2 else 5  # line or triangle facets
    return _write_grid(path, title, _points3(mesh.vertices), mesh.facets, ctype,
                       cell_data=("boundary_tag", mesh.facet_tags))


def _points3(v: np.ndarray) -> np.ndarray:
    if v.shape[1] == 3:
        return v
    return np.column_stack([v, np.zeros(len(v))])


def _write_grid(path, title, points, cells, ctype, point_data=None, cell_data=None) -> Path:
    path = Path(path)
    n, nodes = cells.shape
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {len(points)} double"]
    lines += [" ".join(format_number(x) for x in p) for p in points]
    lines.append(f"CELLS {n} {n * (nodes + 1)}")
    lines += [f"{nodes} " + " ".join(str(int(i)) for i in c) for c in cells]
    lines.append(f"CELL_TYPES {n}")
    lines += [str(ctype)] * n
    if cell_data is not None:
        name, vals = cell_data
        lines += [f"CELL_DATA {n}", f"SCALARS {name} int 1", "LOOKUP_TABLE default"]
        lines += [str(int(x)) for x in vals]
    if point_data is not None:
        name, vals = point_data
        lines += [f"POINT_DATA {len(points)}", f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [format_number(x) for x in vals]
    with _open_for_write(path) as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_matrix_market(matrix, path, comment: str = "") -> Path:
    """Sparse matrix in Matrix Market coordinate format (symmetric storage when exact)."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        scipy.io.mmwrite(str(path), matrix, comment=comment, precision=17)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path
