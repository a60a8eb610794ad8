import json
import math

import numpy as np
import pytest
import scipy.io
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from trapmodes.geometry import IncisorSpec, StripSpec, Tag, build_incisor_mesh, build_strip_mesh
from trapmodes.io_export import (
    CurveTable,
    format_number,
    read_csv,
    write_boundary_vtk,
    write_csv,
    write_json,
    write_matrix_market,
    write_vtk,
)

SQUARE_VTK = """\
# vtk DataFile Version 3.0
trapmodes
ASCII
DATASET UNSTRUCTURED_GRID
POINTS 4 double
0.0 0.0 0.0
0.0 1.0 0.0
1.0 0.0 0.0
1.0 1.0 0.0
CELLS 2 8
3 0 2 1
3 2 3 1
CELL_TYPES 2
5
5
POINT_DATA 4
SCALARS u double 1
LOOKUP_TABLE default
0.0
0.0
0.0
0.0
"""


def test_square_vtk_reference(tmp_path):
    mesh = build_strip_mesh(StripSpec(0.0, 1.0), 1, 1)
    path = write_vtk(mesh, np.zeros(4), tmp_path / "sq.vtk")
    data = path.read_bytes()
    assert b"\r" not in data
    assert data.decode() == SQUARE_VTK
    assert len(SQUARE_VTK.splitlines()) == 22


def test_vtk_tetra_and_length_check(tmp_path):
    mesh = build_incisor_mesh(IncisorSpec((1.0, 0.5), 2.0, 2.0), 2, 2, 1)
    text = write_vtk(mesh, mesh.vertices[:, 0], tmp_path / "t.vtk").read_text().splitlines()
    i = text.index(f"CELL_TYPES {mesh.n_cells}")
    assert set(text[i + 1:i + 1 + mesh.n_cells]) == {"10"}
    with pytest.raises(ValueError):
        write_vtk(mesh, np.zeros(3), tmp_path / "bad.vtk")


def test_boundary_vtk_tags(tmp_path):
    mesh = build_strip_mesh(StripSpec(0.5, 3.0), 4, 2)
    text = write_boundary_vtk(mesh, tmp_path / "b.vtk").read_text().splitlines()
    i = text.index("SCALARS boundary_tag int 1")
    tags = [int(x) for x in text[i + 2:]]
    assert tags == mesh.facet_tags.tolist()
    assert set(tags) == {int(Tag.DIRICHLET_SIGMA), int(Tag.NEUMANN_PHYS), int(Tag.ARTIFICIAL)}


def test_empty_table_is_header_only(tmp_path):
    path = write_csv(CurveTable(["alpha", "mu1"]), tmp_path / "e.csv")
    assert path.read_text() == "alpha,mu1\n"
    assert read_csv(path).rows == []


def test_pi2_round_trip(tmp_path):
    path = write_csv(CurveTable(["x"], [[math.pi ** 2]]), tmp_path / "p.csv")
    assert path.read_text() == "x\n9.869604401089358\n"
    assert read_csv(path).rows[0][0] == math.pi ** 2


@given(st.floats(allow_nan=False))
def test_format_number_round_trips(x):
    assert float(format_number(x)) == x


def test_missing_values_and_text(tmp_path):
    table = CurveTable(["a", "b", "c"], [[1, None, "note, with comma"], [True, 2.5, "x"]])
    back = read_csv(write_csv(table, tmp_path / "m.csv"))
    assert back.rows == [[1.0, None, "note, with comma"], [1.0, 2.5, "x"]]


def test_sidecar_provenance(tmp_path):
    table = CurveTable(["a"], [[1.0], [2.0]], {"R": 12.0})
    path = write_csv(table, tmp_path / "c.csv")
    side = json.loads((tmp_path / "c.csv.json").read_text())
    assert side["R"] == 12.0
    assert side["content_sha256"] == table.content_hash()
    assert CurveTable(["a"], [[1.0], [2.5]]).content_hash() != table.content_hash()
    assert path.exists()


def test_row_length_checked():
    with pytest.raises(ValueError):
        CurveTable(["a", "b"], [[1.0]])


def test_json_sorted_and_finite(tmp_path):
    path = write_json({"b": np.float64(1.5), "a": np.arange(2), "c": math.inf}, tmp_path / "j.json")
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [0, 1], "b": 1.5, "c": "inf"}


def test_matrix_market_round_trip(tmp_path):
    A = sp.random(20, 20, density=0.2, random_state=3, format="csr")
    A = A + A.T + sp.eye(20)
    path = write_matrix_market(A, tmp_path / "a.mtx")
    B = scipy.io.mmread(str(path))
    assert abs(A - B).max() == 0


def test_unwritable_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        write_csv(CurveTable(["a"], [[1.0]]), blocker / "sub" / "t.csv")
