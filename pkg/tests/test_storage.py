# Third party imports
import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.errors import NonFinite, NonRectangular, ParseError
from src.models.data import DataMatrix, GroupAssignment, PrecisionMatrix
from src.storage.repositories.matrices import (
    MatrixFormat,
    MatrixRepository,
    format_bin,
    load_matrix,
    parse_bin,
    parse_csv,
    save_matrix,
)
from src.storage.repositories.results import ResultRepository, dump_json, format_cell


class TestCsv:
    def test_two_by_two(self):
        assert_allclose(parse_csv("1,2\n3,4"), [[1.0, 2.0], [3.0, 4.0]])

    def test_header_and_blank_lines(self):
        values = parse_csv("a,b\n\n1.5,-2e-3\n3,4\n")
        assert_allclose(values, [[1.5, -0.002], [3.0, 4.0]])

    def test_ragged_rows(self):
        with pytest.raises(NonRectangular) as e:
            parse_csv("1,2\n3,4,5\n")
        assert e.value.row == 2

    def test_non_numeric_field(self):
        with pytest.raises(ParseError) as e:
            parse_csv("1,2\n3,x\n")
        assert e.value.location == 2

    def test_non_finite_value(self):
        with pytest.raises(NonFinite) as e:
            parse_csv("x,y\n1,2\n3,nan\n")
        assert (e.value.row, e.value.column) == (3, 2)

    def test_header_only(self):
        with pytest.raises(ParseError):
            parse_csv("a,b\n")

    def test_round_trip_is_exact(self, tmp_path, rng):
        matrix = DataMatrix(values=rng.standard_normal((5, 3)))
        save_matrix(tmp_path / "x.csv", matrix)
        assert np.array_equal(load_matrix(tmp_path / "x.csv").values, matrix.values)


class TestBinary:
    def test_round_trip(self, tmp_path, rng):
        matrix = DataMatrix(values=rng.standard_normal((4, 6)))
        save_matrix(tmp_path / "x.bin", matrix, MatrixFormat.BIN)
        loaded = load_matrix(tmp_path / "x.bin", MatrixFormat.BIN)
        assert np.array_equal(loaded.values, matrix.values)

    def test_layout(self):
        data = format_bin(np.array([[1.0, 2.0]]))
        assert data[:8] == b"HGMMAT01"
        assert int.from_bytes(data[8:16], "little") == 1
        assert int.from_bytes(data[16:24], "little") == 2
        assert len(data) == 24 + 16

    def test_bad_magic(self):
        data = b"NOTAMAT!" + format_bin(np.ones((1, 1)))[8:]
        with pytest.raises(ParseError) as e:
            parse_bin(data)
        assert e.value.location == 0

    def test_truncated(self):
        data = format_bin(np.ones((2, 2)))
        with pytest.raises(ParseError):
            parse_bin(data[:-3])
        with pytest.raises(ParseError):
            parse_bin(data[:10])

    def test_non_finite(self):
        with pytest.raises(NonFinite) as e:
            parse_bin(format_bin(np.array([[1.0, 2.0], [np.inf, 0.0]])))
        assert (e.value.row, e.value.column) == (2, 1)


def test_matrix_repository(tmp_path):
    repo = MatrixRepository(tmp_path)
    path = repo.save("m.csv", np.array([[1.0, 2.0], [3.0, 5.0]]))
    assert path == tmp_path / "m.csv"
    assert_allclose(repo.load("m.csv").values, [[1.0, 2.0], [3.0, 5.0]])


def test_single_row_is_not_a_data_matrix(tmp_path):
    (tmp_path / "x.csv").write_text("1,2,3\n")
    with pytest.raises(ParseError):
        load_matrix(tmp_path / "x.csv")


class TestResults:
    def test_cells(self):
        assert format_cell(0.1) == "0.1"
        assert format_cell(np.float64(1e-20)) == "1e-20"
        assert format_cell(True) == "true"
        assert format_cell(np.int64(3)) == "3"

    def test_json_is_deterministic(self):
        assert dump_json({"b": 1, "a": [0.5]}) == '{\n  "a": [\n    0.5\n  ],\n  "b": 1\n}\n'

    def test_groups_round_trip(self, tmp_path):
        repo = ResultRepository(tmp_path)
        groups = GroupAssignment(labels=[1, 0, 2, 1], k=3)
        repo.write_groups("groups.csv", groups)
        assert (tmp_path / "groups.csv").read_text() == "variable,group\n1,2\n2,1\n3,3\n4,2\n"
        assert repo.read_groups("groups.csv").same_partition_as(groups)

    def test_groups_must_cover_every_variable(self, tmp_path):
        (tmp_path / "groups.csv").write_text("variable,group\n1,1\n3,2\n")
        with pytest.raises(ParseError):
            ResultRepository(tmp_path).read_groups("groups.csv")

    def test_groups_with_an_empty_group(self, tmp_path):
        (tmp_path / "groups.csv").write_text("variable,group\n1,1\n2,3\n")
        with pytest.raises(ParseError):
            ResultRepository(tmp_path).read_groups("groups.csv", k=3)

    def test_edges_round_trip(self, tmp_path):
        repo = ResultRepository(tmp_path)
        omega = PrecisionMatrix(omega=[[2.0, 0.0, -0.5], [0.0, 1.0, 0.0], [-0.5, 0.0, 1.5]])
        repo.write_edges("edges.csv", omega)
        lines = (tmp_path / "edges.csv").read_text().splitlines()
        assert lines == ["i,j,value", "1,1,2.0", "1,3,-0.5", "2,2,1.0", "3,3,1.5"]
        assert np.array_equal(repo.read_edges("edges.csv", 3).omega, omega.omega)

    def test_edges_outside_the_node_range(self, tmp_path):
        (tmp_path / "edges.csv").write_text("i,j,value\n1,4,0.5\n")
        with pytest.raises(ParseError) as e:
            ResultRepository(tmp_path).read_edges("edges.csv", 3)
        assert e.value.location == 2

    def test_invalid_json(self, tmp_path):
        (tmp_path / "s.json").write_text("{nope")
        with pytest.raises(ParseError):
            ResultRepository(tmp_path).read_json("s.json")
