# Third party imports
import pytest

from src.core.errors import InvalidParameter
from src.utils.digests import file_digest
from src.utils.grids import parse_int_list, parse_lambda_grid
from src.utils.uuids import generate_run_id


def test_int_list():
    assert parse_int_list("2, 3,5") == [2, 3, 5]
    for raw in ("", "2,x", "0,1"):
        with pytest.raises(InvalidParameter):
            parse_int_list(raw)


def test_lambda_grid():
    assert parse_lambda_grid("50") == 50
    assert parse_lambda_grid("0.5,0.1") == [0.5, 0.1]
    assert parse_lambda_grid("1.0") == [1.0]
    for raw in ("", "0", "0.1,-1", "a"):
        with pytest.raises(InvalidParameter):
            parse_lambda_grid(raw)


def test_run_id_ignores_key_order():
    first = generate_run_id("fit", {"a": 1, "b": [2.0]})
    assert first == generate_run_id("fit", {"b": [2.0], "a": 1})
    assert first != generate_run_id("simulate", {"a": 1, "b": [2.0]})


def test_file_digest(tmp_path):
    path = tmp_path / "empty"
    path.write_bytes(b"")
    assert file_digest(path) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
