import json

import numpy as np
import pytest

from drfpca.exceptions import ValidationError
from drfpca.metrics.fairness import Projection
from drfpca.utilities.model_io import decode_matrix, dumps, encode_matrix, load_model, read_json, save_model


@pytest.fixture
def projection():
    return Projection(np.array([[0.6], [0.8], [0.0]]), provenance="robust-fair")


@pytest.mark.parametrize("encoding", ["nested", "base64"])
def test_save_and_load_model(tmp_path, projection, encoding):
    path = str(tmp_path / "model.json")
    U = np.array([[-0.8, 0.0], [0.6, 0.0], [0.0, 1.0]])
    save_model(path, projection, U, np.array([1.0, 2.0, 3.0]), {"k": 1, "lambda": 0.5}, encoding=encoding)
    model = load_model(path)
    assert model["version"] == "1"
    assert model["provenance"] == "robust-fair"
    assert model["encoding"] == encoding
    np.testing.assert_array_equal(model["V"], projection.V)
    np.testing.assert_array_equal(model["U"], U)
    np.testing.assert_array_equal(model["center"], [1.0, 2.0, 3.0])
    assert model["projection"].k == 1
    assert model["config"] == {"k": 1, "lambda": 0.5}


def test_base64_layout():
    data = encode_matrix(np.arange(6.0).reshape(2, 3), "base64")
    assert data["dtype"] == "<f8" and data["shape"] == [2, 3]
    np.testing.assert_array_equal(decode_matrix(data), np.arange(6.0).reshape(2, 3))


def test_unknown_encoding():
    with pytest.raises(ValidationError):
        encode_matrix(np.eye(2), "hex")


def test_malformed_base64():
    with pytest.raises(ValidationError, match="malformed"):
        decode_matrix({"shape": [2, 2]})


def test_model_version_checked(tmp_path, projection):
    path = tmp_path / "model.json"
    save_model(str(path), projection, None, None, {})
    data = json.loads(path.read_text(encoding="utf-8"))
    data["version"] = "0"
    path.write_text(json.dumps(data), encoding="utf-8")
    with pytest.raises(ValidationError, match="version"):
        load_model(str(path))


def test_report_json_is_canonical():
    text = dumps({"b": 1, "a": {"d": 2.5, "c": [1, 2]}})
    assert text == dumps(json.loads(text))
    assert text.index('"a"') < text.index('"b"')


def test_read_json_errors(tmp_path):
    with pytest.raises(ValidationError, match="not found"):
        read_json(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{", encoding="utf-8")
    with pytest.raises(ValidationError, match="invalid JSON"):
        read_json(str(bad))
