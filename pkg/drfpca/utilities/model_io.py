"""
模型文件与报告 JSON 的读写
矩阵可存为嵌套列表，或 base64 编码的小端 float64 加形状
"""

import base64
import json
import logging
import os
from typing import Optional

import numpy as np

from drfpca.exceptions import ValidationError
from drfpca.metrics.fairness import Projection

logger = logging.getLogger(__name__)

MODEL_VERSION = "1"
ENCODINGS = ("nested", "base64")


def encode_matrix(arr, encoding: str = "nested"):
    arr = np.asarray(arr, dtype=float)
    if encoding == "nested":
        return arr.tolist()
    if encoding == "base64":
        return {
            "dtype": "<f8",
            "shape": list(arr.shape),
            "data": base64.b64encode(arr.astype("<f8").tobytes(order="C")).decode("ascii"),
        }
    raise ValidationError(f"unknown matrix encoding {encoding!r}, expected one of {ENCODINGS}")


def decode_matrix(obj) -> np.ndarray:
    if isinstance(obj, dict):
        try:
            raw = base64.b64decode(obj["data"])
            return np.frombuffer(raw, dtype=obj.get("dtype", "<f8")).astype(float).reshape(obj["shape"])
        except (KeyError, ValueError, TypeError) as e:
            raise ValidationError(f"malformed base64 matrix: {e}") from e
    return np.asarray(obj, dtype=float)


def dumps(data) -> str:
    """键排序、缩进固定的 JSON 文本，用于可重复输出"""
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_json(path, data):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(data))
    logger.info("Wrote %s", path)


def read_json(path):
    try:
        with open(path, "r", encoding="utf-8-sig") as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise ValidationError(f"file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ValidationError(f"invalid JSON in {path}: {e}") from e


def save_model(path, projection: Projection, U: Optional[np.ndarray], center, config: dict,
               provenance: Optional[str] = None, encoding: str = "nested"):
    """
    写出模型文件：V、U（普通 PCA 时为 V 的正交补）、训练中心、配置与来源
    """
    data = {
        "version": MODEL_VERSION,
        "provenance": provenance or projection.provenance,
        "encoding": encoding,
        "d": projection.d,
        "k": projection.k,
        "V": encode_matrix(projection.V, encoding),
        "U": None if U is None else encode_matrix(U, encoding),
        "center": None if center is None else encode_matrix(center, encoding),
        "config": config,
    }
    write_json(path, data)


def load_model(path) -> dict:
    data = read_json(path)
    version = str(data.get("version"))
    if version != MODEL_VERSION:
        raise ValidationError(f"unsupported model version {version!r} in {path}")
    for name in ("V", "U", "center"):
        if data.get(name) is not None:
            data[name] = decode_matrix(data[name])
    data["projection"] = Projection(data["V"], provenance=data["provenance"])
    return data
