import numpy as np
import pytest

from drfpca.config.config_manager import reset_config
from drfpca.data.dataset import TOY_COVARIANCES, GroupMoments, center, make_toy


def moments_from(M, p, counts=None):
    """以给定二阶矩构造零均值的 GroupMoments"""
    M = np.asarray(M, dtype=float)
    m, d = M.shape[0], M.shape[1]
    counts = np.asarray(counts if counts is not None else [100] * m)
    return GroupMoments(p=np.asarray(p, dtype=float), mu=np.zeros((m, d)), Sigma=M.copy(), M=M, counts=counts)


def random_psd(rng, d, floor=0.1):
    B = rng.standard_normal((d, d))
    return B @ B.T / d + floor * np.eye(d)


def random_orthonormal(rng, d, p):
    Q, R = np.linalg.qr(rng.standard_normal((d, p)))
    return Q * np.sign(np.diag(R))


def random_tangent(rng, U):
    D = rng.standard_normal(U.shape)
    UtD = U.T @ D
    delta = D - U @ UtD + 0.5 * U @ (UtD - UtD.T)
    return delta / np.linalg.norm(delta)


@pytest.fixture(autouse=True)
def fresh_config():
    reset_config()
    yield
    reset_config()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def toy_moments():
    """玩具数据的精确总体矩，p = (2/3, 1/3)"""
    return moments_from(np.array(TOY_COVARIANCES), [2.0 / 3.0, 1.0 / 3.0], counts=[200, 100])


@pytest.fixture
def toy_dataset():
    return center(make_toy(200, 100, seed=0))


@pytest.fixture
def write_csv(tmp_path):
    def _write(text, name="data.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return _write
