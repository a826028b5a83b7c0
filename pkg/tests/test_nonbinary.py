import numpy as np
import pytest
from conftest import moments_from, random_orthonormal, random_psd, random_tangent

from drfpca.exceptions import ValidationError
from drfpca.manifold.stiefel import retract_polar
from drfpca.robust.ambiguity import RobustConfig, reform_params
from drfpca.robust.nonbinary import eval_F_multi, pair_coefficients, pair_params, riemannian_subgradient_multi
from drfpca.robust.objective import eval_F, riemannian_subgradient


def random_multi(rng, m, d, k, lam_cap=True):
    p = rng.dirichlet(np.ones(m) * 3.0)
    gm = moments_from([random_psd(rng, d) for _ in range(m)], p)
    lam = float(rng.uniform(0.0, p.min() if lam_cap else 1.0))
    eps = tuple(float(e) for e in rng.uniform(0.0, 0.5, size=m))
    return gm, RobustConfig(lam=lam, eps=eps, k=k)


def test_pair_coefficients_example():
    c = pair_coefficients(np.array([1 / 3, 1 / 3, 1 / 3]), 0.1, 0, 1)
    np.testing.assert_allclose(c, [0.433333, 0.233333, 0.333333], atol=1e-6)


def test_pairs_are_ordered_lexicographically(rng):
    gm, cfg = random_multi(rng, 3, 3, 1)
    pp = pair_params(gm, cfg)
    assert pp.pairs == ((0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1))
    assert pp.coefficients.shape == (6, 3)


def test_binary_consistency(rng):
    for _ in range(100):
        d = int(rng.integers(2, 5))
        k = int(rng.integers(1, d))
        gm, cfg = random_multi(rng, 2, d, k, lam_cap=False)
        rp, pp = reform_params(gm, cfg), pair_params(gm, cfg)
        U = random_orthonormal(rng, d, d - k)
        binary, multi = eval_F(U, rp), eval_F_multi(U, pp)
        assert multi.value == pytest.approx(binary.value, rel=1e-9)
        np.testing.assert_allclose(multi.pair_values, binary.branch_values, rtol=1e-9)
        assert multi.active_pair == ((0, 1) if binary.active_branch == 0 else (1, 0))
        np.testing.assert_allclose(riemannian_subgradient_multi(U, pp).delta,
                                   riemannian_subgradient(U, rp).delta, rtol=1e-9, atol=1e-12)


def test_zero_lambda_zero_radius_is_pooled_quadratic(rng):
    gm, _ = random_multi(rng, 4, 4, 2)
    pp = pair_params(gm, RobustConfig(lam=0.0, eps=(0.0,) * 4, k=2))
    U = random_orthonormal(rng, 4, 2)
    expected = np.sum((U @ U.T) * gm.pooled_second_moment())
    assert eval_F_multi(U, pp).value == pytest.approx(expected, rel=1e-12)


def test_identical_groups_do_not_depend_on_lambda(rng):
    M = random_psd(rng, 3)
    gm = moments_from([M, M, M], [0.3, 0.3, 0.4])
    U = random_orthonormal(rng, 3, 2)
    values = [eval_F_multi(U, pair_params(gm, RobustConfig(lam=lam, eps=(0.2,) * 3, k=1))).value
              for lam in (0.0, 0.1, 0.25)]
    assert max(values) - min(values) < 1e-12


def test_label_permutation(rng):
    gm, cfg = random_multi(rng, 3, 3, 1)
    perm = [2, 0, 1]
    permuted = moments_from(gm.M[perm], gm.p[perm])
    cfg_p = RobustConfig(lam=cfg.lam, eps=tuple(cfg.eps[i] for i in perm), k=cfg.k)
    U = random_orthonormal(rng, 3, 2)
    assert eval_F_multi(U, pair_params(permuted, cfg_p)).value == pytest.approx(
        eval_F_multi(U, pair_params(gm, cfg)).value, rel=1e-12)


def test_finite_differences(rng):
    checked = 0
    while checked < 100:
        m = int(rng.integers(3, 5))
        d = int(rng.integers(2, 5))
        k = int(rng.integers(1, d))
        gm, cfg = random_multi(rng, m, d, k, lam_cap=False)
        pp = pair_params(gm, cfg)
        U = random_orthonormal(rng, d, d - k)
        ev = eval_F_multi(U, pp)
        ordered = sorted(ev.pair_values)
        if ordered[-1] - ordered[-2] < 1e-4 * (1.0 + abs(ev.value)):
            continue
        direction = random_tangent(rng, U)
        h = 1e-6
        fd = (eval_F_multi(retract_polar(U, h * direction), pp).value
              - eval_F_multi(retract_polar(U, -h * direction), pp).value) / (2 * h)
        analytic = float(np.sum(riemannian_subgradient_multi(U, pp).delta * direction))
        assert analytic == pytest.approx(fd, abs=1e-5 * (1.0 + abs(fd)))
        checked += 1


def test_single_group_rejected(rng):
    gm = moments_from([random_psd(rng, 2)], [1.0])
    with pytest.raises(ValidationError):
        pair_params(gm, RobustConfig(lam=0.0, eps=(0.0,), k=1))
