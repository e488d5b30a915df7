import numpy as np
import pytest

import mmvrec


def planted_problem(rng, m=32, n=64, big_k=3, k=5):
    a = rng.standard_normal((m, n))
    support = np.sort(rng.choice(n, size=k, replace=False))
    x = np.zeros((n, big_k))
    x[support] = rng.standard_normal((k, big_k))
    return a, a @ x, x, support


def test_recover_somp_exact_on_noiseless_problem():
    rng = np.random.default_rng(1)
    a, y, x, support = planted_problem(rng)
    res = mmvrec.recover(a, y, k=5, method="somp")
    assert res["converged"]
    assert np.array_equal(res["support"][0], support)
    np.testing.assert_allclose(res["x_hat"], x, atol=1e-8)


def test_recover_sp_matches_support():
    rng = np.random.default_rng(2)
    a, y, x, support = planted_problem(rng, big_k=1)
    res = mmvrec.recover(a, y, k=5, method="sp")
    assert np.array_equal(res["support"][0], support)


def test_recover_rejects_unknown_method():
    rng = np.random.default_rng(3)
    a, y, _, _ = planted_problem(rng)
    with pytest.raises(ValueError):
        mmvrec.recover(a, y, k=5, method="bogus")


def test_lstsq_matches_numpy():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((12, 5))
    b = rng.standard_normal((12, 2))
    expected, *_ = np.linalg.lstsq(a, b, rcond=None)
    np.testing.assert_allclose(mmvrec.lstsq(a, b), expected, atol=1e-10)


def test_scene_identities_and_estimation():
    scene = mmvrec.generate_scene(m_tx=32, n_rx=4, t_pilots=24, sparsity=4,
                                  snr_db=25.0, seed=7)
    h = scene.h
    assert h.shape == (4, 32)
    assert len(scene.support) == 4
    # Angular columns outside the support are exactly zero.
    ha = scene.h_angular
    off = [c for c in range(32) if c not in set(scene.support)]
    assert np.all(ha[:, off] == 0)

    est = mmvrec.estimate_channel(scene, method="somp")
    assert est["h_hat"].shape == h.shape
    assert 0 <= est["nmse"] < 0.5
    np.testing.assert_allclose(mmvrec.nmse(est["h_hat"], h), est["nmse"], rtol=1e-12)


def test_scene_generation_is_deterministic():
    a = mmvrec.generate_scene(m_tx=16, n_rx=2, t_pilots=12, sparsity=3, seed=42)
    b = mmvrec.generate_scene(m_tx=16, n_rx=2, t_pilots=12, sparsity=3, seed=42)
    np.testing.assert_array_equal(a.h, b.h)
    np.testing.assert_array_equal(a.y, b.y)
