import numpy as np
import pytest

from sobolev_lab import relu1
from sobolev_lab.mc import (
    BLOCK,
    McConfig,
    block_normals,
    convergence_study,
    fit_loglog_slope,
    mc_loss_and_grad,
    mc_multinode_grad,
)


def test_block_normals_are_deterministic_and_gaussian():
    a = block_normals(123, 0, 4096, 8)
    b = block_normals(123, 0, 4096, 8)
    assert np.array_equal(a, b)
    c = block_normals(123, 1, 4096, 8)
    assert not np.array_equal(a, c)
    big = block_normals(7, 0, BLOCK, 4)
    assert abs(big.mean()) < 0.01
    assert abs(big.var() - 1.0) < 0.01
    assert np.all(np.isfinite(big))


def test_identical_config_is_bit_identical():
    w = np.array([0.3, -1.0, 0.5])
    ws = np.array([1.0, 0.2, 0.0])
    cfg = McConfig(n_samples=200_000, seed=42, dim=3)
    a = mc_loss_and_grad("relu", "h1", w, ws, cfg)
    b = mc_loss_and_grad("relu", "h1", w, ws, cfg)
    assert np.array_equal(a.mean, b.mean)
    assert np.array_equal(a.std_error, b.std_error)


def test_estimate_independent_of_chunking_and_threads():
    w = np.array([0.3, -1.0, 0.5])
    ws = np.array([1.0, 0.2, 0.0])
    base = mc_loss_and_grad("relu", "l2", w, ws, McConfig(n_samples=3 * BLOCK + 17, seed=9, dim=3))
    for chunk in (1, 2, 7):
        for threads in (1, 3):
            est = mc_loss_and_grad(
                "relu", "l2", w, ws,
                McConfig(n_samples=3 * BLOCK + 17, seed=9, dim=3, chunk_size=chunk),
                threads=threads,
            )
            assert np.array_equal(est.mean, base.mean)
            assert np.array_equal(est.std_error, base.std_error)


def test_zero_residual_at_teacher_is_exact():
    ws = np.array([0.7, -0.2, 1.0, 0.4])
    cfg = McConfig(n_samples=50_000, seed=1, dim=4)
    for model in ("relu", "relu_sq"):
        for what in ("grad", "loss"):
            est = mc_loss_and_grad(model, "h1", ws, ws, cfg, what=what)
            assert np.all(est.mean == 0.0)
            assert np.all(est.std_error == 0.0)


def test_seminorm_gradient_example():
    w = np.array([0.0, 1.0])
    ws = np.array([1.0, 0.0])
    est = mc_loss_and_grad("relu", "h1_semi", w, ws, McConfig(n_samples=10**6, seed=5, dim=2))
    assert np.all(np.abs(est.mean - np.array([-0.25, 0.5])) <= 4.0 * est.std_error)


def test_loss_values_match_closed_forms():
    # L = (|w|^2 + |w*|^2)/4 - |w||w*| (sin t + (pi - t) cos t)/(2 pi)
    # J = (|w|^2 + |w*|^2)/4 - (pi - t)/(2 pi) w.w*
    rng = np.random.default_rng(3)
    w = rng.standard_normal(3)
    ws = rng.standard_normal(3)
    t = float(np.arccos(np.clip(w @ ws / (np.linalg.norm(w) * np.linalg.norm(ws)), -1, 1)))
    nw, ns = np.linalg.norm(w), np.linalg.norm(ws)
    l_closed = (nw**2 + ns**2) / 4 - nw * ns * (np.sin(t) + (np.pi - t) * np.cos(t)) / (2 * np.pi)
    j_closed = (nw**2 + ns**2) / 4 - (np.pi - t) / (2 * np.pi) * float(w @ ws)
    cfg = McConfig(n_samples=10**6, seed=31, dim=3)
    est_l = mc_loss_and_grad("relu", "l2", w, ws, cfg, what="loss")
    est_j = mc_loss_and_grad("relu", "h1_semi", w, ws, cfg, what="loss")
    assert abs(est_l.mean - l_closed) <= 4.0 * est_l.std_error
    assert abs(est_j.mean - j_closed) <= 4.0 * est_j.std_error


def test_h2_parts_shapes():
    w = np.array([0.5, 0.2])
    ws = np.array([1.0, 0.0])
    cfg = McConfig(n_samples=10_000, seed=2, dim=2)
    grad = mc_loss_and_grad("relu_sq", "h2_parts", w, ws, cfg)
    assert grad.mean.shape == (3, 2)
    assert grad.std_error.shape == (3, 2)
    loss = mc_loss_and_grad("relu_sq", "h2_parts", w, ws, cfg, what="loss")
    assert loss.mean.shape == (3,)
    assert np.all(loss.mean > 0)


def test_multinode_estimator_shape_and_determinism():
    Wstar = np.eye(3)[:2]
    W = Wstar + 0.2
    cfg = McConfig(n_samples=100_000, seed=8, dim=3)
    a = mc_multinode_grad(W, Wstar, "l2", cfg)
    b = mc_multinode_grad(W, Wstar, "l2", cfg, threads=2)
    assert a.mean.shape == (2, 3)
    assert np.array_equal(a.mean, b.mean)


def test_mse_halves_when_samples_double():
    rows = convergence_study("relu", "l2", dims=[4], n_grid=[2**10, 2**12, 2**14],
                             trials=4, seed=77)
    by_n = {n: mse for _, n, mse in rows}
    assert by_n[2**14] < by_n[2**10]
    slope = fit_loglog_slope(np.array(sorted(by_n)), np.array([by_n[n] for n in sorted(by_n)]))
    assert -1.5 <= slope <= -0.5  # coarse grid; the acceptance run pins [-1.2, -0.8]


def test_validation_errors():
    cfg = McConfig(n_samples=100, seed=0, dim=2)
    with pytest.raises(ValueError):
        mc_loss_and_grad("relu", "nope", np.ones(2), np.ones(2), cfg)
    with pytest.raises(ValueError):
        mc_loss_and_grad("gelu", "l2", np.ones(2), np.ones(2), cfg)
    with pytest.raises(ValueError):
        mc_loss_and_grad("relu", "l2", np.ones(3), np.ones(3), cfg)
    with pytest.raises(ValueError):
        McConfig(n_samples=0, seed=0, dim=2)


def test_relu_sq_kind_aliases_agree():
    w = np.array([0.4, 0.8])
    ws = np.array([1.0, 0.0])
    cfg = McConfig(n_samples=20_000, seed=6, dim=2)
    i1 = mc_loss_and_grad("relu_sq", "i1", w, ws, cfg)
    l2 = mc_loss_and_grad("relu_sq", "l2", w, ws, cfg)
    assert np.array_equal(i1.mean, l2.mean)
    parts = mc_loss_and_grad("relu_sq", "h2_parts", w, ws, cfg)
    assert np.array_equal(parts.mean[0], i1.mean)


def test_grad_oracle_agreement_sweep():
    rng = np.random.default_rng(15)
    for dim in (2, 8):
        ws = rng.standard_normal(dim)
        w = ws + 0.4 * rng.standard_normal(dim)
        closed = relu1.population_gradients(w, ws)
        est = mc_loss_and_grad("relu", "h1", w, ws, McConfig(n_samples=400_000, seed=100 + dim, dim=dim))
        assert np.all(np.abs(est.mean - closed.grad_h1) <= 4.0 * est.std_error)


def test_fifty_pairs_million_samples_every_closed_form():
    # every closed-form gradient, 50 random basin pairs across d in
    # {2, 8, 32}, million-sample estimates, 4 standard errors
    from sobolev_lab import multinode as mn
    from sobolev_lab.mc import closed_form_grad

    rng = np.random.default_rng(5150)
    forms = [("relu", "l2"), ("relu", "h1_semi"), ("relu", "h1"),
             ("relu_sq", "i1"), ("relu_sq", "i2"), ("relu_sq", "i3")]
    dims = (2, 8, 32)
    worst_z = 0.0
    for i in range(45):
        model, kind = forms[i % len(forms)]
        dim = dims[i % len(dims)]
        ws = rng.standard_normal(dim)
        ws /= np.linalg.norm(ws)
        e = rng.standard_normal(dim)
        e *= rng.uniform(0.1, 0.9) / np.linalg.norm(e)
        w = ws + e
        est = mc_loss_and_grad(model, kind, w, ws,
                               McConfig(n_samples=10**6, seed=7000 + i, dim=dim))
        closed = closed_form_grad(model, kind, w, ws)
        worst_z = max(worst_z, float(np.max(np.abs(est.mean - closed) / est.std_error)))
    for i in range(5):
        dim = 4
        Wstar = np.linalg.qr(rng.standard_normal((dim, dim)))[0][:2].copy()
        E = rng.standard_normal((2, dim))
        E *= (rng.uniform(0.2, 0.8, size=2) / np.linalg.norm(E, axis=1))[:, None]
        W = Wstar + E
        kind = "l2" if i % 2 == 0 else "h1"
        est = mc_multinode_grad(W, Wstar, kind, McConfig(n_samples=10**6, seed=8000 + i, dim=dim))
        closed = -mn.multinode_gradients(W, Wstar, kind)
        worst_z = max(worst_z, float(np.max(np.abs(est.mean - closed) / est.std_error)))
    assert worst_z <= 4.0, f"worst z-score {worst_z:.2f}"
