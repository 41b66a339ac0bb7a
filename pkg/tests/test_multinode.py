import math

import numpy as np
import pytest

from sobolev_lab import multinode as mn
from sobolev_lab import relu1
from sobolev_lab.exceptions import SingularPointError
from sobolev_lab.mc import McConfig, mc_multinode_grad
from sobolev_lab.ode import rk4_integrate

TWO_PI = 2.0 * math.pi


def test_field_vanishes_at_teacher():
    rng = np.random.default_rng(1)
    for k in (2, 4):
        Wstar = np.linalg.qr(rng.standard_normal((k + 2, k + 2)))[0][:k]
        for kind in ("l2", "h1"):
            assert np.abs(mn.multinode_gradients(Wstar, Wstar, kind)).max() <= 1e-12


def test_single_node_reduces_to_flow_rhs():
    rng = np.random.default_rng(2)
    ws = rng.standard_normal(5)
    w = ws + 0.4 * rng.standard_normal(5)
    for kind in ("l2", "h1"):
        full = mn.multinode_gradients(w[None, :], ws[None, :], kind)[0]
        assert full == pytest.approx(relu1.flow_rhs(kind, w, ws), abs=1e-14)


def test_matches_mc_oracle_k2():
    rng = np.random.default_rng(3)
    d = 4
    Wstar = np.linalg.qr(rng.standard_normal((d, d)))[0][:2]
    t = rng.uniform(-0.2, 0.9, size=2)
    t[0] = 1.1
    W = Wstar * 0  # cyclic student in the teacher plane plus a generic tilt
    W = np.stack([t[0] * Wstar[0] + t[1] * Wstar[1], t[1] * Wstar[0] + t[0] * Wstar[1]])
    closed = mn.multinode_gradients(W, Wstar, "h1")
    est = mc_multinode_grad(W, Wstar, "h1", McConfig(n_samples=10**6, seed=55, dim=d))
    assert np.all(np.abs(est.mean - (-closed)) <= 4.0 * est.std_error)


def test_zero_node_flagged():
    W = np.array([[0.0, 0.0], [1.0, 0.0]])
    with pytest.raises(SingularPointError):
        mn.multinode_gradients(W, np.eye(2), "l2")


def test_cyclic_closure_of_gradients():
    # on the cyclic parametrization every node field is the shift of node 1's
    rng = np.random.default_rng(4)
    for k in (2, 3, 5):
        t = rng.uniform(-0.4, 1.0, size=k)
        t[0] = 1.2
        W = mn.cyclic_students(t)
        Wstar = np.eye(k)
        for kind in ("l2", "h1"):
            g = mn.multinode_gradients(W, Wstar, kind)
            for j in range(k):
                assert np.abs(g[j] - np.roll(g[0], j)).max() <= 1e-12


def test_reduced_field_is_projection_of_full_gradient():
    rng = np.random.default_rng(5)
    for k in (2, 3, 5):
        for _ in range(10):
            x = rng.uniform(0.3, 1.0)
            y = rng.uniform(0.0, x - 0.05)
            W = mn.planar_students(x, y, k)
            g = mn.multinode_gradients(W, np.eye(k), "l2")
            xdot, ydot = mn.reduced_field("l2", mn.ReducedState(x=x, y=y, k=k))
            assert abs(g[0, 0] - xdot) <= 1e-10
            assert abs(g[0, 1] - ydot) <= 1e-10
            xdot_h, ydot_h = mn.reduced_field("h1", mn.ReducedState(x=x, y=y, k=k))
            g_h = mn.multinode_gradients(W, np.eye(k), "h1")
            assert abs(g_h[0, 0] - xdot_h) <= 1e-10
            assert abs(g_h[0, 1] - ydot_h) <= 1e-10


def test_reduced_angles_match_cosine_relations():
    st = mn.ReducedState(x=0.8, y=0.3, k=4)
    a = mn.reduced_angles(st)
    alpha = 1.0 / math.sqrt(0.8**2 + 3 * 0.3**2)
    assert a.alpha_red == pytest.approx(alpha, rel=1e-14)
    assert math.cos(a.theta) == pytest.approx(alpha * 0.8, rel=1e-12)
    assert math.cos(a.phi_star) == pytest.approx(alpha * 0.3, rel=1e-12)
    assert math.cos(a.phi) == pytest.approx(alpha**2 * (2 * 0.8 * 0.3 + 2 * 0.3**2), rel=1e-12)


def test_critical_point_and_origin():
    for k in (2, 5):
        assert mn.reduced_field("l2", mn.ReducedState(x=1.0, y=0.0, k=k)) == (0.0, 0.0)
        assert mn.reduced_field("h1", mn.ReducedState(x=1.0, y=0.0, k=k)) == (0.0, 0.0)
    with pytest.raises(SingularPointError):
        mn.reduced_field("l2", mn.ReducedState(x=0.0, y=0.0, k=2))


def test_diagonal_field_values_k2():
    st = mn.ReducedState(x=1.0, y=1.0, k=2)
    x_l2, x_h1 = mn.saddle_points(2)
    xdot_l2 = mn.reduced_field("l2", st)[0]
    xdot_h1 = mn.reduced_field("h1", st)[0]
    assert xdot_l2 == pytest.approx(-(2 / 2) * (1.0 - x_l2), abs=1e-12)  # -0.4658
    assert xdot_h1 == pytest.approx(-2 * (1.0 - x_h1), abs=1e-12)  # -1.0908
    assert xdot_l2 == pytest.approx(-0.4658451, abs=1e-7)
    assert xdot_h1 == pytest.approx(-1.0908451, abs=1e-7)


def test_linearization_matrix_eigenvalues():
    for k in (2, 3, 7):
        rep = mn.linearization(k)
        assert rep.eigs_l2 == pytest.approx((0.25, (k + 1) / 4.0), abs=1e-12)
        assert rep.eigs_h1 == pytest.approx((0.5, (k + 1) / 2.0), abs=1e-12)
        # characteristic polynomial of the returned matrix confirms the pair
        tr = rep.m3[0, 0] + rep.m3[1, 1]
        det = float(np.linalg.det(rep.m3))
        for lam in rep.eigs_l2:
            assert abs(lam * lam - tr * lam + det) <= 1e-10


def test_saddle_points_closed_form_k2():
    x_l2, x_h1 = mn.saddle_points(2)
    # (1 + 3 pi / 4) / (2 pi) and (1 + 3 pi / 2) / (4 pi)
    assert x_l2 == pytest.approx((1 + 3 * math.pi / 4) / TWO_PI, abs=1e-15)
    assert x_h1 == pytest.approx((1 + 3 * math.pi / 2) / (2 * TWO_PI), abs=1e-15)
    assert x_l2 == pytest.approx(0.5341549, abs=1e-7)
    assert x_h1 == pytest.approx(0.4545775, abs=1e-7)


def test_saddles_zero_the_diagonal_field_and_decrease_in_k():
    prev = (math.inf, math.inf)
    for k in range(2, 65):
        x_l2, x_h1 = mn.saddle_points(k)
        fx_l2 = mn.reduced_field("l2", mn.ReducedState(x=x_l2, y=x_l2, k=k))
        fx_h1 = mn.reduced_field("h1", mn.ReducedState(x=x_h1, y=x_h1, k=k))
        assert abs(fx_l2[0]) <= 1e-10 and abs(fx_l2[1]) <= 1e-10
        assert abs(fx_h1[0]) <= 1e-10 and abs(fx_h1[1]) <= 1e-10
        assert x_l2 < prev[0] and x_h1 < prev[1]
        prev = (x_l2, x_h1)


def test_diagonal_decay_exponents_k2():
    fit_l2 = mn.diagonal_decay("l2", 2, x0=0.95, t_end=15.0)
    fit_h1 = mn.diagonal_decay("h1", 2, x0=0.95, t_end=7.5)
    assert abs(fit_l2.exponent + 1.0) <= 0.02  # -K/2
    assert abs(fit_h1.exponent + 2.0) <= 0.04  # -K
    assert fit_l2.max_diagonal_drift <= 1e-9


def test_boundary_field_signs():
    for k in (2, 3, 5):
        for x in np.linspace(0.05, 1.0, 25):
            assert mn.reduced_field("h1", mn.ReducedState(x=float(x), y=0.0, k=k))[1] >= 0.0
        for y in np.linspace(0.02, 1.0, 25):
            assert mn.reduced_field("h1", mn.ReducedState(x=1.0, y=float(y), k=k))[0] < 0.0
        for y in np.linspace(0.0, 0.9, 20):
            fx, fy = mn.reduced_field("h1", mn.ReducedState(x=float(y) + 0.05, y=float(y), k=k))
            assert fx - fy >= 0.0


def test_omega_trajectories_stay_in_omega():
    rng = np.random.default_rng(8)
    k = 3
    x0 = rng.uniform(0.2, 1.0, size=30)
    y0 = np.array([rng.uniform(0.0, max(x - 0.06, 0.0)) for x in x0])
    starts = np.stack([x0, y0], axis=1)
    trace = rk4_integrate(mn.reduced_flow_field("h1", k), starts, 1e-3, 20.0,
                          np.array([1.0, 0.0]), record_every=10)
    xs = trace.states[..., 0]
    ys = trace.states[..., 1]
    assert xs.min() >= -1e-9
    assert ys.min() >= -1e-9
    assert xs.max() <= 1.0 + 1e-9
    assert (xs - ys).min() >= -1e-9


def test_h1_planar_flow_converges_from_omega():
    rng = np.random.default_rng(9)
    k = 2
    x0 = rng.uniform(0.15, 1.0, size=30)
    y0 = np.array([rng.uniform(0.0, max(x - 0.05, 0.0)) for x in x0])
    starts = np.stack([x0, y0], axis=1)
    trace = rk4_integrate(mn.reduced_flow_field("h1", k), starts, 1e-3, 50.0,
                          np.array([1.0, 0.0]), record_every=1000)
    assert np.sqrt(trace.v_values[-1]).max() < 1e-6


# --------------------------------------------------------------------------
# cyclic (Toeplitz) parametrization


def test_toeplitz_critical_point():
    for k in (2, 3, 6):
        e1 = np.zeros(k)
        e1[0] = 1.0
        for kind in ("l2", "h1"):
            f = mn.toeplitz_field(kind, mn.ToeplitzState(t=e1, k=k))
            assert np.abs(f).max() == 0.0


def test_toeplitz_field_is_projection_of_full_gradient():
    rng = np.random.default_rng(10)
    for k in (3, 4, 5):
        t = rng.uniform(-0.3, 0.9, size=k)
        t[0] = 1.2
        W = mn.cyclic_students(t)
        Wstar = np.eye(k)
        for kind in ("l2", "h1"):
            f_t = mn.toeplitz_field(kind, mn.ToeplitzState(t=t, k=k))
            f_full = mn.multinode_gradients(W, Wstar, kind)[0]
            assert np.abs(f_t - f_full).max() <= 1e-12


def test_toeplitz_zero_state_flagged():
    with pytest.raises(SingularPointError):
        mn.toeplitz_field("l2", mn.ToeplitzState(t=np.zeros(3), k=3))


def test_toeplitz_planar_slice_matches_reduced_field():
    # t = (x, y, ..., y) must reproduce the planar dynamics: tdot_1 = xdot,
    # tdot_j = ydot for j >= 2
    rng = np.random.default_rng(11)
    for k in (2, 4):
        x = rng.uniform(0.4, 1.0)
        y = rng.uniform(0.0, x - 0.1)
        t = np.full(k, y)
        t[0] = x
        for kind in ("l2", "h1"):
            f = mn.toeplitz_field(kind, mn.ToeplitzState(t=t, k=k))
            xdot, ydot = mn.reduced_field(kind, mn.ReducedState(x=x, y=y, k=k))
            assert f[0] == pytest.approx(xdot, abs=1e-12)
            assert f[1:] == pytest.approx(np.full(k - 1, ydot), abs=1e-12)


def test_toeplitz_idealized_linearization_matrix():
    m, eigs = mn.toeplitz_linearization(3)
    assert np.allclose(m, 0.25 * np.eye(3) + 0.25 * np.ones((3, 3)))
    assert sorted(eigs) == pytest.approx([0.25, 0.25, 1.0])
    vals = np.sort(np.linalg.eigvalsh(m))
    assert vals == pytest.approx(np.sort(eigs), abs=1e-12)


def test_toeplitz_exact_jacobian_carries_extra_couplings():
    # the exact field's Jacobian at e1 is -(M + E) with E[0,0] = (K-1)/(2 pi)
    # and E[j, (k-j) mod k] = 1/(2 pi) for j >= 1 (0-based); the idealized
    # -M drops E.  The sine sums scale with the student norms but not the
    # teacher norms, which is exactly where E comes from.  Established by
    # central differences (they average out the |delta|-type cone terms).
    for k in (3, 5):
        h = 1e-6
        e1 = np.zeros(k)
        e1[0] = 1.0
        jac = np.zeros((k, k))
        for m_col in range(k):
            dp = e1.copy()
            dp[m_col] += h
            dm = e1.copy()
            dm[m_col] -= h
            fp = mn.toeplitz_field("l2", mn.ToeplitzState(t=dp, k=k))
            fm = mn.toeplitz_field("l2", mn.ToeplitzState(t=dm, k=k))
            jac[:, m_col] = (fp - fm) / (2 * h)
        m_ideal, _ = mn.toeplitz_linearization(k)
        extra = np.zeros((k, k))
        extra[0, 0] = (k - 1) / TWO_PI
        for j in range(1, k):
            extra[j, (k - j) % k] = 1.0 / TWO_PI
        assert np.abs(-jac - (m_ideal + extra)).max() <= 1e-6
