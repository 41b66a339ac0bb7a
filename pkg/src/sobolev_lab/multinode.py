"""K-node cyclic student/teacher system.

Teachers {w*_j} are an orthonormal basis; students are cyclic shifts of a
single coefficient vector in that basis, so the whole flow reduces to the
coefficients.  Two parametrizations are supported:

* the planar one, w_l = x w*_l + y sum_{m != l} w*_m, state (x, y);
* the cyclic (circulant) one, w_j = P_j w_1 with w_1 = sum_m t_m w*_m and
  P_j the shift by j-1, state t in R^K.

All fields returned here are the NEGATED population gradients (flow
right-hand sides).  Index arithmetic in the t-parametrization is cyclic
modulo K: the shift group structure forces the wrap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import SingularPointError
from .geometry import TWO_PI, angle_between
from .ode import rk4_integrate


@dataclass(frozen=True)
class ReducedState:
    """Planar coordinates of the cyclic parametrization; region Omega is
    x in (0, 1], y in [0, 1], x > y."""

    x: float
    y: float
    k: int

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("reduced dynamics needs k >= 2")

    def in_omega(self) -> bool:
        return 0.0 < self.x <= 1.0 and 0.0 <= self.y <= 1.0 and self.x > self.y


@dataclass(frozen=True)
class ToeplitzState:
    """First-row coefficients t_1..t_K of the cyclic student initialization."""

    t: np.ndarray
    k: int

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if self.k < 2 or t.shape != (self.k,):
            raise ValueError("t must have shape (k,) with k >= 2")
        object.__setattr__(self, "t", t)


@dataclass(frozen=True)
class AngleSet:
    """Angles of node 1 against its own teacher (theta), the other teachers
    (phi_star), and the other students (phi), plus alpha = 1/|w_1|."""

    theta: float
    phi_star: float
    phi: float
    alpha_red: float


@dataclass(frozen=True)
class LinearizationReport:
    """Idealized near-fixed-point linearization of the planar flows.

    ``m3`` is the 2x2 matrix with closed-form eigenvalues {1/4, (K+1)/4};
    the H1 field linearizes to twice the L2 one in this idealization.
    """

    m3: np.ndarray
    eigs_l2: tuple[float, float]
    eigs_h1: tuple[float, float]


@dataclass(frozen=True)
class DecayFit:
    """Least-squares exponent of log|x(t) - x*| along the diagonal flow."""

    exponent: float
    x_star: float
    max_diagonal_drift: float


def _check_kind(kind: str) -> int:
    kind = kind.lower()
    if kind == "l2":
        return 1
    if kind == "h1":
        return 2
    raise ValueError(f"unknown flow kind {kind!r}")


# --------------------------------------------------------------------------
# full per-node field


def multinode_gradients(W: np.ndarray, Wstar: np.ndarray, kind: str) -> np.ndarray:
    """Negated population gradients -E grad_{w_j} for each node, shape (K, d).

    The H1 field doubles the (pi - angle) teacher/student terms but not the
    sine terms; with K = 1 this reduces exactly to the single-node field.
    """
    c = _check_kind(kind)
    W = np.asarray(W, dtype=float)
    Wstar = np.asarray(Wstar, dtype=float)
    if W.ndim != 2 or W.shape != Wstar.shape:
        raise ValueError("W and W* must both have shape (K, d)")
    norms = np.linalg.norm(W, axis=1)
    norms_star = np.linalg.norm(Wstar, axis=1)
    if np.any(norms == 0.0) or np.any(norms_star == 0.0):
        raise SingularPointError("zero node weight")
    K = W.shape[0]
    out = np.zeros_like(W)
    for j in range(K):
        hat = W[j] / norms[j]
        acc = np.zeros(W.shape[1])
        for jp in range(K):
            ts = angle_between(W[j], Wstar[jp])
            tt = angle_between(W[j], W[jp])
            acc += c * (math.pi - ts) * Wstar[jp] + norms_star[jp] * math.sin(ts) * hat
            acc -= c * (math.pi - tt) * W[jp] + norms[jp] * math.sin(tt) * hat
        out[j] = acc / TWO_PI
    return out


def cyclic_students(t: np.ndarray) -> np.ndarray:
    """Students (K, K) in teacher coordinates: row j is t cyclically shifted by j."""
    t = np.asarray(t, dtype=float)
    return np.stack([np.roll(t, j) for j in range(t.shape[0])])


def planar_students(x: float, y: float, k: int) -> np.ndarray:
    """Students of the planar parametrization: t = (x, y, ..., y) shifted."""
    t = np.full(k, y, dtype=float)
    t[0] = x
    return cyclic_students(t)


# --------------------------------------------------------------------------
# planar reduction


def reduced_angles(state: ReducedState) -> AngleSet:
    """Angles of the planar parametrization; arccos arguments clamped.

    On the diagonal x = y the inter-student angle is exactly 0 and theta =
    phi_star = arccos(1/sqrt(K)); those limits are used directly rather
    than the generic expressions.
    """
    x, y, k = state.x, state.y, state.k
    n2 = x * x + (k - 1) * y * y
    if n2 == 0.0:
        raise SingularPointError("planar field is singular at the origin")
    alpha = 1.0 / math.sqrt(n2)
    if x == y:
        theta = math.acos(min(1.0, max(-1.0, 1.0 / math.sqrt(k))))
        return AngleSet(theta=theta, phi_star=theta, phi=0.0, alpha_red=alpha)
    theta = math.acos(min(1.0, max(-1.0, alpha * x)))
    phi_star = math.acos(min(1.0, max(-1.0, alpha * y)))
    phi = math.acos(min(1.0, max(-1.0, alpha * alpha * (2 * x * y + (k - 2) * y * y))))
    return AngleSet(theta=theta, phi_star=phi_star, phi=phi, alpha_red=alpha)


def reduced_field(kind: str, state: ReducedState) -> tuple[float, float]:
    """The planar flow (xdot, ydot) = -E grad_{x,y} of the selected loss."""
    c = _check_kind(kind)
    a = reduced_angles(state)
    x, y, k = state.x, state.y, state.k
    first = (k - 1) * (a.alpha_red * math.sin(a.phi_star) - math.sin(a.phi)) + a.alpha_red * math.sin(a.theta)
    bx = -(math.pi - a.theta) + math.pi * x + (math.pi - a.phi) * (k - 1) * y
    by = -(math.pi - a.phi_star) + math.pi * y + (math.pi - a.phi) * (x + (k - 2) * y)
    return (first * x - c * bx) / TWO_PI, (first * y - c * by) / TWO_PI


def reduced_flow_field(kind: str, k: int):
    """Vectorized closure over stacked states (..., 2) for RK4 ensembles."""
    c = _check_kind(kind)

    def field(s: np.ndarray) -> np.ndarray:
        x = s[..., 0]
        y = s[..., 1]
        n2 = x * x + (k - 1) * y * y
        alpha = 1.0 / np.sqrt(n2)
        theta = np.arccos(np.clip(alpha * x, -1.0, 1.0))
        phi_star = np.arccos(np.clip(alpha * y, -1.0, 1.0))
        phi = np.arccos(np.clip(alpha * alpha * (2 * x * y + (k - 2) * y * y), -1.0, 1.0))
        first = (k - 1) * (alpha * np.sin(phi_star) - np.sin(phi)) + alpha * np.sin(theta)
        bx = -(np.pi - theta) + np.pi * x + (np.pi - phi) * (k - 1) * y
        by = -(np.pi - phi_star) + np.pi * y + (np.pi - phi) * (x + (k - 2) * y)
        return np.stack([(first * x - c * bx), (first * y - c * by)], axis=-1) / TWO_PI

    return field


def times_to_threshold(
    kind: str,
    k: int,
    starts: np.ndarray,
    thresh: float,
    step: float = 1e-3,
    t_max: float = 120.0,
) -> np.ndarray:
    """First flow times at which ||(x, y) - (1, 0)|| drops below ``thresh``.

    Integrates all ``starts`` (m, 2) as one stacked RK4 run; rows that never
    cross within ``t_max`` come back as nan.
    """
    field = reduced_flow_field(kind, k)
    s = np.array(starts, dtype=float)
    target = np.array([1.0, 0.0])
    m = s.shape[0]
    out = np.full(m, np.nan)
    alive = np.ones(m, dtype=bool)
    t = 0.0
    t2 = thresh * thresh
    while t < t_max and alive.any():
        k1 = field(s)
        k2 = field(s + 0.5 * step * k1)
        k3 = field(s + 0.5 * step * k2)
        k4 = field(s + step * k3)
        s = s + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += step
        crossed = alive & (np.sum((s - target) ** 2, axis=-1) < t2)
        out[crossed] = t
        alive &= ~crossed
    return out


def linearization(k: int) -> LinearizationReport:
    """The idealized planar linearization matrix and its closed-form eigenvalues.

    Eigenvalues of the (non-symmetric) 2x2 come from its characteristic
    polynomial: {1/4, (K+1)/4}; the H1 pair is doubled.  This is the
    textbook approximation that drops the first-order variation of the sine
    sums; the exact field's Jacobian differs from -m3 by O(1/2pi) entries.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    m3 = np.array([[0.5, (k - 1) / 4.0], [0.25, k / 4.0]])
    tr = m3[0, 0] + m3[1, 1]
    det = m3[0, 0] * m3[1, 1] - m3[0, 1] * m3[1, 0]
    disc = math.sqrt(tr * tr - 4.0 * det)
    lo, hi = (tr - disc) / 2.0, (tr + disc) / 2.0
    return LinearizationReport(m3=m3, eigs_l2=(lo, hi), eigs_h1=(2.0 * lo, 2.0 * hi))


def saddle_points(k: int) -> tuple[float, float]:
    """Diagonal saddle coordinates x*_{L2} and x*_{H1} in closed form."""
    if k < 2:
        raise ValueError("k must be >= 2")
    t0 = math.acos(1.0 / math.sqrt(k))
    x_l2 = (math.sqrt(k - 1.0) - t0 + math.pi) / (math.pi * k)
    x_h1 = (math.sqrt(k - 1.0) + TWO_PI - 2.0 * t0) / (TWO_PI * k)
    return x_l2, x_h1


def diagonal_decay(kind: str, k: int, x0: float, t_end: float, step: float = 1e-3) -> DecayFit:
    """Integrate the diagonal flow from (x0, x0) and fit the decay exponent.

    On the diagonal the planar field is exactly linear, x' = -(K/2)(x - x*)
    for L2 and x' = -K (x - x*) for H1, so the fitted slope of
    log|x(t) - x*| recovers -K/2 resp. -K.  The trajectory must stay on the
    diagonal; any drift beyond integration tolerance is an error.
    """
    x_l2, x_h1 = saddle_points(k)
    x_star = x_l2 if kind.lower() == "l2" else x_h1
    if not x_star < x0 <= 1.0:
        raise ValueError("need x0 in (x*, 1]")
    field = reduced_flow_field(kind, k)
    trace = rk4_integrate(field, np.array([x0, x0]), step, t_end, np.array([1.0, 0.0]), record_every=10)
    drift = float(np.abs(trace.states[:, 0] - trace.states[:, 1]).max())
    if drift > 1e-9 * max(1.0, x0):
        raise RuntimeError(f"trajectory left the diagonal (drift {drift:.3e})")
    gap = np.abs(trace.states[:, 0] - x_star)
    keep = gap > 1e-12
    slope = float(np.polyfit(trace.times[keep], np.log(gap[keep]), 1)[0])
    return DecayFit(exponent=slope, x_star=x_star, max_diagonal_drift=drift)


# --------------------------------------------------------------------------
# cyclic (Toeplitz-style) parametrization


def toeplitz_field(kind: str, state: ToeplitzState) -> np.ndarray:
    """Nonlinear coefficient dynamics tdot, indices cyclic modulo K.

    Exactly the projection of the full per-node field onto the teacher
    basis under the cyclic parametrization (covered by a consistency test).
    """
    c = _check_kind(kind)
    t = state.t
    K = state.k
    nt = float(np.linalg.norm(t))
    if nt == 0.0:
        raise SingularPointError("cyclic field is singular at t = 0")
    alpha = 1.0 / nt
    cos_teacher = np.clip(alpha * t, -1.0, 1.0)
    theta_star = np.arccos(cos_teacher)
    # student angles: cos theta_1^{j'} = alpha^2 sum_l t_l t_{l+j'-1}, cyclic
    cos_student = np.clip(
        np.array([alpha * alpha * float(t @ np.roll(t, -jp)) for jp in range(K)]), -1.0, 1.0
    )
    theta_stu = np.arccos(cos_student)
    theta_stu[0] = 0.0  # shift 0 is w_1 itself; rounding must not fake an angle
    sin_teacher_sum = float(np.sin(theta_star).sum())
    sin_student_sum = float(np.sin(theta_stu).sum())
    out = np.empty(K)
    for j in range(K):
        stu = 0.0
        for jp in range(K):
            stu += (math.pi - theta_stu[jp]) * t[(jp + j) % K]
        out[j] = (
            c * (math.pi - theta_star[j])
            + alpha * t[j] * sin_teacher_sum
            - c * stu
            - t[j] * sin_student_sum
        ) / TWO_PI
    return out


def toeplitz_linearization(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Idealized linearization matrix M = I/4 + ones/4 and its eigenvalues.

    Closed-form spectrum {(K+1)/4} + {1/4 with multiplicity K-1}; same
    caveat as ``linearization``: the exact field's Jacobian at the critical
    point e_1 carries extra O(1/2pi) couplings that this matrix drops.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    m = 0.25 * np.eye(k) + 0.25 * np.ones((k, k))
    eigs = np.concatenate([[(k + 1) / 4.0], np.full(k - 1, 0.25)])
    return m, eigs
