"""Single ReLU^2 node, g(x) = relu(w.x)^2: second-order Sobolev closed forms.

The three loss components are the value mismatch I1, the input-gradient
mismatch I2, and the input-Hessian mismatch I3 (each with the same 1/2
per-sample normalization as the first-order losses).  Their population
gradients under N(0, I) inputs are, with theta the student/teacher angle,

  G(t)  = (pi - t) + sin t cos t
  H(t)  = 2 sin t + 2 (pi - t) cos t
  G1(t) = sin t + 2 (pi - t) cos t

  grad I1 = 3|w|^2 w - (|w*|^2/pi) G w - (|w||w*|/pi) H w*
  grad I2 = 4 ( |w|^2 w - (cos sin / 2pi) |w*|^2 w - (|w||w*|/2pi) G1 w* )
  grad I3 = 4 |w|^2 w - (4 (pi - t)/pi) (w.w*) w*

The |w*|^2 (squared) coefficient in grad I1 is the dimensionally
consistent one and is the version the Monte-Carlo oracle confirms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import SingularPointError
from .geometry import TWO_PI, angle_between

_BASIN_TOL = 1e-12


@dataclass(frozen=True)
class H2GradientBundle:
    grad_i1: np.ndarray
    grad_i2: np.ndarray
    grad_i3: np.ndarray

    def total(self) -> np.ndarray:
        return self.grad_i1 + self.grad_i2 + self.grad_i3


@dataclass(frozen=True)
class DescentReport:
    """Signs of -(w - w*).grad Ij; True means strict descent of V = |w - w*|^2.

    ``degenerate`` marks w == w* (all inner products exactly zero, reported
    vacuously True); ``guarantee_void`` marks points outside the basin
    |w - w*| < |w*| where the descent theorem gives no guarantee.
    """

    descent_i1: bool
    descent_i2: bool
    descent_i3: bool
    degenerate: bool
    guarantee_void: bool


def _coeffs(theta: float) -> tuple[float, float, float]:
    g = (math.pi - theta) + math.sin(theta) * math.cos(theta)
    h = 2.0 * math.sin(theta) + 2.0 * (math.pi - theta) * math.cos(theta)
    g1 = math.sin(theta) + 2.0 * (math.pi - theta) * math.cos(theta)
    return g, h, g1


def h2_gradients(w: np.ndarray, wstar: np.ndarray) -> H2GradientBundle:
    """Closed-form gradients of the three second-order loss components."""
    w = np.asarray(w, dtype=float)
    wstar = np.asarray(wstar, dtype=float)
    if w.shape != wstar.shape or w.ndim != 1:
        raise ValueError("w and w* must be 1-d vectors of equal dimension")
    nw = float(np.linalg.norm(w))
    ns = float(np.linalg.norm(wstar))
    if nw == 0.0 or ns == 0.0:
        raise SingularPointError("second-order closed forms are singular at zero vectors")
    theta = angle_between(w, wstar)
    g, h, g1 = _coeffs(theta)
    st, ct = math.sin(theta), math.cos(theta)
    gi1 = 3.0 * nw**2 * w - (ns**2 / math.pi) * g * w - (nw * ns / math.pi) * h * wstar
    gi2 = 4.0 * (
        nw**2 * w
        - (ct * st / TWO_PI) * ns**2 * w
        - (nw * ns / TWO_PI) * g1 * wstar
    )
    gi3 = 4.0 * nw**2 * w - (4.0 * (math.pi - theta) / math.pi) * float(w @ wstar) * wstar
    return H2GradientBundle(grad_i1=gi1, grad_i2=gi2, grad_i3=gi3)


def h2_flow_rhs(w: np.ndarray, wstar: np.ndarray, parts: tuple[str, ...] = ("i1", "i2", "i3")) -> np.ndarray:
    """Negated sum of selected component gradients; the H2 (or partial) flow field."""
    b = h2_gradients(w, wstar)
    sel = {"i1": b.grad_i1, "i2": b.grad_i2, "i3": b.grad_i3}
    out = np.zeros_like(np.asarray(w, dtype=float))
    for p in parts:
        out = out + sel[p]
    return -out


def h2_flow_field(wstar: np.ndarray, parts: tuple[str, ...] = ("i1", "i2", "i3")):
    """Vectorized closure over stacked states (..., d) for RK4 ensembles."""
    wstar = np.asarray(wstar, dtype=float)
    ns = float(np.linalg.norm(wstar))
    if ns == 0.0:
        raise SingularPointError("zero teacher")
    want = set(parts)
    if not want or not want <= {"i1", "i2", "i3"}:
        raise ValueError("parts must be a nonempty subset of {'i1','i2','i3'}")

    def field(w: np.ndarray) -> np.ndarray:
        nw = np.linalg.norm(w, axis=-1, keepdims=True)
        c = np.clip((w @ wstar)[..., None] / (nw * ns), -1.0, 1.0)
        theta = np.arccos(c)
        st, ct = np.sin(theta), np.cos(theta)
        nw2 = nw**2
        total = np.zeros_like(w)
        if "i1" in want:
            g = (math.pi - theta) + st * ct
            h = 2.0 * st + 2.0 * (math.pi - theta) * ct
            total = total + 3.0 * nw2 * w - (ns**2 / math.pi) * g * w - (nw * ns / math.pi) * h * wstar
        if "i2" in want:
            g1 = st + 2.0 * (math.pi - theta) * ct
            total = total + 4.0 * (nw2 * w - (ct * st / TWO_PI) * ns**2 * w - (nw * ns / TWO_PI) * g1 * wstar)
        if "i3" in want:
            total = total + 4.0 * nw2 * w - (4.0 * (math.pi - theta) / math.pi) * (w @ wstar)[..., None] * wstar
        return -total

    return field


def descent_check(w: np.ndarray, wstar: np.ndarray) -> DescentReport:
    """Evaluate the three descent inner products -(w - w*).grad Ij < 0."""
    w = np.asarray(w, dtype=float)
    wstar = np.asarray(wstar, dtype=float)
    e = w - wstar
    dist = float(np.linalg.norm(e))
    ns = float(np.linalg.norm(wstar))
    if dist <= _BASIN_TOL * max(1.0, ns):
        return DescentReport(True, True, True, degenerate=True, guarantee_void=False)
    b = h2_gradients(w, wstar)
    vals = (-float(e @ b.grad_i1), -float(e @ b.grad_i2), -float(e @ b.grad_i3))
    return DescentReport(
        descent_i1=vals[0] < 0.0,
        descent_i2=vals[1] < 0.0,
        descent_i3=vals[2] < 0.0,
        degenerate=False,
        guarantee_void=dist >= ns,
    )


def descent_quadratic_forms(theta: float) -> tuple[np.ndarray, np.ndarray]:
    """The 2x2 forms (M, M2) from the descent-inequality decompositions.

      M  = [[2 G cos + 2 H,  -(3 pi + G + H cos)], [., 6 pi]]
      M2 = [[2 G1 + 2 cos^2 sin, -cos (G1 + sin + 2 pi cos)], [., 4 pi cos]]

    M2 is positive semidefinite on all of [0, pi/2).  M is not: det(M)
    turns negative past theta ~ 1.02, even though the descent inequality
    itself still holds on the basin (where |w| < 2 |w*| cos(theta) confines
    the weight vector to the cone on which the form stays positive).
    """
    g, h, g1 = _coeffs(theta)
    st, ct = math.sin(theta), math.cos(theta)
    m = np.array(
        [
            [2.0 * g * ct + 2.0 * h, -(3.0 * math.pi + g + h * ct)],
            [-(3.0 * math.pi + g + h * ct), 6.0 * math.pi],
        ]
    )
    m2 = np.array(
        [
            [2.0 * g1 + 2.0 * ct**2 * st, -ct * (g1 + st + TWO_PI * ct)],
            [-ct * (g1 + st + TWO_PI * ct), 2.0 * TWO_PI * ct],
        ]
    )
    return m, m2
