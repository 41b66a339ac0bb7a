"""Single ReLU node (K=1): exact population landscape under N(0, I) inputs.

Closed forms for the population gradients of the value loss L, the
derivative-matching seminorm J, and the combined loss H = L + J; the two
Hessians with their spectra and condition numbers; the quadratic forms
governing dV/dt along the gradient flows; the one-step gradient-descent
comparison; and the convexity-region classifier.

Conventions pinned here and relied on everywhere else:
  grad L = (w - w*)/2 + (theta w* - (|w*|/|w|) sin(theta) w) / (2 pi)
  grad J = (pi - theta)/(2 pi) (w - w*) + theta/(2 pi) w
  hess L = I/2 - alpha (u u^T - cos(theta) v u^T + sin^2(theta) I)(I - v v^T)
  hess H = I   - alpha (2 u u^T - cos(theta) v u^T + sin^2(theta) I)(I - v v^T)
with u = w*/|w*|, v = w/|w|, alpha = |w*|/(2 pi |w| sin(theta)).

The ReLU derivative at 0 uses the subgradient choice 1{t>0}; the event has
measure zero under Gaussian inputs.

Note: hess L is symmetric, but hess H as written carries the skew part
alpha cos(theta) (v g^T - g v^T)/..., g = u - cos(theta) v.  It is a
non-normal matrix with a real semisimple spectrum {1, 1 - alpha sin^2
(mult d-2), 1 - 3 alpha sin^2}; symmetrizing it would shift the extreme
eigenvalues, so it is kept exactly as defined and its spectrum is taken
with a general eigensolver.

Condition numbers follow the eigenvalue assignment the numeric oracle
confirms: kappa(hess L) = 1/(1 - 4 a s^2), kappa(hess H) = 1/(1 - 3 a s^2)
with a s^2 = alpha sin^2(theta).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .eigs import SpectrumReport, real_eigs, symmetric_eigs
from .exceptions import SingularPointError
from .geometry import TWO_PI, PairGeometry, pair_geometry


@dataclass(frozen=True)
class GradientBundle:
    """Population gradients at one parameter point; grad_h1 = grad_l2 + grad_semi."""

    grad_l2: np.ndarray
    grad_semi: np.ndarray
    grad_h1: np.ndarray


@dataclass(frozen=True)
class HessianReport:
    """Both Hessians with numeric spectra and closed-form condition numbers.

    ``kappa_l2`` / ``kappa_h1`` are ``None`` (undefined) when the matching
    minimum eigenvalue is <= 0, i.e. outside the strict-convexity region.
    """

    hess_l2: np.ndarray
    hess_h1: np.ndarray
    spectrum_l2: SpectrumReport
    spectrum_h1: SpectrumReport
    kappa_l2: float | None
    kappa_h1: float | None


@dataclass(frozen=True)
class GdCompareReport:
    """One common-stepsize GD step under L2 vs H1 training.

    ``gain_f = err_l2 - err_h1`` and ``max_step_c`` is the largest stepsize
    for which the squared-error improvement is guaranteed positive.  The
    guarantee holds only inside the basin; ``in_basin`` is False when the
    report was computed outside it (values still returned).
    """

    w_new_l2: np.ndarray
    w_new_h1: np.ndarray
    err_l2: float
    err_h1: float
    gain_f: float
    max_step_c: float
    in_basin: bool


class RegionLabel(enum.Enum):
    INSIDE_S = "inside_S"
    IN_SPRIME_MINUS_S = "in_Sprime_minus_S"
    OUTSIDE_SPRIME = "outside_Sprime"


# --------------------------------------------------------------------------
# gradients


def _norms_theta(w: np.ndarray, wstar: np.ndarray):
    """Batched norms and two-argument angle; w may be (..., d), wstar is (d,)."""
    nw = np.linalg.norm(w, axis=-1)
    if np.any(nw == 0.0):
        raise SingularPointError("closed-form gradients are singular at w = 0")
    ns = float(np.linalg.norm(wstar))
    u = w / (nw[..., None] if w.ndim > 1 else nw)
    v = wstar / ns
    theta = 2.0 * np.arctan2(
        np.linalg.norm(u - v, axis=-1), np.linalg.norm(u + v, axis=-1)
    )
    return nw, ns, theta


def grad_l2(w: np.ndarray, wstar: np.ndarray) -> np.ndarray:
    """Population gradient of the value loss L.  Accepts stacked (..., d) states."""
    w = np.asarray(w, dtype=float)
    wstar = np.asarray(wstar, dtype=float)
    nw, ns, theta = _norms_theta(w, wstar)
    t = theta[..., None] if w.ndim > 1 else theta
    ratio = (ns / nw)[..., None] if w.ndim > 1 else ns / nw
    return 0.5 * (w - wstar) + (t * wstar - ratio * np.sin(t) * w) / TWO_PI


def grad_semi(w: np.ndarray, wstar: np.ndarray) -> np.ndarray:
    """Population gradient of the derivative-matching seminorm J."""
    w = np.asarray(w, dtype=float)
    wstar = np.asarray(wstar, dtype=float)
    _, _, theta = _norms_theta(w, wstar)
    t = theta[..., None] if w.ndim > 1 else theta
    return (math.pi - t) / TWO_PI * (w - wstar) + t / TWO_PI * w


def population_gradients(w: np.ndarray, wstar: np.ndarray) -> GradientBundle:
    """Closed-form (grad L, grad J, grad H) at a single parameter point."""
    w = np.asarray(w, dtype=float)
    wstar = np.asarray(wstar, dtype=float)
    if w.shape != wstar.shape or w.ndim != 1:
        raise ValueError("w and w* must be 1-d vectors of equal dimension")
    if np.linalg.norm(wstar) == 0.0:
        raise ValueError("teacher vector must be nonzero")
    gl = grad_l2(w, wstar)
    gj = grad_semi(w, wstar)
    return GradientBundle(grad_l2=gl, grad_semi=gj, grad_h1=gl + gj)


def flow_rhs(kind: str, w: np.ndarray, wstar: np.ndarray) -> np.ndarray:
    """Negated population gradient of the selected loss; the gradient-flow field.

    ``kind`` is "l2" or "h1".  Accepts stacked (..., d) states so whole
    ensembles of trajectories integrate in one RK4 run.
    """
    kind = kind.lower()
    if kind == "l2":
        return -grad_l2(w, wstar)
    if kind == "h1":
        return -(grad_l2(w, wstar) + grad_semi(w, wstar))
    raise ValueError(f"unknown flow kind {kind!r}")


# --------------------------------------------------------------------------
# Hessians


def condition_numbers(geom: PairGeometry) -> tuple[float | None, float | None]:
    """Closed-form condition numbers (kappa_L2, kappa_H1) from pair geometry.

    Undefined (None) when the matching minimum eigenvalue 1/2 - 2 a s^2
    resp. 1 - 3 a s^2 is <= 0.
    """
    q = geom.alpha_sin_sq
    kl = 1.0 / (1.0 - 4.0 * q) if 1.0 - 4.0 * q > 0.0 else None
    kh = 1.0 / (1.0 - 3.0 * q) if 1.0 - 3.0 * q > 0.0 else None
    return kl, kh


def closed_form_eigs(geom: PairGeometry) -> dict[str, float]:
    """The analytic spectra: extremes plus the bulk value of multiplicity d-2."""
    q = geom.alpha_sin_sq
    return {
        "l2_max": 0.5,
        "l2_bulk": 0.5 - q,
        "l2_min": 0.5 - 2.0 * q,
        "h1_max": 1.0,
        "h1_bulk": 1.0 - q,
        "h1_min": 1.0 - 3.0 * q,
    }


def hessian_matrices(w: np.ndarray, wstar: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Assemble hess L and hess H exactly as defined (hess H is not symmetrized)."""
    w = np.asarray(w, dtype=float)
    wstar = np.asarray(wstar, dtype=float)
    geom = pair_geometry(w, wstar)
    if geom.norm_w == 0.0 or geom.sin_theta == 0.0:
        raise SingularPointError("Hessian formulas are singular at theta = 0 or w = 0")
    d = w.shape[0]
    if d < 2:
        raise ValueError("Hessians need dimension >= 2")
    u = wstar / geom.norm_wstar
    v = w / geom.norm_w
    eye = np.eye(d)
    proj = eye - np.outer(v, v)
    s2 = geom.sin_theta**2
    base_l = np.outer(u, u) - geom.cos_theta * np.outer(v, u) + s2 * eye
    base_h = 2.0 * np.outer(u, u) - geom.cos_theta * np.outer(v, u) + s2 * eye
    hl = 0.5 * eye - geom.alpha * (base_l @ proj)
    hh = eye - geom.alpha * (base_h @ proj)
    return hl, hh


def hessians(w: np.ndarray, wstar: np.ndarray) -> HessianReport:
    """Hessians, numeric spectra, and closed-form condition numbers.

    The L2 Hessian must come out symmetric (checked to 1e-12); the H1
    Hessian is deliberately left with its skew part and decomposed with the
    general real eigensolver.
    """
    hl, hh = hessian_matrices(w, wstar)
    geom = pair_geometry(w, wstar)
    spec_l = symmetric_eigs(hl)
    spec_h = real_eigs(hh)
    kl, kh = condition_numbers(geom)
    return HessianReport(
        hess_l2=hl,
        hess_h1=hh,
        spectrum_l2=spec_l,
        spectrum_h1=spec_h,
        kappa_l2=kl,
        kappa_h1=kh,
    )


# --------------------------------------------------------------------------
# flow quadratic forms


def flow_quadratic_forms(theta: float) -> tuple[np.ndarray, np.ndarray, float]:
    """The two symmetric 2x2 forms M1, M2 with dV/dt = -(p^T (M1+M2) p)/(2 pi),
    p = (|w*|, |w|), plus lambda(theta) = lambda_min(M2) in closed form.

    Defined for theta in [0, pi/2).
    """
    if not 0.0 <= theta < math.pi / 2:
        raise ValueError("theta must lie in [0, pi/2)")
    ct, st = math.cos(theta), math.sin(theta)
    m1 = np.array(
        [
            [math.sin(2 * theta) + TWO_PI - 2 * theta, -(TWO_PI - theta) * ct - st],
            [-(TWO_PI - theta) * ct - st, TWO_PI],
        ]
    )
    m2 = np.array(
        [
            [TWO_PI - 2 * theta, -(TWO_PI - theta) * ct],
            [-(TWO_PI - theta) * ct, TWO_PI],
        ]
    )
    lam = (TWO_PI - theta) - math.sqrt(theta**2 + (TWO_PI - theta) ** 2 * ct**2)
    return m1, m2, lam


def gd_quadratic_forms(theta: float) -> tuple[np.ndarray, ...]:
    """The five 2x2 forms N1..N5 of the one-step GD comparison, as functions
    of theta, acting on p = (|w*|, |w|):

      eta^2 |grad L|^2          = (eta^2/4 pi^2) p^T N1 p
      -2 eta grad L . (w - w*)  = -(eta/2 pi)    p^T N2 p
      eta^2 |grad H|^2          = (eta^2/4 pi^2) p^T N3 p
      -2 eta grad H . (w - w*)  = -(eta/2 pi)    p^T N4 p
      N5 = N1 - N3 (negative semidefinite on the basin angles).
    """
    ct, st = math.cos(theta), math.sin(theta)
    s2t = math.sin(2 * theta)
    tm = theta - math.pi
    n1 = np.array(
        [
            [tm**2 + st**2 - tm * s2t, math.pi * tm * ct - math.pi * st],
            [math.pi * tm * ct - math.pi * st, math.pi**2],
        ]
    )
    n2 = np.array(
        [
            [s2t + TWO_PI - 2 * theta, (theta - TWO_PI) * ct - st],
            [(theta - TWO_PI) * ct - st, TWO_PI],
        ]
    )
    n3 = np.array(
        [
            [4 * tm**2 + st**2 - 2 * tm * s2t, 4 * math.pi * tm * ct - TWO_PI * st],
            [4 * math.pi * tm * ct - TWO_PI * st, 4 * math.pi**2],
        ]
    )
    n4 = np.array(
        [
            [s2t - 4 * tm, (2 * theta - 2 * TWO_PI) * ct - st],
            [(2 * theta - 2 * TWO_PI) * ct - st, 2 * TWO_PI],
        ]
    )
    n5 = n1 - n3
    return n1, n2, n3, n4, n5


# --------------------------------------------------------------------------
# one-step GD comparison


def gd_compare(w: np.ndarray, wstar: np.ndarray, eta: float) -> GdCompareReport:
    """Take one GD step of stepsize eta under L2 and under H1 and compare errors.

    ``max_step_c = -2 grad J . (w - w*) / (|grad L|^2 - |grad H|^2)``; for
    0 < eta < C the squared H1-error is strictly below the squared L2-error
    whenever w != w* lies in the basin.  Outside the basin the numbers are
    still computed but the guarantee is void (``in_basin`` False).
    """
    if eta <= 0.0:
        raise ValueError("stepsize must be positive")
    w = np.asarray(w, dtype=float)
    wstar = np.asarray(wstar, dtype=float)
    b = population_gradients(w, wstar)
    w_new_l2 = w - eta * b.grad_l2
    w_new_h1 = w - eta * b.grad_h1
    err_l2 = float(np.linalg.norm(w_new_l2 - wstar))
    err_h1 = float(np.linalg.norm(w_new_h1 - wstar))
    num = -2.0 * float(b.grad_semi @ (w - wstar))
    den = float(b.grad_l2 @ b.grad_l2) - float(b.grad_h1 @ b.grad_h1)
    max_step_c = num / den if den != 0.0 else math.inf
    in_basin = float(np.linalg.norm(w - wstar)) < float(np.linalg.norm(wstar))
    return GdCompareReport(
        w_new_l2=w_new_l2,
        w_new_h1=w_new_h1,
        err_l2=err_l2,
        err_h1=err_h1,
        gain_f=err_l2 - err_h1,
        max_step_c=max_step_c,
        in_basin=in_basin,
    )


# --------------------------------------------------------------------------
# convexity regions


def basin_classify(w: np.ndarray, wstar: np.ndarray) -> RegionLabel:
    """Classify w against the strict-convexity regions.

    S  : sin(theta) < pi |w| / (2 |w*|)   (L2 Hessian positive definite)
    S' : sin(theta) < 2 pi |w| / (3 |w*|) (H1 Hessian positive definite)
    """
    w = np.asarray(w, dtype=float)
    wstar = np.asarray(wstar, dtype=float)
    ns = float(np.linalg.norm(wstar))
    if ns == 0.0:
        raise ValueError("teacher vector must be nonzero")
    nw = float(np.linalg.norm(w))
    if nw == 0.0:
        return RegionLabel.OUTSIDE_SPRIME
    geom = pair_geometry(w, wstar)
    s = geom.sin_theta
    if s < math.pi * nw / (2.0 * ns):
        return RegionLabel.INSIDE_S
    if s < TWO_PI * nw / (3.0 * ns):
        return RegionLabel.IN_SPRIME_MINUS_S
    return RegionLabel.OUTSIDE_SPRIME
