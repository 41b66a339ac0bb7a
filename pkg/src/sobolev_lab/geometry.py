"""Pair geometry shared by all single-node closed forms.

Every single-node formula is a function of the three scalars
(norm of the student weight, norm of the teacher weight, angle between
them) plus the coupling coefficient

    alpha = |w*| / (2 pi |w| sin(theta)),

which blows up at collinearity.  The products alpha*sin(theta) and
alpha*sin^2(theta) stay finite there, so they are carried in cancelled
form and alpha itself is reported as ``inf`` rather than raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PairGeometry:
    """Norms, angle and coupling coefficient of a (student, teacher) pair.

    ``alpha`` is ``inf`` exactly when ``sin(theta) == 0`` or ``norm_w == 0``.
    ``alpha_sin`` and ``alpha_sin_sq`` are the cancelled products
    ``alpha*sin(theta)`` and ``alpha*sin(theta)**2``; they are finite for
    ``norm_w > 0`` even at ``theta == 0``.
    """

    norm_w: float
    norm_wstar: float
    theta: float
    alpha: float
    alpha_sin: float
    alpha_sin_sq: float

    @property
    def sin_theta(self) -> float:
        return math.sin(self.theta)

    @property
    def cos_theta(self) -> float:
        return math.cos(self.theta)


def angle_between(w: np.ndarray, wstar: np.ndarray) -> float:
    """Angle in [0, pi] via the two-argument form 2 atan2(|u-v|, |u+v|).

    Unlike plain arccos of the inner product, this stays fully accurate at
    the collinear configurations the landscape formulas exercise hardest
    (arccos loses half the digits there), and coincident directions give an
    exact zero.
    """
    w = np.asarray(w, dtype=float)
    wstar = np.asarray(wstar, dtype=float)
    nw = float(np.linalg.norm(w))
    ns = float(np.linalg.norm(wstar))
    if nw == 0.0 or ns == 0.0:
        return 0.0
    u = w / nw
    v = wstar / ns
    return 2.0 * math.atan2(float(np.linalg.norm(u - v)), float(np.linalg.norm(u + v)))


def pair_geometry(w: np.ndarray, wstar: np.ndarray) -> PairGeometry:
    """Compute the shared pair geometry of a student/teacher weight pair.

    Requires matching dimensions and a nonzero teacher.  A zero student is
    allowed; its angle is reported as 0 and ``alpha`` as ``inf``.
    """
    w = np.asarray(w, dtype=float)
    wstar = np.asarray(wstar, dtype=float)
    if w.shape != wstar.shape:
        raise ValueError(f"dimension mismatch: {w.shape} vs {wstar.shape}")
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(wstar))):
        raise ValueError("non-finite entries")
    ns = float(np.linalg.norm(wstar))
    if ns == 0.0:
        raise ValueError("teacher vector must be nonzero")
    nw = float(np.linalg.norm(w))
    theta = angle_between(w, wstar)
    s = math.sin(theta)
    if nw == 0.0:
        alpha = math.inf
        alpha_sin = math.inf
        alpha_sin_sq = math.inf
    else:
        alpha_sin = ns / (TWO_PI * nw)
        alpha_sin_sq = ns * s / (TWO_PI * nw)
        alpha = ns / (TWO_PI * nw * s) if s > 0.0 else math.inf
    return PairGeometry(
        norm_w=nw,
        norm_wstar=ns,
        theta=theta,
        alpha=alpha,
        alpha_sin=alpha_sin,
        alpha_sin_sq=alpha_sin_sq,
    )
