"""Decision-boundary geometry of the causal and anticausal predictors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .anticausal import AnticausalModel, conditional_covariance
from .causal import CausalModel
from .errors import InfeasibleError
from .moments import MomentSpec, center


@dataclass(frozen=True)
class DecisionBoundary:
    """MAP rule: predict +1 iff w.x + b > 0.

    Canonical form has |w| = 1.  Only positive rescaling is applied, since a
    sign flip would swap the predicted labels.
    """

    w: np.ndarray
    b: float

    def __post_init__(self):
        w = np.array(self.w, dtype=float).reshape(-1)
        if not np.any(w):
            raise ValueError("zero normal vector: no decision boundary")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", float(self.b))

    def canonical(self) -> "DecisionBoundary":
        n = float(np.linalg.norm(self.w))
        return DecisionBoundary(self.w / n, self.b / n)

    def predict(self, x) -> np.ndarray:
        return np.where(np.asarray(x, dtype=float) @ self.w + self.b > 0, 1, -1)

    def point(self) -> np.ndarray:
        """Point of the boundary closest to the origin."""
        return -self.b * self.w / float(self.w @ self.w)

    @property
    def slope(self) -> float:
        """dx2/dx1 along the boundary line (inf for a vertical line)."""
        return -self.w[0] / self.w[1] if self.w[1] != 0 else math.inf

    def segment(self, box) -> list[list[float]] | None:
        """Clip the boundary line to ``box = ((x1lo, x1hi), (x2lo, x2hi))``."""
        (a0, a1), (b0, b1) = box
        p = self.point()
        d = np.array([-self.w[1], self.w[0]])
        t_lo, t_hi = -math.inf, math.inf
        for k, (lo, hi) in enumerate(((a0, a1), (b0, b1))):
            if d[k] == 0:
                if not lo <= p[k] <= hi:
                    return None
                continue
            t0, t1 = sorted(((lo - p[k]) / d[k], (hi - p[k]) / d[k]))
            t_lo, t_hi = max(t_lo, t0), min(t_hi, t1)
        if t_lo >= t_hi:
            return None
        return [(p + t_lo * d).tolist(), (p + t_hi * d).tolist()]

    def to_dict(self) -> dict:
        c = self.canonical()
        return {"w": c.w.tolist(), "b": c.b, "canonical": True}


def normal_causal(spec: MomentSpec) -> np.ndarray:
    """Sigma_X^{-1} phi (after centering); proportional to the causal lambda."""
    s = center(spec)
    try:
        return np.linalg.solve(s.sigma_x, s.phi)
    except np.linalg.LinAlgError as exc:
        raise InfeasibleError("singular Sigma_X") from exc


def normal_anticausal(spec: MomentSpec) -> np.ndarray:
    """Sigma_{X|Y}^{-1} phi (after centering); zero when phi = 0."""
    s = center(spec)
    try:
        return np.linalg.solve(conditional_covariance(s), s.phi)
    except np.linalg.LinAlgError as exc:
        raise InfeasibleError("singular conditional covariance") from exc


def boundary_from_causal(model: CausalModel) -> DecisionBoundary:
    return DecisionBoundary(model.lam, model.lambda0).canonical()


def boundary_from_anticausal(model: AnticausalModel) -> DecisionBoundary:
    """LDA boundary of a shared-covariance model."""
    if not model.shared_covariance:
        raise ValueError("linear boundary needs a shared covariance (QDA boundary is quadratic)")
    mp, mm = model.mu_plus, model.mu_minus
    if np.array_equal(mp, mm):
        raise ValueError("identical class means: no decision boundary")
    w = np.linalg.solve(model.sigma_plus, mp - mm)
    b = -0.5 * float((mp + mm) @ w) + math.log(model.q / (1.0 - model.q))
    return DecisionBoundary(w, b).canonical()


def cross(w1, w2) -> float:
    return float(w1[0] * w2[1] - w1[1] * w2[0])


def parallel(w1, w2, tol: float = 1e-8) -> bool:
    """|w1 x w2| <= tol |w1| |w2|."""
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    n1, n2 = np.linalg.norm(w1), np.linalg.norm(w2)
    if n1 == 0 or n2 == 0:
        raise ValueError("parallel() is undefined for a zero vector")
    return abs(cross(w1, w2)) <= tol * n1 * n2


def angle_between(w1, w2) -> float:
    """Angle in [0, pi/2] between the lines with normals w1, w2."""
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    return math.atan2(abs(cross(w1, w2)), abs(float(w1 @ w2)))


def sherman_morrison_decompose(spec: MomentSpec, rtol: float = 1e-10) -> float:
    """k with Sigma_X^{-1} phi = (1 + k) Sigma_{X|Y}^{-1} phi.

    Sigma_X = Sigma_{X|Y} + c phi phi^T, so by Sherman-Morrison
    k = -c phi^T S^{-1} phi / (1 + c phi^T S^{-1} phi) with S = Sigma_{X|Y}.
    """
    s = center(spec)
    c = s.c
    cond = conditional_covariance(s)
    try:
        v = np.linalg.solve(cond, s.phi)
        lhs = np.linalg.solve(s.sigma_x, s.phi)
    except np.linalg.LinAlgError as exc:
        raise InfeasibleError("singular covariance in Sherman-Morrison decomposition") from exc
    quad = float(s.phi @ v)
    k = -c * quad / (1.0 + c * quad)
    err = np.linalg.norm(lhs - (1.0 + k) * v)
    scale = max(np.linalg.norm(lhs), np.finfo(float).tiny)
    if err > rtol * scale and np.linalg.norm(lhs) > 0:
        raise AssertionError(f"Sherman-Morrison identity off by {err / scale:.3g} (relative)")
    return k


def partial_slope_ratio(spec: MomentSpec) -> float:
    """Ratio of anticausal to causal boundary slopes when s12 is unknown.

    Causal normal (phi1/s1^2, phi2/s2^2); anticausal normal
    (phi1/(s1^2 - c phi1^2), phi2/(s2^2 - c phi2^2)).  Their slopes differ by

        ((s2^2 - c phi2^2) s1^2) / ((s1^2 - c phi1^2) s2^2),

    so the boundaries are parallel iff this is 1 (or a phi_i is 0).
    """
    s = center(spec)
    c = s.c
    s1, s2 = s.sigma_x[0, 0], s.sigma_x[1, 1]
    v1 = s1 - c * s.phi[0] ** 2
    v2 = s2 - c * s.phi[1] ** 2
    if v1 <= 0 or v2 <= 0:
        raise InfeasibleError("non-positive conditional variance")
    return (v2 * s1) / (v1 * s2)
