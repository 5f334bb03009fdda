"""Causal direction: Gaussian marginal over X, then a maximum conditional
entropy predictor p(y=1|x) = (1 + tanh(lambda0 + lambda.x)) / 2.

The predictor parameters solve the convex dual

    min_theta  E_X[log cosh(theta . (1, X))] - theta . (E[Y], E[XY])

whose gradient is the forward-moment residual and whose Hessian is
E[(1 - tanh^2) (1, X)(1, X)^T].  Expectations over X use tensorised
Gauss-Hermite quadrature in Cholesky-whitened coordinates.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import expit

from .errors import ConvergenceError, InfeasibleError, QuadratureError
from .moments import MomentSpec, center, require_valid

GH_ORDER = 40
GH_MAX_ORDER = 320
QUAD_RTOL = 1e-8
FIT_TOL = 1e-8
MAX_ITER = 200


@dataclass(frozen=True)
class GaussianParams:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(2)
        cov = np.array(self.cov, dtype=float).reshape(2, 2)
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
            raise InfeasibleError("marginal covariance is not symmetric")
        if np.linalg.eigvalsh(cov).min() <= 1e-12:
            raise InfeasibleError("marginal covariance is not positive definite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def chol(self) -> np.ndarray:
        return np.linalg.cholesky(self.cov)

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "cov": self.cov.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianParams":
        return cls(d["mean"], d["cov"])


@dataclass(frozen=True)
class CausalModel:
    lambda0: float
    lam: np.ndarray
    marginal: GaussianParams
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "lambda0", float(self.lambda0))
        object.__setattr__(self, "lam", np.array(self.lam, dtype=float).reshape(-1))
        if not (math.isfinite(self.lambda0) and np.all(np.isfinite(self.lam))):
            raise ValueError("non-finite causal parameters")

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([[self.lambda0], self.lam])

    def to_dict(self) -> dict:
        d = {
            "lambda0": self.lambda0,
            "lambda": self.lam.tolist(),
            "marginal": self.marginal.to_dict(),
        }
        if self.meta:
            d["meta"] = dict(self.meta)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CausalModel":
        return cls(d["lambda0"], d["lambda"], GaussianParams.from_dict(d["marginal"]), d.get("meta", {}))


def causal_activation(model: CausalModel, x) -> np.ndarray:
    """lambda0 + lambda . x, vectorised over leading axes of ``x``."""
    x = np.asarray(x, dtype=float)
    return model.lambda0 + x @ model.lam


def causal_logit(model: CausalModel, x) -> np.ndarray:
    return 2.0 * causal_activation(model, x)


def causal_posterior(model: CausalModel, x) -> np.ndarray | float:
    """p(y=+1 | x).

    (1 + tanh(a)) / 2 is evaluated as expit(2a), which is the same function
    without cancellation in the lower tail.
    """
    p = expit(causal_logit(model, x))
    return float(p) if np.ndim(p) == 0 else p


@lru_cache(maxsize=None)
def _gh_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """2-D tensor Gauss-Hermite nodes/weights for the standard normal."""
    z, w = np.polynomial.hermite.hermgauss(order)
    z = z * math.sqrt(2.0)
    w = w / math.sqrt(math.pi)
    zz = np.stack(np.meshgrid(z, z, indexing="ij"), axis=-1).reshape(-1, 2)
    ww = np.outer(w, w).reshape(-1)
    return zz, ww


def _expectations(theta: np.ndarray, marginal: GaussianParams, order: int):
    """(E[tanh], E[X tanh], Hessian) at a fixed quadrature order."""
    zz, ww = _gh_rule(order)
    x = marginal.mean + zz @ marginal.chol.T
    t = np.tanh(theta[0] + x @ theta[1:3])
    feats = np.column_stack([np.ones(len(ww)), x])
    ft = feats * (ww * t)[:, None]
    moments = ft.sum(axis=0)
    s = ww * (1.0 - t * t)
    hess = (feats * s[:, None]).T @ feats
    return moments, hess


def _checked_expectations(theta, marginal, order=GH_ORDER, rtol=QUAD_RTOL, max_order=GH_MAX_ORDER):
    """Expectations with an accuracy check against a finer rule.

    The order is escalated by 1.5x until two successive rules agree; the
    finer result is returned.
    """
    lo = _expectations(theta, marginal, order)
    while True:
        nxt = min(max_order, int(math.ceil(order * 1.5)))
        hi = _expectations(theta, marginal, nxt)
        err = np.abs(hi[0] - lo[0])
        if np.all(err <= rtol * np.maximum(1.0, np.abs(hi[0]))):
            return hi[0], hi[1], nxt
        if nxt >= max_order:
            raise QuadratureError(
                f"Gauss-Hermite order {max_order} insufficient "
                f"(estimated error {err.max():.3g}) at theta={theta.tolist()}"
            )
        order, lo = nxt, hi


def causal_moment_forward(lambda0: float, lam, marginal: GaussianParams, order: int = GH_ORDER):
    """(E[tanh(lambda0 + lambda.X)], E[X tanh(lambda0 + lambda.X)]) under X ~ marginal."""
    theta = np.concatenate([[float(lambda0)], np.asarray(lam, dtype=float).reshape(2)])
    m, _, _ = _checked_expectations(theta, marginal, order)
    return float(m[0]), m[1:3]


@dataclass
class DualSolution:
    theta: np.ndarray
    residual: float
    iterations: int
    residual_history: list[float]
    hessian_min_eig: list[float]


def solve_dual(
    target: np.ndarray,
    marginal: GaussianParams,
    active: tuple[int, ...] = (0, 1, 2),
    tol: float = FIT_TOL,
    max_iter: int = MAX_ITER,
) -> DualSolution:
    """Damped Newton on the dual for the active coordinates of theta.

    ``target`` is (E[Y], E[X1 Y], E[X2 Y]); inactive coordinates stay 0 and
    their target entries are ignored.  Steps are halved until the residual
    norm strictly decreases.
    """
    idx = np.array(active)
    target = np.asarray(target, dtype=float)
    theta = np.zeros(3)
    ey = float(np.clip(target[0], -1 + 1e-15, 1 - 1e-15))
    theta[0] = math.atanh(ey)

    def residual_at(th):
        m, h, _ = _checked_expectations(th, marginal)
        r = (m - target)[idx]
        return r, h[np.ix_(idx, idx)]

    r, h = residual_at(theta)
    history = [float(np.linalg.norm(r))]
    eigs = [float(np.linalg.eigvalsh(h).min())]
    for it in range(max_iter):
        if np.max(np.abs(r)) <= tol:
            return DualSolution(theta, float(np.max(np.abs(r))), it, history, eigs)
        try:
            step = np.linalg.solve(h, -r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(h, -r, rcond=None)[0]
        t = 1.0
        norm0 = np.linalg.norm(r)
        for _ in range(60):
            cand = theta.copy()
            cand[idx] += t * step
            try:
                r_new, h_new = residual_at(cand)
            except QuadratureError:
                r_new = None
            if r_new is not None and np.linalg.norm(r_new) < norm0:
                break
            t *= 0.5
        else:
            raise ConvergenceError(
                f"line search failed at iteration {it} (residual {norm0:.3g}); "
                "moments are likely infeasible"
            )
        theta, r, h = cand, r_new, h_new
        history.append(float(np.linalg.norm(r)))
        eigs.append(float(np.linalg.eigvalsh(h).min()))
    if np.max(np.abs(r)) <= tol:
        return DualSolution(theta, float(np.max(np.abs(r))), max_iter, history, eigs)
    raise ConvergenceError(
        f"no convergence after {max_iter} iterations (residual {np.max(np.abs(r)):.3g}); "
        "moments are likely infeasible"
    )


def _fit(spec: MomentSpec, diagonal: bool, active, kind: str) -> CausalModel:
    # solve in centered coordinates, then move the intercept back
    cs = center(spec)
    cov = np.diag(np.diag(cs.sigma_x)) if diagonal else cs.sigma_x
    target = np.array([cs.y_mean, cs.phi[0], cs.phi[1] if cs.avail_phi2 else 0.0])
    sol = solve_dual(target, GaussianParams(np.zeros(2), cov), active)
    lam = sol.theta[1:3]
    return CausalModel(
        sol.theta[0] - float(lam @ spec.xbar),
        lam,
        GaussianParams(spec.xbar, cov),
        {"direction": "causal", "kind": kind, "iterations": sol.iterations, "residual": sol.residual},
    )


def fit_causal(spec: MomentSpec) -> CausalModel:
    """Full-information causal fit (logistic-type regression)."""
    if not spec.complete:
        raise ValueError("fit_causal needs a complete spec")
    require_valid(spec)
    return _fit(spec, False, (0, 1, 2), "full")


def fit_causal_missing_phi2(spec: MomentSpec) -> CausalModel:
    """E[X2 Y] unknown: the X2 coefficient has no constraint and stays 0."""
    spec = dataclasses.replace(spec, avail_phi2=False)
    require_valid(spec)
    if not spec.avail_s12:
        raise ValueError("fit_causal_missing_phi2 needs s12")
    return _fit(spec, False, (0, 1), "missing_phi2")


def fit_causal_missing_s12(spec: MomentSpec) -> CausalModel:
    """E[X1 X2] unknown: the maximum entropy marginal is the diagonal Gaussian."""
    spec = dataclasses.replace(spec, avail_s12=False)
    require_valid(spec)
    if not spec.avail_phi2:
        raise ValueError("fit_causal_missing_s12 needs phi2")
    return _fit(spec, True, (0, 1, 2), "missing_s12")
