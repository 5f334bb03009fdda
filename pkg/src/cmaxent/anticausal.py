"""Anticausal direction: Bernoulli(q) label, Gaussian class conditionals,
Bayes inversion to a predictor.

With shared covariance this is LDA; with per-class covariances, QDA.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import InfeasibleError
from .moments import PSD_TOL, MomentSpec, center, conditional_covariance_raw, require_valid

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class AnticausalModel:
    q: float
    mu_plus: np.ndarray
    mu_minus: np.ndarray
    sigma_plus: np.ndarray
    sigma_minus: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not 0.0 < float(self.q) < 1.0:
            raise InfeasibleError(f"q={self.q} outside (0, 1)")
        object.__setattr__(self, "q", float(self.q))
        for name in ("mu_plus", "mu_minus"):
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=float).reshape(-1))
        d = self.mu_plus.shape[0]
        for name in ("sigma_plus", "sigma_minus"):
            s = np.array(getattr(self, name), dtype=float).reshape(d, d)
            if not np.allclose(s, s.T, rtol=0, atol=1e-12):
                raise InfeasibleError(f"{name} is not symmetric")
            if np.linalg.eigvalsh(s).min() < -PSD_TOL:
                raise InfeasibleError(f"{name} is not positive semidefinite")
            object.__setattr__(self, name, s)

    @property
    def shared_covariance(self) -> bool:
        return bool(np.array_equal(self.sigma_plus, self.sigma_minus))

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "mu_plus": self.mu_plus.tolist(),
            "mu_minus": self.mu_minus.tolist(),
            "sigma_cond_plus": self.sigma_plus.tolist(),
            "sigma_cond_minus": self.sigma_minus.tolist(),
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnticausalModel":
        return cls(
            d["q"], d["mu_plus"], d["mu_minus"],
            d["sigma_cond_plus"], d["sigma_cond_minus"], d.get("meta", {}),
        )


def class_means(spec: MomentSpec) -> tuple[np.ndarray, np.ndarray]:
    """E[X|Y=+1] = (xbar + phi) / 2q and E[X|Y=-1] = (xbar - phi) / 2(1-q)."""
    q = spec.q
    if not 0.0 < q < 1.0:
        raise InfeasibleError(f"q={q} outside (0, 1)")
    return (spec.xbar + spec.phi) / (2.0 * q), (spec.xbar - spec.phi) / (2.0 * (1.0 - q))


def conditional_covariance(spec: MomentSpec) -> np.ndarray:
    """Shared within-class covariance forced by the law of total covariance."""
    if not spec.complete:
        raise ValueError("conditional_covariance needs a complete spec")
    s = conditional_covariance_raw(spec)
    s = 0.5 * (s + s.T)
    min_eig = np.linalg.eigvalsh(s).min()
    if min_eig < -PSD_TOL:
        raise InfeasibleError(f"conditional covariance not PSD (min eigenvalue {min_eig:.3g})")
    return s


def fit_anticausal(spec: MomentSpec) -> AnticausalModel:
    """Full-information anticausal fit: shared-covariance Gaussian mixture."""
    require_valid(spec)
    mu_p, mu_m = class_means(spec)
    s = conditional_covariance(spec)
    return AnticausalModel(spec.q, mu_p, mu_m, s, s.copy(), {"direction": "anticausal", "kind": "full"})


def fit_qda(q: float, mu_plus, mu_minus, second_plus, second_minus) -> AnticausalModel:
    """Per-class Gaussians from per-class first and second (raw) moments."""
    mu_plus = np.asarray(mu_plus, dtype=float)
    mu_minus = np.asarray(mu_minus, dtype=float)
    s_p = np.asarray(second_plus, dtype=float) - np.outer(mu_plus, mu_plus)
    s_m = np.asarray(second_minus, dtype=float) - np.outer(mu_minus, mu_minus)
    s_p, s_m = 0.5 * (s_p + s_p.T), 0.5 * (s_m + s_m.T)
    return AnticausalModel(q, mu_plus, mu_minus, s_p, s_m, {"direction": "anticausal", "kind": "qda"})


def mixture_moments(model: AnticausalModel) -> dict:
    """Closed-form E[Y], E[X], E[XY], E[XX^T] of the fitted joint."""
    q = model.q
    mp, mm = model.mu_plus, model.mu_minus
    return {
        "y_mean": 2.0 * q - 1.0,
        "xbar": q * mp + (1.0 - q) * mm,
        "phi": q * mp - (1.0 - q) * mm,
        "sigma_x": q * (model.sigma_plus + np.outer(mp, mp))
        + (1.0 - q) * (model.sigma_minus + np.outer(mm, mm)),
    }


def _gauss_logpdf(x: np.ndarray, mu: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    try:
        L = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise InfeasibleError("class covariance is singular; density undefined") from exc
    d = mu.shape[0]
    diff = (x - mu).reshape(-1, d)
    z = np.linalg.solve(L, diff.T)
    maha = np.sum(z * z, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return (-0.5 * (maha + logdet + d * LOG_2PI)).reshape(x.shape[:-1])


def log_density_ratio(model: AnticausalModel, x) -> np.ndarray:
    """log p(x|y=+1) - log p(x|y=-1)."""
    x = np.asarray(x, dtype=float)
    return _gauss_logpdf(x, model.mu_plus, model.sigma_plus) - _gauss_logpdf(
        x, model.mu_minus, model.sigma_minus
    )


def anticausal_logit(model: AnticausalModel, x) -> np.ndarray:
    return log_density_ratio(model, x) + (math.log(model.q) - math.log1p(-model.q))


def anticausal_posterior(model: AnticausalModel, x) -> np.ndarray | float:
    """p(y=+1|x) by Bayes' rule, evaluated from log densities."""
    p = expit(anticausal_logit(model, x))
    return float(p) if np.ndim(p) == 0 else p


def phi2_upper_bound(spec: MomentSpec) -> float:
    """Closed-form stationary value of E[X2 Y] for a centered spec:

        q(1-q) s12 phi1 / (q(1-q) s1^2 - phi1^2)

    Reproduced verbatim; it need not coincide with the exact entropy maximiser
    (see ``oracle.det_argmax_phi2``).
    """
    if not spec.is_centered():
        raise ValueError("phi2_upper_bound assumes xbar = 0")
    q, phi1 = spec.q, spec.phi[0]
    s1, s12 = spec.sigma_x[0, 0], spec.sigma_x[0, 1]
    if math.isnan(s12):
        raise ValueError("phi2_upper_bound needs s12")
    den = q * (1.0 - q) * s1 - phi1 ** 2
    if den == 0.0:
        raise InfeasibleError("zero denominator in the phi2 bound")
    return q * (1.0 - q) * s12 * phi1 / den


def phi2_feasible_interval(spec: MomentSpec) -> tuple[float, float]:
    """Open interval of phi2 keeping the shared conditional covariance PSD.

    det Sigma_{X|Y}(phi2) is a concave quadratic in phi2 for a centered spec:
    -c s1 phi2^2 + 2 c phi1 s12 phi2 + (s1 - c phi1^2) s2 - s12^2.
    """
    c = spec.c
    s1, s2, s12 = spec.sigma_x[0, 0], spec.sigma_x[1, 1], spec.sigma_x[0, 1]
    phi1 = spec.phi[0]
    if s1 - c * phi1 ** 2 <= 0:
        raise InfeasibleError("Var(X1|Y) would be non-positive")
    a = -c * s1
    b = 2.0 * c * phi1 * s12
    d0 = (s1 - c * phi1 ** 2) * s2 - s12 ** 2
    disc = b * b - 4.0 * a * d0
    if disc < 0:
        raise InfeasibleError("no phi2 makes the conditional covariance PSD")
    r = math.sqrt(disc)
    lo, hi = sorted(((-b + r) / (2 * a), (-b - r) / (2 * a)))
    return lo, hi


def fit_anticausal_missing_phi2(spec: MomentSpec, strategy: str = "entropy") -> AnticausalModel:
    """Impute E[X2 Y] and fit the completed spec.

    ``strategy="entropy"`` maximises det Sigma_{X|Y}(phi2) numerically;
    ``strategy="paper"`` plugs in :func:`phi2_upper_bound`.
    """
    from .oracle import det_argmax_phi2

    shift = spec.xbar.copy()
    base = center(dataclasses.replace(spec, avail_phi2=False))
    require_valid(base)
    if not base.avail_s12:
        raise ValueError("missing-phi2 fit needs s12")

    formula = phi2_upper_bound(base)
    entropy, _ = det_argmax_phi2(base)
    if strategy == "entropy":
        value = entropy
    elif strategy == "paper":
        value = formula
    else:
        raise ValueError(f"unknown imputation strategy {strategy!r}")

    meta = {
        "direction": "anticausal",
        "kind": "missing_phi2",
        "strategy": strategy,
        "phi2_paper": formula,
        "phi2_entropy": entropy,
    }
    lo, hi = phi2_feasible_interval(base)
    lo, hi = lo + 1e-9, hi - 1e-9
    if not lo < value < hi:
        clamped = min(max(value, lo), hi)
        msg = f"imputed phi2={value:.6g} outside feasible interval ({lo:.6g}, {hi:.6g}); clamped to {clamped:.6g}"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        meta["warning"] = msg
        value = clamped
    meta["imputed_phi2"] = value

    phi = np.array([base.phi[0], value])
    completed = MomentSpec(base.q, base.xbar, phi, base.sigma_x)
    model = fit_anticausal(completed)
    return dataclasses.replace(
        model, mu_plus=model.mu_plus + shift, mu_minus=model.mu_minus + shift, meta=meta
    )


def fit_anticausal_missing_s12(spec: MomentSpec) -> AnticausalModel:
    """E[X1 X2] unknown: class conditionals factorise, so the shared
    covariance is diagonal with entries s_i^2 - c phi_i^2."""
    shift = spec.xbar.copy()
    base = center(dataclasses.replace(spec, avail_s12=False))
    require_valid(base)
    if not base.avail_phi2:
        raise ValueError("missing-s12 fit needs phi2")
    c = base.c
    diag = np.diag(base.sigma_x) - c * base.phi ** 2
    if np.any(diag <= 0):
        raise InfeasibleError(f"conditional variances {diag.tolist()} not positive")
    mu_p, mu_m = class_means(base)
    mu_p, mu_m = mu_p + shift, mu_m + shift
    s = np.diag(diag)
    meta = {
        "direction": "anticausal",
        "kind": "missing_s12",
        "implied_s12": c * base.phi[0] * base.phi[1],  # covariance, not raw moment
    }
    return AnticausalModel(base.q, mu_p, mu_m, s, s.copy(), meta)
