"""Brute-force maximum entropy on a finite grid, plus a 1-D entropy maximiser.

Nothing here calls the closed-form solvers to produce its answer; the
``*_report`` helpers only use them for the comparison side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, InfeasibleError
from .moments import MomentSpec, center

NEWTON_TOL = 1e-10
MAX_ITER = 200
GAP_THRESHOLD = 0.02
INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class GridSpec:
    """Rectangular grid of ``counts[i]`` equal cells over ``ranges[i]``."""

    ranges: tuple[tuple[float, float], ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.ranges) != len(self.counts):
            raise ValueError("ranges and counts differ in length")
        for (lo, hi), n in zip(self.ranges, self.counts):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"bad range ({lo}, {hi})")
            if n < 3:
                raise ValueError("need at least 3 cells per axis")

    def edges(self, axis: int) -> np.ndarray:
        lo, hi = self.ranges[axis]
        return np.linspace(lo, hi, self.counts[axis] + 1)

    def axis_centers(self, axis: int) -> np.ndarray:
        e = self.edges(axis)
        return 0.5 * (e[:-1] + e[1:])

    @property
    def centers(self) -> np.ndarray:
        """(n_cells, d) cell centers, C order over axes."""
        mesh = np.meshgrid(*[self.axis_centers(i) for i in range(len(self.counts))], indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, len(self.counts))

    @property
    def cell_variance(self) -> tuple[float, ...]:
        """Variance of a uniform density on one cell, per axis (h^2 / 12)."""
        return tuple(((hi - lo) / n) ** 2 / 12.0 for (lo, hi), n in zip(self.ranges, self.counts))

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.counts))

    @classmethod
    def around(cls, mean, cov, n: int = 41, width: float = 4.0) -> "GridSpec":
        """Square-cell grid spanning +-width marginal standard deviations."""
        mean = np.asarray(mean, dtype=float)
        sd = np.sqrt(np.diag(np.asarray(cov, dtype=float)))
        return cls(tuple((m - width * s, m + width * s) for m, s in zip(mean, sd)), (n,) * len(mean))


@dataclass
class GridDistribution:
    """Stack of probability slices, each summing to one, with slice weights.

    kind "y|x": table (n_cells, 2), columns y=-1, y=+1, weights p(cell).
    kind "x|y": table (2, n_cells), rows y=-1, y=+1, weights (1-q, q).
    kind "joint": table (1, n).
    """

    table: np.ndarray
    weights: np.ndarray
    kind: str
    grid: GridSpec | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.table < 0):
            raise ValueError("negative probability")
        sums = self.table.sum(axis=1)
        if np.max(np.abs(sums - 1.0)) > 1e-12:
            raise ValueError("slices do not sum to one")

    @classmethod
    def joint(cls, probs) -> "GridDistribution":
        p = np.asarray(probs, dtype=float).reshape(1, -1)
        return cls(p / p.sum(), np.ones(1), "joint")


def grid_entropy(dist: GridDistribution) -> float:
    """Weighted slice entropy sum_s w_s * H(slice_s), with 0 log 0 = 0."""
    p = dist.table
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return float(dist.weights @ terms.sum(axis=1))


def gaussian_cell_weights(grid: GridSpec, mean, cov, order: int = 5) -> np.ndarray:
    """Gaussian mass of each 2-D cell (Gauss-Legendre per cell), renormalised
    to sum to one over the grid."""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    prec = np.linalg.inv(cov)
    norm = 1.0 / (2.0 * math.pi * math.sqrt(np.linalg.det(cov)))
    g, gw = np.polynomial.legendre.leggauss(order)
    e0, e1 = grid.edges(0), grid.edges(1)
    h0, h1 = np.diff(e0), np.diff(e1)
    x0 = (0.5 * (e0[:-1] + e0[1:]))[:, None] + 0.5 * h0[:, None] * g[None, :]
    x1 = (0.5 * (e1[:-1] + e1[1:]))[:, None] + 0.5 * h1[:, None] * g[None, :]
    d0 = x0 - mean[0]
    d1 = x1 - mean[1]
    # (n0, k, n1, l)
    q = (
        prec[0, 0] * d0[:, :, None, None] ** 2
        + 2.0 * prec[0, 1] * d0[:, :, None, None] * d1[None, None, :, :]
        + prec[1, 1] * d1[None, None, :, :] ** 2
    )
    dens = norm * np.exp(-0.5 * q)
    w = np.einsum("ikjl,k,l->ij", dens, gw, gw) * (0.25 * h0[:, None] * h1[None, :])
    w = w.reshape(-1)
    return w / w.sum()


def _logcosh(a: np.ndarray) -> np.ndarray:
    return np.logaddexp(a, -a) - math.log(2.0)


def conditional_dual(theta, feats: np.ndarray, px: np.ndarray, targets: np.ndarray):
    """Dual objective, gradient and Hessian of the grid conditional problem."""
    a = feats @ theta
    t = np.tanh(a)
    value = float(px @ _logcosh(a) - theta @ targets)
    grad = feats.T @ (px * t) - targets
    hess = (feats * (px * (1.0 - t * t))[:, None]).T @ feats
    return value, grad, hess


def _newton_min(fun, theta0: np.ndarray, tol: float, max_iter: int, what: str):
    """Damped Newton with Armijo backtracking for a smooth convex dual."""
    theta = theta0.copy()
    value, grad, hess = fun(theta)
    for it in range(max_iter):
        if np.max(np.abs(grad)) <= tol:
            return theta, grad, it
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, -grad, rcond=None)[0]
        slope = float(grad @ step)
        if slope >= 0:
            step, slope = -grad, -float(grad @ grad)
        t = 1.0
        for _ in range(60):
            cand = theta + t * step
            v, g, h = fun(cand)
            if np.isfinite(v) and v <= value + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            # at machine precision the Armijo test can stall; accept if the gradient shrank
            if np.isfinite(v) and np.max(np.abs(g)) < np.max(np.abs(grad)):
                pass
            else:
                raise ConvergenceError(f"{what}: line search failed (gradient {np.max(np.abs(grad)):.3g})")
        theta, value, grad, hess = cand, v, g, h
    if np.max(np.abs(grad)) <= tol:
        return theta, grad, max_iter
    raise ConvergenceError(f"{what}: no convergence (gradient {np.max(np.abs(grad)):.3g}); targets infeasible on grid?")


def grid_conditional_maxent(
    grid: GridSpec, px, targets, tol: float = NEWTON_TOL, max_iter: int = MAX_ITER
) -> GridDistribution:
    """Per-cell p(y|cell) maximising sum_cells px H(Y|cell) subject to
    sum px E[Y|cell] = eY and sum px x_cell E[Y|cell] = eXY.

    ``targets`` = (eY, eX1Y, eX2Y); a NaN entry drops that constraint.
    """
    px = np.asarray(px, dtype=float)
    targets = np.asarray(targets, dtype=float)
    feats = np.column_stack([np.ones(grid.n_cells), grid.centers])
    keep = ~np.isnan(targets)
    feats, tgt = feats[:, keep], targets[keep]
    theta, grad, iters = _newton_min(
        lambda th: conditional_dual(th, feats, px, tgt), np.zeros(keep.sum()), tol, max_iter,
        "grid_conditional_maxent",
    )
    p_plus = 0.5 * (1.0 + np.tanh(feats @ theta))
    table = np.column_stack([1.0 - p_plus, p_plus])
    full_theta = np.zeros(3)
    full_theta[keep] = theta
    return GridDistribution(
        table, px, "y|x", grid,
        {"theta": full_theta.tolist(), "constraint_residuals": grad.tolist(), "iterations": iters},
    )


def _class_features(grid: GridSpec) -> np.ndarray:
    """Cell averages of x1, x2, x1^2, x2^2, x1 x2 under a uniform in-cell density."""
    c = grid.centers
    x1, x2 = c[:, 0], c[:, 1]
    v1, v2 = grid.cell_variance
    return np.column_stack([x1, x2, x1 * x1 + v1, x2 * x2 + v2, x1 * x2])


def class_conditional_dual(theta, base: np.ndarray, centers: np.ndarray, q: float, targets: np.ndarray, keep):
    """Dual for p(cell|y) proportional to exp(y (l1 x1 + l2 x2) + shared quadratic).

    theta covers the kept subset of (l1, l2, l3, l4, l5, l6, l7) matching
    targets (phi1, phi2, xbar1, xbar2, s1, s2, s12).
    """
    full = np.zeros(7)
    full[keep] = theta
    shared = base @ full[2:]
    tilt = centers @ full[:2]
    value = -float(theta @ targets)
    grad = -targets.copy()
    hess = np.zeros((len(theta), len(theta)))
    probs = {}
    for y, py in ((-1.0, 1.0 - q), (1.0, q)):
        e = shared + y * tilt
        m = e.max()
        w = np.exp(e - m)
        z = w.sum()
        p = w / z
        probs[y] = p
        value += py * (m + math.log(z))
        h = np.column_stack([y * centers, base])[:, keep]
        mean_h = p @ h
        grad += py * mean_h
        hc = h - mean_h
        hess += py * (hc * p[:, None]).T @ hc
    return value, grad, hess, probs


def grid_class_conditional_maxent(
    grid: GridSpec, q: float, targets: dict, tol: float = NEWTON_TOL, max_iter: int = MAX_ITER
) -> GridDistribution:
    """p(cell|y), y in {-1,+1}, maximising sum_y p(y) H(X|y) subject to
    E[XY] = phi, E[X] = xbar and E[XX^T] = sigma_x (NaN entries dropped)."""
    phi = np.asarray(targets["phi"], dtype=float)
    xbar = np.asarray(targets["xbar"], dtype=float)
    sig = np.asarray(targets["sigma_x"], dtype=float)
    t_all = np.array([phi[0], phi[1], xbar[0], xbar[1], sig[0, 0], sig[1, 1], sig[0, 1]])
    keep = ~np.isnan(t_all)
    tgt = t_all[keep]
    centers = grid.centers
    base = _class_features(grid)

    # start from the Gaussian with the target covariance
    cov = np.array([[sig[0, 0], 0.0], [0.0, sig[1, 1]]])
    if keep[6]:
        cov[0, 1] = cov[1, 0] = sig[0, 1]
    cov = cov - np.outer(xbar, xbar)
    prec = np.linalg.inv(cov)
    init = np.zeros(7)
    init[2:4] = prec @ xbar
    init[4], init[5], init[6] = -0.5 * prec[0, 0], -0.5 * prec[1, 1], -prec[0, 1]

    def fun(th):
        v, g, h, _ = class_conditional_dual(th, base, centers, q, tgt, keep)
        return v, g, h

    theta, grad, iters = _newton_min(fun, init[keep], tol, max_iter, "grid_class_conditional_maxent")
    _, _, _, probs = class_conditional_dual(theta, base, centers, q, tgt, keep)
    table = np.vstack([probs[-1.0], probs[1.0]])
    table = table / table.sum(axis=1, keepdims=True)
    return GridDistribution(
        table, np.array([1.0 - q, q]), "x|y", grid,
        {"constraint_residuals": grad.tolist(), "iterations": iters, "q": q},
    )


def class_summary(dist: GridDistribution) -> dict:
    """Per-class means and covariances of an "x|y" grid distribution, read as
    a histogram density (uniform within each cell)."""
    c = dist.grid.centers
    in_cell = np.diag(dist.grid.cell_variance)
    out = {}
    for row, label in ((0, "minus"), (1, "plus")):
        p = dist.table[row]
        mu = p @ c
        d = c - mu
        out[f"mu_{label}"] = mu
        out[f"sigma_{label}"] = (d * p[:, None]).T @ d + in_cell
    return out


def grid_posterior(dist: GridDistribution) -> np.ndarray:
    """p(y=+1|cell) from an "x|y" distribution by Bayes' rule."""
    q = dist.weights[1]
    num = q * dist.table[1]
    den = num + (1.0 - q) * dist.table[0]
    with np.errstate(invalid="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), q)


def _conditional_cov_at(spec: MomentSpec, phi2: float) -> np.ndarray:
    """Within-class covariance of the two-component mixture matching the spec
    with E[X2 Y] = phi2, obtained by solving for the class means."""
    q = spec.q
    a = np.array([[q, 1.0 - q], [q, -(1.0 - q)]])
    phi = np.array([spec.phi[0], phi2])
    mus = np.linalg.solve(a, np.vstack([spec.xbar, phi]))
    delta = mus[0] - mus[1]
    cov = spec.sigma_x - np.outer(spec.xbar, spec.xbar)
    return cov - q * (1.0 - q) * np.outer(delta, delta)


def _det_at(spec: MomentSpec, phi2: float) -> float:
    return float(np.linalg.det(_conditional_cov_at(spec, phi2)))


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Maximiser of a unimodal ``f`` on [lo, hi] to bracket width ``tol``."""
    a, b = lo, hi
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def det_argmax_phi2(spec: MomentSpec, tol: float = 1e-10) -> tuple[float, float]:
    """phi2 maximising det of the shared conditional covariance, i.e. the
    Gaussian conditional entropy, over the interval where it is PSD.

    det is a concave quadratic in phi2; its roots bracket the search.
    """
    from .anticausal import phi2_feasible_interval

    if not spec.is_centered():
        raise ValueError("det_argmax_phi2 assumes xbar = 0")
    if math.isnan(spec.sigma_x[0, 1]):
        raise ValueError("det_argmax_phi2 needs s12")
    lo, hi = phi2_feasible_interval(spec)
    if not hi > lo:
        raise InfeasibleError("empty feasible interval for phi2")
    f = lambda p: _det_at(spec, p)  # noqa: E731
    star = golden_section_max(f, lo, hi, tol)
    # det is flat to rounding within ~1e-8 of the peak, so comparisons alone
    # cannot place it tighter; finish with one parabolic step on a wider stencil
    h = min(1e-3, 0.25 * (hi - lo))
    fm, f0, fp = f(star - h), f(star), f(star + h)
    curv = fp - 2.0 * f0 + fm
    if curv < 0:
        star = min(max(star - h * (fp - fm) / (2.0 * curv), lo), hi)
    return star, f(star)


def phi2_report(spec: MomentSpec) -> dict:
    """Entropy maximiser vs the closed-form stationary value for a missing phi2."""
    from .anticausal import phi2_upper_bound

    star, det_star = det_argmax_phi2(spec)
    formula = phi2_upper_bound(spec)
    out = {"phi2_star": star, "det_star": det_star, "phi2_paper": formula}
    if abs(star - formula) > 1e-9:
        out["discrepancy"] = formula - star
    return out


def causal_oracle_report(spec: MomentSpec, n: int = 41) -> dict:
    """Grid conditional MAXENT vs the closed-form causal fit."""
    from . import causal

    if spec.avail_phi2 and spec.avail_s12:
        model = causal.fit_causal(spec)
    elif not spec.avail_phi2:
        model = causal.fit_causal_missing_phi2(spec)
    else:
        model = causal.fit_causal_missing_s12(spec)
    m = model.marginal
    grid = GridSpec.around(m.mean, m.cov, n)
    px = gaussian_cell_weights(grid, m.mean, m.cov)
    targets = [spec.y_mean, spec.phi[0], spec.phi[1] if spec.avail_phi2 else math.nan]
    dist = grid_conditional_maxent(grid, px, targets)
    closed = causal.causal_posterior(model, grid.centers)
    gap = float(np.max(np.abs(dist.table[:, 1] - closed)))
    return {
        "direction": "causal",
        "grid": n,
        "constraint_residuals": dist.meta["constraint_residuals"],
        "sup_norm_gap": gap,
    }


def anticausal_oracle_report(spec: MomentSpec, n: int = 41) -> dict:
    """Grid class-conditional MAXENT vs the closed-form Gaussian mixture."""
    from . import anticausal

    # everything below is translation invariant; work in centered coordinates
    spec = center(spec)
    report: dict = {"direction": "anticausal", "grid": n}
    work = spec
    if not spec.avail_phi2:
        model = anticausal.fit_anticausal_missing_phi2(spec)
        report.update(phi2_report(spec))
        work = MomentSpec(spec.q, spec.xbar, [spec.phi[0], model.meta["imputed_phi2"]], spec.sigma_x)
    elif not spec.avail_s12:
        model = anticausal.fit_anticausal_missing_s12(spec)
    else:
        model = anticausal.fit_anticausal(spec)
    cov = work.covariance
    if not work.avail_s12:
        cov = np.diag(np.diag(cov)) + model.meta["implied_s12"] * np.array([[0.0, 1.0], [1.0, 0.0]])
    grid = GridSpec.around(work.xbar, cov, n)
    dist = grid_class_conditional_maxent(
        grid, work.q, {"phi": work.phi, "xbar": work.xbar, "sigma_x": work.sigma_x}
    )
    summ = class_summary(dist)
    gaps = {
        "mu_plus": float(np.max(np.abs(summ["mu_plus"] - model.mu_plus))),
        "mu_minus": float(np.max(np.abs(summ["mu_minus"] - model.mu_minus))),
        "sigma_plus": float(np.max(np.abs(summ["sigma_plus"] - model.sigma_plus))),
        "sigma_minus": float(np.max(np.abs(summ["sigma_minus"] - model.sigma_minus))),
        "posterior": float(
            np.max(np.abs(grid_posterior(dist) - anticausal.anticausal_posterior(model, grid.centers)))
        ),
    }
    report.update(
        {
            "constraint_residuals": dist.meta["constraint_residuals"],
            "class_gaps": gaps,
            "sup_norm_gap": max(gaps.values()),
        }
    )
    return report
