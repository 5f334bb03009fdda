import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from numpy.testing import assert_allclose
from scipy.optimize import brentq
from scipy.special import expit

from cmaxent.anticausal import (
    AnticausalModel,
    anticausal_logit,
    anticausal_posterior,
    class_means,
    conditional_covariance,
    fit_anticausal,
    fit_anticausal_missing_phi2,
    fit_anticausal_missing_s12,
    fit_qda,
    mixture_moments,
    phi2_feasible_interval,
    phi2_upper_bound,
)
from cmaxent.datagen import sample_anticausal
from cmaxent.errors import InfeasibleError
from cmaxent.moments import MomentSpec, estimate_moments
from cmaxent.oracle import _det_at
from specgen import feasible_specs


def test_class_means_running_example(default_spec):
    mp, mm = class_means(default_spec)
    assert_allclose(mp, [0.3, 0.1], rtol=1e-15)
    assert_allclose(mm, [-0.3, -0.1], rtol=1e-15)


def test_class_means_uninformative():
    mp, mm = class_means(MomentSpec(0.3, [0, 0], [0.0, 0.0], np.eye(2)))
    assert np.array_equal(mp, mm)


def test_class_means_uncentered():
    spec = MomentSpec(0.25, [0.1, 0.0], [0.2, 0.0], np.eye(2))
    mp, mm = class_means(spec)
    assert_allclose(mp, [0.6, 0.0], rtol=1e-15)
    assert_allclose(mm, [-1.0 / 15.0, 0.0], rtol=1e-14)
    # same answer from q mu+ + (1-q) mu- = xbar, q mu+ - (1-q) mu- = phi
    a = np.array([[0.25, 0.75], [0.25, -0.75]])
    ref = np.linalg.solve(a, np.vstack([spec.xbar, spec.phi]))
    assert_allclose(mp, ref[0], atol=1e-15)
    assert_allclose(mm, ref[1], atol=1e-15)


def test_conditional_covariance_example(default_spec):
    assert_allclose(conditional_covariance(default_spec), [[0.91, -0.03], [-0.03, 0.99]], atol=1e-15)


def test_conditional_covariance_uninformative():
    s = np.array([[1.5, 0.2], [0.2, 0.7]])
    assert_allclose(conditional_covariance(MomentSpec(0.4, [0, 0], [0.0, 0.0], s)), s, atol=0)


def test_conditional_covariance_monte_carlo(default_spec):
    m = fit_anticausal(default_spec)
    data = sample_anticausal(m, 400_000, seed=2)
    within = sum(
        (data.y == y).mean() * np.cov(data.x[data.y == y].T, bias=True) for y in (1, -1)
    )
    assert_allclose(within, conditional_covariance(default_spec), atol=0.01)


@given(feasible_specs(centered=False))
def test_total_covariance_reconstruction(spec):
    m = fit_anticausal(spec)
    mm = mixture_moments(m)
    assert_allclose(mm["sigma_x"], spec.sigma_x, atol=1e-12)


def test_infeasible_conditional_covariance():
    with pytest.raises(InfeasibleError):
        conditional_covariance(MomentSpec(0.5, [0, 0], [0.9, -0.9], np.eye(2)))


def test_fit_running_example(default_spec):
    m = fit_anticausal(default_spec)
    assert_allclose(m.mu_plus, [0.3, 0.1])
    assert_allclose(m.mu_minus, [-0.3, -0.1])
    assert_allclose(m.sigma_plus, [[0.91, -0.03], [-0.03, 0.99]], atol=1e-15)
    assert m.shared_covariance


def test_fit_uninformative_posterior_is_q():
    m = fit_anticausal(MomentSpec(0.3, [0, 0], [0.0, 0.0], np.eye(2)))
    x = np.random.default_rng(0).normal(size=(50, 2)) * 5
    assert_allclose(anticausal_posterior(m, x), 0.3, rtol=1e-14)


def test_fit_monte_carlo_round_trip(skew_spec):
    m = fit_anticausal(skew_spec)
    n = 200_000
    data = sample_anticausal(m, n, seed=9)
    est = estimate_moments(data)
    y = data.y.astype(float)
    se_phi = (data.x * y[:, None]).std(axis=0) / math.sqrt(n)
    assert np.all(np.abs(est.phi - skew_spec.phi) <= 3 * se_phi)
    se_x = data.x.std(axis=0) / math.sqrt(n)
    assert np.all(np.abs(est.xbar - skew_spec.xbar) <= 3 * se_x)


@given(feasible_specs(centered=False))
def test_moment_reproduction(spec):
    mm = mixture_moments(fit_anticausal(spec))
    assert abs(mm["y_mean"] - spec.y_mean) <= 1e-12
    assert_allclose(mm["xbar"], spec.xbar, atol=1e-12)
    assert_allclose(mm["phi"], spec.phi, atol=1e-12)
    assert_allclose(mm["sigma_x"], spec.sigma_x, atol=1e-12)


def test_posterior_midpoint(default_spec):
    m = fit_anticausal(default_spec)
    assert_allclose(anticausal_posterior(m, 0.5 * (m.mu_plus + m.mu_minus)), 0.5, atol=1e-15)


def test_posterior_value():
    m = AnticausalModel(0.5, [0.3, 0.0], [-0.3, 0.0], np.eye(2), np.eye(2))
    p = anticausal_posterior(m, [1.0, 0.0])
    assert_allclose(p, 1.0 / (1.0 + math.exp(-0.6)), rtol=1e-14)
    assert abs(p - 0.6457) < 5e-5


def test_posterior_far_tail_is_finite(default_spec):
    m = fit_anticausal(default_spec)
    p = anticausal_posterior(m, np.array([[1e4, 0.0], [-1e4, 0.0]]))
    assert np.all(np.isfinite(p))
    assert p[0] == 1.0 and p[1] < 1e-300


@given(feasible_specs(centered=False))
def test_lda_logit_affine(spec):
    m = fit_anticausal(spec)
    g = np.linspace(-3, 3, 21)
    xx = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1)
    z = anticausal_logit(m, xx)
    scale = 1.0 + np.abs(z).max()
    assert np.abs(np.diff(z, 2, axis=0)).max() <= 1e-9 * scale
    assert np.abs(np.diff(z, 2, axis=1)).max() <= 1e-9 * scale
    assert np.abs(np.diff(np.diff(z, axis=0), axis=1)).max() <= 1e-9 * scale


def test_non_markov_witness(default_spec):
    assert conditional_covariance(default_spec)[0, 1] == pytest.approx(-0.03, abs=1e-15)


def test_qda_degenerates_to_lda(skew_spec):
    lda = fit_anticausal(skew_spec)
    second_p = lda.sigma_plus + np.outer(lda.mu_plus, lda.mu_plus)
    second_m = lda.sigma_minus + np.outer(lda.mu_minus, lda.mu_minus)
    qda = fit_qda(lda.q, lda.mu_plus, lda.mu_minus, second_p, second_m)
    x = np.random.default_rng(4).normal(size=(100, 2))
    assert_allclose(anticausal_posterior(qda, x), anticausal_posterior(lda, x), atol=1e-13)
    assert_allclose(qda.sigma_plus, lda.sigma_plus, atol=1e-14)


def test_qda_origin_value():
    m = fit_qda(0.5, [0, 0], [0, 0], 2 * np.eye(2), np.eye(2))
    assert_allclose(anticausal_posterior(m, [0.0, 0.0]), 1.0 / 3.0, rtol=1e-14)
    # radial: a rotation of x leaves the posterior unchanged
    x = np.array([0.8, -1.3])
    c, s = math.cos(0.7), math.sin(0.7)
    assert_allclose(anticausal_posterior(m, np.array([[c, -s], [s, c]]) @ x), anticausal_posterior(m, x), rtol=1e-13)


def test_qda_level_set_is_conic():
    m = fit_qda(0.45, [0.5, 0.0], [-0.2, 0.3], [[2.5, 0.4], [0.4, 1.2]], [[1.0, -0.1], [-0.1, 0.8]])
    centre = 0.5 * (m.mu_plus + m.mu_minus)
    pts = []
    for ang in np.linspace(0, 2 * np.pi, 40, endpoint=False):
        d = np.array([math.cos(ang), math.sin(ang)])
        f = lambda t: anticausal_logit(m, centre + t * d)  # noqa: E731
        ts = np.linspace(0, 12, 241)
        vals = np.array([f(t) for t in ts])
        k = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
        if len(k):
            pts.append(centre + brentq(f, ts[k[0]], ts[k[0] + 1], xtol=1e-14) * d)
    pts = np.array(pts)
    assert len(pts) >= 10
    x, y = pts[:, 0], pts[:, 1]
    design = np.column_stack([x * x, x * y, y * y, x, y, np.ones_like(x)])
    sv = np.linalg.svd(design, compute_uv=False)
    assert sv[-1] <= 1e-9 * sv[0]
    # a straight line would not fit
    line = np.linalg.svd(design[:, 3:], compute_uv=False)
    assert line[-1] > 1e-3 * line[0]


def test_qda_rejects_non_psd():
    with pytest.raises(InfeasibleError):
        fit_qda(0.5, [0, 0], [0, 0], [[0.1, 0.0], [0.0, 1.0]], np.eye(2) * 0.0 + [[1.0, 2.0], [2.0, 1.0]])


def test_phi2_bound_examples(corr_spec):
    assert phi2_upper_bound(corr_spec) == pytest.approx(0.234375, abs=1e-12)
    no_s12 = MomentSpec(0.5, [0, 0], [0.3, np.nan], [[1.0, 0.0], [0.0, 1.0]], avail_phi2=False)
    assert phi2_upper_bound(no_s12) == 0.0
    no_phi1 = MomentSpec(0.5, [0, 0], [0.0, np.nan], [[1.0, 0.5], [0.5, 1.0]], avail_phi2=False)
    assert phi2_upper_bound(no_phi1) == 0.0


def test_phi2_bound_zero_denominator():
    s = MomentSpec(0.5, [0, 0], [0.5, np.nan], [[1.0, 0.2], [0.2, 1.0]], avail_phi2=False)
    with pytest.raises(InfeasibleError):
        phi2_upper_bound(s)


def test_phi2_bound_requires_centered():
    s = MomentSpec(0.5, [1.0, 0], [0.3, np.nan], [[2.0, 0.5], [0.5, 1.0]], avail_phi2=False)
    with pytest.raises(ValueError):
        phi2_upper_bound(s)


def test_feasible_interval_roots(corr_spec):
    lo, hi = phi2_feasible_interval(corr_spec)
    assert lo < 0 < hi
    assert abs(_det_at(corr_spec, lo)) < 1e-12 and abs(_det_at(corr_spec, hi)) < 1e-12
    assert _det_at(corr_spec, 0.5 * (lo + hi)) > 0


@pytest.mark.parametrize("strategy", ["entropy", "paper"])
def test_missing_phi2_without_s12_channel(strategy):
    s = MomentSpec(0.4, [0, 0], [0.3, np.nan], [[1.0, 0.0], [0.0, 2.0]], avail_phi2=False)
    m = fit_anticausal_missing_phi2(s, strategy)
    assert abs(m.meta["imputed_phi2"]) < 1e-9
    w = np.linalg.solve(m.sigma_plus, m.mu_plus - m.mu_minus)
    assert abs(w[1]) < 1e-8


def test_missing_phi2_entropy_argmax(corr_spec):
    m = fit_anticausal_missing_phi2(corr_spec)
    lo, hi = phi2_feasible_interval(corr_spec)
    grid = np.linspace(lo, hi, 200_001)
    dets = [_det_at(corr_spec, v) for v in grid[::100]]
    coarse = grid[::100][int(np.argmax(dets))]
    assert abs(m.meta["imputed_phi2"] - coarse) < 2 * (grid[100] - grid[0])
    assert m.meta["strategy"] == "entropy"
    assert m.meta["phi2_paper"] == pytest.approx(0.234375, abs=1e-12)
    assert m.meta["phi2_entropy"] == m.meta["imputed_phi2"]


def _x2_slope(m):
    h = 1e-4
    return (anticausal_logit(m, [0.2, h]) - anticausal_logit(m, [0.2, -h])) / (2 * h)


def test_missing_phi2_paper_posterior_uses_x2(corr_spec):
    m = fit_anticausal_missing_phi2(corr_spec, "paper")
    assert abs(_x2_slope(m)) > 1e-3


def test_missing_phi2_entropy_leaves_x2_unweighted(corr_spec):
    # det(Sigma - c phi phi^T) = det(Sigma) (1 - c phi^T Sigma^-1 phi), so the
    # maximiser zeroes (Sigma^-1 phi)_2: X2 gets no logit weight although the
    # imputed phi2 = s12 phi1 / s1 is nonzero
    m = fit_anticausal_missing_phi2(corr_spec)
    assert m.meta["imputed_phi2"] == pytest.approx(0.15, abs=1e-12)
    assert abs(_x2_slope(m)) < 1e-8


@given(feasible_specs())
def test_entropy_imputation_closed_form(spec):
    s = spec.with_missing(phi2=True)
    m = fit_anticausal_missing_phi2(s)
    ref = spec.sigma_x[0, 1] * spec.phi[0] / spec.sigma_x[0, 0]
    assert m.meta["imputed_phi2"] == pytest.approx(ref, abs=1e-9)


def test_missing_phi2_paper_strategy(corr_spec):
    m = fit_anticausal_missing_phi2(corr_spec, "paper")
    assert m.meta["imputed_phi2"] == pytest.approx(0.234375, abs=1e-12)
    assert_allclose(m.mu_plus[1], 0.234375, rtol=1e-12)


def test_missing_phi2_clamps_with_warning():
    s = MomentSpec(0.5, [0, 0], [0.49, np.nan], [[1.0, 0.5], [0.5, 1.0]], avail_phi2=False)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        m = fit_anticausal_missing_phi2(s, "paper")
    assert any(issubclass(r.category, RuntimeWarning) for r in rec)
    lo, hi = phi2_feasible_interval(s)
    assert m.meta["imputed_phi2"] == pytest.approx(hi - 1e-9, abs=1e-15)
    assert "warning" in m.meta
    assert np.linalg.eigvalsh(m.sigma_plus).min() >= -1e-9


def test_missing_phi2_uncentered_shift(corr_spec):
    xb = np.array([1.0, -2.0])
    raw = MomentSpec(
        0.5, xb, [0.3, np.nan], corr_spec.sigma_x + np.outer(xb, xb), avail_phi2=False
    )
    a = fit_anticausal_missing_phi2(corr_spec)
    b = fit_anticausal_missing_phi2(raw)
    assert_allclose(b.mu_plus, a.mu_plus + xb, atol=1e-12)
    assert_allclose(b.sigma_plus, a.sigma_plus, atol=1e-12)


def test_missing_s12_example(default_spec):
    m = fit_anticausal_missing_s12(default_spec)
    assert_allclose(m.sigma_plus, np.diag([0.91, 0.99]), atol=1e-15)
    assert m.sigma_plus[0, 1] == 0.0 and m.sigma_minus[1, 0] == 0.0
    assert m.meta["implied_s12"] == pytest.approx(0.03, abs=1e-15)


def test_missing_s12_noise_channel():
    s = MomentSpec(0.3, [0, 0], [0.25, 0.0], np.eye(2))
    m = fit_anticausal_missing_s12(s)
    assert_allclose(anticausal_posterior(m, [0.4, -3.0]), anticausal_posterior(m, [0.4, 5.0]), rtol=1e-14)


@given(feasible_specs())
def test_missing_s12_implied_offdiag(spec):
    try:
        m = fit_anticausal_missing_s12(spec)
    except InfeasibleError:
        return
    assert m.sigma_plus[0, 1] == 0.0
    mm = mixture_moments(m)
    assert_allclose(mm["sigma_x"][0, 1], spec.c * spec.phi[0] * spec.phi[1], atol=1e-12)
    assert_allclose(np.diag(mm["sigma_x"]), np.diag(spec.sigma_x), atol=1e-12)


def test_missing_s12_infeasible():
    with pytest.raises(InfeasibleError):
        fit_anticausal_missing_s12(MomentSpec(0.5, [0, 0], [0.3, 0.2], [[0.05, 0.0], [0.0, 1.0]]))


def test_json_round_trip(corr_spec):
    m = fit_anticausal_missing_phi2(corr_spec)
    d = m.to_dict()
    assert {"q", "mu_plus", "mu_minus", "sigma_cond_plus", "sigma_cond_minus", "meta"} <= set(d)
    back = AnticausalModel.from_dict(d)
    assert np.array_equal(back.sigma_plus, m.sigma_plus)
    assert back.meta["imputed_phi2"] == m.meta["imputed_phi2"]


def test_logit_matches_sigmoid(default_spec):
    m = fit_anticausal(default_spec)
    x = np.array([0.7, -1.1])
    assert_allclose(expit(anticausal_logit(m, x)), anticausal_posterior(m, x), rtol=1e-15)
