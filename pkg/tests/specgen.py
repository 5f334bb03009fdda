"""Random feasible moment specs for property tests.

A spec is built backwards from a Gaussian mixture: pick a PD conditional
covariance S and a class separation delta, then phi = 2q(1-q) delta and
Sigma_X = S + c phi phi^T.  Such a spec is feasible by construction.
"""

import numpy as np
from hypothesis import strategies as st

from cmaxent.moments import MomentSpec


def build_spec(q, a, delta, xbar=(0.0, 0.0), ridge=0.2, min_sep=0.0):
    a = np.asarray(a, dtype=float).reshape(2, 2)
    cond = a @ a.T + ridge * np.eye(2)
    delta = np.asarray(delta, dtype=float)
    # cap the Mahalanobis separation so the causal dual stays well conditioned
    m = float(np.sqrt(delta @ np.linalg.solve(cond, delta)))
    if m > 1.5:
        delta = delta * (1.5 / m)
    elif m < min_sep:
        # too little signal for a boundary; push along the first axis
        delta = delta + np.array([min_sep * np.sqrt(cond[0, 0]), 0.0])
    cov_xy = 2.0 * q * (1.0 - q) * delta
    c = 1.0 / (4.0 * q * (1.0 - q))
    cov = cond + c * np.outer(cov_xy, cov_xy)
    xbar = np.asarray(xbar, dtype=float)
    # raw moments
    phi = cov_xy + xbar * (2.0 * q - 1.0)
    return MomentSpec(q, xbar, phi, cov + np.outer(xbar, xbar))


def random_spec(rng: np.random.Generator, centered: bool = True) -> MomentSpec:
    q = rng.uniform(0.2, 0.8)
    a = rng.normal(size=(2, 2))
    delta = rng.normal(size=2)
    xbar = (0.0, 0.0) if centered else rng.normal(size=2)
    return build_spec(q, a, delta, xbar)


finite = st.floats(-2.0, 2.0, allow_nan=False)


@st.composite
def feasible_specs(draw, centered=True, informative=False):
    q = draw(st.floats(0.2, 0.8))
    a = [draw(finite) for _ in range(4)]
    delta = [draw(finite) for _ in range(2)]
    xbar = (0.0, 0.0) if centered else (draw(finite), draw(finite))
    return build_spec(q, a, delta, xbar, min_sep=0.05 if informative else 0.0)
