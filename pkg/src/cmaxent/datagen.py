"""Reproducible synthetic samples from fitted models.

Randomness comes from Philox-4x64 (counter-based) keyed by (seed, stream);
uniforms are built from the top 53 bits of each raw word and normals by the
inverse Gaussian CDF, so a given seed yields the same bits on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .anticausal import AnticausalModel
from .causal import CausalModel, causal_posterior
from .combined import CombinedModel
from .moments import SampleSet

# one stream per random quantity so adding a column never shifts another
LABEL_STREAM = 0
NOISE_STREAM = 1
EFFECT_NOISE_STREAM = 2


@dataclass(frozen=True)
class Seeded:
    seed: int

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    def uniforms(self, stream: int, n: int) -> np.ndarray:
        """n uniforms in the open interval (0, 1) from stream ``stream``."""
        bg = np.random.Philox(key=np.array([self.seed, stream], dtype=np.uint64))
        raw = bg.random_raw(n)
        return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53

    def normals(self, stream: int, n: int, d: int) -> np.ndarray:
        return ndtri(self.uniforms(stream, n * d)).reshape(n, d)


def _as_seeded(seed) -> Seeded:
    return seed if isinstance(seed, Seeded) else Seeded(int(seed))


def sample_causal(model: CausalModel, n: int, seed) -> SampleSet:
    """x ~ marginal, then y ~ causal posterior."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = _as_seeded(seed)
    z = rng.normals(NOISE_STREAM, n, 2)
    x = model.marginal.mean + z @ model.marginal.chol.T
    u = rng.uniforms(LABEL_STREAM, n)
    y = np.where(u < causal_posterior(model, x), 1, -1)
    return SampleSet(y, x)


def _class_draws(model: AnticausalModel, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    lp = np.linalg.cholesky(model.sigma_plus)
    lm = np.linalg.cholesky(model.sigma_minus)
    return np.where(
        (y == 1)[:, None],
        model.mu_plus + z @ lp.T,
        model.mu_minus + z @ lm.T,
    )


def sample_anticausal(model: AnticausalModel, n: int, seed) -> SampleSet:
    """y ~ Bernoulli(q) on {-1, +1}, then x ~ N(mu_y, Sigma_y)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = _as_seeded(seed)
    y = np.where(rng.uniforms(LABEL_STREAM, n) < model.q, 1, -1)
    x = _class_draws(model, y, rng.normals(NOISE_STREAM, n, 2))
    return SampleSet(y, x)


def sample_combined(model: CombinedModel, n: int, seed) -> SampleSet:
    """Causal block as in :func:`sample_causal`, effect block drawn given y."""
    rng = _as_seeded(seed)
    s = sample_causal(model.causal_part, n, rng)
    x34 = _class_draws(model.anticausal_part, s.y, rng.normals(EFFECT_NOISE_STREAM, n, 2))
    return SampleSet(s.y, np.hstack([s.x, x34]))


def sample(model, n: int, seed) -> SampleSet:
    if isinstance(model, CausalModel):
        return sample_causal(model, n, seed)
    if isinstance(model, AnticausalModel):
        return sample_anticausal(model, n, seed)
    if isinstance(model, CombinedModel):
        return sample_combined(model, n, seed)
    raise TypeError(f"cannot sample from {type(model).__name__}")
