"""Mixed graph: (X1, X2) cause Y, Y causes (X3, X4).

The merged predictor is p(y|x1..x4) proportional to p(y|x1,x2) p(x3,x4|y),
so its logit is the causal logit plus the log density ratio of the effect
block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import anticausal, causal
from .errors import CmaxentError, DataError, InfeasibleError
from .moments import MomentSpec

Q_TOL = 1e-12


@dataclass(frozen=True)
class BlockMoments:
    """Per-block moment constraints; no cross-block moments are used."""

    cause: MomentSpec
    effect: MomentSpec

    def to_dict(self) -> dict:
        return {"cause": self.cause.to_dict(), "effect": self.effect.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "BlockMoments":
        try:
            return cls(MomentSpec.from_dict(d["cause"]), MomentSpec.from_dict(d["effect"]))
        except KeyError as exc:
            raise DataError(f"block moments missing {exc}") from exc


@dataclass(frozen=True)
class CombinedModel:
    causal_part: causal.CausalModel
    anticausal_part: anticausal.AnticausalModel

    @property
    def q(self) -> float:
        return self.anticausal_part.q

    def to_dict(self) -> dict:
        return {"causal_part": self.causal_part.to_dict(), "anticausal_part": self.anticausal_part.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "CombinedModel":
        return cls(
            causal.CausalModel.from_dict(d["causal_part"]),
            anticausal.AnticausalModel.from_dict(d["anticausal_part"]),
        )


class BlockError(InfeasibleError):
    """Feasibility failure tagged with the offending block."""

    def __init__(self, block: str, cause: Exception):
        super().__init__(f"{block} block: {cause}")
        self.block = block


def fit_combined(blocks: BlockMoments) -> CombinedModel:
    if abs(blocks.cause.q - blocks.effect.q) > Q_TOL:
        raise InfeasibleError(
            f"blocks disagree on q: cause {blocks.cause.q!r} vs effect {blocks.effect.q!r}"
        )
    try:
        c = causal.fit_causal(blocks.cause)
    except (CmaxentError, ValueError) as exc:
        raise BlockError("cause", exc) from exc
    try:
        a = anticausal.fit_anticausal(blocks.effect)
    except (CmaxentError, ValueError) as exc:
        raise BlockError("effect", exc) from exc
    return CombinedModel(c, a)


def combined_logit(model: CombinedModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return causal.causal_logit(model.causal_part, x[..., :2]) + anticausal.log_density_ratio(
        model.anticausal_part, x[..., 2:4]
    )


def combined_posterior(model: CombinedModel, x) -> np.ndarray | float:
    """p(y=+1 | x1..x4); p(x1, x2) cancels, so only the causal logit and the
    effect-block class densities enter."""
    p = expit(combined_logit(model, x))
    return float(p) if np.ndim(p) == 0 else p


def logit(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return np.log(p) - np.log1p(-p)


def implied_y_mean_gap(model: CombinedModel) -> float:
    """|E[Y] under the causal part - (2q - 1)|."""
    ey, _ = causal.causal_moment_forward(
        model.causal_part.lambda0, model.causal_part.lam, model.causal_part.marginal
    )
    return abs(ey - (2.0 * model.q - 1.0))

