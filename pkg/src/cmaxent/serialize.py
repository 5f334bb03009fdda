"""JSON output with every float written at 17 significant digits."""

from __future__ import annotations

import json
import math

import numpy as np

from .anticausal import AnticausalModel
from .causal import CausalModel
from .combined import BlockMoments, CombinedModel
from .errors import DataError
from .moments import MomentSpec


def _fmt(v: float) -> str:
    if math.isnan(v):
        return "null"
    if math.isinf(v):
        raise ValueError("infinite value is not representable in JSON")
    s = "%.17g" % v
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if hasattr(obj, "to_dict"):
        obj = obj.to_dict()
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[" + pad + ("," + pad).join(_encode(v, indent, level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def load_spec(d: dict) -> MomentSpec | BlockMoments:
    if "cause" in d and "effect" in d:
        return BlockMoments.from_dict(d)
    return MomentSpec.from_dict(d)


def load_model(d: dict) -> CausalModel | AnticausalModel | CombinedModel:
    try:
        if "causal_part" in d:
            return CombinedModel.from_dict(d)
        if "lambda0" in d:
            return CausalModel.from_dict(d)
        if "mu_plus" in d:
            return AnticausalModel.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed model JSON: {exc}") from exc
    raise DataError("unrecognised model JSON")
