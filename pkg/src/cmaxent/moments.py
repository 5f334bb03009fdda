"""Moment constraints: containers, estimation from samples, centering, validation.

Convention: ``q`` is p(Y=+1) with Y in {-1, +1}, so E[Y] = 2q - 1.
Second moments are stored raw (E[XX^T]), not centered.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .errors import DataError, InfeasibleError

PSD_TOL = 1e-9
CS_SLACK = 1e-9


@dataclass(frozen=True)
class MomentSpec:
    """First and second moment constraints over (Y, X1, X2).

    Unavailable entries (``phi[1]`` when ``avail_phi2`` is False, the
    off-diagonal of ``sigma_x`` when ``avail_s12`` is False) are stored as NaN.
    """

    q: float
    xbar: np.ndarray
    phi: np.ndarray
    sigma_x: np.ndarray
    avail_phi2: bool = True
    avail_s12: bool = True

    def __post_init__(self):
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "xbar", np.array(self.xbar, dtype=float).reshape(2))
        phi = np.array(self.phi, dtype=float).reshape(2)
        sigma = np.array(self.sigma_x, dtype=float).reshape(2, 2)
        if not self.avail_phi2:
            phi[1] = np.nan
        if not self.avail_s12:
            sigma[0, 1] = sigma[1, 0] = np.nan
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "sigma_x", sigma)

    @property
    def y_mean(self) -> float:
        return 2.0 * self.q - 1.0

    @property
    def c(self) -> float:
        """Inverse variance of Y, 1 / (4 q (1 - q))."""
        return 1.0 / (4.0 * self.q * (1.0 - self.q))

    @property
    def complete(self) -> bool:
        return self.avail_phi2 and self.avail_s12

    @property
    def covariance(self) -> np.ndarray:
        return self.sigma_x - np.outer(self.xbar, self.xbar)

    @property
    def cov_xy(self) -> np.ndarray:
        """Cov(X, Y) = E[XY] - E[X] E[Y]."""
        return self.phi - self.xbar * self.y_mean

    def is_centered(self, atol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.xbar) <= atol))

    def with_missing(self, phi2: bool = False, s12: bool = False) -> "MomentSpec":
        """Copy with the named entries marked unavailable."""
        return dataclasses.replace(
            self,
            avail_phi2=self.avail_phi2 and not phi2,
            avail_s12=self.avail_s12 and not s12,
        )

    def to_dict(self) -> dict:
        def clean(a):
            return [clean(v) for v in a] if np.ndim(a) else (None if math.isnan(a) else float(a))

        return {
            "q": self.q,
            "xbar": clean(self.xbar),
            "phi": clean(self.phi),
            "sigma_x": clean(self.sigma_x),
            "avail_phi2": self.avail_phi2,
            "avail_s12": self.avail_s12,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MomentSpec":
        def arr(v):
            return np.array(v, dtype=float)  # None -> nan

        try:
            phi, sigma = arr(d["phi"]), arr(d["sigma_x"])
            # a null entry without an explicit flag means "unavailable"
            return cls(
                q=d["q"],
                xbar=arr(d.get("xbar", [0.0, 0.0])),
                phi=phi,
                sigma_x=sigma,
                avail_phi2=bool(d.get("avail_phi2", not np.isnan(phi.reshape(-1)[-1]))),
                avail_s12=bool(d.get("avail_s12", not np.isnan(sigma.reshape(-1)[1]))),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed MomentSpec: {exc}") from exc


def conditional_covariance_raw(spec: MomentSpec) -> np.ndarray:
    """Shared within-class covariance implied by the law of total covariance.

    Cov(X) - c * Cov(X,Y) Cov(X,Y)^T.  No feasibility check.
    """
    v = spec.cov_xy
    return spec.covariance - spec.c * np.outer(v, v)


@dataclass(frozen=True)
class SampleSet:
    """Labelled rows (y, x) with y in {-1, +1} and 2 or 4 covariates."""

    y: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y)
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(1, -1)
        if y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise DataError(f"shape mismatch: y {y.shape}, x {x.shape}")
        if x.shape[1] not in (2, 4):
            raise DataError(f"expected 2 or 4 covariates, got {x.shape[1]}")
        if not np.all(np.isfinite(x)):
            raise DataError("non-finite covariate value")
        if not np.all((y == 1) | (y == -1)):
            raise DataError("labels must be -1 or +1")
        object.__setattr__(self, "y", y.astype(np.int64))
        object.__setattr__(self, "x", x)

    def __len__(self) -> int:
        return self.y.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def block(self, cols: Iterable[int]) -> "SampleSet":
        return SampleSet(self.y, self.x[:, list(cols)])


def format_float(v: float) -> str:
    return "%.17g" % v


def write_csv(samples: SampleSet, out: TextIO | str | Path) -> None:
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="") as fh:
            write_csv(samples, fh)
        return
    header = ["y"] + [f"x{i + 1}" for i in range(samples.dim)]
    out.write(",".join(header) + "\n")
    for yi, xi in zip(samples.y, samples.x):
        out.write(",".join([str(int(yi))] + [format_float(v) for v in xi]) + "\n")


def to_csv_string(samples: SampleSet) -> str:
    buf = io.StringIO()
    write_csv(samples, buf)
    return buf.getvalue()


def read_csv(src: TextIO | str | Path) -> SampleSet:
    """Parse the ``y,x1,x2[,x3,x4]`` sample format."""
    if isinstance(src, (str, Path)):
        try:
            with open(src, newline="") as fh:
                return read_csv(fh)
        except OSError as exc:
            raise DataError(f"cannot read {src}: {exc}") from exc
    reader = csv.reader(src)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("empty CSV") from None
    if header not in (["y", "x1", "x2"], ["y", "x1", "x2", "x3", "x4"]):
        raise DataError(f"unexpected CSV header {header}")
    ys, xs = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataError(f"line {lineno}: expected {len(header)} fields")
        try:
            yv = float(row[0])
            xv = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise DataError(f"line {lineno}: {exc}") from exc
        if yv not in (-1.0, 1.0):
            raise DataError(f"line {lineno}: label {row[0]!r} not in {{-1, 1}}")
        ys.append(int(yv))
        xs.append(xv)
    if not ys:
        raise DataError("CSV has no data rows")
    return SampleSet(np.array(ys), np.array(xs))


def estimate_moments(samples: SampleSet) -> MomentSpec:
    """Plain sample averages of Y, X, XY and XX^T over a 2-covariate sample."""
    if len(samples) == 0:
        raise DataError("empty sample")
    if samples.dim != 2:
        raise DataError("estimate_moments expects 2 covariates; use estimate_block_moments")
    y = samples.y.astype(float)
    x = samples.x
    n = len(samples)
    n_plus = int(np.count_nonzero(samples.y == 1))
    if n_plus in (0, n):
        raise InfeasibleError("sample contains a single class; q would be 0 or 1")
    return MomentSpec(
        q=n_plus / n,
        xbar=x.mean(axis=0),
        phi=(x * y[:, None]).mean(axis=0),
        sigma_x=(x.T @ x) / n,
    )


def estimate_block_moments(samples: SampleSet) -> tuple[MomentSpec, MomentSpec]:
    """Per-block moments (x1,x2) and (x3,x4) of a 4-covariate sample."""
    if samples.dim != 4:
        raise DataError("estimate_block_moments expects 4 covariates")
    return estimate_moments(samples.block([0, 1])), estimate_moments(samples.block([2, 3]))


def center(spec: MomentSpec) -> MomentSpec:
    """Shift X to zero mean: raw moments become central moments."""
    if spec.is_centered(0.0):
        return spec
    return dataclasses.replace(
        spec,
        xbar=np.zeros(2),
        phi=spec.cov_xy,
        sigma_x=spec.covariance,
    )


def validate(spec: MomentSpec, tol: float = PSD_TOL) -> list[str]:
    """List every violated invariant; empty means the spec is usable."""
    problems: list[str] = []
    q = spec.q
    if not (0.0 < q < 1.0) or math.isnan(q):
        problems.append(f"q={q!r} outside the open interval (0, 1)")
        return problems

    known = [spec.xbar, spec.phi[:1], np.diag(spec.sigma_x)]
    if spec.avail_phi2:
        known.append(spec.phi[1:])
    if spec.avail_s12:
        known.append(spec.sigma_x[[0, 1], [1, 0]])
    if not all(np.all(np.isfinite(k)) for k in known):
        problems.append("non-finite value among the known moments")
        return problems

    cov = spec.covariance
    if spec.avail_s12:
        if abs(spec.sigma_x[0, 1] - spec.sigma_x[1, 0]) > tol:
            problems.append("sigma_x is not symmetric")
        min_eig = float(np.linalg.eigvalsh(0.5 * (cov + cov.T)).min())
        if min_eig < -tol:
            problems.append(f"covariance of X not PSD (min eigenvalue {min_eig:.3g})")
    else:
        for i in range(2):
            if cov[i, i] < -tol:
                problems.append(f"variance of X{i + 1} is negative")

    var_y = 4.0 * q * (1.0 - q)
    cxy = spec.cov_xy
    for i in range(2 if spec.avail_phi2 else 1):
        if cxy[i] ** 2 > cov[i, i] * var_y + CS_SLACK:
            problems.append(
                f"Cauchy-Schwarz violated for X{i + 1}: "
                f"Cov(X{i + 1},Y)^2={cxy[i] ** 2:.6g} > Var(X{i + 1})Var(Y)={cov[i, i] * var_y:.6g}"
            )

    if spec.complete and not problems:
        cond = conditional_covariance_raw(spec)
        min_eig = float(np.linalg.eigvalsh(0.5 * (cond + cond.T)).min())
        if min_eig < -tol:
            problems.append(f"conditional covariance not PSD (min eigenvalue {min_eig:.3g})")
    return problems


def require_valid(spec: MomentSpec) -> MomentSpec:
    problems = validate(spec)
    if problems:
        raise InfeasibleError("; ".join(problems))
    return spec
