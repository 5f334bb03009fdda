"""Command-line front end.

    cmaxent moments   --in data.csv [--out spec.json]
    cmaxent fit       --in spec.json --direction causal|anticausal|combined
                      [--missing none|phi2|s12] [--strategy entropy|paper]
    cmaxent compare   --in spec.json [--missing ...] [--strategy ...]
    cmaxent plot-data --in spec.json --out grid.csv [--boundaries b.json] [--grid N]
    cmaxent oracle    --in spec.json --direction causal|anticausal [--grid N] [--threshold T]
    cmaxent gen       --in model.json --n N [--seed S] [--out data.csv]

Exit codes: 0 ok, 1 oracle gap above threshold, 2 data error,
3 infeasible or non-convergent, 64 usage.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import anticausal, causal, datagen, geometry, oracle
from .combined import BlockMoments, fit_combined
from .errors import CmaxentError, DataError, InfeasibleError, SolverError
from .moments import MomentSpec, center, estimate_block_moments, estimate_moments, read_csv, require_valid, write_csv
from .serialize import dumps, load_model, load_spec

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_DATA = 2
EXIT_INFEASIBLE = 3
EXIT_USAGE = 64

RESIDUAL_TOL = 1e-8
PLOT_WIDTH = 4.0  # plot box half-width in marginal standard deviations


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunConfig:
    command: str
    inp: str
    out: str | None = None
    direction: str | None = None
    missing: str | None = None
    strategy: str | None = None
    grid: int = 41
    seed: int = 0
    n: int | None = None
    threshold: float = oracle.GAP_THRESHOLD
    boundaries: str | None = None

    def check(self) -> None:
        if self.strategy is not None and self.missing not in (None, "phi2"):
            raise UsageError("--strategy only applies with --missing phi2")
        if self.direction == "combined" and self.missing not in (None, "none"):
            raise UsageError("--missing is not supported for --direction combined")
        if self.direction == "combined" and self.strategy is not None:
            raise UsageError("--strategy is not supported for --direction combined")
        if self.grid < 3:
            raise UsageError("--grid must be at least 3")
        if self.n is not None and self.n < 1:
            raise UsageError("--n must be positive")
        if not 0 <= self.seed < 2**64:
            raise UsageError("--seed must fit in 64 unsigned bits")
        if not self.threshold > 0:
            raise UsageError("--threshold must be positive")


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


def _read_json(path: str) -> dict:
    try:
        d = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(d, dict):
        raise DataError(f"{path}: expected a JSON object")
    return d


def _two_covariate_spec(cfg: RunConfig) -> MomentSpec:
    spec = load_spec(_read_json(cfg.inp))
    if isinstance(spec, BlockMoments):
        raise DataError("this command needs a two-covariate spec, got block moments")
    return _apply_missing(spec, cfg.missing)


def _apply_missing(spec: MomentSpec, missing: str | None) -> MomentSpec:
    """Explicit --missing marks that entry unavailable; without it the spec decides."""
    if missing == "phi2":
        spec = spec.with_missing(phi2=True)
    elif missing == "s12":
        spec = spec.with_missing(s12=True)
    elif missing == "none" and not spec.complete:
        raise DataError("--missing none but the spec has unavailable entries")
    if not spec.avail_phi2 and not spec.avail_s12:
        raise DataError("phi2 and s12 both unavailable; not supported")
    return spec


def _kind(spec: MomentSpec) -> str:
    if not spec.avail_phi2:
        return "phi2"
    if not spec.avail_s12:
        return "s12"
    return "none"


def _fit_pair(spec: MomentSpec, strategy: str | None):
    kind = _kind(spec)
    if kind == "phi2":
        return (
            causal.fit_causal_missing_phi2(spec),
            anticausal.fit_anticausal_missing_phi2(spec, strategy or "entropy"),
        )
    if kind == "s12":
        return causal.fit_causal_missing_s12(spec), anticausal.fit_anticausal_missing_s12(spec)
    return causal.fit_causal(spec), anticausal.fit_anticausal(spec)


def _causal_boundary(model: causal.CausalModel):
    if np.linalg.norm(model.lam) <= 1e-12:
        return None
    return geometry.boundary_from_causal(model)


def _anticausal_boundary(model: anticausal.AnticausalModel):
    diff = model.mu_plus - model.mu_minus
    if np.linalg.norm(diff) <= 1e-12 * (1.0 + np.linalg.norm(model.mu_plus)):
        return None
    return geometry.boundary_from_anticausal(model)


def _pair_geometry(bc, ba) -> dict:
    if bc is None or ba is None:
        return {"parallel": None, "angle_radians": None}
    return {"parallel": geometry.parallel(bc.w, ba.w, tol=1e-6), "angle_radians": geometry.angle_between(bc.w, ba.w)}


# ---- commands ---------------------------------------------------------------


def cmd_moments(cfg: RunConfig) -> int:
    samples = read_csv(sys.stdin if cfg.inp == "-" else cfg.inp)
    try:
        if samples.dim == 4:
            cause, effect = estimate_block_moments(samples)
            require_valid(cause)
            require_valid(effect)
            out = BlockMoments(cause, effect)
        else:
            out = require_valid(estimate_moments(samples))
    except InfeasibleError as exc:
        # a sample that yields infeasible moments is bad data here
        raise DataError(str(exc)) from exc
    _write_text(cfg.out, dumps(out))
    return EXIT_OK


def cmd_fit(cfg: RunConfig) -> int:
    raw = load_spec(_read_json(cfg.inp))
    direction = cfg.direction
    if direction == "combined":
        if not isinstance(raw, BlockMoments):
            raise DataError("--direction combined needs block moments {cause, effect}")
        _write_text(cfg.out, dumps(fit_combined(raw)))
        return EXIT_OK
    if isinstance(raw, BlockMoments):
        raise DataError("block moments can only be fitted with --direction combined")
    spec = _apply_missing(raw, cfg.missing)
    kind = _kind(spec)
    if cfg.strategy is not None and kind != "phi2":
        raise UsageError("--strategy only applies when phi2 is missing")
    if direction == "causal":
        fit = {"none": causal.fit_causal, "phi2": causal.fit_causal_missing_phi2,
               "s12": causal.fit_causal_missing_s12}[kind]
        model = fit(spec)
    elif kind == "phi2":
        model = anticausal.fit_anticausal_missing_phi2(spec, cfg.strategy or "entropy")
    elif kind == "s12":
        model = anticausal.fit_anticausal_missing_s12(spec)
    else:
        model = anticausal.fit_anticausal(spec)
    _write_text(cfg.out, dumps(model))
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    spec = _two_covariate_spec(cfg)
    kind = _kind(spec)
    mc, ma = _fit_pair(spec, cfg.strategy)
    bc, ba = _causal_boundary(mc), _anticausal_boundary(ma)
    report: dict = {"missing": kind}
    cs = center(spec)

    if kind == "none":
        nc, na = geometry.normal_causal(spec), geometry.normal_anticausal(spec)
    elif kind == "s12":
        v = np.diag(cs.sigma_x)
        nc = cs.phi / v
        na = cs.phi / (v - cs.c * cs.phi ** 2)
    else:
        nc = mc.lam
        na = np.linalg.solve(ma.sigma_plus, ma.mu_plus - ma.mu_minus)
    report["normals"] = {"causal": nc, "anticausal": na}

    if np.any(nc) and np.any(na):
        # closed-form normals are exact, so the tight tolerance applies to them
        tol = 1e-8 if kind != "phi2" else 1e-6
        report["parallel"] = geometry.parallel(nc, na, tol=tol)
        report["angle_radians"] = geometry.angle_between(nc, na)
    else:
        report["parallel"] = None
        report["angle_radians"] = None

    report["boundaries"] = {"causal": bc, "anticausal": ba}
    report["offsets"] = {"causal": None if bc is None else bc.b, "anticausal": None if ba is None else ba.b}

    if kind == "none":
        report["k"] = geometry.sherman_morrison_decompose(spec)
    elif kind == "s12":
        report["ratio"] = geometry.partial_slope_ratio(spec)
    else:
        rep = oracle.phi2_report(center(spec))
        rep["imputed_phi2"] = ma.meta["imputed_phi2"]
        rep["strategy"] = ma.meta["strategy"]
        report["phi2"] = rep
    _write_text(cfg.out, dumps(report))
    return EXIT_OK


def _plot_box(spec: MomentSpec) -> list[list[float]]:
    sd = np.sqrt(np.diag(center(spec).sigma_x))
    return [[float(m - PLOT_WIDTH * s), float(m + PLOT_WIDTH * s)] for m, s in zip(spec.xbar, sd)]


def _line_entry(b, box) -> dict | None:
    if b is None:
        return None
    return {"w": b.w, "b": b.b, "slope": b.slope, "segment": b.segment(box)}


def cmd_plot_data(cfg: RunConfig) -> int:
    if cfg.out is None or cfg.out == "-":
        raise UsageError("plot-data needs --out PATH for the CSV grid")
    spec = _two_covariate_spec(cfg)
    kind = _kind(spec)
    mc, ma = _fit_pair(spec, cfg.strategy)
    box = _plot_box(spec)
    g1 = np.linspace(*box[0], cfg.grid)
    g2 = np.linspace(*box[1], cfg.grid)
    xx = np.stack(np.meshgrid(g1, g2, indexing="ij"), axis=-1).reshape(-1, 2)
    pc = causal.causal_posterior(mc, xx)
    pa = anticausal.anticausal_posterior(ma, xx)
    rows = ["x1,x2,p_causal,p_anticausal"]
    rows += ["%.17g,%.17g,%.17g,%.17g" % (a, b, c, d) for (a, b), c, d in zip(xx, pc, pa)]
    _write_text(cfg.out, "\n".join(rows) + "\n")

    bc, ba = _causal_boundary(mc), _anticausal_boundary(ma)
    doc: dict = {"missing": kind, "box": box, "causal": _line_entry(bc, box), "anticausal": _line_entry(ba, box)}
    doc.update(_pair_geometry(bc, ba))
    ratio = None
    if bc is not None and ba is not None and math.isfinite(bc.slope) and bc.slope != 0:
        ratio = ba.slope / bc.slope
    doc["slope_ratio"] = ratio
    doc["predicted_ratio"] = geometry.partial_slope_ratio(spec) if kind == "s12" else None
    bpath = cfg.boundaries or str(Path(cfg.out).with_suffix(".boundaries.json"))
    _write_text(bpath, dumps(doc))
    return EXIT_OK


def cmd_oracle(cfg: RunConfig) -> int:
    if cfg.direction not in ("causal", "anticausal"):
        raise UsageError("oracle needs --direction causal or anticausal")
    spec = _two_covariate_spec(cfg)
    if cfg.direction == "causal":
        report = oracle.causal_oracle_report(spec, cfg.grid)
    else:
        report = oracle.anticausal_oracle_report(spec, cfg.grid)
    res = np.abs(np.asarray(report["constraint_residuals"], dtype=float))
    max_res = float(np.nanmax(res)) if res.size else 0.0
    passed = report["sup_norm_gap"] <= cfg.threshold and max_res <= RESIDUAL_TOL
    report.update({"threshold": cfg.threshold, "max_residual": max_res, "passed": bool(passed)})
    _write_text(cfg.out, dumps(report))
    return EXIT_OK if passed else EXIT_THRESHOLD


def cmd_gen(cfg: RunConfig) -> int:
    if cfg.n is None:
        raise UsageError("gen needs --n")
    model = load_model(_read_json(cfg.inp))
    samples = datagen.sample(model, cfg.n, cfg.seed)
    if cfg.out is None or cfg.out == "-":
        write_csv(samples, sys.stdout)
    else:
        try:
            write_csv(samples, cfg.out)
        except OSError as exc:
            raise DataError(f"cannot write {cfg.out}: {exc}") from exc
    return EXIT_OK


COMMANDS = {
    "moments": cmd_moments,
    "fit": cmd_fit,
    "compare": cmd_compare,
    "plot-data": cmd_plot_data,
    "oracle": cmd_oracle,
    "gen": cmd_gen,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cmaxent", description="Merge predictors of a binary target by maximum entropy.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--in", dest="inp", required=True, help="input path ('-' for stdin)")
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        return sp

    add("moments", "estimate a moment spec from a labelled CSV")

    sp = add("fit", "fit a causal, anticausal or combined model")
    sp.add_argument("--direction", choices=["causal", "anticausal", "combined"], required=True)
    sp.add_argument("--missing", choices=["none", "phi2", "s12"])
    sp.add_argument("--strategy", choices=["paper", "entropy"])

    sp = add("compare", "compare causal and anticausal decision boundaries")
    sp.add_argument("--missing", choices=["none", "phi2", "s12"])
    sp.add_argument("--strategy", choices=["paper", "entropy"])

    sp = add("plot-data", "posterior grid and boundary segments for plotting")
    sp.add_argument("--missing", choices=["none", "phi2", "s12"])
    sp.add_argument("--strategy", choices=["paper", "entropy"])
    sp.add_argument("--grid", type=int, default=41)
    sp.add_argument("--boundaries", default=None, help="boundary JSON path (default <out>.boundaries.json)")

    sp = add("oracle", "check a closed-form fit against the grid oracle")
    sp.add_argument("--direction", choices=["causal", "anticausal", "combined"], required=True)
    sp.add_argument("--missing", choices=["none", "phi2", "s12"])
    sp.add_argument("--grid", type=int, default=41)
    sp.add_argument("--threshold", type=float, default=oracle.GAP_THRESHOLD)

    sp = add("gen", "draw a reproducible sample from a model")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    return p


def _config(ns: argparse.Namespace) -> RunConfig:
    fields = RunConfig.__dataclass_fields__
    return RunConfig(**{k: v for k, v in vars(ns).items() if k in fields})


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = _config(ns)
        cfg.check()
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"cmaxent {ns.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"cmaxent {ns.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InfeasibleError, SolverError) as exc:
        code = EXIT_DATA if ns.command == "moments" else EXIT_INFEASIBLE
        print(f"cmaxent {ns.command}: {exc}", file=sys.stderr)
        return code
    except (CmaxentError, ValueError) as exc:
        print(f"cmaxent {ns.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
