"""Command-line interface.

Exit codes: 0 success, 2 non-convergence (diagnostics are still written),
3 input error (bad file, bad flag, bad value).
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from . import io
from .analysis import (DirectionSet, TRFrame, isoquantile_contour, measures, outliers_extreme,
                       outliers_fence, select_tr_frame, tr_contour)
from .datagen import FAMILIES, GenSpec, generate
from .experiments import MonteCarloConfig, montecarlo, parse_generator
from .geometry import BoundaryDir
from .io import InputError
from .solver import (ConvergenceError, Dataset, QuantileSpec, SolverConfig, empirical_loss,
                     frechet_median, multistart_quantile)
from .svg import contour_figure

EXIT_OK, EXIT_NOCONV, EXIT_INPUT = 0, 2, 3

log = logging.getLogger("hyperquantile")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    solver: SolverConfig
    input: str | None = None
    output: str | None = None
    model: str | None = None
    seed: int = 0
    options: dict = field(default_factory=dict)

    @classmethod
    def from_args(cls, ns):
        opts = {k: v for k, v in vars(ns).items()
                if k not in ("command", "input", "output", "model", "seed", "tol", "max_iter", "func")}
        solver = SolverConfig(grad_tol=getattr(ns, "tol", 1e-8), max_iter=getattr(ns, "max_iter", 10_000))
        return cls(ns.command, solver, getattr(ns, "input", None), getattr(ns, "output", None),
                   getattr(ns, "model", None), getattr(ns, "seed", 0), opts)


def _betas(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    for b in vals:
        if not 0.0 <= b < 1.0:
            raise argparse.ArgumentTypeError(f"beta must lie in [0, 1), got {b}")
    if not vals:
        raise argparse.ArgumentTypeError("empty beta list")
    return vals


def _sizes(text):
    try:
        vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}") from None
    if any(v < 2 for v in vals):
        raise argparse.ArgumentTypeError("sizes must be at least 2")
    return vals


def _beta(text):
    b = float(text)
    if not 0.0 <= b < 1.0:
        raise argparse.ArgumentTypeError(f"beta must lie in [0, 1), got {b}")
    return b


def _kappa(text):
    k = float(text)
    if not k < 0:
        raise argparse.ArgumentTypeError(f"curvature must be negative, got {k}")
    return k


def _directions(text):
    k = int(text)
    if k < 2 or k % 2:
        raise argparse.ArgumentTypeError("the number of directions must be even and at least 2")
    return k


def _emit(rc: RunConfig, obj, path=None):
    path = path or rc.output
    text = io.dump_json(obj)
    if path:
        io.write_json(path, obj)
    else:
        sys.stdout.write(text)


def _load(rc: RunConfig):
    data, _ = io.read_csv(rc.input, rc.model)
    return data


def _contour_json(beta, points, results=None):
    c = {"beta": beta, "vertices": [io.point_json(p) for p in np.atleast_2d(points)]}
    if results is not None:
        c["converged"] = all(r.converged for r in results)
        c["failed"] = [k for k, r in enumerate(results) if not r.converged]
        c["max_grad_norm"] = max(float(r.grad_norm) for r in results)
    return c


# --- commands ----------------------------------------------------------------

def cmd_quantile(rc: RunConfig):
    data = _load(rc)
    o = rc.options
    med = frechet_median(data, rc.solver)
    xi = BoundaryDir.from_angle(o["xi_angle"], med.point)
    spec = QuantileSpec(o["beta"], xi, o["kappa"])
    res = multistart_quantile(data, spec, rc.solver, o["restarts"], rc.seed)
    out = {
        "beta": spec.beta, "xi_angle": o["xi_angle"], "kappa": spec.kappa,
        "point": io.point_json(res.point),
        "grad_norm": res.grad_norm, "iterations": res.iterations,
        "loss": empirical_loss(data, res.point, spec), "converged": res.converged,
    }
    _emit(rc, out)
    if not res.converged:
        print(f"quantile did not converge: residual {res.grad_norm:.3g} after {res.iterations} iterations",
              file=sys.stderr)
        return EXIT_NOCONV
    return EXIT_OK


def _frame(rc, X):
    if rc.options.get("tr_identity"):
        return TRFrame.identity(frechet_median(X, rc.solver).point)
    return select_tr_frame(X, rc.solver, seed=rc.seed)


def cmd_contour(rc: RunConfig):
    data = _load(rc)
    X = data.points
    o = rc.options
    K = o["directions"]
    failed = False
    contours = []
    out = {"betas": o["beta"], "directions": K, "tr": bool(o["tr"])}
    if o["tr"]:
        frame = _frame(rc, X)
        center = frechet_median(frame.transform(X), rc.solver).point
        median = frame.retransform(center)
        tdirs = DirectionSet.default(center, K)
        for b in o["beta"]:
            if b == 0:
                contours.append((0.0, median[None], None))
                continue
            trc = tr_contour(X, b, frame, tdirs, rc.solver, center=center)
            contours.append((b, trc.contour.points, trc.contour.results))
        out["frame"] = {"A": frame.A.tolist(), "indices": list(frame.indices),
                        "base": io.point_json(frame.base), "criterion": frame.criterion}
    else:
        median = frechet_median(X, rc.solver).point
        dirs = DirectionSet.default(median, K)
        for b in o["beta"]:
            if b == 0:
                contours.append((0.0, median[None], None))
                continue
            c = isoquantile_contour(X, b, dirs, rc.solver, start=median)
            contours.append((b, c.points, c.results))
    out["median"] = io.point_json(median)
    out["contours"] = [_contour_json(b, pts, res) for b, pts, res in contours]
    failed = any(c.get("converged") is False for c in out["contours"])
    out["converged"] = not failed
    if o["svg"]:
        io.atomic_write(o["svg"], contour_figure(X, [(b, p) for b, p, _ in contours], median, data.labels))
    _emit(rc, out, o["json"])
    if failed:
        print("some contour directions did not converge; see 'failed' in the JSON", file=sys.stderr)
        return EXIT_NOCONV
    return EXIT_OK


def cmd_measures(rc: RunConfig):
    data = _load(rc)
    o = rc.options
    med = frechet_median(data, rc.solver, o["kappa"])
    if not med.converged:
        raise ConvergenceError("median did not converge")
    dirs = DirectionSet.default(med.point, o["directions"])
    rep = measures(data, o["beta"], o["beta_hi"], dirs, rc.solver, o["beta_lo"], o["kappa"], med.point)
    _emit(rc, rep.to_dict())
    return EXIT_OK


def cmd_outliers(rc: RunConfig):
    data = _load(rc)
    X = data.points
    o = rc.options
    frame = _frame(rc, X)
    center = frechet_median(frame.transform(X), rc.solver).point
    dirs = DirectionSet.default(center, o["directions"])
    if o["method"] == "extreme":
        res = outliers_extreme(X, frame, dirs, o["beta0"], rc.solver)
    else:
        res = outliers_fence(X, frame, dirs, rc.solver)
    out = {
        "method": o["method"],
        "beta0": o["beta0"] if o["method"] == "extreme" else 0.5,
        "labels": [bool(v) for v in res.labels],
        "outliers": res.outliers,
        "fence": [io.point_json(p) for p in res.boundary],
        "median": io.point_json(frame.retransform(res.center)),
    }
    if o["svg"]:
        extra = [("fence", res.boundary, "#d7191c")]
        contours = [(res.contour.contour.beta, res.contour.contour.points)]
        io.atomic_write(o["svg"], contour_figure(X, contours if o["method"] == "fence" else [], None,
                                                 data.labels, extra))
    _emit(rc, out, o["json"])
    return EXIT_OK


def cmd_gendata(rc: RunConfig):
    o = rc.options
    data = generate(GenSpec(o["family"], o["nu"], o["n"], rc.seed))
    text = io.format_csv(data, rc.model or "hyperboloid")
    if rc.output:
        io.atomic_write(rc.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_convert(rc: RunConfig):
    data = _load(rc)
    text = io.format_csv(data, rc.options["to"])
    if rc.output:
        io.atomic_write(rc.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_montecarlo(rc: RunConfig):
    o = rc.options
    try:
        parse_generator(o["generator"])
    except ValueError as e:
        raise InputError(str(e)) from None
    mc = MonteCarloConfig(o["generator"], tuple(o["sizes"]), o["reps"], o["beta"], o["xi_angle"],
                          rc.seed, o["reference_factor"])
    rep = montecarlo(mc, rc.solver)
    _emit(rc, rep.to_dict())
    if rep.failures:
        print(f"{rep.failures} Monte Carlo solves did not converge", file=sys.stderr)
        return EXIT_NOCONV
    return EXIT_OK


# --- parser ------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="hyperquantile", description="Geometric quantiles on hyperbolic space.")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver warnings")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    solver = _Parser(add_help=False)
    solver.add_argument("--tol", type=float, default=1e-8, help="gradient-norm tolerance")
    solver.add_argument("--max-iter", type=int, default=10_000)
    inp = _Parser(add_help=False)
    inp.add_argument("input", help="CSV file (x,y[,label] or x0,x1,x2[,label])")
    inp.add_argument("--model", choices=("poincare", "hyperboloid"),
                     help="override the model detected from the header")

    q = sub.add_parser("quantile", parents=[inp, solver], help="one (beta, xi)-quantile")
    q.add_argument("--beta", type=_beta, required=True)
    q.add_argument("--xi-angle", type=float, default=0.0,
                   help="direction angle at the median, radians")
    q.add_argument("--kappa", type=_kappa, default=-1.0)
    q.add_argument("--restarts", type=int, default=1)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("-o", "--output", help="JSON path (default stdout)")
    q.set_defaults(func=cmd_quantile)

    c = sub.add_parser("contour", parents=[inp, solver], help="isoquantile contours")
    c.add_argument("--beta", type=_betas, default=[0.2, 0.4, 0.6, 0.8], help="comma-separated list")
    c.add_argument("--directions", type=_directions, default=24)
    c.add_argument("--tr", action="store_true", help="transformation-retransformation")
    c.add_argument("--tr-identity", action="store_true",
                   help="force the identity TR matrix (diagnostic)")
    c.add_argument("--seed", type=int, default=0, help="seed for sampled TR subsets")
    c.add_argument("--svg")
    c.add_argument("--json")
    c.set_defaults(func=cmd_contour)

    m = sub.add_parser("measures", parents=[inp, solver], help="the seven quantile measures")
    m.add_argument("--beta", type=_beta, default=0.5)
    m.add_argument("--beta-hi", type=_beta, default=0.8)
    m.add_argument("--beta-lo", type=_beta, default=0.2)
    m.add_argument("--directions", type=_directions, default=24)
    m.add_argument("--kappa", type=_kappa, default=-1.0)
    m.add_argument("-o", "--output")
    m.set_defaults(func=cmd_measures)

    ol = sub.add_parser("outliers", parents=[inp, solver], help="TR outlier detection")
    ol.add_argument("--method", choices=("extreme", "fence"), default="extreme")
    ol.add_argument("--beta0", type=_beta, default=0.98)
    ol.add_argument("--directions", type=_directions, default=24)
    ol.add_argument("--tr-identity", action="store_true", help=argparse.SUPPRESS)
    ol.add_argument("--seed", type=int, default=0)
    ol.add_argument("--svg")
    ol.add_argument("--json")
    ol.set_defaults(func=cmd_outliers)

    g = sub.add_parser("gendata", help="synthetic data set")
    g.add_argument("--family", choices=FAMILIES, required=True)
    g.add_argument("--nu", type=int, choices=(0, 1, 2, 3), required=True)
    g.add_argument("--n", type=int, default=300)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--model", choices=("poincare", "hyperboloid"), default="hyperboloid")
    g.add_argument("output", nargs="?", help="CSV path (default stdout)")
    g.set_defaults(func=cmd_gendata)

    cv = sub.add_parser("convert", parents=[inp], help="change CSV model")
    cv.add_argument("--to", choices=("poincare", "hyperboloid"), required=True)
    cv.add_argument("-o", "--output")
    cv.set_defaults(func=cmd_convert)

    mc = sub.add_parser("montecarlo", parents=[solver], help="consistency and sqrt(N) checks")
    mc.add_argument("--generator", default="dispersion:2", help="FAMILY:NU")
    mc.add_argument("--sizes", type=_sizes, default=[50, 200, 800])
    mc.add_argument("--reps", type=int, default=50)
    mc.add_argument("--beta", type=_beta, default=0.5)
    mc.add_argument("--xi-angle", type=float, default=0.0)
    mc.add_argument("--reference-factor", type=int, default=16)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("-o", "--output")
    mc.set_defaults(func=cmd_montecarlo)
    return p


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        rc = RunConfig.from_args(ns)
        return ns.func(rc)
    except InputError as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ConvergenceError as e:
        sys.stdout.write(io.dump_json({"converged": False, "error": str(e), "failed": e.failed}))
        print(f"did not converge: {e}", file=sys.stderr)
        return EXIT_NOCONV
    except ValueError as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
