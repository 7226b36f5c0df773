"""Command-line front end.

Exit status: 0 on success, 1 on usage errors, 2 on numerical or model errors.
Errors are also written to stderr as a JSON object.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources

import jsonschema
import numpy as np

from .errors import ModelError

EXIT_USAGE, EXIT_MODEL = 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _schema(name):
    text = resources.files("flexcov").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def dump_json(obj, schema):
    """Validate against a bundled schema and serialize deterministically."""
    jsonschema.validate(obj, _schema(schema))
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _load_data(args):
    from .predict import ingest
    if not os.path.isfile(args.data):
        raise UsageError(f"data file not found: {args.data}")
    return ingest(args.data, sqrt_transform=args.sqrt, header=args.header)


def _data_flags(p):
    p.add_argument("--data", required=True, help="CSV file, one observation per row")
    p.add_argument("--header", action="store_true", help="first CSV row holds labels")
    p.add_argument("--sqrt", action="store_true", help="apply x = (N + 1/4)^(1/2)")
    p.add_argument("--center", action="store_true", help="subtract column means")


# ---------------------------------------------------------------- verbs
def cmd_estimate(args):
    from .estimators import bayes_bundle, reference_bundle, sample_cov
    from .graph import parse_graph_spec
    from .modelselect import resolve_prior

    ds = _load_data(args)
    t = parse_graph_spec(args.graph)
    if t.r != ds.r:
        raise UsageError(f"graph has {t.r} vertices but data has {ds.r} columns")
    z = ds.values - ds.values.mean(axis=0) if args.center else ds.values
    S = sample_cov(z)
    if args.prior == "reference":
        b = reference_bundle(ds.n, S, t)
    else:
        b = bayes_bundle(resolve_prior(args.prior, t, z), ds.n, S)
    mats = b.matrices()
    gaps = b.duality_gaps()
    tol = 1e-10 * max(1.0, max(np.abs(m).max() for m in mats.values()))
    out = {
        "prior": args.prior, "n": ds.n, "graph": t.describe(),
        "estimates": [{"estimator": k, "prior": args.prior, "n": ds.n,
                       "matrix": mats[k].tolist(),
                       "eigenvalues": sorted(np.linalg.eigvalsh(mats[k]).tolist(), reverse=True)}
                      for k in ("sigma_l1", "sigma_l2", "omega_l1", "omega_l2")],
        "duality": {"sigma_l1_vs_omega_l2": gaps[0], "sigma_l2_vs_omega_l1": gaps[1],
                    "tolerance": tol, "ok": bool(max(gaps) <= tol)},
    }
    _write(args.out, dump_json(out, "estimate"))
    if args.eig_csv:
        rows = ["estimator,index,eigenvalue"]
        for e in out["estimates"]:
            rows += [f"{e['estimator']},{i + 1},{v:.10g}" for i, v in enumerate(e["eigenvalues"])]
        _write(args.eig_csv, "\n".join(rows) + "\n")


def cmd_select(args):
    from .modelselect import select_banded, select_diff_banded

    ds = _load_data(args)
    z = ds.values
    if args.family == "band":
        if args.kmax is None:
            raise UsageError("--kmax is required for --family band")
        res = select_banded(z, args.kmax, args.prior, args.criterion, args.folds,
                            center=args.center, split=args.split)
    else:
        if not args.grid:
            raise UsageError("--grid is required for --family diffband")
        grid = json.loads(open(args.grid).read() if os.path.exists(args.grid) else args.grid)
        res = select_diff_banded(z, grid, args.prior, args.criterion, args.folds,
                                 center=args.center, split=args.split)
    out = res.to_json()
    out.update(family=args.family, prior=args.prior)
    if args.criterion == "marginal" and all(r["score"] is not None for r in res.ranked):
        out["posterior"] = res.posterior().tolist()
    _write(args.out, dump_json(out, "select"))


def cmd_risk(args):
    from .simulate.risk import SimConfig, run_risk

    cfg = SimConfig.from_json(args.config)
    cfg = SimConfig(**{**cfg.__dict__, "seed": args.seed,
                       "scree": cfg.scree or bool(args.scree)})
    if args.replications:
        cfg = SimConfig(**{**cfg.__dict__, "replications": args.replications})
    table = run_risk(cfg, args.workers)
    out = table.to_json()
    out["seed"] = args.seed
    _write(args.out, dump_json(out, "risk"))
    if args.text:
        _write(args.text, table.to_text())
    if args.scree:
        _write(args.scree, table.scree_csv())


def cmd_predict(args):
    from .graph import parse_graph_spec
    from .predict import forecast_report

    ds = _load_data(args)
    t = parse_graph_spec(args.graph)
    ests = {e: e for e in args.estimators.split(",") if e}
    rep = forecast_report(ds, args.train_size, ests, t, split=args.split)
    _write(args.out, dump_json(rep.to_json(), "predict"))
    if args.csv:
        _write(args.csv, rep.to_csv())


def cmd_calibrate(args):
    from .graph import parse_graph_spec
    from .moments import iwpg_mean
    from .priors import WpgParams, calibrate_theta, parse_prior

    t = parse_graph_spec(args.graph)
    spec = parse_prior(args.prior)
    if spec.kind in ("reference", "eb1", "eb2"):
        raise UsageError("calibrate needs a fixed shape (hiw, iwpg-prop, iwpg-const, iwpg)")
    shape = spec.build(t).shape
    theta = calibrate_theta(shape, t)
    err = float(np.abs(iwpg_mean(WpgParams(shape, theta, t)).values - 2 * np.eye(t.r)).max())
    out = {"prior": args.prior, "graph": t.describe(), "alpha": list(shape.alpha),
           "beta": list(shape.beta), "theta_diag": theta.diag().tolist(),
           "closed_loop_error": err}
    _write(args.out, dump_json(out, "calibrate"))


def cmd_oracle(args):
    from .chordal import project
    from .errors import DimensionTooLarge
    from .graph import parse_graph_spec
    from .moments import iwpg_mean
    from .priors import WpgParams, hiw_shape
    from .simulate.quadrature import quadrature_mean
    from .simulate.sampling import draw_mean_se, hiw_sample

    t = parse_graph_spec(args.graph)
    theta = project(np.eye(t.r), t)
    p = WpgParams(hiw_shape(args.delta, t), theta, t)
    closed = iwpg_mean(p).values
    try:
        quad = quadrature_mean(p).values
        qerr = float(np.abs(quad - closed).max() / np.abs(closed).max())
    except DimensionTooLarge:
        quad, qerr = None, None
    draws = hiw_sample(args.delta, theta, t, args.draws, args.seed)
    mean, se = draw_mean_se(draws)
    m = t.mask
    z = np.abs(mean - closed)[m] / np.where(se[m] > 0, se[m], 1.0)
    out = {"graph": t.describe(), "delta": args.delta, "draws": args.draws, "seed": args.seed,
           "closed_form": closed.tolist(), "quadrature": None if quad is None else quad.tolist(),
           "quadrature_rel_error": qerr, "sampler_mean": mean.tolist(),
           "sampler_se": se.tolist(), "max_abs_z": float(z.max()),
           "sampler_ok": bool(z.max() <= 3.0),
           "quadrature_ok": None if qerr is None else bool(qerr <= 1e-3)}
    _write(args.out, dump_json(out, "oracle"))


# ---------------------------------------------------------------- parser
def build_parser():
    from .simulate.risk import _default_workers

    ap = _Parser(prog="flexcov", description="Graphical covariance estimation with W_PG priors")
    sub = ap.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="four Bayes estimators for one dataset")
    _data_flags(p)
    p.add_argument("--graph", required=True, help="graph spec: JSON string or file")
    p.add_argument("--prior", default="hiw:3")
    p.add_argument("--out", default="-")
    p.add_argument("--eig-csv", help="write eigenvalues of each estimate here")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("select", help="rank banded or differentially banded graphs")
    _data_flags(p)
    p.add_argument("--family", choices=("band", "diffband"), default="band")
    p.add_argument("--kmax", type=int)
    p.add_argument("--grid", help="JSON list of [k1, k2, changepoint] (string or file)")
    p.add_argument("--criterion", choices=("marginal", "cv"), default="marginal")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--split", type=int, help="first column of the predicted block (cv)")
    p.add_argument("--prior", default="hiw:3")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("risk", help="Monte Carlo risk table")
    p.add_argument("--config", required=True, help="SimConfig JSON (string or file)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--replications", type=int)
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--out", default="-")
    p.add_argument("--text", help="aligned text table")
    p.add_argument("--scree", help="mean-eigenvalue CSV")
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("predict", help="half-split forecast errors")
    _data_flags(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--train-size", type=int, required=True)
    p.add_argument("--split", type=int)
    p.add_argument("--estimators", default="mle,mle_g,reference,hiw:3")
    p.add_argument("--out", default="-")
    p.add_argument("--csv", help="per-time-point errors")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("calibrate", help="diagonal scale giving prior mean E(Sigma) = I")
    p.add_argument("--graph", required=True)
    p.add_argument("--prior", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("oracle-check", help="closed-form vs quadrature vs sampler means")
    p.add_argument("--graph", default='{"band": {"r": 3, "k": 1}}')
    p.add_argument("--delta", type=float, default=3.0)
    p.add_argument("--draws", type=int, default=200000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_oracle)
    return ap


def _fail(kind, exc, code):
    err = {"error": kind, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except UsageError as exc:
        return _fail("UsageError", exc, EXIT_USAGE)
    except ModelError as exc:
        return _fail(type(exc).__name__, exc, EXIT_MODEL)
    except (ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        return _fail(type(exc).__name__, exc, EXIT_USAGE)
    return 0


if __name__ == "__main__":
    sys.exit(main())
