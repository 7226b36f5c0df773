"""Marginal likelihoods, graph selection over banded families, empirical Bayes."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .chordal import GMatrix, project
from .errors import ModelError, NoAdmissiblePoint, SampleDeficient
from .estimators import sample_cov
from .graph import JunctionTree, banded_graph, diff_banded_graph
from .moments import mean_exists
from .priors import (PriorSpec, ShapeParams, WpgParams, calibrate_theta, eb_affine_shape,
                     eb_proportional_shape, in_bp, log_gamma_ii, log_h_g, parse_prior)


def _nS(data, center=False):
    z = np.asarray(data, dtype=float)
    if z.ndim != 2:
        raise ValueError("data must be an n x r matrix")
    if z.shape[0] == 0:
        return 0, None
    return z.shape[0], sample_cov(z, center) * z.shape[0]


def log_marginal(data, t: JunctionTree, p: WpgParams, center=False) -> float:
    """log p(Z | G) with the prior on 2 Sigma; exact, no sampling."""
    if p.theta is None:
        raise ModelError("the marginal likelihood needs a proper prior")
    n, U = _nS(data, center)
    if n == 0:
        return 0.0
    return log_marginal_suff(n, U, t, p)


def log_marginal_suff(n: int, U, t: JunctionTree, p: WpgParams) -> float:
    """Same as ``log_marginal`` from the sufficient statistic U = nS."""
    chk = in_bp(p.shape, t)
    if not chk:
        raise NoAdmissiblePoint(f"prior shape not in B_P: {chk.violation}")
    theta_post = p.theta + project(U, t)
    if not theta_post.in_qg():
        raise SampleDeficient("a clique block of the data is singular")
    post = p.shape.shifted(-n / 2)
    return float(-n * t.r / 2 * np.log(np.pi)
                 + log_gamma_ii(post, t) + log_h_g(post, theta_post)
                 - log_gamma_ii(p.shape, t) - log_h_g(p.shape, p.theta))


# ---------------------------------------------------------------- empirical Bayes
def _theta(shape, t, calibrated):
    if calibrated:
        return calibrate_theta(shape, t)
    return GMatrix(t, np.eye(t.r))


def _feasible(shape, t, calibrated):
    if not in_bp(shape, t):
        return False
    return not calibrated or mean_exists(shape, t).exists


def _objective(n, U, t, calibrated):
    def f(shape):
        if not _feasible(shape, t, calibrated):
            return -np.inf
        try:
            return log_marginal_suff(n, U, t, WpgParams(shape, _theta(shape, t, calibrated), t))
        except ModelError:
            return -np.inf
    return f


@dataclass(frozen=True)
class EBFit:
    shape: ShapeParams
    theta: GMatrix
    log_marginal: float
    params: tuple

    def prior(self, t, label=""):
        return WpgParams(self.shape, self.theta, t, label=label)


def empirical_bayes(data, t: JunctionTree, spec="proportional", calibrated=False,
                    center=False) -> EBFit:
    """Maximize the marginal likelihood over a one- or two-parameter shape family.

    ``proportional``: alpha_i = -(delta c_i + c_i - 1)/2 over delta in (0, 3 max c].
    ``affine``: alpha_i = a c_i + b over (a, b), started at the proportional optimum
    so the larger family never does worse.
    """
    n, U = _nS(data, center)
    if n == 0:
        raise NoAdmissiblePoint("no data: the marginal likelihood is flat")
    return _eb_suff(n, U, t, spec, calibrated)


def _eb_suff(n, U, t, spec, calibrated):
    f = _objective(n, U, t, calibrated)
    hi = 3.0 * max(t.clique_sizes)
    grid = np.geomspace(1e-3, hi, 40)
    vals = [f(eb_proportional_shape(d, t)) for d in grid]
    i = int(np.argmax(vals))
    if not np.isfinite(vals[i]):
        raise NoAdmissiblePoint("no admissible shape on the search grid")
    lo_d, hi_d = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(lambda d: -f(eb_proportional_shape(d, t)),
                                   bounds=(lo_d, hi_d), method="bounded",
                                   options={"xatol": 1e-6})
    delta, best = grid[i], vals[i]
    if np.isfinite(res.fun) and -res.fun > best:
        delta, best = float(res.x), -float(res.fun)
    shape = eb_proportional_shape(delta, t)
    params = (delta,)
    if spec == "affine":
        x0 = np.array([-(delta + 1) / 2, 0.5])
        g = lambda ab: -f(eb_affine_shape(ab[0], ab[1], t))  # noqa: E731
        res = optimize.minimize(g, x0, method="Nelder-Mead",
                                options={"xatol": 1e-7, "fatol": 1e-9, "maxiter": 2000})
        if np.isfinite(res.fun) and -res.fun > best:
            a, b = (float(v) for v in res.x)
            shape, best, params = eb_affine_shape(a, b, t), -float(res.fun), (a, b)
        else:
            params = tuple(float(v) for v in x0)
            shape = eb_affine_shape(*params, t)
    elif spec != "proportional":
        raise ValueError(f"unknown empirical-Bayes family {spec!r}")
    return EBFit(shape, _theta(shape, t, calibrated), float(best), params)


def resolve_prior(spec, t: JunctionTree, data=None, center=False) -> WpgParams:
    """WpgParams for a spec string; empirical-Bayes specs are fitted on ``data``."""
    ps = parse_prior(spec) if isinstance(spec, str) else spec
    if ps.kind in ("eb1", "eb2"):
        if data is None:
            raise ValueError("empirical-Bayes priors need data")
        fam = "proportional" if ps.kind == "eb1" else "affine"
        return empirical_bayes(data, t, fam, ps.calibrated, center).prior(t, ps.text)
    return ps.build(t)


# ---------------------------------------------------------------- selection
@dataclass(frozen=True)
class SelectionResult:
    ranked: list          # of dicts {id, score, edges}, best first
    criterion: str
    best: object = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "best", self.ranked[0]["id"] if self.ranked else None)

    def posterior(self):
        """Graph posterior under a uniform prior (marginal criterion only)."""
        if self.criterion != "marginal":
            raise ValueError("posterior probabilities need the marginal criterion")
        s = np.array([row["score"] for row in self.ranked])
        w = np.exp(s - s.max())
        return w / w.sum()

    def to_json(self):
        return {"criterion": self.criterion, "best": self.best,
                "ranked": [dict(row) for row in self.ranked]}


def _rank(rows, criterion):
    sign = -1 if criterion == "marginal" else 1
    # unscorable candidates sink to the bottom
    key = lambda r: (r["score"] is None, sign * (r["score"] or 0.0), r["edges"])  # noqa: E731
    return SelectionResult(sorted(rows, key=key), criterion)


def score_candidates(data, candidates, prior_spec, criterion="marginal", folds=10,
                     center=False, split=None):
    """Score (id, JunctionTree) pairs; returns a SelectionResult."""
    ps = parse_prior(prior_spec) if isinstance(prior_spec, str) else prior_spec
    rows = []
    if criterion == "marginal":
        n, U = _nS(data, center)
        for cid, t in candidates:
            try:
                if ps.kind in ("eb1", "eb2"):
                    fam = "proportional" if ps.kind == "eb1" else "affine"
                    score = _eb_suff(n, U, t, fam, ps.calibrated).log_marginal
                else:
                    score = log_marginal_suff(n, U, t, ps.build(t)) if n else 0.0
            except ModelError:
                score = None
            rows.append({"id": cid, "score": score, "edges": t.edge_count})
    elif criterion == "cv":
        from .predict import kfold_cv
        errs = kfold_cv(np.asarray(data, dtype=float), candidates, folds, ps, split=split)
        for (cid, t), e in zip(candidates, errs):
            rows.append({"id": cid, "score": e, "edges": t.edge_count})
    else:
        raise ValueError(f"unknown criterion {criterion!r}")
    return _rank(rows, criterion)


def select_banded(data, kmax, prior_spec="hiw:3", criterion="marginal", folds=10,
                  center=False, split=None) -> SelectionResult:
    r = np.asarray(data).shape[1]
    if not 0 <= kmax < r:
        raise ValueError(f"kmax must satisfy 0 <= kmax < r = {r}")
    cands = [(k, banded_graph(r, k)) for k in range(kmax + 1)]
    return score_candidates(data, cands, prior_spec, criterion, folds, center, split)


def select_diff_banded(data, grid, prior_spec="hiw:3", criterion="marginal", folds=10,
                       center=False, split=None) -> SelectionResult:
    r = np.asarray(data).shape[1]
    cands = [(list(map(int, g)), diff_banded_graph(r, *map(int, g))) for g in grid]
    return score_candidates(data, cands, prior_spec, criterion, folds, center, split)


__all__ = ["log_marginal", "log_marginal_suff", "empirical_bayes", "EBFit", "resolve_prior",
           "SelectionResult", "score_candidates", "select_banded", "select_diff_banded",
           "PriorSpec"]
