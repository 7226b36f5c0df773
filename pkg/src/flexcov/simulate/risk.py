"""Monte Carlo frequentist risk of the estimators on a fixed true covariance."""
from __future__ import annotations

import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..chordal import complete
from ..errors import ModelError
from ..estimators import (all_losses, bayes_bundle, loss_omega, loss_sigma, mle_full, mle_g,
                          reference_bundle, sample_cov)
from ..graph import JunctionTree, parse_graph_spec
from ..modelselect import resolve_prior
from ..priors import parse_prior
from .sampling import sample_data
from .truth import make_true_sigma, template_sigma

LOSSES = ("L1_sigma", "L2_sigma", "L1_omega", "L2_omega")


@dataclass(frozen=True)
class SimConfig:
    graph: dict
    estimators: tuple
    sample_sizes: tuple
    replications: int = 1000
    seed: int = 0
    truth: dict = field(default_factory=lambda: {"generated": {"seed": 2002}})
    losses: tuple = LOSSES
    scree: bool = False

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        for e in self.estimators:
            if e not in ("mle", "mle_g", "truth"):
                parse_prior(e)
        for l in self.losses:
            if l not in LOSSES:
                raise ValueError(f"unknown loss {l!r}")
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "losses", tuple(self.losses))

    @classmethod
    def from_json(cls, src):
        if isinstance(src, str) and os.path.exists(src):
            with open(src) as fh:
                d = json.load(fh)
        elif isinstance(src, str):
            d = json.loads(src)
        else:
            d = dict(src)
        return cls(**d)

    def tree(self) -> JunctionTree:
        return parse_graph_spec(self.graph)

    def true_sigma(self, t):
        if "template" in self.truth:
            tmpl = np.loadtxt(self.truth["template"], delimiter=",", ndmin=2)
        else:
            tmpl = template_sigma(t.r, int(self.truth.get("generated", {}).get("seed", 2002)))
        return make_true_sigma(tmpl, t)


def bundle_losses(bundle, sig_t, om_t):
    """Each loss evaluated at the Bayes estimator that is optimal for it."""
    return {
        "L1_sigma": loss_sigma(bundle.sigma_l1, sig_t, "L1"),
        "L2_sigma": loss_sigma(bundle.sigma_l2, sig_t, "L2"),
        "L1_omega": loss_omega(bundle.omega_l1, om_t, "L1"),
        "L2_omega": loss_omega(bundle.omega_l2, om_t, "L2"),
    }


def _estimate(name, n, S, t, data):
    """{loss: estimate} for one estimator; raises ModelError when infeasible."""
    if name == "mle":
        om, sig = mle_full(S, n)
        return {"sigma": sig, "omega": om}, None
    if name == "mle_g":
        om, sig = mle_g(S, t, n)
        return {"sigma": sig, "omega": om}, None
    if name == "reference":
        return None, reference_bundle(n, S, t)
    return None, bayes_bundle(resolve_prior(name, t, data), n, S)


def _one_rep(args):
    cfg, t, truth, ni, rep = args
    sig_t, sig_hat, om_t = truth
    n = cfg.sample_sizes[ni]
    z = sample_data(sig_hat, n, cfg.seed, stream=(ni, rep))
    S = sample_cov(z)
    row = {}
    eig = {}
    for name in cfg.estimators:
        try:
            if name == "truth":
                vals = all_losses(sig_t, om_t, sig_t, om_t)
                dense = sig_hat
            else:
                plain, bundle = _estimate(name, n, S, t, z)
                if bundle is None:
                    vals = all_losses(plain["sigma"], plain["omega"], sig_t, om_t)
                    dense = plain["sigma"] if isinstance(plain["sigma"], np.ndarray) \
                        else complete(plain["sigma"])
                else:
                    vals = bundle_losses(bundle, sig_t, om_t)
                    dense = complete(bundle.sigma_l2)
            row[name] = {k: vals[k] for k in cfg.losses}
            if cfg.scree:
                eig[name] = np.sort(np.linalg.eigvalsh(dense))[::-1]
        except (ModelError, np.linalg.LinAlgError):
            row[name] = None
    if cfg.scree:
        eig["sample"] = np.sort(np.linalg.eigvalsh(S))[::-1]
    return row, eig


@dataclass
class RiskTable:
    estimators: tuple
    sample_sizes: tuple
    losses: tuple
    cells: dict            # (estimator, n, loss) -> {"mean", "se", "count"} or None
    scree: dict = field(default_factory=dict)   # n -> {name: mean eigenvalues}

    def to_json(self):
        rows = []
        for e in self.estimators:
            for n in self.sample_sizes:
                for l in self.losses:
                    c = self.cells[(e, n, l)]
                    rows.append({"estimator": e, "n": n, "loss": l,
                                 "mean": None if c is None else c["mean"],
                                 "se": None if c is None else c["se"],
                                 "count": 0 if c is None else c["count"]})
        return {"estimators": list(self.estimators), "sample_sizes": list(self.sample_sizes),
                "losses": list(self.losses), "cells": rows}

    def to_text(self):
        """Rows = estimators, columns = n x loss; missing cells print as a dash."""
        cols = [(n, l) for n in self.sample_sizes for l in self.losses]
        head = ["estimator"] + [f"n={n} {l}" for n, l in cols]
        body = []
        for e in self.estimators:
            cells = []
            for n, l in cols:
                c = self.cells[(e, n, l)]
                cells.append("–" if c is None else f"{c['mean']:.4g} ({c['se']:.2g})")
            body.append([e] + cells)
        widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
        fmt = lambda r: "  ".join(s.ljust(w) for s, w in zip(r, widths)).rstrip()  # noqa: E731
        return "\n".join([fmt(head)] + [fmt(r) for r in body]) + "\n"

    def scree_csv(self):
        buf = io.StringIO()
        buf.write("n,estimator,index,eigenvalue\n")
        for n in sorted(self.scree):
            for name, ev in self.scree[n].items():
                for i, v in enumerate(ev):
                    buf.write(f"{n},{name},{i + 1},{v:.10g}\n")
        return buf.getvalue()


def _default_workers():
    try:
        return max(1, int(os.environ.get("FLEXCOV_THREADS", "1")))
    except ValueError:
        return 1


def run_risk(cfg: SimConfig, workers: int | None = None) -> RiskTable:
    """Replications are seeded by (seed, n index, replication), so results do not
    depend on ``workers``; aggregation runs in a fixed order."""
    t = cfg.tree()
    truth = cfg.true_sigma(t)
    workers = _default_workers() if workers is None else workers
    tasks = [(cfg, t, truth, ni, rep) for ni in range(len(cfg.sample_sizes))
             for rep in range(cfg.replications)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_one_rep, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        results = [_one_rep(a) for a in tasks]
    cells = {}
    scree = {}
    for ni, n in enumerate(cfg.sample_sizes):
        block = results[ni * cfg.replications:(ni + 1) * cfg.replications]
        for e in cfg.estimators:
            got = [row[e] for row, _ in block if row[e] is not None]
            for l in cfg.losses:
                if not got:
                    cells[(e, n, l)] = None
                    continue
                v = np.array([g[l] for g in got])
                se = float(v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0
                cells[(e, n, l)] = {"mean": float(v.mean()), "se": se, "count": len(v)}
        if cfg.scree:
            names = [k for k in block[0][1]]
            scree[n] = {k: np.mean([eig[k] for _, eig in block if k in eig], axis=0)
                        for k in names}
            scree[n]["truth"] = np.sort(np.linalg.eigvalsh(truth[1]))[::-1]
    return RiskTable(cfg.estimators, cfg.sample_sizes, cfg.losses, cells, scree)
