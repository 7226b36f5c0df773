"""True covariance matrices for simulations."""
from __future__ import annotations

import numpy as np

from ..chordal import SparsePrecision, clique_inverse_sum, complete, project
from ..graph import JunctionTree
from .sampling import make_rng


def template_sigma(r, seed=2002):
    """Seeded call-center-like covariance: smooth intraday variances, slowly
    decaying correlations, and a small random positive definite perturbation."""
    rng = make_rng(seed, r)
    i = np.arange(r)
    sd = 1.0 + 0.5 * np.sin(np.pi * (i + 0.5) / r)
    corr = 0.55 * 0.92 ** np.abs(i[:, None] - i[None, :]) + 0.25
    np.fill_diagonal(corr, 1.0)
    a = rng.standard_normal((r, 2 * r)) / np.sqrt(2 * r)
    pert = a @ a.T
    d = np.sqrt(np.diag(pert))
    m = 0.8 * corr + 0.2 * pert / np.outer(d, d)
    return m * np.outer(sd, sd)


def make_true_sigma(template, t: JunctionTree):
    """Project ``template`` onto the edges and complete it.

    Returns (Sigma in Q_G, dense completion, precision in P_G).
    """
    x = project(template, t).check_qg()
    return x, complete(x), SparsePrecision(t, clique_inverse_sum(x))

