"""Point estimators of Sigma and Omega and the graph-adapted losses."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chordal import (GMatrix, SparsePrecision, clique_inverse_sum, complete,
                      edge_inner_product, inv_pd, logdet_completed, logdet_pd, phi, project)
from .errors import DomainError, EmptyData, NotInQG, NotPositiveDefinite, SampleDeficient
from .graph import JunctionTree
from .moments import iwpg_mean, reference_mean_omega, wpg_mean
from .priors import WpgParams, posterior_update, reference_shape

ESTIMATORS = ("sigma_l1", "sigma_l2", "omega_l1", "omega_l2")


def sample_cov(data, center=False):
    """S = Z'Z / n. Models are zero-mean; ``center`` subtracts column means first."""
    z = np.asarray(data, dtype=float)
    if z.ndim != 2 or z.shape[0] == 0:
        raise EmptyData("need at least one observation row")
    if center:
        z = z - z.mean(axis=0)
    s = z.T @ z / z.shape[0]
    return 0.5 * (s + s.T)


def mle_g(S, t: JunctionTree, n: int | None = None):
    """Graphical MLE: (Omega_g in P_G, Sigma_g = kappa(S))."""
    if n is not None and n <= max(t.clique_sizes):
        raise SampleDeficient(f"mle_g needs n > {max(t.clique_sizes)}, got n = {n}")
    sig = project(S, t)
    omega = clique_inverse_sum(sig, SampleDeficient)
    return SparsePrecision(t, omega), sig


def mle_full(S, n: int | None = None):
    """Unrestricted MLE (S, S^-1); dense, no graph."""
    S = np.asarray(S, dtype=float)
    if n is not None and n <= S.shape[0]:
        raise SampleDeficient(f"the sample MLE needs n > r = {S.shape[0]}")
    return inv_pd(S, SampleDeficient, "sample covariance"), S


@dataclass(frozen=True)
class EstimateBundle:
    sigma_l1: GMatrix
    sigma_l2: GMatrix
    omega_l1: SparsePrecision
    omega_l2: SparsePrecision
    prior: str
    n: int

    def duality_gaps(self):
        """Max abs deviation in the two phi-dualities."""
        g1 = np.abs(phi(self.omega_l2).values - self.sigma_l1.values).max()
        g2 = np.abs(phi(self.omega_l1).values - self.sigma_l2.values).max()
        return float(g1), float(g2)

    def matrices(self):
        """Dense matrices: completed Sigma estimates, precision estimates as stored."""
        return {
            "sigma_l1": complete(self.sigma_l1),
            "sigma_l2": complete(self.sigma_l2),
            "omega_l1": np.array(self.omega_l1.values),
            "omega_l2": np.array(self.omega_l2.values),
        }


def _bundle(post: WpgParams, omega_l2: SparsePrecision, label, n):
    omega_l2.check()
    sigma_l2 = iwpg_mean(post) / 2
    sigma_l1 = phi(omega_l2)
    omega_l1 = SparsePrecision(post.tree, clique_inverse_sum(sigma_l2, NotPositiveDefinite))
    omega_l1.check()
    return EstimateBundle(sigma_l1, sigma_l2, omega_l1, omega_l2, label, n)


def bayes_bundle(p: WpgParams, n: int, S, t: JunctionTree | None = None) -> EstimateBundle:
    if t is not None and t != p.tree:
        raise ValueError("prior and tree disagree")
    post = posterior_update(p, n, S)
    return _bundle(post, wpg_mean(post), p.label, n)


def reference_bundle(n: int, S, t: JunctionTree) -> EstimateBundle:
    prior = WpgParams(reference_shape(t), None, t, label="reference")
    post = posterior_update(prior, n, S)
    return _bundle(post, reference_mean_omega(n, S, t), "reference", n)


# ---------------------------------------------------------------- losses
def _check_kind(kind):
    if kind not in ("L1", "L2"):
        raise ValueError(f"loss kind must be L1 or L2, got {kind!r}")


def loss_sigma(est, truth: GMatrix, kind="L1") -> float:
    """Graph-adapted Stein (L1) or squared-error (L2) loss for Sigma.

    ``est`` is a GMatrix; a dense ndarray (the unrestricted MLE) is scored
    with the classical full-matrix formulas against the completed truth.
    """
    _check_kind(kind)
    r = truth.tree.r
    if isinstance(est, GMatrix):
        if kind == "L2":
            d = est.values - truth.values
            return float(np.sum(d * d))
        tinv = SparsePrecision(truth.tree, clique_inverse_sum(truth))
        return float(edge_inner_product(est, tinv) - logdet_completed(est)
                     + logdet_completed(truth) - r)
    est = np.asarray(est, dtype=float)
    th = complete(truth)
    if kind == "L2":
        d = est - th
        return float(np.sum(d * d))
    m = est @ inv_pd(th)
    return float(np.trace(m) - logdet_pd(est, NotInQG, "estimate") + logdet_pd(th) - r)


def loss_omega(est, truth: SparsePrecision, kind="L1") -> float:
    """Stein (L1) or squared-error (L2) loss for a precision estimate."""
    _check_kind(kind)
    e = est.values if isinstance(est, SparsePrecision) else np.asarray(est, dtype=float)
    tv = truth.values
    if kind == "L2":
        d = e - tv
        return float(np.sum(d * d))
    m = e @ inv_pd(tv, NotPositiveDefinite, "true precision")
    return float(np.trace(m) - logdet_pd(e, NotPositiveDefinite, "estimate")
                 + logdet_pd(tv) - e.shape[0])


def all_losses(sigma_est, omega_est, truth_sigma: GMatrix, truth_omega: SparsePrecision):
    return {
        "L1_sigma": loss_sigma(sigma_est, truth_sigma, "L1"),
        "L2_sigma": loss_sigma(sigma_est, truth_sigma, "L2"),
        "L1_omega": loss_omega(omega_est, truth_omega, "L1"),
        "L2_omega": loss_omega(omega_est, truth_omega, "L2"),
    }


def saturated_posterior_mean(nu: float, D, n: int, S):
    """(nu D + n S) / (nu + n - r - 1), the complete-graph posterior mean."""
    D = np.asarray(D, dtype=float)
    S = np.asarray(S, dtype=float)
    den = nu + n - D.shape[0] - 1
    if not den > 0:
        raise DomainError(f"nu + n - r - 1 = {den:g} must be positive")
    return (nu * D + n * S) / den


def scaled_completion(S, n, t: JunctionTree, a: float) -> GMatrix:
    """a kappa(nS): the edge part of a times the completion of kappa(nS)."""
    u = project(n * np.asarray(S, dtype=float), t)
    return u * a

