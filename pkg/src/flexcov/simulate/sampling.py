"""Random generation: Gaussian data and hyper inverse Wishart draws on Q_G."""
from __future__ import annotations

import numpy as np

from ..chordal import GMatrix, chol, inv_pd
from ..errors import DomainError, NotInQG, NotPositiveDefinite
from ..graph import JunctionTree


def make_rng(seed, *stream):
    """Counter-based generator for (seed, stream...); independent of call order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))


def sample_data(sigma_hat, n, seed, stream=()):
    """n rows i.i.d. N(0, sigma_hat)."""
    sigma_hat = np.asarray(sigma_hat, dtype=float)
    l = chol(sigma_hat, NotPositiveDefinite, "covariance")
    rng = make_rng(seed, *stream) if not isinstance(seed, np.random.Generator) else seed
    return rng.standard_normal((int(n), sigma_hat.shape[0])) @ l.T


def inv_wishart_batch(rng, p, theta, count):
    """``count`` draws with density proportional to |x|^{-p-(d+1)/2} exp(-tr(theta x^{-1})).

    x^{-1} is Wishart with 2p degrees of freedom and scale (2 theta)^{-1};
    drawn by the Bartlett decomposition.
    """
    theta = np.asarray(theta, dtype=float)
    d = theta.shape[0]
    if not p > (d - 1) / 2:
        raise DomainError(f"inverse Wishart needs p > {(d - 1) / 2}, got {p}")
    dof = 2.0 * p
    lv = chol(inv_pd(2.0 * theta), NotInQG, "scale")
    a = np.zeros((count, d, d))
    idx = np.arange(d)
    a[:, idx, idx] = np.sqrt(rng.chisquare(dof - idx, size=(count, d)))
    tri = np.tril_indices(d, -1)
    a[:, tri[0], tri[1]] = rng.standard_normal((count, len(tri[0])))
    la = lv @ a                       # wishart draw = la la^T
    inv_la = np.linalg.inv(la)
    x = np.swapaxes(inv_la, 1, 2) @ inv_la
    return 0.5 * (x + np.swapaxes(x, 1, 2))


def hiw_sample(delta, theta: GMatrix, t: JunctionTree, count, seed, chunk=20000):
    """Draws of X ~ IW_PG with the hyper inverse Wishart shape of index ``delta``.

    Returned as an array of shape (count, r, r) holding only the entries on
    the edge pattern (the rest are zero). The first clique block is an
    inverse Wishart; each later layer draws the Schur block x_[j]. from an
    inverse Wishart and the regression x_[j] x_<j>^{-1} from a matrix normal
    centred at theta_[j] theta_<j>^{-1} with row covariance x_[j]. and column
    covariance (2 theta_<j>)^{-1}. The stream is fixed by (seed, chunk).
    """
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    theta.check_qg()
    th = theta.values
    r = t.r
    out = np.zeros((count, r, r))
    rng = make_rng(seed, 0x5A17)
    for start in range(0, count, chunk):
        m = min(chunk, count - start)
        x = out[start:start + m]
        c1 = list(t.cliques[0])
        x[np.ix_(range(m), c1, c1)] = inv_wishart_batch(
            rng, (delta + len(c1) - 1) / 2, th[np.ix_(c1, c1)], m)
        for j in range(1, t.k):
            res, sep = list(t.residuals[j]), list(t.separators[j])
            c = len(t.cliques[j])
            th_r = th[np.ix_(res, res)]
            if not sep:
                x[np.ix_(range(m), res, res)] = inv_wishart_batch(rng, (delta + c - 1) / 2, th_r, m)
                continue
            th_s = th[np.ix_(sep, sep)]
            th_s_inv = inv_pd(th_s, NotInQG, "separator block")
            b0 = th[np.ix_(res, sep)] @ th_s_inv
            schur = inv_wishart_batch(rng, (delta + c - 1) / 2, th_r - b0 @ th_s @ b0.T, m)
            # B = b0 + L_row Z L_col^T with L_row L_row^T = schur, L_col L_col^T = (2 th_s)^-1
            l_row = np.linalg.cholesky(schur)
            l_col = chol(inv_pd(2.0 * th_s))
            z = rng.standard_normal((m, len(res), len(sep)))
            bmat = b0 + l_row @ z @ l_col.T
            xs = x[np.ix_(range(m), sep, sep)]
            cross = bmat @ xs
            x[np.ix_(range(m), res, sep)] = cross
            x[np.ix_(range(m), sep, res)] = np.swapaxes(cross, 1, 2)
            x[np.ix_(range(m), res, res)] = schur + cross @ np.swapaxes(bmat, 1, 2)
    return out


def draw_mean_se(draws):
    """Componentwise sample mean and Monte Carlo standard error."""
    mean = draws.mean(axis=0)
    se = draws.std(axis=0, ddof=1) / np.sqrt(draws.shape[0])
    return mean, se
