"""Direct numerical integration of the IW_PG density for r <= 3.

Only decomposable graphs whose cliques have at most two vertices qualify:
every connected component is a vertex, an edge, or a path through a hub.
For a component with hub h and leaves a, the free entries are v = x_hh and,
per leaf, w = x_aa - x_ah^2 / v (the Schur complement, > 0) and t = x_ah.
Positive variables are integrated in log coordinates with the trapezoid
rule, which converges geometrically for smooth integrands decaying at both
ends; t uses Gauss-Hermite nodes centred on its conditional Gaussian shape.
A moment whose integrand has not decayed at the edge of the grid is
reported as divergent.
"""
from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from ..chordal import GMatrix
from ..errors import DimensionTooLarge, MomentUndefined
from ..priors import WpgParams

_GH_Z, _GH_W = np.polynomial.hermite.hermgauss(16)
_U = np.arange(-50.0, 50.0 + 1e-9, 0.05)   # log-coordinate grid
_H = 0.05
_TAIL = 1e-8   # admissible relative mass beyond the grid


def _components(t):
    """List of (hub, [(leaf, clique_index)], separator count at hub, beta index, single clique)."""
    if t.r > 3 or max(t.clique_sizes) > 2:
        raise DimensionTooLarge("quadrature oracle needs r <= 3 and cliques of size <= 2")
    sep_count, sep_beta = {}, {}
    for j in range(1, t.k):
        s = t.separators[j]
        if len(s) == 1:
            sep_count[s[0]] = sep_count.get(s[0], 0) + 1
            sep_beta[s[0]] = j - 1
    comps = [(c[0], [], 0, None, j) for j, c in enumerate(t.cliques) if len(c) == 1]
    edge_cliques = [(j, c) for j, c in enumerate(t.cliques) if len(c) == 2]
    while edge_cliques:
        j0, c0 = edge_cliques.pop(0)
        hub = next((v for v in c0 if v in sep_count), c0[1])
        group = [(j0, c0)] + [(j, c) for j, c in edge_cliques if hub in c]
        edge_cliques = [(j, c) for j, c in edge_cliques if hub not in c]
        leaves = [(c[0] if c[1] == hub else c[1], j) for j, c in group]
        comps.append((hub, leaves, sep_count.get(hub, 0), sep_beta.get(hub), None))
    return comps


def _check_decay(logw, logm, what):
    """Raise if the moment integrand exp(logw) * |m| has non-negligible mass past the grid.

    Each axis is checked on its marginal: the log slope over the last few
    units must be clearly negative and the extrapolated exponential tail must
    be below ``_TAIL`` of the total.
    """
    full = np.asarray(logw + logm)
    tot = logsumexp(full)
    if not np.isfinite(tot):
        raise MomentUndefined(f"{what}: integrand vanishes on the grid")
    span = int(round(5.0 / _H))
    for ax in range(full.ndim):
        other = tuple(i for i in range(full.ndim) if i != ax)
        marg = logsumexp(full, axis=other) if other else full
        for end, prev in ((marg[-1], marg[-1 - span]), (marg[0], marg[span])):
            slope = (end - prev) / 5.0   # log decay rate away from the grid
            if slope >= -0.05 or end - np.log(-slope * _H) - tot > np.log(_TAIL):
                raise MomentUndefined(f"{what}: integrand does not decay, the integral diverges")


def _leaf_terms(alpha, th_aa, th_ah, th_hh, v):
    """For each v (1-D array): log-integrand over the w grid, with E(x_aa), E(t) per (v, w)."""
    vv = v[:, None, None]
    w = np.exp(_U)[None, :, None]
    mu = th_ah * vv / th_hh
    sd = np.sqrt(vv * vv * w / (2 * th_hh))
    tt = mu + np.sqrt(2) * sd * _GH_Z
    xaa = w + tt * tt / vv
    det = vv * w
    tr = (th_aa * vv - 2 * th_ah * tt + th_hh * xaa) / det
    lg = -tr + (alpha - 1.5) * np.log(det) + _GH_Z ** 2 + np.log(_GH_W)
    top = lg.max(axis=2, keepdims=True)
    wts = np.exp(lg - top)
    s = wts.sum(axis=2)
    ell = top[..., 0] + np.log(s * np.sqrt(2) * sd[..., 0]) + _U  # dw = w du
    m_aa = (wts * xaa).sum(axis=2) / s
    m_t = (wts * tt).sum(axis=2) / s
    return ell, m_aa, m_t


def _component(p: WpgParams, comp, want_moments=True):
    th = p.theta.values
    a, b = p.shape.alpha, p.shape.beta
    hub, leaves, m, jb, single = comp
    v = np.exp(_U)
    if single is not None:
        logw = -th[hub, hub] / v + (a[single] - 1.0) * _U + _U
        if want_moments:
            _check_decay(logw, _U, f"E(x_{hub + 1}{hub + 1})")
        lz = logsumexp(logw) + np.log(_H)
        return lz, {(hub, hub): float(np.exp(logsumexp(logw + _U) - logsumexp(logw)))}
    beta = b[jb] if jb is not None else 0.0
    th_hh = th[hub, hub]
    base = m * th_hh / v - m * (beta - 1.0) * _U + _U
    per_leaf = []
    for leaf, j in leaves:
        ell, m_aa, m_t = [], [], []
        for chunk in np.array_split(np.arange(len(v)), 40):
            e, ma, mt = _leaf_terms(a[j], th[leaf, leaf], th[leaf, hub], th_hh, v[chunk])
            ell.append(e)
            m_aa.append(ma)
            m_t.append(mt)
        per_leaf.append((leaf, np.vstack(ell), np.vstack(m_aa), np.vstack(m_t)))
    # log of each leaf's w-integral as a function of v
    leaf_logz = [logsumexp(ell, axis=1) + np.log(_H) for _, ell, _, _ in per_leaf]
    logF = base + sum(leaf_logz)
    out = {}
    lzF = logsumexp(logF)
    if want_moments:
        _check_decay(logF, _U, f"E(x_{hub + 1}{hub + 1})")
    out[(hub, hub)] = float(np.exp(logsumexp(logF + _U) - lzF))
    for i, (leaf, ell, m_aa, m_t) in enumerate(per_leaf):
        joint = (logF - leaf_logz[i])[:, None] + ell   # log integrand over (v, w)
        if want_moments:
            _check_decay(joint, np.log(np.abs(m_aa) + 1e-300), f"E(x_{leaf + 1}{leaf + 1})")
        lzj = logsumexp(joint)
        out[(leaf, leaf)] = float(np.sum(np.exp(joint - lzj) * m_aa))
        out[(leaf, hub)] = float(np.sum(np.exp(joint - lzj) * m_t))
    return lzF + np.log(_H), out


def quadrature_mean(p: WpgParams) -> GMatrix:
    """E(X) for X ~ IW_PG(alpha, beta, theta) by direct integration of the density."""
    if p.theta is None:
        raise MomentUndefined("the improper prior has no mean")
    t = p.tree
    ex = np.zeros((t.r, t.r))
    with np.errstate(over="ignore", under="ignore"):
        for comp in _components(t):
            _, mom = _component(p, comp)
            for (i, j), val in mom.items():
                ex[i, j] = ex[j, i] = val
    return GMatrix(t, ex)


def quadrature_log_normalizer(p: WpgParams) -> float:
    """log of the integral of exp(-<theta, x_hat^-1>) H_G(alpha, beta; x) mu_G(dx)."""
    if p.theta is None:
        raise MomentUndefined("the improper prior is not normalizable")
    with np.errstate(over="ignore", under="ignore"):
        return float(sum(_component(p, c, want_moments=False)[0] for c in _components(p.tree)))
