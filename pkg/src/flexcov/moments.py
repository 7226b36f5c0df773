"""First moments of the W_PG (precision side) and IW_PG (covariance side)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chordal import GMatrix, SparsePrecision, chol, embed, inv_pd
from .errors import MomentUndefined, NotInQG, SampleDeficient
from .graph import JunctionTree
from .priors import ShapeParams, WpgParams, posterior_update

# margins closer to zero than this are treated as non-existent
BOUNDARY = 1e-6


@dataclass(frozen=True)
class MomentReport:
    exists: bool
    margins: dict
    reason: str | None = None
    value: object = None


def mean_exists(s: ShapeParams, t: JunctionTree) -> MomentReport:
    c, sz = t.clique_sizes, t.separator_sizes
    a = s.alpha
    s2 = t.s2
    margins = {}
    if s2 > 0:
        margins["sep2"] = a[0] + (c[0] + 1) / 2 + s.gamma2(t)
    margins["clique1"] = a[0] + (c[0] - s2 + 1) / 2
    for j in range(1, t.k):
        margins[f"clique{j + 1}"] = a[j] + (c[j] - sz[j] + 1) / 2
    bad = [(k, m) for k, m in margins.items() if not m < -BOUNDARY]
    if bad:
        k, m = bad[0]
        return MomentReport(False, margins, f"margin {k} = {m:g} is not < 0")
    return MomentReport(True, margins)


def _require(s, t):
    rep = mean_exists(s, t)
    if not rep.exists:
        raise MomentUndefined(rep.reason)
    return rep


def wpg_mean(p: WpgParams, n: int = 0, S=None) -> SparsePrecision:
    """E(Omega) where Omega/2 ~ W_PG(alpha, beta, theta), optionally after an update with nS."""
    if n:
        p = posterior_update(p, n, S)
    if p.theta is None:
        raise NotInQG("the improper prior has no mean; supply data")
    t, th = p.tree, p.theta
    y = np.zeros((t.r, t.r))
    for j, c in enumerate(t.cliques):
        y[np.ix_(c, c)] += p.shape.alpha[j] * inv_pd(th.block(c), NotInQG, f"clique block {j + 1}")
    for j in range(1, t.k):
        sep = t.separators[j]
        if sep:
            y[np.ix_(sep, sep)] -= p.shape.beta[j - 1] * inv_pd(th.block(sep), NotInQG,
                                                               "separator block")
    return SparsePrecision(t, -2.0 * y)


def iwpg_mean(p: WpgParams) -> GMatrix:
    """E(X) for X ~ IW_PG(alpha, beta, theta), assembled layer by layer in perfect order."""
    if p.theta is None:
        raise MomentUndefined("the improper prior has no mean")
    t, th, a = p.tree, p.theta, p.shape.alpha
    _require(p.shape, t)
    th.check_qg()
    c, sz = t.clique_sizes, t.separator_sizes
    s2 = t.s2
    ex = np.zeros((t.r, t.r))

    def layer(res, sep, denom, m_s):
        """Fill E(x_R), E(x_RS) given E(x_S) = m_s; denom is the negated IW margin."""
        th_r = th.block(res)
        if sep:
            th_s_inv = inv_pd(th.block(sep), NotInQG, "separator block of theta")
            b = th.sub(res, sep) @ th_s_inv
            schur = th_r - b @ th.sub(sep, res)
            infl = 1 + 0.5 * np.trace(th_s_inv @ m_s)
            cross = b @ m_s
            ex[np.ix_(res, sep)] = cross
            ex[np.ix_(sep, res)] = cross.T
            ex[np.ix_(res, res)] = schur / -denom * infl + b @ m_s @ b.T
        else:
            ex[np.ix_(res, res)] = th_r / -denom

    sep2 = t.separators[1] if t.k > 1 else ()
    rest = tuple(v for v in t.cliques[0] if v not in set(sep2))
    if s2 > 0:
        d = a[0] + (c[0] + 1) / 2 + p.shape.gamma2(t)
        ex[np.ix_(sep2, sep2)] = th.block(sep2) / -d
    layer(rest, sep2, a[0] + (c[0] - s2 + 1) / 2, ex[np.ix_(sep2, sep2)])
    for j in range(1, t.k):
        sep, res = t.separators[j], t.residuals[j]
        m_s = ex[np.ix_(sep, sep)].copy()
        layer(res, sep, a[j] + (c[j] - sz[j] + 1) / 2, m_s)
        # the separator block must be unchanged by later layers
        assert np.array_equal(ex[np.ix_(sep, sep)], m_s)
    out = GMatrix(t, ex)
    for j, cl in enumerate(t.cliques):
        chol(out.block(cl), MomentUndefined, f"mean clique block {j + 1}")
    return out


def posterior_mean_sigma(p: WpgParams, n: int, S) -> GMatrix:
    return iwpg_mean(posterior_update(p, n, S)) / 2


def reference_mean_omega(n: int, S, t: JunctionTree) -> SparsePrecision:
    """Closed-form posterior mean of Omega under the reference prior."""
    S = np.asarray(S, dtype=float)
    c, sz = t.clique_sizes, t.separator_sizes
    out = np.zeros((t.r, t.r))
    for j, cl in enumerate(t.cliques):
        out += embed(inv_pd(S[np.ix_(cl, cl)], SampleDeficient, f"clique block {j + 1} of S"),
                     cl, t.r)
    for j in range(1, t.k):
        sep = t.separators[j]
        if not sep:
            continue
        w = 1 - ((c[0] + c[1] - 2 * sz[1]) if j == 1 else (c[j] - sz[j])) / n
        out -= w * embed(inv_pd(S[np.ix_(sep, sep)], SampleDeficient, "separator block of S"),
                         sep, t.r)
    return SparsePrecision(t, out)

