"""Shape and scale hyperparameters of the W_PG / IW_PG family.

Convention: the prior sits on X = 2 Sigma, i.e. 2 Sigma ~ IW_PG(alpha, beta,
theta), equivalently Omega / 2 ~ W_PG(alpha, beta, theta). Public estimators
convert back to Sigma and Omega.

``alpha`` has one entry per clique; ``beta`` has one entry per separator
occurrence S_2..S_k (``beta[0]`` belongs to S_2).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .chordal import GMatrix, logdet_pd, project
from .errors import DomainError, MomentUndefined, NotInQG, ParseError, SampleDeficient
from .graph import JunctionTree

BETA_TOL = 1e-12


@dataclass(frozen=True)
class ShapeParams:
    alpha: tuple
    beta: tuple

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if len(self.beta) != max(len(self.alpha) - 1, 0):
            raise ValueError("need exactly one beta per separator occurrence")

    def check_tree(self, tree: JunctionTree):
        if len(self.alpha) != tree.k:
            raise ValueError(f"shape has {len(self.alpha)} alphas, tree has {tree.k} cliques")
        # a repeated S_2 may carry a different beta per occurrence
        s2 = tree.separators[1] if tree.k > 1 else None
        for sep, _ in tree.distinct_separators:
            if not sep or sep == s2:
                continue
            bs = {self.beta[j - 1] for j in tree.occurrences(sep)}
            if max(bs) - min(bs) > BETA_TOL * max(1.0, max(abs(b) for b in bs)):
                raise ValueError(f"beta differs across occurrences of separator {sep}")
        return self

    def gamma2(self, tree: JunctionTree) -> float:
        """gamma_2 = sum over J(P, S_2) of (alpha_j - beta_2 + (c_j - s_2)/2)."""
        if tree.k == 1:
            return 0.0
        s2 = tree.s2
        b2 = self.beta[0]
        return sum(self.alpha[j] - b2 + (tree.clique_sizes[j] - s2) / 2
                   for j in tree.occurrences(tree.separators[1]))

    def shifted(self, d: float) -> "ShapeParams":
        return ShapeParams(tuple(a + d for a in self.alpha), tuple(b + d for b in self.beta))


@dataclass(frozen=True)
class WpgParams:
    """(alpha, beta, theta). ``theta=None`` encodes the improper zero scale."""

    shape: ShapeParams
    theta: GMatrix | None
    tree: JunctionTree
    label: str = field(default="", compare=False)
    on_twice_sigma: bool = True  # the factor-2 convention; always True here

    def __post_init__(self):
        self.shape.check_tree(self.tree)
        if self.theta is not None:
            if self.theta.tree != self.tree:
                raise ValueError("theta lives on a different tree")

    @property
    def proper(self):
        return self.theta is not None


# ---------------------------------------------------------------- shapes
def hiw_shape(delta: float, tree: JunctionTree) -> ShapeParams:
    c, s = tree.clique_sizes, tree.separator_sizes
    return ShapeParams(tuple(-(delta + ci - 1) / 2 for ci in c),
                       tuple(-(delta + si - 1) / 2 for si in s[1:]))


def reference_shape(tree: JunctionTree) -> ShapeParams:
    c, s = tree.clique_sizes, tree.separator_sizes
    beta = []
    for j in range(1, tree.k):
        if j == 1:
            beta.append((c[0] + c[1]) / 2 - s[1])
        else:
            beta.append((c[j] - s[j]) / 2)
    return ShapeParams((0.0,) * tree.k, tuple(beta))


def _balance_betas(alpha, beta2, tree):
    """Betas for S != S_2 from the linear equalities defining B_P."""
    c, s = tree.clique_sizes, tree.separator_sizes
    beta = [0.0] * (tree.k - 1)
    for sep, nu in tree.distinct_separators:
        occ = tree.occurrences(sep)
        if sep == tree.separators[1]:
            val = beta2
        else:
            val = sum(alpha[j] + (c[j] - s[j]) / 2 for j in occ) / nu
        for j in occ:
            beta[j - 1] = val
    return tuple(beta)


def proportional_shape(factor: float, tree: JunctionTree) -> ShapeParams:
    """Clique-wise HIW-type shape with delta_j = factor * c_j.

    alpha_j = -(delta_j + c_j - 1)/2; every beta is set so that gamma_2 = 0 and
    the B_P equalities hold (beta(S) averages delta_j over J(P, S)).
    """
    c, s = tree.clique_sizes, tree.separator_sizes
    deltas = [factor * ci for ci in c]
    alpha = tuple(-(d + ci - 1) / 2 for d, ci in zip(deltas, c))
    beta = [0.0] * (tree.k - 1)
    for sep, nu in tree.distinct_separators:
        occ = tree.occurrences(sep)
        dbar = sum(deltas[j] for j in occ) / nu
        for j in occ:
            beta[j - 1] = -(dbar + s[j] - 1) / 2
    return ShapeParams(alpha, tuple(beta))


def constant_shape(a: float, tree: JunctionTree) -> ShapeParams:
    """alpha_j = a for every clique, beta_2 = a + 1 + s_2/2, other betas balanced.

    With a = -5 on a k-banded graph this is alpha = -5, beta_2 = -4 + k/2.
    """
    alpha = (float(a),) * tree.k
    if tree.k == 1:
        return ShapeParams(alpha, ())
    return ShapeParams(alpha, _balance_betas(alpha, a + 1 + tree.s2 / 2, tree))


def eb_proportional_shape(delta: float, tree: JunctionTree) -> ShapeParams:
    """Empirical-Bayes family (i): alpha_j = -(delta c_j + c_j - 1)/2,
    beta_2 = -(delta s_2 + s_2 - 1)/2, remaining betas balanced."""
    c = tree.clique_sizes
    alpha = tuple(-(delta * ci + ci - 1) / 2 for ci in c)
    if tree.k == 1:
        return ShapeParams(alpha, ())
    s2 = tree.s2
    return ShapeParams(alpha, _balance_betas(alpha, -(delta * s2 + s2 - 1) / 2, tree))


def eb_affine_shape(a: float, b: float, tree: JunctionTree) -> ShapeParams:
    """Empirical-Bayes family (ii): alpha_j = a c_j + b, beta_2 = a s_2 + b."""
    alpha = tuple(a * ci + b for ci in tree.clique_sizes)
    if tree.k == 1:
        return ShapeParams(alpha, ())
    return ShapeParams(alpha, _balance_betas(alpha, a * tree.s2 + b, tree))


# ---------------------------------------------------------------- B_P
@dataclass(frozen=True)
class BPCheck:
    ok: bool
    violation: str | None
    margins: dict

    def __bool__(self):
        return self.ok


def in_bp(shape: ShapeParams, tree: JunctionTree) -> BPCheck:
    """Membership in B_P; the first violated condition is named."""
    shape.check_tree(tree)
    c, s = tree.clique_sizes, tree.separator_sizes
    a, b = shape.alpha, shape.beta
    margins = {}
    violation = None
    # (1) equalities for separators other than S_2; empty separators carry no density
    s2set = tree.separators[1] if tree.k > 1 else None
    for sep, nu in tree.distinct_separators:
        if sep == s2set or not sep:
            continue
        occ = tree.occurrences(sep)
        val = sum(a[j] + (c[j] - s[j]) / 2 for j in occ) - nu * b[occ[0] - 1]
        margins[f"eq{[v + 1 for v in sep]}"] = val
        if abs(val) > BETA_TOL * max(1.0, *(abs(a[j]) for j in occ)) and violation is None:
            violation = f"condition 1 fails for separator {[v + 1 for v in sep]}: {val:g} != 0"
    # (2)
    s2 = tree.s2
    m = -a[0] - (c[0] - s2 - 1) / 2
    margins["c2_1"] = m
    if not m > 0 and violation is None:
        violation = f"condition 2 fails for clique 1: {m:g} <= 0"
    for q in range(1, tree.k):
        m = -a[q] - (c[q] - s[q] - 1) / 2
        margins[f"c2_{q + 1}"] = m
        if not m > 0 and violation is None:
            violation = f"condition 2 fails for clique {q + 1}: {m:g} <= 0"
    # (3)
    if s2 > 0:
        g2 = shape.gamma2(tree)
        lhs = -a[0] - (c[0] - s2 + 1) / 2 - g2
        margins["c3"] = lhs - (s2 - 1) / 2
        if not lhs > (s2 - 1) / 2 and violation is None:
            violation = f"condition 3 fails: {lhs:g} <= {(s2 - 1) / 2:g}"
    return BPCheck(violation is None, violation, margins)


# ---------------------------------------------------------------- constants
def log_multigamma(d: int, p: float) -> float:
    """log Gamma_d(p); Gamma_0 = 1."""
    if d == 0:
        return 0.0
    if not p > (d - 1) / 2:
        raise DomainError(f"multivariate gamma needs p > {(d - 1) / 2}, got {p}")
    i = np.arange(d)
    return float(d * (d - 1) / 4 * np.log(np.pi) + gammaln(p - i / 2).sum())


def log_gamma_ii(shape: ShapeParams, tree: JunctionTree) -> float:
    c, s = tree.clique_sizes, tree.separator_sizes
    a = shape.alpha
    s2 = tree.s2
    g2 = shape.gamma2(tree) if s2 > 0 else 0.0
    pi_pow = ((c[0] - s2) * s2 + sum((c[j] - s[j]) * s[j] for j in range(1, tree.k))) / 2
    out = pi_pow * np.log(np.pi)
    out += log_multigamma(s2, -a[0] - (c[0] - s2) / 2 - g2)
    out += log_multigamma(c[0] - s2, -a[0])
    for j in range(1, tree.k):
        out += log_multigamma(c[j] - s[j], -a[j])
    return float(out)


def log_h_g(shape: ShapeParams, x: GMatrix) -> float:
    """log H_G(alpha, beta; x) = sum alpha_j log|x_Cj| - sum beta_j log|x_Sj|."""
    t = x.tree
    out = 0.0
    for j, c in enumerate(t.cliques):
        out += shape.alpha[j] * logdet_pd(x.block(c), NotInQG, f"clique block {j + 1}")
    for j in range(1, t.k):
        sep = t.separators[j]
        if sep:
            out -= shape.beta[j - 1] * logdet_pd(x.block(sep), NotInQG, "separator block")
    return float(out)


# ---------------------------------------------------------------- updates
def posterior_update(p: WpgParams, n: int, S) -> WpgParams:
    """(alpha - n/2, beta - n/2, theta + kappa(nS)); works for theta = 0 too."""
    if n < 1:
        raise ValueError("posterior update needs n >= 1")
    t = p.tree
    u = project(n * np.asarray(S, dtype=float), t)
    theta = u if p.theta is None else p.theta + u
    try:
        theta.check_qg()
    except NotInQG as exc:
        raise SampleDeficient(f"posterior scale is not in Q_G ({exc})") from None
    post = WpgParams(p.shape.shifted(-n / 2), theta, t, label=p.label)
    return post


def _layer_denoms(shape, tree):
    c, s = tree.clique_sizes, tree.separator_sizes
    a = shape.alpha
    s2 = tree.s2
    g2 = shape.gamma2(tree) if s2 > 0 else 0.0
    d_sep = a[0] + (c[0] + 1) / 2 + g2           # x_<2> denominator (negated)
    d_first = a[0] + (c[0] - s2 + 1) / 2          # x_[1]. denominator (negated)
    d_layers = [a[j] + (c[j] - s[j] + 1) / 2 for j in range(1, tree.k)]
    return d_sep, d_first, d_layers


def calibrate_theta(shape: ShapeParams, tree: JunctionTree) -> GMatrix:
    """Diagonal theta making E(Sigma) = I under 2 Sigma ~ IW_PG(alpha, beta, theta)."""
    from .moments import mean_exists

    rep = mean_exists(shape, tree)
    if not rep.exists:
        raise MomentUndefined(f"prior mean does not exist: {rep.reason}")
    d_sep, d_first, d_layers = _layer_denoms(shape, tree)
    s2 = tree.s2
    theta = np.zeros(tree.r)
    mean = np.zeros(tree.r)  # diagonal of E(X), built layer by layer
    rest = [v for v in tree.cliques[0] if v not in set(tree.separators[1] if tree.k > 1 else ())]
    if s2 > 0:
        sep2 = list(tree.separators[1])
        theta[sep2] = -2 * d_sep
        mean[sep2] = theta[sep2] / -d_sep
        corr = 1 - s2 / (2 * d_sep)
    else:
        corr = 1.0
    theta[rest] = -2 * d_first / corr
    mean[rest] = theta[rest] / -d_first * corr
    for j in range(1, tree.k):
        sep, res = list(tree.separators[j]), list(tree.residuals[j])
        tr = float(np.sum(mean[sep] / theta[sep])) if sep else 0.0
        theta[res] = -2 * d_layers[j - 1] / (1 + tr / 2)
        mean[res] = theta[res] / -d_layers[j - 1] * (1 + tr / 2)
    return GMatrix(tree, np.diag(theta))


# ---------------------------------------------------------------- spec strings
@dataclass(frozen=True)
class PriorSpec:
    kind: str            # hiw | reference | iwpg | iwpg-prop | iwpg-const | eb1 | eb2
    value: float | None = None
    calibrated: bool = False
    path: str | None = None
    text: str = ""

    def build(self, tree: JunctionTree) -> WpgParams:
        """Concrete prior on ``tree`` (empirical-Bayes kinds need data: see modelselect)."""
        if self.kind == "reference":
            return WpgParams(reference_shape(tree), None, tree, label=self.text)
        if self.kind in ("eb1", "eb2"):
            raise ValueError("empirical-Bayes priors are fitted from data")
        if self.kind == "iwpg":
            return _load_iwpg(self.path, tree, self.text)
        shape = {"hiw": hiw_shape, "iwpg-prop": proportional_shape,
                 "iwpg-const": constant_shape}[self.kind](self.value, tree)
        return with_scale(shape, tree, self.calibrated, self.text)


def with_scale(shape, tree, calibrated, label=""):
    theta = calibrate_theta(shape, tree) if calibrated else GMatrix(tree, np.eye(tree.r))
    return WpgParams(shape, theta, tree, label=label)


def parse_prior(text: str) -> PriorSpec:
    """Parse 'hiw:3', 'reference', 'iwpg:file.json', 'iwpg-prop:0.25[:D]', ...

    A trailing ':D' selects the scale that makes the prior mean of Sigma the
    identity; otherwise theta = I.
    """
    parts = text.strip().split(":")
    cal = len(parts) > 1 and parts[-1] == "D"
    if cal:
        parts = parts[:-1]
    kind = parts[0]
    try:
        if kind == "reference" and len(parts) == 1 and not cal:
            return PriorSpec("reference", text=text)
        if kind in ("eb1", "eb2") and len(parts) == 1:
            return PriorSpec(kind, calibrated=cal, text=text)
        if kind == "iwpg" and len(parts) == 2 and not cal:
            return PriorSpec("iwpg", path=parts[1], text=text)
        if kind in ("hiw", "iwpg-prop", "iwpg-const") and len(parts) == 2:
            return PriorSpec(kind, float(parts[1]), cal, text=text)
    except ValueError:
        pass
    raise ParseError(f"unrecognised prior spec {text!r}")


def _load_iwpg(path, tree, label):
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read prior file {path}: {exc}") from exc
    shape = ShapeParams(d["alpha"], d.get("beta", []))
    th = d.get("theta", "identity")
    if th == "identity":
        theta = GMatrix(tree, np.eye(tree.r))
    elif th == "calibrated":
        theta = calibrate_theta(shape, tree)
    else:
        th = np.asarray(th, dtype=float)
        theta = GMatrix(tree, np.diag(th) if th.ndim == 1 else th)
    theta.check_qg()
    return WpgParams(shape, theta, tree, label=label)


def describe_prior(p: WpgParams) -> dict:
    return {
        "label": p.label,
        "alpha": list(p.shape.alpha),
        "beta": list(p.shape.beta),
        "theta_diag": None if p.theta is None else p.theta.diag().tolist(),
    }


__all__ = [
    "ShapeParams", "WpgParams", "BPCheck", "PriorSpec", "hiw_shape", "reference_shape",
    "proportional_shape", "constant_shape", "eb_proportional_shape", "eb_affine_shape",
    "in_bp", "log_multigamma", "log_gamma_ii", "log_h_g", "posterior_update",
    "calibrate_theta", "parse_prior", "with_scale", "describe_prior",
]
