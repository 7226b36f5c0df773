"""Matrix algebra on the cones Q_G (incomplete, edge-supported) and P_G
(positive definite with zeros off the edge set).

A ``GMatrix`` holds a dense r x r array whose entries off the edge pattern
are zero and meaningless; clique blocks are views into it, so overlap
consistency holds by construction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (IndexOutOfRange, NotInQG, NotPositiveDefinite,
                     TreeMismatch)
from .graph import JunctionTree


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def chol(a, exc=NotPositiveDefinite, what="matrix"):
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise exc(f"{what} is not positive definite") from None


def logdet_pd(a, exc=NotPositiveDefinite, what="matrix"):
    if a.shape[0] == 0:
        return 0.0
    return 2.0 * np.log(np.diag(chol(a, exc, what))).sum()


def inv_pd(a, exc=NotPositiveDefinite, what="matrix"):
    if a.shape[0] == 0:
        return np.zeros((0, 0))
    l = chol(a, exc, what)
    li = sla.solve_triangular(l, np.eye(a.shape[0]), lower=True)
    return li.T @ li


def embed(block, idx, r):
    """(block)^0: r x r matrix with ``block`` at rows/cols ``idx``, zeros elsewhere."""
    out = np.zeros((r, r))
    if len(idx):
        out[np.ix_(idx, idx)] = block
    return out


@dataclass(frozen=True, eq=False)
class GMatrix:
    """Element of I_G (an element of Q_G once every clique block is > 0)."""

    tree: JunctionTree
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.tree.r, self.tree.r):
            raise ValueError(f"expected {self.tree.r}x{self.tree.r}, got {v.shape}")
        v = np.where(self.tree.mask, v, 0.0)
        if not np.allclose(v, v.T, rtol=0, atol=1e-12 * max(1.0, np.abs(v).max())):
            raise ValueError("GMatrix values must be symmetric")
        object.__setattr__(self, "values", _frozen(0.5 * (v + v.T)))

    @classmethod
    def from_blocks(cls, tree, blocks):
        """Assemble from clique blocks, rejecting inconsistent overlaps."""
        if len(blocks) != tree.k:
            raise ValueError(f"need {tree.k} clique blocks, got {len(blocks)}")
        v = np.zeros((tree.r, tree.r))
        seen = np.zeros((tree.r, tree.r), dtype=bool)
        for c, b in zip(tree.cliques, blocks):
            b = np.asarray(b, dtype=float)
            ix = np.ix_(c, c)
            clash = seen[ix] & (v[ix] != b)
            if clash.any():
                raise ValueError("clique blocks disagree on a shared entry")
            v[ix] = b
            seen[ix] = True
        return cls(tree, v)

    def block(self, idx):
        idx = list(idx)
        return self.values[np.ix_(idx, idx)]

    def sub(self, rows, cols):
        return self.values[np.ix_(list(rows), list(cols))]

    @property
    def clique_blocks(self):
        return [self.block(c) for c in self.tree.cliques]

    def in_qg(self):
        try:
            self.check_qg()
        except NotInQG:
            return False
        return True

    def check_qg(self):
        for j, c in enumerate(self.tree.cliques):
            chol(self.block(c), NotInQG, f"clique block {j + 1}")
        return self

    def __add__(self, other):
        _same_tree(self, other)
        return GMatrix(self.tree, self.values + other.values)

    def __mul__(self, a):
        return GMatrix(self.tree, self.values * float(a))

    __rmul__ = __mul__

    def __truediv__(self, a):
        return GMatrix(self.tree, self.values / float(a))

    def diag(self):
        return np.diag(self.values).copy()


@dataclass(frozen=True, eq=False)
class SparsePrecision:
    """Element of Z_G; ``check`` verifies membership in P_G."""

    tree: JunctionTree
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.tree.r, self.tree.r):
            raise ValueError(f"expected {self.tree.r}x{self.tree.r}, got {v.shape}")
        v = np.where(self.tree.mask, v, 0.0)
        object.__setattr__(self, "values", _frozen(0.5 * (v + v.T)))

    def check(self):
        chol(self.values, NotPositiveDefinite, "precision matrix")
        return self


def _same_tree(a, b):
    if a.tree != b.tree:
        raise TreeMismatch("operands live on different junction trees")


def project(m, tree: JunctionTree) -> GMatrix:
    """kappa: keep the diagonal and edge entries of a symmetric matrix."""
    m = np.asarray(m, dtype=float)
    return GMatrix(tree, 0.5 * (m + m.T))


def clique_inverse_sum(x: GMatrix, exc=NotInQG) -> np.ndarray:
    """sum_C (x_C^{-1})^0 - sum_j (x_{S_j}^{-1})^0, the inverse of the completion."""
    t = x.tree
    y = np.zeros((t.r, t.r))
    for j, c in enumerate(t.cliques):
        y[np.ix_(c, c)] += inv_pd(x.block(c), exc, f"clique block {j + 1}")
    for s in t.separators[1:]:
        if s:
            y[np.ix_(s, s)] -= inv_pd(x.block(s), exc, "separator block")
    return 0.5 * (y + y.T)


def complete(x: GMatrix) -> np.ndarray:
    """Unique positive definite completion x_hat with x_hat^{-1} in P_G."""
    y = clique_inverse_sum(x)
    xhat = inv_pd(y, NotInQG, "completed inverse")
    # stored entries are part of the definition; only fill the missing ones
    return np.where(x.tree.mask, x.values, 0.5 * (xhat + xhat.T))


def phi(y) -> GMatrix:
    """kappa(y^{-1}) for y in P_G."""
    if not isinstance(y, SparsePrecision):
        raise TypeError("phi expects a SparsePrecision")
    return project(inv_pd(y.values, NotPositiveDefinite, "precision matrix"), y.tree)


def edge_inner_product(x: GMatrix, y) -> float:
    """<x, y>: sum over the diagonal and both orientations of every edge."""
    _same_tree(x, y)
    return float(np.sum(x.values * y.values))


def logdet_completed(x: GMatrix) -> float:
    """log det of the completion via clique and separator blocks."""
    t = x.tree
    out = 0.0
    for j, c in enumerate(t.cliques):
        out += logdet_pd(x.block(c), NotInQG, f"clique block {j + 1}")
    for s in t.separators[1:]:
        out -= logdet_pd(x.block(s), NotInQG, "separator block")
    return out


@dataclass(frozen=True)
class LayerBlocks:
    sep: np.ndarray      # x_<j>, s x s
    cross: np.ndarray    # x_[j] = x_{R,S}, (c-s) x s
    schur: np.ndarray    # x_[j]. = x_R - x_RS x_S^{-1} x_SR
    resid_idx: tuple
    sep_idx: tuple


def layer_split(tree: JunctionTree, j: int):
    """(residual-like, separator-like) index sets used by layer ``j`` (0-based).

    Layer 0 splits C_1 into C_1 minus S_2 and S_2; layer j >= 1 splits C_{j+1}
    into R_{j+1} and S_{j+1}.
    """
    if j == 0:
        s = tree.separators[1] if tree.k > 1 else ()
        rest = tuple(v for v in tree.cliques[0] if v not in set(s))
        return rest, s
    return tree.residuals[j], tree.separators[j]


def blocks(x: GMatrix, j: int) -> LayerBlocks:
    """Schur-complement blocks of layer ``j`` (0-based clique position).

    For j >= 1 these are (x_<j>, x_[j], x_[j].) of the clique C_{j+1}; j = 0
    gives the C_1 variant built around the first separator.
    """
    t = x.tree
    if not 0 <= j < t.k:
        raise IndexOutOfRange(f"clique index {j} outside 0..{t.k - 1}")
    r_idx, s_idx = layer_split(t, j)
    xs = x.block(s_idx)
    xrs = x.sub(r_idx, s_idx)
    xr = x.block(r_idx)
    if len(s_idx):
        schur = xr - xrs @ inv_pd(xs, NotInQG, "separator block") @ xrs.T
    else:
        schur = xr.copy()
    chol(schur, NotInQG, f"Schur block of layer {j}")
    return LayerBlocks(xs, xrs, schur, r_idx, s_idx)


def random_qg(tree: JunctionTree, rng, scale=1.0, dof_extra=2) -> GMatrix:
    """Random element of Q_G: the projection of a Wishart draw."""
    r = tree.r
    a = rng.standard_normal((r + dof_extra, r))
    return project(scale * (a.T @ a) / (r + dof_extra), tree)
