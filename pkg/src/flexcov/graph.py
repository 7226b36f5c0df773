"""Decomposable graphs and their junction trees.

Vertices are 1-based at the public boundary (``Graph.edges``, JSON graph
specs, ``JunctionTree.describe``) and 0-based everywhere inside the library
(``JunctionTree.cliques`` and friends hold 0-based index tuples so they can be
fed straight to ``np.ix_``).
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidBand, NotDecomposable, ParseError


@dataclass(frozen=True)
class Graph:
    vertex_count: int
    edges: frozenset  # of (i, j) with 1 <= i < j <= r

    def __post_init__(self):
        if self.vertex_count < 1:
            raise ValueError("vertex_count must be positive")
        norm = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            if not (1 <= i <= self.vertex_count and 1 <= j <= self.vertex_count):
                raise ValueError(f"edge {(i, j)} outside 1..{self.vertex_count}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_edges(cls, r, edges):
        return cls(int(r), frozenset(tuple(e) for e in edges))

    def adjacency(self):
        """0-based neighbour sets."""
        adj = [set() for _ in range(self.vertex_count)]
        for i, j in self.edges:
            adj[i - 1].add(j - 1)
            adj[j - 1].add(i - 1)
        return adj


@dataclass(frozen=True, eq=False)
class JunctionTree:
    """Cliques of a decomposable graph in a perfect order.

    ``cliques[j]`` is C_{j+1}; ``separators[j]`` is S_{j+1} (so
    ``separators[0]`` is the empty set attached to C_1 and S_2 is
    ``separators[1]``). Same convention for ``histories`` and ``residuals``.
    """

    r: int
    cliques: tuple
    separators: tuple = field(init=False)
    histories: tuple = field(init=False)
    residuals: tuple = field(init=False)

    def __post_init__(self):
        cliques = tuple(tuple(sorted(int(v) for v in c)) for c in self.cliques)
        if not cliques:
            raise NotDecomposable("no cliques")
        seps, hists, resids = [()], [cliques[0]], [cliques[0]]
        seen = set(cliques[0])
        for c in cliques[1:]:
            cs = set(c)
            seps.append(tuple(sorted(seen & cs)))
            resids.append(tuple(sorted(cs - seen)))
            seen |= cs
            hists.append(tuple(sorted(seen)))
        object.__setattr__(self, "cliques", cliques)
        object.__setattr__(self, "separators", tuple(seps))
        object.__setattr__(self, "histories", tuple(hists))
        object.__setattr__(self, "residuals", tuple(resids))
        self._validate()

    def _validate(self):
        cover = set().union(*map(set, self.cliques))
        if cover != set(range(self.r)):
            raise NotDecomposable("cliques do not cover the vertex set")
        sets = [set(c) for c in self.cliques]
        for a, ca in enumerate(sets):
            for b, cb in enumerate(sets):
                if a != b and ca <= cb:
                    raise NotDecomposable(f"clique {a + 1} is not maximal")
        for j in range(1, self.k):
            s = set(self.separators[j])
            if not self.residuals[j]:
                raise NotDecomposable(f"clique {j + 1} adds no new vertex")
            if not any(s <= sets[i] for i in range(j)):
                raise NotDecomposable(
                    f"running intersection fails at clique {j + 1}")

    # ------------------------------------------------------------------
    @classmethod
    def from_cliques(cls, r, cliques, one_based=True):
        off = 1 if one_based else 0
        return cls(int(r), tuple(tuple(v - off for v in c) for c in cliques))

    @property
    def k(self):
        return len(self.cliques)

    @property
    def clique_sizes(self):
        return tuple(len(c) for c in self.cliques)

    @property
    def separator_sizes(self):
        """(s_1, ..., s_k) with s_1 = 0."""
        return tuple(len(s) for s in self.separators)

    @property
    def s2(self):
        return len(self.separators[1]) if self.k > 1 else 0

    @cached_property
    def distinct_separators(self):
        """List of (separator, multiplicity) in order of first occurrence."""
        out = {}
        for s in self.separators[1:]:
            out[s] = out.get(s, 0) + 1
        return list(out.items())

    def occurrences(self, sep):
        """0-based clique positions j >= 1 with S_{j+1} == sep (J(P, S))."""
        return [j for j in range(1, self.k) if self.separators[j] == tuple(sep)]

    @cached_property
    def mask(self):
        """Boolean r x r pattern of E plus the diagonal."""
        m = np.zeros((self.r, self.r), dtype=bool)
        for c in self.cliques:
            m[np.ix_(c, c)] = True
        m.setflags(write=False)
        return m

    @cached_property
    def edge_count(self):
        return int((self.mask.sum() - self.r) // 2)

    def graph(self):
        iu = np.argwhere(np.triu(self.mask, 1))
        return Graph(self.r, frozenset((int(i) + 1, int(j) + 1) for i, j in iu))

    def describe(self):
        """JSON-friendly 1-based description."""
        one = lambda s: [v + 1 for v in s]  # noqa: E731
        return {
            "r": self.r,
            "cliques": [one(c) for c in self.cliques],
            "separators": [one(s) for s in self.separators[1:]],
            "multiplicities": [[one(s), m] for s, m in self.distinct_separators],
        }

    def __eq__(self, other):
        return (isinstance(other, JunctionTree) and self.r == other.r
                and self.cliques == other.cliques)

    def __hash__(self):
        return hash((self.r, self.cliques))

    def __repr__(self):
        return f"JunctionTree(r={self.r}, k={self.k}, cliques={self.describe()['cliques']})"


def _mcs_order(adj, r):
    """Maximum cardinality search, lowest index wins ties."""
    weight = [0] * r
    numbered = [False] * r
    order = []
    for _ in range(r):
        best = -1
        for v in range(r):
            if not numbered[v] and (best < 0 or weight[v] > weight[best]):
                best = v
        numbered[best] = True
        order.append(best)
        for u in adj[best]:
            if not numbered[u]:
                weight[u] += 1
    return order


def build_junction_tree(g: Graph) -> JunctionTree:
    """Perfect clique order of ``g`` via maximum cardinality search.

    Raises NotDecomposable when the MCS order is not a perfect elimination
    order in reverse, i.e. some vertex has earlier neighbours that are not
    pairwise adjacent.
    """
    r = g.vertex_count
    adj = g.adjacency()
    order = _mcs_order(adj, r)
    pos = {v: i for i, v in enumerate(order)}
    candidates = []
    for i, v in enumerate(order):
        earlier = [u for u in adj[v] if pos[u] < i]
        for a in range(len(earlier)):
            for b in range(a + 1, len(earlier)):
                if earlier[b] not in adj[earlier[a]]:
                    raise NotDecomposable(
                        f"vertices {earlier[a] + 1} and {earlier[b] + 1} are both "
                        f"earlier neighbours of {v + 1} but not adjacent")
        candidates.append(frozenset(earlier) | {v})
    cliques = [c for i, c in enumerate(candidates)
               if not any(c < d for d in candidates[i + 1:])]
    # a candidate can only be contained in a later one, and duplicates are impossible
    return JunctionTree(r, tuple(tuple(sorted(c)) for c in cliques))


def banded_graph(r: int, k: int) -> JunctionTree:
    """AR(k) graph: cliques {j, ..., j+k} for j = 1..r-k."""
    if not 0 <= k < r:
        raise InvalidBand(f"band width k={k} must satisfy 0 <= k < r={r}")
    return JunctionTree(r, tuple(tuple(range(j, j + k + 1)) for j in range(r - k)))


def diff_banded_graph(r: int, k1: int, k2: int, changepoint: int) -> JunctionTree:
    """Two band widths, switching after the clique of width k1 ending at ``changepoint``.

    ``changepoint`` is 1-based. Cliques {j..j+k1} cascade until one ends at the
    changepoint; the next clique has k2+1 vertices and ends at changepoint+1;
    cliques of k2+1 vertices then cascade to r.
    """
    c = int(changepoint)
    if k1 < 0 or k2 < 0 or k2 >= r:
        raise InvalidBand(f"invalid band widths k1={k1}, k2={k2} for r={r}")
    if not (k1 + 1 <= c <= r):
        raise InvalidBand(f"changepoint {c} cannot end a clique of size {k1 + 1}")
    if c < r and k2 + 1 > c + 1:
        raise InvalidBand(f"first clique of size {k2 + 1} would start before vertex 1")
    if c < r and k2 > k1 + 1:
        # the first wide clique would swallow the last narrow one
        raise InvalidBand(f"k2={k2} too large relative to k1={k1}")
    cliques = [tuple(range(j, j + k1 + 1)) for j in range(c - k1)]  # 0-based, ends at c-1
    for end in range(c, r):
        cliques.append(tuple(range(end - k2, end + 1)))
    # drop non-maximal cliques at the junction (k2 == k1 + 1 case)
    sets = [set(q) for q in cliques]
    keep = [q for i, q in enumerate(cliques)
            if not any(i != j and sets[i] <= sets[j] for j in range(len(sets)))]
    try:
        return JunctionTree(r, tuple(keep))
    except NotDecomposable as exc:  # pragma: no cover - guarded above
        raise InvalidBand(str(exc)) from exc


def parse_graph_spec(spec) -> JunctionTree:
    """Graph from a dict, a JSON string, or a path to a JSON file."""
    if isinstance(spec, str):
        if os.path.exists(spec):
            with open(spec) as fh:
                spec = json.load(fh)
        else:
            try:
                spec = json.loads(spec)
            except json.JSONDecodeError as exc:
                raise ParseError(f"graph spec is neither a file nor JSON: {exc}") from exc
    if not isinstance(spec, dict):
        raise ParseError("graph spec must be a JSON object")
    try:
        if "band" in spec:
            b = spec["band"]
            return banded_graph(int(b["r"]), int(b["k"]))
        if "diffband" in spec:
            b = spec["diffband"]
            return diff_banded_graph(int(b["r"]), int(b["k1"]), int(b["k2"]),
                                     int(b["changepoint"]))
        if "cliques" in spec:
            return JunctionTree.from_cliques(int(spec["vertices"]), spec["cliques"])
        if "vertices" in spec:
            return build_junction_tree(
                Graph.from_edges(int(spec["vertices"]), spec.get("edges", [])))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed graph spec: {exc}") from exc
    raise ParseError("graph spec needs one of 'vertices', 'band', 'diffband'")


def two_clique_graph(c1: int, c2: int, s: int) -> JunctionTree:
    """C_1 = {1..c1}, C_2 = {c1-s+1 .. c1-s+c2}."""
    r = c1 + c2 - s
    return JunctionTree(r, (tuple(range(c1)), tuple(range(c1 - s, r))))
