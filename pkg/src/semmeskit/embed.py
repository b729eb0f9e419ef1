"""Bilipschitz embedding of the weighted component tree into Euclidean space.

Every node gets a colour, i.e. a standard basis vector.  The root sits at
the origin and a node of level k sits at its parent plus lam**k times its
colour vector.  Nodes sharing a colour are kept far apart in the tree, so
along any chain the steps with a common colour form rapidly decaying
geometric sums; this gives two-sided bounds

    (3/4) lam**(rho+1) <= |x(H) - x(H')| <= (5 sqrt(n) / 2) lam**(rho+1)

with rho the level of the deepest common ancestor and n the number of
colours.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BilipschitzViolation, DomainError
from .welding import ExpandedTree, NodeAddress

LOWER_CONSTANT = 0.75
UPPER_FACTOR = 2.5


def _check_lambda(lam: float) -> None:
    if not 0.0 < lam < 1.0:
        raise DomainError(f"lambda must lie in (0, 1), got {lam}")


def m0(lam: float) -> int:
    """Smallest m >= 1 with sum_{j>=1} lam**(j m) < 1/4, i.e. lam**m < 1/5."""
    _check_lambda(lam)
    m = 1
    while True:
        q = lam**m
        if q / (1.0 - q) < 0.25:
            return m
        m += 1


def separation_radius(lam: float) -> int:
    """Colour separation actually used by :func:`embed`.

    Same-coloured steps may sit on both sides of a chain.  If the deepest
    common ancestor has level r, a same-coloured step on the far side can be
    as shallow as level r + D - 1 when colours are D apart in the tree.  The
    smallest D >= max(m0, 3) with (lam**D + lam**(D-2)) / (1 - lam**D) < 1/4
    keeps every other same-coloured step below a quarter of the dominant one.
    """
    _check_lambda(lam)
    d = max(m0(lam), 3)
    while (lam**d + lam ** (d - 2)) / (1.0 - lam**d) >= 0.25:
        d += 1
    return d


def color_tree(tree: ExpandedTree, m0: int) -> tuple[int, np.ndarray]:
    """Greedy BFS colouring so that equal colours are at graph distance >= m0.

    Colours are 1-based; returns (number of colours, colour per node in
    global BFS order).
    """
    if m0 < 1:
        raise DomainError(f"separation must be >= 1, got {m0}")
    n_nodes = tree.size
    colors = np.zeros(n_nodes, dtype=np.int64)
    parent = tree.global_parent()
    levels = tree.levels()
    kids = tree.children_lists()
    radius = m0 - 1
    for v in range(n_nodes):
        used = set()
        lv = int(levels[v])
        # walk up j steps, then down at most min(j, radius - j) levels;
        # deeper nodes come later in BFS order and are still uncoloured
        u = v
        prev = -1
        for j in range(0, min(radius, lv) + 1):
            if j > 0:
                prev, u = u, int(parent[u])
            used.add(colors[u])
            frontier = [w for w in kids[u] if w != prev]
            for _ in range(min(j, radius - j)):
                nxt = []
                for w in frontier:
                    if w < v:
                        used.add(colors[w])
                        nxt.extend(kids[w])
                frontier = nxt
        c = 1
        while c in used:
            c += 1
        colors[v] = c
    return int(colors.max(initial=1)), colors


def local_count_bound(tree: ExpandedTree, m0: int) -> int:
    """max over H of the number of nodes in H's subtree within 2*m0 generations.

    This is the local count that bounds the number of colours needed for
    separation m0; it is computed on the truncated tree.
    """
    gens = 2 * m0
    parent = tree.global_parent()
    n = tree.size
    # cnt[v, g]: nodes of v's subtree within g generations (including v)
    cnt = np.ones((n, gens + 1), dtype=np.int64)
    for k in range(tree.depth, 0, -1):
        lo = tree.offsets[k]
        hi = lo + len(tree.condenser[k])
        par = parent[lo:hi]
        for g in range(1, gens + 1):
            np.add.at(cnt[:, g], par, cnt[lo:hi, g - 1])
    return int(cnt[:, gens].max())


@dataclass
class TreeEmbedding:
    tree: ExpandedTree
    lam: float
    dimension: int
    coords: np.ndarray
    colors: np.ndarray
    m0: int
    separation: int
    local_bound: int = 0
    _paths: list = field(default_factory=list, repr=False)

    def address(self, i: int) -> NodeAddress:
        if not self._paths:
            self._paths = self.tree.all_paths()
        return NodeAddress(self._paths[i])

    def coord(self, addr: NodeAddress | str) -> np.ndarray:
        return self.coords[self.tree.index_of(NodeAddress.parse(addr))]


def embed(tree: ExpandedTree, lam: float, separation: int | None = None) -> TreeEmbedding:
    _check_lambda(lam)
    mm = m0(lam)
    sep = separation_radius(lam) if separation is None else separation
    if sep < mm:
        raise DomainError(f"separation {sep} is below m0 = {mm}")
    n, colors = color_tree(tree, sep)
    coords = np.zeros((tree.size, n))
    for k in range(1, tree.depth + 1):
        lo = tree.offsets[k]
        cnt = len(tree.condenser[k])
        idx = np.arange(lo, lo + cnt)
        par = tree.parent[k] + tree.offsets[k - 1]
        coords[idx] = coords[par]
        coords[idx, colors[idx] - 1] += lam**k
    return TreeEmbedding(tree, lam, n, coords, colors, mm, sep, local_count_bound(tree, mm))


@dataclass
class BilipschitzReport:
    pairs: int
    dimension: int
    lower: float
    upper: float
    min_ratio: float
    max_ratio: float
    min_pair: tuple[str, str] | None
    max_pair: tuple[str, str] | None
    color_conflicts: int
    ok: bool
    failure: str | None = None

    def to_json(self) -> dict:
        return {
            "pairs": self.pairs,
            "dimension": self.dimension,
            "lower_constant": self.lower,
            "upper_constant": self.upper,
            "min_ratio": self.min_ratio,
            "max_ratio": self.max_ratio,
            "min_pair": list(self.min_pair) if self.min_pair else None,
            "max_pair": list(self.max_pair) if self.max_pair else None,
            "color_conflicts": self.color_conflicts,
            "ok": self.ok,
            "failure": self.failure,
        }


def _common_level(anc: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    a = anc[rows][:, None, 1:]
    b = anc[cols][None, :, 1:]
    return ((a == b) & (a >= 0)).sum(axis=2)


def verify_bilipschitz(
    emb: TreeEmbedding, lam: float | None = None, block: int = 256, raise_on_failure: bool = False
) -> BilipschitzReport:
    """Check the sandwich and the colour separation for every pair of nodes.

    Ratios are |x(H)-x(H')| / lam**(rho+1).
    """
    lam = emb.lam if lam is None else lam
    _check_lambda(lam)
    n_nodes = emb.tree.size
    hi_const = UPPER_FACTOR * math.sqrt(emb.dimension)
    lo_const = LOWER_CONSTANT
    if n_nodes < 2:
        return BilipschitzReport(0, emb.dimension, lo_const, hi_const, math.nan, math.nan, None, None, 0, True)

    x = emb.coords
    sq = np.einsum("ij,ij->i", x, x)
    levels = emb.tree.levels()
    anc = emb.tree.ancestor_matrix()
    min_r, max_r = math.inf, -math.inf
    min_pair = max_pair = None
    conflicts = 0
    first_bad = None
    pairs = 0
    for start in range(0, n_nodes, block):
        rows = np.arange(start, min(start + block, n_nodes))
        cols = np.arange(start, n_nodes)
        d2 = sq[rows][:, None] + sq[cols][None, :] - 2.0 * (x[rows] @ x[cols].T)
        dist = np.sqrt(np.maximum(d2, 0.0))
        r = _common_level(anc, rows, cols)
        upper_tri = cols[None, :] > rows[:, None]
        ratio = np.where(upper_tri, dist / lam ** (r + 1.0), np.nan)
        pairs += int(upper_tri.sum())

        graph_d = levels[rows][:, None] + levels[cols][None, :] - 2 * r
        same = (emb.colors[rows][:, None] == emb.colors[cols][None, :]) & upper_tri
        conflicts += int((same & (graph_d < emb.m0)).sum())

        if np.all(np.isnan(ratio)):
            continue
        i, j = np.unravel_index(np.nanargmin(ratio), ratio.shape)
        if ratio[i, j] < min_r:
            min_r = float(ratio[i, j])
            min_pair = (int(rows[i]), int(cols[j]))
        i, j = np.unravel_index(np.nanargmax(ratio), ratio.shape)
        if ratio[i, j] > max_r:
            max_r = float(ratio[i, j])
            max_pair = (int(rows[i]), int(cols[j]))
        if first_bad is None:
            bad = upper_tri & ((ratio < lo_const) | (ratio > hi_const))
            if bad.any():
                i, j = np.argwhere(bad)[0]
                first_bad = (int(rows[i]), int(cols[j]), float(ratio[i, j]))

    def names(p):
        return None if p is None else (str(emb.address(p[0])), str(emb.address(p[1])))

    failure = None
    if first_bad is not None:
        a, b, val = first_bad
        failure = (
            f"pair ({emb.address(a)}, {emb.address(b)}) has normalised distance {val:.6g} "
            f"outside [{lo_const}, {hi_const:.6g}]"
        )
    elif conflicts:
        failure = f"{conflicts} same-coloured pairs closer than m0 = {emb.m0}"
    report = BilipschitzReport(
        pairs, emb.dimension, lo_const, hi_const, min_r, max_r, names(min_pair), names(max_pair),
        conflicts, failure is None, failure,
    )
    if failure and raise_on_failure:
        raise BilipschitzViolation(failure, pair=names((first_bad[0], first_bad[1])) if first_bad else None)
    return report
