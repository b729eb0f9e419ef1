"""Independent reference computations used to freeze and cross-check values."""

from __future__ import annotations

import itertools

import mpmath
import networkx as nx
import numpy as np


def tree_graph(tree, lam: float) -> nx.Graph:
    """The expanded tree as a weighted graph; edge into a level-k child weighs lam**(k-1)."""
    g = nx.Graph()
    parent = tree.global_parent()
    levels = tree.levels()
    g.add_nodes_from(range(tree.size))
    for v in range(1, tree.size):
        g.add_edge(int(parent[v]), v, weight=lam ** int(levels[v] - 1))
    return g


def hop_distance(tree, a: int, b: int) -> int:
    """Graph distance by climbing parent pointers (no prefix arithmetic)."""
    parent = tree.global_parent()
    up_a = [a]
    while up_a[-1] != 0:
        up_a.append(int(parent[up_a[-1]]))
    pos = {v: i for i, v in enumerate(up_a)}
    steps, v = 0, b
    while v not in pos:
        v = int(parent[v])
        steps += 1
    return steps + pos[v]


def cubic_root(K: int, digits: int = 40) -> mpmath.mpf:
    """Root of 2(K-2)x^3 - Kx + 1 on (0, 3/10) by high-precision bisection."""
    with mpmath.workdps(digits):
        f = lambda x: 2 * (K - 2) * x**3 - K * x + 1  # noqa: E731
        lo, hi = mpmath.mpf(0), mpmath.mpf(3) / 10
        for _ in range(4 * digits):
            mid = (lo + hi) / 2
            if f(mid) > 0:
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 2


def projected_linking(c1: np.ndarray, c2: np.ndarray, seed: int = 0) -> int:
    """Linking number from signed crossings of a generic planar projection."""
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    a, b = c1 @ q.T, c2 @ q.T
    total = 0
    for i in range(len(a)):
        p0, p1 = a[i], a[(i + 1) % len(a)]
        for j in range(len(b)):
            r0, r1 = b[j], b[(j + 1) % len(b)]
            d1, d2 = (p1 - p0)[:2], (r1 - r0)[:2]
            den = d1[0] * d2[1] - d1[1] * d2[0]
            if abs(den) < 1e-14:
                continue
            w = (r0 - p0)[:2]
            s = (w[0] * d2[1] - w[1] * d2[0]) / den
            t = (w[0] * d1[1] - w[1] * d1[0]) / den
            if not (0 <= s < 1 and 0 <= t < 1):
                continue
            za = p0[2] + s * (p1 - p0)[2]
            zb = r0[2] + t * (r1 - r0)[2]
            over, under = (d1, d2) if za > zb else (d2, d1)
            total += 1 if over[0] * under[1] - over[1] * under[0] > 0 else -1
    assert total % 2 == 0
    return total // 2


def dual_value(lam: np.ndarray, N: np.ndarray, mu: np.ndarray, p: float) -> np.ndarray:
    """Lagrange dual of the discrete modulus program, vectorised over rows of lam."""
    c = np.maximum(lam @ N, 0.0)
    rho = (c / (p * mu)) ** (1.0 / (p - 1.0))
    return lam.sum(axis=1) - (p - 1.0) * (mu * rho**p).sum(axis=1)


def brute_force_modulus(N: np.ndarray, mu: np.ndarray, p: float, points: int = 0, rounds: int = 400):
    """Certified bracket [lower, upper] for the modulus by grid search.

    Every dual value is a lower bound and every admissible density an upper
    bound, so the bracket is valid whatever the grid resolution.  The grid
    over the multipliers (one per curve) is refined around the best point.
    """
    k = N.shape[0]
    points = points or {1: 201, 2: 41, 3: 17, 4: 11}[k]
    ones = np.ones(N.shape[1])
    t = 1.0 / (N @ ones).min()
    upper0 = float(np.sum(mu * t**p))
    lo = np.zeros(k)
    hi = np.full(k, p * upper0)
    best_lam, best = np.zeros(k), 0.0
    for _ in range(rounds):
        axes = [np.linspace(lo[i], hi[i], points) for i in range(k)]
        grid = np.array(list(itertools.product(*axes)))
        vals = dual_value(grid, N, mu, p)
        j = int(np.argmax(vals))
        if vals[j] > best:
            best, best_lam = float(vals[j]), grid[j]
        width = (hi - lo) / (points - 1)
        lo = np.maximum(best_lam - 2 * width, 0.0)
        hi = best_lam + 2 * width
        if width.max() < 1e-13 * max(best_lam.max(), 1.0):
            break
    c = best_lam @ N
    rho = (np.maximum(c, 0) / (p * mu)) ** (1.0 / (p - 1.0))
    lengths = N @ rho
    if lengths.min() <= 0:
        return best, upper0
    rho = rho / min(lengths.min(), np.inf)
    upper = min(upper0, float(np.sum(mu * rho**p)))
    return best, upper
