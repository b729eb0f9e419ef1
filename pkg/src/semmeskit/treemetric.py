"""The level-weighted metric on the component tree.

An edge between a node of level t and one of its children has length
lambda**t; the distance between two nodes is the length of the unique
path joining them.  With lambda = 1 this is the graph distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .welding import NodeAddress, rho


@dataclass(frozen=True)
class SemmesParams:
    lam: float
    m: int = 0

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise DomainError(f"scaling factor must lie in (0, 1), got {self.lam}")
        if self.m < 0:
            raise DomainError(f"stabilization index must be >= 0, got {self.m}")


def _check_lambda(lam: float, allow_one: bool = False) -> None:
    hi_ok = lam <= 1.0 if allow_one else lam < 1.0
    if not (lam > 0.0 and hi_ok):
        interval = "(0, 1]" if allow_one else "(0, 1)"
        raise DomainError(f"lambda must lie in {interval}, got {lam}")


def _geometric(lam: float, lo, hi):
    """sum_{t=lo}^{hi-1} lam**t, vectorised; empty sums are 0."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lam == 1.0:
        return hi - lo
    return (lam**lo - lam**hi) / (1.0 - lam)


def delta(a: NodeAddress, b: NodeAddress, lam: float) -> float:
    _check_lambda(lam, allow_one=True)
    r = rho(a, b)
    return float(_geometric(lam, r, a.level) + _geometric(lam, r, b.level))


def delta_levels(level_a, level_b, r, lam: float) -> np.ndarray:
    """Vectorised distance from the two levels and the common-ancestor level."""
    _check_lambda(lam, allow_one=True)
    return _geometric(lam, r, level_a) + _geometric(lam, r, level_b)


def chain(a: NodeAddress, b: NodeAddress) -> list[NodeAddress]:
    """The shortest chain of tree nodes from ``a`` to ``b``."""
    r = rho(a, b)
    up = [NodeAddress(a.path[:k]) for k in range(a.level, r - 1, -1)]
    down = [NodeAddress(b.path[:k]) for k in range(r + 1, b.level + 1)]
    return up + down


def delta_by_chain(a: NodeAddress, b: NodeAddress, lam: float) -> float:
    """Edge-by-edge sum along the chain; slower reference for :func:`delta`."""
    nodes = chain(a, b)
    return math.fsum(lam ** min(u.level, v.level) for u, v in zip(nodes, nodes[1:]))


def bound_constant(lam: float) -> float:
    """Upper comparison constant 2/(1-lam).

    Each of the two monotone halves of a chain is a geometric tail starting
    at lam**rho, hence at most lam**rho/(1-lam).
    """
    _check_lambda(lam)
    return 2.0 / (1.0 - lam)


def delta_bounds(r: int, lam: float) -> tuple[float, float]:
    """Interval containing delta for any distinct pair with common level ``r``."""
    _check_lambda(lam)
    if r < 0:
        raise DomainError(f"rho must be non-negative, got {r}")
    base = lam**r
    return base, bound_constant(lam) * base


def scaling_qs_modulus(lam1: float, lam2: float) -> tuple[float, float]:
    """Gauge eta(t) = C t**p of the identity (tree, delta_lam1) -> (tree, delta_lam2).

    p = log lam2 / log lam1.  Since lam2**r = (lam1**r)**p, chaining the
    two-sided bounds gives C = (2/(1-lam2)) * (2/(1-lam1))**p.
    """
    _check_lambda(lam1)
    _check_lambda(lam2)
    p = math.log(lam2) / math.log(lam1)
    c = bound_constant(lam2) * bound_constant(lam1) ** p
    return p, c
