"""Order-of-magnitude estimates and gates for Semmes metrics.

The comparison constants of a Semmes metric depend on the embedding that
realises it and have no numeric value in general.  Every interval here is
therefore normalised (lower constant 1, explicit upper constant) and tagged,
so it reads as "up to one fixed rescaling of the metric", never as an
absolute certified value.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError
from .welding import NodeAddress, WeldingGraph, rho

TREE_NORMALIZATION = "c=1, C=2/(1-lambda); valid up to a metric-dependent constant"
MEASURE_NORMALIZATION = "c=1, C=1/(1-lambda^3*gamma); valid up to a metric-dependent constant"


@dataclass(frozen=True)
class EstimateInterval:
    lower: float
    upper: float
    normalization: str

    def __post_init__(self):
        if not 0.0 <= self.lower <= self.upper:
            raise DomainError(f"bad interval [{self.lower}, {self.upper}]")

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper

    def to_json(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "normalization": self.normalization}


def _check(lam: float, k: int) -> None:
    if not 0.0 < lam < 1.0:
        raise DomainError(f"lambda must lie in (0, 1), got {lam}")
    if k < 0:
        raise DomainError(f"level must be >= 0, got {k}")


def diam_bounds(k: int, lam: float) -> EstimateInterval:
    """Diameter of the image of a level-k cube-with-handles, up to normalisation."""
    _check(lam, k)
    base = lam**k
    return EstimateInterval(base, 2.0 / (1.0 - lam) * base, TREE_NORMALIZATION)


def ahlfors_regular(lam: float, gamma: float) -> bool:
    """Whether the space (and every product with R^m) is Ahlfors regular.

    The gate is lambda**3 * gamma < 1; the product with R^m is then
    Ahlfors (3+m)-regular.
    """
    if lam <= 0.0:
        return False
    return lam**3 * gamma < 1.0


@dataclass(frozen=True)
class MeasureEstimate:
    interval: EstimateInterval
    limit_set_null: bool


def measure_bounds(k: int, lam: float, gamma: float) -> MeasureEstimate:
    """3-dimensional Hausdorff measure of a level-k piece, up to normalisation.

    A level-k piece is the disjoint union of its own difference set (measure
    about lam**(3k)) and the pieces below it; with at most gamma children per
    step these add up to at most lam**(3k) / (1 - lam**3 gamma).
    """
    _check(lam, k)
    gate = lam**3 * gamma
    if not ahlfors_regular(lam, gamma):
        raise DomainError(f"measure estimate needs lambda^3*gamma < 1, got {gate:.6g} >= 1")
    base = lam ** (3 * k)
    return MeasureEstimate(EstimateInterval(base, base / (1.0 - gate), MEASURE_NORMALIZATION), True)


def llc(graph: WeldingGraph) -> bool:
    """Linear local contractibility: every reachable child contracts in its parent."""
    for cid in graph.reachable():
        if not all(s.contractible_in_parent for s in graph.condensers[cid].children):
            return False
    return True


def point_distance_bounds(a: NodeAddress, b: NodeAddress, lam: float) -> EstimateInterval:
    """Distance between points of the difference sets of two tree nodes.

    Only meaningful for disjoint difference sets, i.e. neither address is a
    prefix of the other.
    """
    if a.is_prefix_of(b) or b.is_prefix_of(a):
        raise DomainError(f"addresses {a} and {b} are nested; the pieces may share points")
    r = rho(a, b)
    _check(lam, r)
    base = lam**r
    return EstimateInterval(base, 2.0 / (1.0 - lam) * base, TREE_NORMALIZATION)
