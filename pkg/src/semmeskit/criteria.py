"""Quantitative parametrizability tests for (R^3/G x R^m, d_{lambda,m}).

Growth is read off the welding graph.  Circulation cannot be computed from
the graph (it is an essential-intersection count), so it enters only as a
certificate attached to the four classical builtins.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .errors import DomainError
from .estimates import ahlfors_regular, llc
from .welding import WeldingGraph, growth_order, load_space

REL_TOL = 1e-12

CITE_GROWTH = "order of growth: eventual maximal number of children per component"
CITE_CIRC = "order of circulation: certified lower bound circ(X_k', H) >= C omega^(k'-k)"
CITE_AHLFORS = "Ahlfors (3+m)-regular when lambda^3 * gamma < 1"
CITE_LLC = "linearly locally contractible when every child is contractible in its parent"
CITE_NECESSARY = "quasisymmetric parametrization by R^(3+m) forces lambda^m * omega^((3+m)/2) <= gamma"
CITE_WINDOW = "omega^3 > gamma^2: every lambda in (omega^-1/2, gamma^-1/3) is regular yet non-parametrizable for all m"
CITE_WHITEHEAD = "Whitehead products are non-parametrizable for lambda > 2^(-(3+m)/(2m))"
CITE_BING_PRODUCT = "Bing double x R: d_{lambda,1} and d_{lambda',1} inequivalent when 1/2 < lambda' < 1, lambda < lambda'"


@dataclass(frozen=True)
class CirculationCertificate:
    omega: float
    C: float
    basis: str
    per_level: Callable[[int], int] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.omega < 0 or self.C <= 0:
            raise DomainError("certificate needs omega >= 0 and C > 0")

    def bound(self, k: int) -> float:
        if self.per_level is not None:
            return self.per_level(k)
        return self.C * self.omega**k


_FS_BASIS = "Freedman-Skora essential intersection count"

_CERTS = {
    "whitehead": CirculationCertificate(2.0, 1.0, _FS_BASIS + " (Whitehead clasp): circ >= 2^k", lambda k: 2**k),
    "bing-double": CirculationCertificate(2.0, 1.0, _FS_BASIS + " (Bing double): circ >= 2^k", lambda k: 2**k),
    "dogbone": CirculationCertificate(4.0, 0.25, _FS_BASIS + " (dogbone disks D1, D2, D3): circ >= 4^(k-1)",
                                      lambda k: 4 ** (k - 1)),
}
_ANTOINE_BASIS = "Antoine necklace: order of circulation at least 2, circ >= 2^k"


def certificate(space: WeldingGraph | str) -> CirculationCertificate | None:
    """Circulation certificate of a builtin, or None for uncertified spaces."""
    name = space if isinstance(space, str) else space.name
    name = name.strip().lower()
    if name in _CERTS:
        return _CERTS[name]
    if name.startswith("antoine:"):
        return CirculationCertificate(2.0, 1.0, _ANTOINE_BASIS, lambda k: 2**k)
    return None


def circulation_lower_bound(space: WeldingGraph | str, k: int) -> int | None:
    if k < 1:
        raise DomainError(f"level difference must be >= 1, got {k}")
    cert = certificate(space)
    if cert is None:
        return None
    return int(cert.bound(k))


def _check_lambda(lam: float) -> None:
    if not 0.0 < lam < 1.0:
        raise DomainError(f"lambda must lie in (0, 1), got {lam}")


def necessary_condition(lam: float, m: int, omega: float, gamma: float) -> bool:
    """True when lambda^m omega^((3+m)/2) <= gamma, i.e. parametrization is not excluded.

    Equality (up to relative tolerance 1e-12) counts as satisfied.
    """
    _check_lambda(lam)
    if m < 0 or omega < 0 or gamma < 1:
        raise DomainError(f"need m >= 0, omega >= 0, gamma >= 1 (got m={m}, omega={omega}, gamma={gamma})")
    lhs = lam**m * omega ** ((3 + m) / 2)
    return lhs <= gamma * (1.0 + REL_TOL)


def excluded(lam: float, m: int, omega: float, gamma: float) -> bool:
    return not necessary_condition(lam, m, omega, gamma)


def gfirst_window(omega: float, gamma: float) -> tuple[float, float] | None:
    """Open interval of lambda that is regular but excluded for every m, or None."""
    if omega <= 0 or gamma < 1:
        raise DomainError(f"need omega > 0 and gamma >= 1 (got {omega}, {gamma})")
    if not omega**3 > gamma**2:
        return None
    return omega**-0.5, gamma ** (-1.0 / 3.0)


def whitehead_threshold(m: int) -> float:
    if m < 1:
        raise DomainError("the Whitehead threshold needs m >= 1")
    return 2.0 ** (-(3 + m) / (2 * m))


def exclusion_threshold(m: int, omega: float, gamma: float) -> float:
    """lambda where lambda^m omega^((3+m)/2) = gamma (m >= 1)."""
    if m < 1:
        raise DomainError("the threshold is defined for m >= 1")
    return (gamma / omega ** ((3 + m) / 2)) ** (1.0 / m)


def bing_product_inequivalence(lam: float, lam_prime: float) -> bool:
    """True when inequivalence is guaranteed; False means no conclusion."""
    _check_lambda(lam)
    _check_lambda(lam_prime)
    return 0.5 < lam_prime < 1.0 and lam < lam_prime


def local_condition(lam: float, m: int, omega_x: float, gamma_x: float) -> bool:
    """Pointwise version with user-supplied concurrent pair (gamma(x), omega(x))."""
    return necessary_condition(lam, m, omega_x, gamma_x)


@dataclass
class Gate:
    value: object
    citation: str
    detail: str = ""

    def to_json(self) -> dict:
        out = {"value": self.value, "citation": self.citation}
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class CriterionReport:
    space: str
    lam: float
    m: int
    gates: dict[str, Gate]

    def to_json(self) -> dict:
        return {
            "space": self.space,
            "lambda": self.lam,
            "m": self.m,
            "gates": {k: g.to_json() for k, g in self.gates.items()},
        }

    def verdict(self) -> str:
        ex = self.gates["excluded"].value
        if ex is None:
            return "uncertified: circulation unknown, no exclusion test"
        if ex:
            return (f"excluded: no quasisymmetric homeomorphism "
                    f"(R^3/G x R^{self.m}, d_lambda,m) -> R^{3 + self.m}")
        return "not excluded by the growth/circulation test"


def report(space: WeldingGraph | str, lam: float, m: int) -> CriterionReport:
    graph = load_space(space) if isinstance(space, str) else space
    _check_lambda(lam)
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    gamma = growth_order(graph)
    cert = certificate(graph)
    gates: dict[str, Gate] = {}
    gates["growth"] = Gate(gamma, CITE_GROWTH)
    gates["circulation"] = Gate(
        None if cert is None else cert.omega, CITE_CIRC, "uncertified" if cert is None else cert.basis
    )
    gates["ahlfors_regular"] = Gate(
        ahlfors_regular(lam, gamma), CITE_AHLFORS, f"lambda^3*gamma = {lam**3 * gamma:.12g}"
    )
    gates["llc"] = Gate(llc(graph), CITE_LLC)
    if cert is None or gamma < 1:
        gates["excluded"] = Gate(None, CITE_NECESSARY, "requires a circulation certificate and gamma >= 1")
        gates["window"] = Gate(None, CITE_WINDOW, "requires a circulation certificate")
    else:
        lhs = lam**m * cert.omega ** ((3 + m) / 2)
        gates["excluded"] = Gate(
            excluded(lam, m, cert.omega, gamma), CITE_NECESSARY,
            f"lambda^m*omega^((3+m)/2) = {lhs:.12g} vs gamma = {gamma}",
        )
        win = gfirst_window(cert.omega, gamma)
        gates["window"] = Gate(
            None if win is None else [win[0], win[1]], CITE_WINDOW,
            "empty" if win is None else f"lambda in window: {win[0] < lam < win[1]}",
        )
    if graph.name == "whitehead" and m >= 1:
        thr = whitehead_threshold(m)
        gates["whitehead_threshold"] = Gate(thr, CITE_WHITEHEAD, f"lambda > threshold: {lam > thr}")
    return CriterionReport(graph.name, lam, m, gates)


SWEEP_COLUMNS = ("space", "lambda", "m", "ahlfors_regular", "llc", "excluded", "in_window")


def sweep(space: WeldingGraph | str, lams: Iterable[float], ms: Sequence[int]) -> list[dict]:
    """One row per (lambda, m), lambda-major, in input order."""
    graph = load_space(space) if isinstance(space, str) else space
    rows = []
    for lam in lams:
        for m in ms:
            rep = report(graph, lam, m)
            win = rep.gates["window"].value
            rows.append({
                "space": rep.space,
                "lambda": lam,
                "m": m,
                "ahlfors_regular": rep.gates["ahlfors_regular"].value,
                "llc": rep.gates["llc"].value,
                "excluded": rep.gates["excluded"].value,
                "in_window": None if win is None else bool(win[0] < lam < win[1]),
            })
    return rows


def lambda_grid(lo: float, hi: float, steps: int) -> list[float]:
    if steps < 0:
        raise DomainError("steps must be >= 0")
    if steps == 0:
        return []
    if steps == 1:
        return [lo]
    return [lo + (hi - lo) * i / (steps - 1) for i in range(steps)]

