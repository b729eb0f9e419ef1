"""Discrete p-modulus of curve families and the wall-family modulus bounds.

A density rho >= 0 on the vertices is admissible when every curve has
rho-length sum_{v in curve} ell(v) rho(v) >= 1; the modulus is the least
value of sum_v mu(v) rho(v)^p over admissible densities.

The restricted programs met during constraint generation are solved through
their concave dual

    g(lam) = sum(lam) - (p - 1) sum_v mu_v (c_v / (p mu_v))^(p/(p-1)),
    c = N^T lam,  rho_v = (c_v / (p mu_v))^(1/(p-1)),

so every iterate gives a certified lower bound g(lam) next to the primal
upper bound of the (rescaled) density.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Hashable, Sequence

import numpy as np
from scipy.optimize import minimize

from .criteria import certificate
from .errors import ConvergenceError, DomainError
from .welding import WeldingGraph, growth_order, load_space

VIOLATION_TOL = 1e-8
OBJECTIVE_TOL = 1e-10
KKT_TOL = 1e-6
WALL_NORMALIZATION = "C=1; the true constant depends on the quasisymmetry gauge and the metric"

Oracle = Callable[[np.ndarray], tuple[float, tuple[int, ...]]]


@dataclass
class ModulusProblem:
    """Vertex weights plus either an explicit curve list or a shortest-curve oracle.

    Curves are multisets of vertex indices.  ``oracle(rho)`` must return the
    minimal rho-length over the family together with a curve attaining it.
    """

    vertices: tuple[Hashable, ...]
    mu: np.ndarray
    ell: np.ndarray
    p: float = 2.0
    curves: list[tuple[int, ...]] | None = None
    oracle: Oracle | None = field(default=None, repr=False)

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.ell = np.asarray(self.ell, dtype=float)
        n = len(self.vertices)
        if self.mu.shape != (n,) or self.ell.shape != (n,):
            raise DomainError("mu and ell need one entry per vertex")
        if np.any(self.mu <= 0) or np.any(self.ell <= 0):
            raise DomainError("weights mu and ell must be positive")
        if not self.p > 1:
            raise DomainError(f"exponent p must exceed 1, got {self.p}")
        if (self.curves is None) == (self.oracle is None):
            raise DomainError("give exactly one of an explicit curve list or an oracle")
        if self.curves is not None:
            curves = []
            for c in self.curves:
                c = tuple(int(v) for v in c)
                if not c:
                    raise DomainError("curves must be nonempty")
                if min(c) < 0 or max(c) >= n:
                    raise DomainError(f"curve {c} refers to an unknown vertex")
                curves.append(c)
            self.curves = curves

    @classmethod
    def from_curves(cls, mu: dict, curves: Sequence[Sequence[Hashable]], ell: dict | None = None,
                    p: float = 2.0) -> "ModulusProblem":
        vertices = tuple(mu)
        index = {v: i for i, v in enumerate(vertices)}
        ell = ell or {}
        try:
            cur = [tuple(index[v] for v in c) for c in curves]
        except KeyError as exc:
            raise DomainError(f"curve mentions vertex {exc.args[0]!r} with no measure weight") from None
        return cls(vertices, np.array([mu[v] for v in vertices]),
                   np.array([ell.get(v, 1.0) for v in vertices]), p, cur)

    @classmethod
    def from_json(cls, data: dict, p: float | None = None) -> "ModulusProblem":
        mu = data["mu"]
        return cls.from_curves(mu, data["curves"], data.get("ell"), p if p is not None else data.get("p", 2.0))

    @classmethod
    def load(cls, path: str | Path, p: float | None = None) -> "ModulusProblem":
        return cls.from_json(json.loads(Path(path).read_text()), p)

    def to_json(self) -> dict:
        if self.curves is None:
            raise DomainError("an oracle family has no finite JSON form")
        keys = [str(v) for v in self.vertices]
        return {
            "mu": dict(zip(keys, self.mu.tolist())),
            "ell": dict(zip(keys, self.ell.tolist())),
            "curves": [[keys[i] for i in c] for c in self.curves],
            "p": self.p,
        }

    def scaled(self, c: float) -> "ModulusProblem":
        return ModulusProblem(self.vertices, c * self.mu, self.ell, self.p, self.curves, self.oracle)

    def row(self, curve: Sequence[int]) -> np.ndarray:
        r = np.zeros(len(self.vertices))
        np.add.at(r, np.asarray(curve, dtype=int), self.ell[np.asarray(curve, dtype=int)])
        return r

    def shortest(self, rho: np.ndarray) -> tuple[float, tuple[int, ...]]:
        if self.oracle is not None:
            return self.oracle(rho)
        best, arg = math.inf, ()
        for c in self.curves:
            length = float(self.row(c) @ rho)
            if length < best:
                best, arg = length, c
        return best, arg


@dataclass
class ConvergenceReport:
    rounds: int
    max_violation: float
    relative_change: float
    stationarity: float
    complementarity: float
    dual_bound: float
    history: list[float]

    def to_json(self) -> dict:
        return {
            "rounds": self.rounds,
            "max_violation": self.max_violation,
            "relative_change": self.relative_change,
            "stationarity": self.stationarity,
            "complementarity": self.complementarity,
            "dual_bound": self.dual_bound,
        }


@dataclass
class ModulusResult:
    value: float
    density: np.ndarray
    vertices: tuple
    active: list[tuple[int, ...]]
    multipliers: np.ndarray
    report: ConvergenceReport

    def density_map(self) -> dict:
        return dict(zip(self.vertices, self.density.tolist()))

    def to_json(self) -> dict:
        keys = [str(v) for v in self.vertices]
        return {
            "value": self.value,
            "density": dict(zip(keys, self.density.tolist())),
            "active": [[keys[i] for i in c] for c in self.active],
            "multipliers": self.multipliers.tolist(),
            "report": self.report.to_json(),
        }


# ---------------------------------------------------------------------------
# restricted program


class _Dual:
    def __init__(self, N: np.ndarray, mu: np.ndarray, p: float):
        self.N, self.mu, self.p = N, mu, p
        self.q = 1.0 / (p - 1.0)

    def rho(self, lam: np.ndarray) -> np.ndarray:
        c = np.maximum(self.N.T @ lam, 0.0)
        return (c / (self.p * self.mu)) ** self.q

    def value(self, lam: np.ndarray) -> float:
        rho = self.rho(lam)
        return float(lam.sum() - (self.p - 1.0) * np.sum(self.mu * rho**self.p))

    def neg(self, lam: np.ndarray) -> tuple[float, np.ndarray]:
        rho = self.rho(lam)
        g = lam.sum() - (self.p - 1.0) * np.sum(self.mu * rho**self.p)
        return -g, -(1.0 - self.N @ rho)

    def jacobian(self, lam: np.ndarray, rows: np.ndarray) -> np.ndarray:
        c = self.N.T @ lam
        d = np.zeros_like(c)
        pos = c > 0
        d[pos] = self.q * (c[pos] / (self.p * self.mu[pos])) ** self.q / c[pos]
        Na = self.N[rows]
        return (Na * d) @ Na.T


def _polish(dual: _Dual, lam: np.ndarray, tol: float = 1e-14, iters: int = 100) -> np.ndarray:
    """Newton on the tight constraints of the active set."""
    lam = lam.copy()
    for _ in range(iters):
        r = dual.N @ dual.rho(lam) - 1.0
        rows = np.flatnonzero((lam > 0) | (r < -tol))
        if rows.size == 0:
            break
        F = r[rows]
        if np.abs(F).max() < tol:
            break
        J = dual.jacobian(lam, rows)
        step = np.linalg.lstsq(J, F, rcond=None)[0]
        base = np.abs(F).max()
        t = 1.0
        for _ in range(40):
            new = lam.copy()
            new[rows] = np.maximum(lam[rows] - t * step, 0.0)
            rn = dual.N @ dual.rho(new) - 1.0
            worst = max(np.abs(rn[(new > 0)]).max(initial=0.0), (-rn).max(initial=0.0))
            if worst < base:
                lam = new
                break
            t *= 0.5
        else:
            break
    return lam


def _solve_restricted(N: np.ndarray, mu: np.ndarray, p: float, lam0: np.ndarray) -> np.ndarray:
    dual = _Dual(N, mu, p)
    res = minimize(dual.neg, lam0, jac=True, method="L-BFGS-B",
                   bounds=[(0.0, None)] * len(lam0),
                   options={"maxiter": 20000, "ftol": 1e-16, "gtol": 1e-12, "maxcor": 30})
    return _polish(dual, np.maximum(res.x, 0.0))


def solve(problem: ModulusProblem, max_rounds: int = 5000) -> ModulusResult:
    """Constraint generation: add the most violated curve, re-solve, repeat."""
    p, mu = problem.p, problem.mu
    n = len(problem.vertices)
    active: list[tuple[int, ...]] = []
    rows: list[np.ndarray] = []
    lam = np.zeros(0)
    rho = np.zeros(n)
    history: list[float] = []
    violation = change = math.inf
    for rounds in range(1, max_rounds + 1):
        length, curve = problem.shortest(rho)
        violation = 1.0 - length
        change = abs(history[-1] - history[-2]) / max(abs(history[-1]), 1e-300) if len(history) > 1 else math.inf
        if violation < VIOLATION_TOL and change < OBJECTIVE_TOL:
            break
        if violation >= VIOLATION_TOL:
            if tuple(curve) in active:
                raise ConvergenceError(
                    f"restricted solve left an active curve violated by {violation:.3g}",
                    {"max_violation": violation, "rounds": rounds},
                )
            active.append(tuple(curve))
            rows.append(problem.row(curve))
            lam = np.append(lam, 0.0)
        N = np.array(rows)
        if not lam.any():
            lam[-1] = 1.0
        lam = _solve_restricted(N, mu, p, lam)
        rho = _Dual(N, mu, p).rho(lam)
        history.append(float(np.sum(mu * rho**p)))
    else:
        raise ConvergenceError(
            f"no convergence within {max_rounds} rounds",
            {"max_violation": violation, "relative_change": change, "rounds": max_rounds},
        )

    N = np.array(rows)
    dual = _Dual(N, mu, p)
    length, _ = problem.shortest(rho)
    # rescale onto the admissible side; the factor is 1 up to the tolerance
    density = rho / min(length, 1.0) if length > 0 else rho
    value = float(np.sum(mu * density**p))
    c = N.T @ lam
    grad = p * mu * density ** (p - 1)
    stationarity = float(np.abs(grad - c).max() / max(np.abs(c).max(), 1e-300))
    slack = N @ density - 1.0
    complementarity = float(np.abs(lam * slack).max() / max(lam.max(), 1e-300))
    report = ConvergenceReport(
        rounds=rounds, max_violation=max(0.0, 1.0 - length), relative_change=change,
        stationarity=stationarity, complementarity=complementarity,
        dual_bound=dual.value(lam), history=history,
    )
    if stationarity > KKT_TOL or complementarity > KKT_TOL:
        raise ConvergenceError("KKT residual above tolerance", report.to_json())
    keep = lam > 0
    return ModulusResult(value, density, problem.vertices,
                         [c for c, k in zip(active, keep) if k], lam[keep], report)


# ---------------------------------------------------------------------------
# fixtures


def grid_path_family(n: int) -> ModulusProblem:
    """Left-to-right paths on the n x n grid of the unit square.

    A path visits one cell per column and moves to a row differing by at
    most one in the next column.  Cells have measure 1/n^2 and length 1/n,
    p = 2; the family is given through a column-by-column shortest-path oracle.
    """
    if n < 2:
        raise DomainError(f"grid needs n >= 2, got {n}")
    vertices = tuple((r, c) for c in range(n) for r in range(n))
    h = 1.0 / n

    def oracle(rho: np.ndarray) -> tuple[float, tuple[int, ...]]:
        w = h * rho.reshape(n, n)  # column-major: w[c, r]
        cost = w[0].copy()
        back = np.zeros((n, n), dtype=int)
        for c in range(1, n):
            cand = np.full((3, n), np.inf)
            cand[0] = cost
            cand[1, 1:] = cost[:-1]
            cand[2, :-1] = cost[1:]
            k = np.argmin(cand, axis=0)  # first minimum keeps ties deterministic
            back[c] = np.arange(n) - np.array([0, 1, -1])[k]
            cost = cand[k, np.arange(n)] + w[c]
        r = int(np.argmin(cost))
        rows = [r]
        for c in range(n - 1, 0, -1):
            r = int(back[c, r])
            rows.append(r)
        rows.reverse()
        return float(cost.min()), tuple(c * n + rows[c] for c in range(n))

    return ModulusProblem(vertices, np.full(n * n, h * h), np.full(n * n, h), 2.0, None, oracle)


def grid_paths(n: int) -> list[tuple[int, ...]]:
    """Explicit enumeration of the grid family (small n only)."""
    out = []

    def walk(c, r, acc):
        acc = acc + (c * n + r,)
        if c == n - 1:
            out.append(acc)
            return
        for d in (-1, 0, 1):
            if 0 <= r + d < n:
                walk(c + 1, r + d, acc)

    for r in range(n):
        walk(0, r, ())
    return out


def single_curve(n: int, p: float) -> ModulusProblem:
    """One curve through n unit-weight vertices; modulus n^(1-p)."""
    return ModulusProblem(tuple(range(n)), np.ones(n), np.ones(n), p, [tuple(range(n))])


# ---------------------------------------------------------------------------
# wall bounds


def wall_exponent(m: int) -> float:
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    return (3 + m) / (1 + m)


def wall_lower_bound(countY: int, a: float, lam: float, k: int, m: int) -> float:
    """(countY (a/lam^k)^m)^(1-p), p = (3+m)/(1+m), constant normalised to 1."""
    if countY < 1 or a <= 0 or not 0 < lam < 1 or k < 0:
        raise DomainError("need countY >= 1, a > 0, lambda in (0, 1), k >= 0")
    p = wall_exponent(m)
    return (countY * (a / lam**k) ** m) ** (1 - p)


def wall_upper_bound(circ: float, m: int) -> float:
    """(1/circ)^p, p = (3+m)/(1+m), constant normalised to 1."""
    if circ < 1:
        raise DomainError(f"circulation must be >= 1, got {circ}")
    return (1.0 / circ) ** wall_exponent(m)


@dataclass
class GapRow:
    d: int
    circ: float
    lower: float
    upper: float

    @property
    def ratio(self) -> float:
        return self.lower / self.upper

    def to_json(self) -> dict:
        return {"d": self.d, "circ": self.circ, "lower": self.lower, "upper": self.upper, "ratio": self.ratio}


@dataclass
class GapReport:
    space: str
    lam: float
    m: int
    rows: list[GapRow]
    slope: float | None
    excluded: bool | None

    def to_json(self) -> dict:
        return {
            "space": self.space, "lambda": self.lam, "m": self.m,
            "normalization": WALL_NORMALIZATION,
            "rows": [r.to_json() for r in self.rows],
            "log_ratio_slope": self.slope,
            "excluded": self.excluded,
        }


def gap_analysis(space: WeldingGraph | str, lam: float, m: int, depth: int) -> GapReport:
    """Lower versus upper wall-modulus bound over level gaps d = 1..depth.

    Both bounds must agree up to a constant for a parametrizable space, so a
    geometrically diverging ratio lower/upper excludes parametrization.  The
    per-level growth rate of log(ratio) is p log omega - (p-1)(log gamma - m log lam);
    it is estimated by a least-squares fit over the rows when depth >= 2.
    """
    graph = load_space(space) if isinstance(space, str) else space
    cert = certificate(graph)
    if cert is None:
        raise DomainError(f"space {graph.name!r} has no circulation certificate")
    if not 0 < lam < 1:
        raise DomainError(f"lambda must lie in (0, 1), got {lam}")
    if depth < 0:
        raise DomainError("depth must be >= 0")
    gamma = growth_order(graph)
    p = wall_exponent(m)
    rows = []
    for d in range(1, depth + 1):
        circ = float(cert.bound(d))
        rows.append(GapRow(d, circ, wall_lower_bound(gamma**d, 1.0, lam, d, m), wall_upper_bound(circ, m)))
    if not rows:
        return GapReport(graph.name, lam, m, rows, None, None)
    if len(rows) == 1:
        slope = p * math.log(cert.omega) - (p - 1) * (math.log(gamma) - m * math.log(lam))
    else:
        d = np.array([r.d for r in rows], dtype=float)
        y = np.array([math.log(r.lower) - math.log(r.upper) for r in rows])
        slope = float(np.polyfit(d, y, 1)[0])
    scale = p * abs(math.log(cert.omega)) + (p - 1) * (abs(math.log(gamma)) + m * abs(math.log(lam)))
    return GapReport(graph.name, lam, m, rows, slope, bool(slope > 1e-9 * max(scale, 1.0)))
