"""Case I (I = 4k >= 12) rectangular necklace packing and its verifier."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..errors import ConstructionError, DegenerateConfiguration, DomainError
from .geometry import (
    TAU,
    Frame,
    RectTorus,
    containment_margin,
    disjoint_margin,
    linking_number,
    orientation,
    placed,
)

SIMILARITY_TOL = 1e-9


class UnsupportedCase(DomainError):
    pass


@dataclass(frozen=True)
class Case1Parameters:
    I: int
    K: int
    lam: float
    A: float
    B: float
    a: float
    b: float
    eps: float
    delta: float

    def relations(self) -> dict[str, float]:
        """Residuals of the fitting relations; all vanish (or are positive slacks)."""
        lam, K, eps, d = self.lam, self.K, self.eps, self.delta
        A, B, a, b = self.A, self.B, self.a, self.b
        return {
            "ratio": max(abs(a / A - lam), abs(b / B - lam)),
            "fit-bothsides": abs((B + 1) - (a + lam)),
            "fit-more": max(abs((A + 1) - lam**-2), abs((B + 1) - 1 / lam)),
            "fit-longsides": abs((A + 1) - (K * (a + lam) - (K - 1) * (2 + eps) * lam + 2 * (1 + d) * lam)),
            "cubic": abs(2 * (K - 2) * lam**3 - K * lam + 1),
            # the two strict inequalities, reported as positive slack
            "epsilon": (a + lam) - 2 * (2 + eps) * lam,
            "delta": 1 - (3 + d) * lam,
        }

    def to_json(self) -> dict:
        return {
            "I": self.I, "K": self.K, "lambda": self.lam, "A": self.A, "B": self.B,
            "a": self.a, "b": self.b, "epsilon": self.eps, "delta": self.delta,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Case1Parameters":
        return cls(int(d["I"]), int(d["K"]), float(d["lambda"]), float(d["A"]), float(d["B"]),
                   float(d["a"]), float(d["b"]), float(d["epsilon"]), float(d["delta"]))


def _cubic_root(K: int) -> float:
    f = lambda x: 2 * (K - 2) * x**3 - K * x + 1  # noqa: E731
    lo, hi = 0.0, 0.3
    if not (f(lo) > 0 > f(hi)):
        raise ConstructionError(f"cubic for K={K} has no sign change on (0, 0.3)", "cubic")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16:
            break
    x = 0.5 * (lo + hi)
    df = 6 * (K - 2) * x**2 - K
    x -= f(x) / df
    return x


def solve_case1_parameters(I: int) -> Case1Parameters:
    if not isinstance(I, (int, np.integer)) or I < 12 or I % 4:
        raise UnsupportedCase(f"only I = 4k >= 12 has a constructor (got I={I}); other cases are verification-only")
    I = int(I)
    K = I // 2 - 1
    lam = _cubic_root(K)
    eps = 1.0 / (10 * K)
    params = Case1Parameters(
        I=I, K=K, lam=lam, A=lam**-2 - 1, B=1 / lam - 1, a=1 / lam - lam, b=1 - lam,
        eps=eps, delta=(K - 1) * eps / 2,
    )
    rel = params.relations()
    if rel["cubic"] >= 1e-14 or rel["epsilon"] <= 0 or rel["delta"] <= 0:
        raise ConstructionError(f"parameter relations fail for I={I}: {rel}", "parameters")
    return params


@dataclass
class NecklaceSolution:
    outer: RectTorus
    tori: list[RectTorus]
    params: Case1Parameters | None = None
    mu: float = 1.0

    def to_json(self) -> dict:
        return {
            "format": "semmeskit-necklace",
            "version": __version__,
            "parameters": None if self.params is None else self.params.to_json(),
            "mu": self.mu,
            "outer": self.outer.to_json(),
            "tori": [t.to_json() for t in self.tori],
        }

    @classmethod
    def from_json(cls, d: dict) -> "NecklaceSolution":
        p = d.get("parameters")
        return cls(
            RectTorus.from_json(d["outer"]),
            [RectTorus.from_json(t) for t in d.get("tori", [])],
            None if p is None else Case1Parameters.from_json(p),
            float(d.get("mu", 1.0)),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "NecklaceSolution":
        return cls.from_json(json.loads(Path(path).read_text()))


def _raw_case1(p: Case1Parameters) -> tuple[RectTorus, list[RectTorus]]:
    lam, K, A, B, a, b = p.lam, p.K, p.A, p.B, p.a, p.b
    outer = RectTorus(A, B, 1.0)
    side = orientation(2, 1, 3)
    flat = orientation(1, 2, 3)
    upright = orientation(1, 3, 2)
    gap = (1 + p.delta) * lam
    step = (a + lam) - (2 + p.eps) * lam
    half = lam / 2

    def front(idx: int, x0: float, y_mid: float) -> RectTorus:
        if idx % 2 == 0:
            return placed(a, b, lam, upright, (x0, y_mid - half, -0.5))
        return placed(a, b, lam, flat, (x0, y_mid - 0.5, -half))

    tori: list[RectTorus] = [placed(a, b, lam, side, (-0.5, -0.5, -half))]
    xs = [-0.5 + gap + j * step for j in range(K)]
    for j in range(K):
        tori.append(front(2 + j, xs[j], 0.0))
    tori.append(placed(a, b, lam, side, (A - 0.5, -0.5, -half)))
    for j in range(1, K + 1):
        # T_{K+2+j} mirrors T_{K+2-j} onto the back long side
        src = K + 2 - j
        tori.append(front(src, xs[src - 2], B))
    return outer, tori


def _shrink(t: RectTorus, mu: float) -> RectTorus:
    c = t.center()
    return t.transformed(Frame(np.eye(3), (1 - mu) * c, mu))


def place_case1(params: Case1Parameters | int, I: int | None = None) -> NecklaceSolution:
    if not isinstance(params, Case1Parameters):
        params = solve_case1_parameters(int(params))
    if I is not None and I != params.I:
        raise DomainError(f"parameters were solved for I={params.I}, not I={I}")
    outer, raw = _raw_case1(params)
    margin = min(disjoint_margin(s, t) for s, t in itertools.combinations(raw, 2))
    if margin <= 0:
        raise ConstructionError(f"tightly fitted tori overlap (margin {margin:.3g})", "disjointness")
    mu = 1 - margin / (10 * outer.diameter())
    sol = NecklaceSolution(outer, [_shrink(t, mu) for t in raw], params, mu)
    cert = verify_necklace(sol)
    if not cert.ok:
        raise ConstructionError(f"placed necklace fails verification: {cert.failure}", cert.failure)
    return sol


# ---------------------------------------------------------------------------
# verification


@dataclass
class CheckResult:
    name: str
    ok: bool
    margin: float
    offending: list = field(default_factory=list)
    detail: str = ""

    def to_json(self) -> dict:
        return {"name": self.name, "ok": self.ok, "margin": self.margin,
                "offending": self.offending, "detail": self.detail}


@dataclass
class NecklaceCertificate:
    checks: list[CheckResult]
    linking: list[list[int | None]]
    statement: str = "linking-number pattern verified"

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def failure(self) -> str | None:
        for c in self.checks:
            if not c.ok:
                return c.name
        return None

    def check(self, name: str) -> CheckResult:
        return next(c for c in self.checks if c.name == name)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "failure": self.failure,
            "statement": self.statement if self.ok else None,
            "checks": [c.to_json() for c in self.checks],
            "linking": self.linking,
        }


def _safe_lk(s: RectTorus, t: RectTorus) -> int | None:
    try:
        return linking_number(s.core(), t.core())
    except DegenerateConfiguration:
        try:
            return linking_number(t.core(), s.core())
        except DegenerateConfiguration:
            return None


def verify_necklace(sol: NecklaceSolution, tol: float = TAU) -> NecklaceCertificate:
    tori = sol.tori
    n = len(tori)
    pairs = list(itertools.combinations(range(n), 2))
    checks: list[CheckResult] = []

    margins = {(i, j): disjoint_margin(tori[i], tori[j]) for i, j in pairs}
    bad = [[i + 1, j + 1] for (i, j), m in margins.items() if m <= tol]
    checks.append(CheckResult("disjointness", not bad, min(margins.values(), default=math.inf), bad))

    clear = [containment_margin(sol.outer, t) for t in tori]
    bad = [i + 1 for i, c in enumerate(clear) if c < tol]
    checks.append(CheckResult("containment", not bad, min(clear, default=math.inf), bad))

    lk: list[list[int | None]] = [[0] * n for _ in range(n)]
    bad = []
    for i, j in pairs:
        v = _safe_lk(tori[i], tori[j])
        lk[i][j] = lk[j][i] = v
        consecutive = n >= 3 and (j - i == 1 or (i == 0 and j == n - 1))
        want = 1 if consecutive else 0
        if v is None or abs(v) != want:
            bad.append([i + 1, j + 1])
    checks.append(CheckResult("linking", not bad, 0.0 if bad else 1.0, bad,
                              "|lk| = 1 for cyclically consecutive pairs, 0 otherwise"))

    A, B, L = sol.outer.dims()
    dev = []
    for t in tori:
        a, b, lam = t.dims()
        r = (a / A, b / B, lam / L)
        dev.append(max(r) - min(r))
    bad = [i + 1 for i, d in enumerate(dev) if d > SIMILARITY_TOL]
    checks.append(CheckResult("similarity", not bad, max(dev, default=0.0), bad,
                              "max spread of a_i/A, b_i/B, lambda_i/lambda"))
    return NecklaceCertificate(checks, lk)


# ---------------------------------------------------------------------------
# mesh export

_TRIANGLES = [
    (0, 1, 3), (0, 3, 2), (4, 6, 7), (4, 7, 5), (0, 4, 5), (0, 5, 1),
    (2, 3, 7), (2, 7, 6), (0, 2, 6), (0, 6, 4), (1, 5, 7), (1, 7, 3),
]


def export_obj(sol: NecklaceSolution | None, path: str | Path) -> None:
    """Wavefront OBJ with one group per torus (outer first), four boxes each."""
    lines = [f"# semmeskit {__version__} necklace mesh"]
    if sol is not None and sol.tori:
        named = [("outer", sol.outer)] + [(f"T{i + 1}", t) for i, t in enumerate(sol.tori)]
        base = 0
        for name, torus in named:
            lines.append(f"g {name}")
            faces = []
            for box in torus.boxes():
                for v in box.corners():
                    lines.append("v {:.12g} {:.12g} {:.12g}".format(*v))
                faces.extend(f"f {base + p + 1} {base + q + 1} {base + r + 1}" for p, q, r in _TRIANGLES)
                base += 8
            lines.extend(faces)
    Path(path).write_text("\n".join(lines) + "\n")
