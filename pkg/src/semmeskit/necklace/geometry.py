"""Rectangular solid tori, oriented boxes and the predicates on them."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateConfiguration, DomainError

TAU = 1e-9


@dataclass(frozen=True)
class Frame:
    """Similarity x -> scale * rotation @ x + translation (rotation proper)."""

    rotation: np.ndarray
    translation: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)
        if not self.scale > 0:
            raise DomainError(f"frame scale must be positive, got {self.scale}")
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-9) or np.linalg.det(r) < 0:
            raise DomainError("frame rotation must be a proper orthogonal matrix")

    @classmethod
    def identity(cls) -> "Frame":
        return cls(np.eye(3), np.zeros(3), 1.0)

    def apply(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return self.scale * pts @ self.rotation.T + self.translation

    def inverse_apply(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return ((pts - self.translation) @ self.rotation) / self.scale

    def then(self, other: "Frame") -> "Frame":
        """The similarity ``other o self``."""
        return Frame(
            other.rotation @ self.rotation,
            other.scale * other.rotation @ self.translation + other.translation,
            other.scale * self.scale,
        )

    def to_json(self) -> dict:
        return {
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
            "scale": self.scale,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Frame":
        return cls(np.array(d["rotation"]), np.array(d["translation"]), float(d.get("scale", 1.0)))


def orientation(p: int, q: int, r: int) -> np.ndarray:
    """Proper rotation sending e1, e2, e3 to +-e_p, +-e_q, +-e_r.

    The sign of the last column is chosen to make the determinant +1; a
    rectangular torus is symmetric under the reflections involved, so the
    image set matches the signed-permutation orientation up to translation.
    """
    if sorted((p, q, r)) != [1, 2, 3]:
        raise DomainError(f"({p},{q},{r}) is not a permutation of (1,2,3)")
    m = np.zeros((3, 3))
    m[p - 1, 0] = 1.0
    m[q - 1, 1] = 1.0
    m[r - 1, 2] = 1.0
    if np.linalg.det(m) < 0:
        m[:, 1] *= -1.0
    return m


@dataclass(frozen=True)
class OrientedBox:
    center: np.ndarray
    axes: np.ndarray  # columns are unit axes
    half: np.ndarray

    def corners(self) -> np.ndarray:
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=3)))
        return self.center + (signs * self.half) @ self.axes.T

    def project(self, u: np.ndarray) -> tuple[float, float]:
        c = float(self.center @ u)
        r = float(np.sum(self.half * np.abs(self.axes.T @ u)))
        return c - r, c + r


def _axes(r1: np.ndarray, r2: np.ndarray) -> np.ndarray:
    cross = np.cross(r1.T[:, None, :], r2.T[None, :, :]).reshape(9, 3)
    norms = np.linalg.norm(cross, axis=1)
    keep = norms > 1e-12
    return np.vstack([r1.T, r2.T, cross[keep] / norms[keep, None]])


def _separations(c1, r1, h1, c2, r2, h2) -> np.ndarray:
    """Pairwise separating-axis gaps between two families of boxes.

    Each family shares one rotation; c and h are (n, 3) centres and half-sizes.
    """
    u = _axes(r1, r2)
    p1, p2 = c1 @ u.T, c2 @ u.T
    s1, s2 = h1 @ np.abs(r1.T @ u.T), h2 @ np.abs(r2.T @ u.T)
    gap = np.maximum(
        (p2 - s2)[None, :, :] - (p1 + s1)[:, None, :],
        (p1 - s1)[:, None, :] - (p2 + s2)[None, :, :],
    )
    return gap.max(axis=2)


def box_separation(b1: OrientedBox, b2: OrientedBox) -> float:
    """Largest gap between the projections over the 15 separating-axis candidates.

    Positive means the boxes are disjoint and at least that far apart;
    non-positive means they intersect (or touch).
    """
    return float(_separations(b1.center[None], b1.axes, b1.half[None],
                              b2.center[None], b2.axes, b2.half[None])[0, 0])


@dataclass(frozen=True)
class RectTorus:
    """Similarity image of T(a, b, lam) = (R+ minus R-) x [-lam/2, lam/2].

    R+ = [-lam/2, a+lam/2] x [-lam/2, b+lam/2] and R- is the open rectangle
    (lam/2, a-lam/2) x (lam/2, b-lam/2); the core is the boundary of
    [0, a] x [0, b] in the plane x3 = 0.
    """

    a: float
    b: float
    lam: float
    frame: Frame = Frame.identity()

    def __post_init__(self):
        if not (self.a > self.b > self.lam > 0):
            raise DomainError(f"need a > b > lambda > 0, got a={self.a}, b={self.b}, lambda={self.lam}")

    def reference_boxes(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """(lo, hi) corners of front, back, left and right sides."""
        a, b, h = self.a, self.b, self.lam / 2
        return [
            (np.array([-h, -h, -h]), np.array([a + h, h, h])),
            (np.array([-h, b - h, -h]), np.array([a + h, b + h, h])),
            (np.array([-h, -h, -h]), np.array([h, b + h, h])),
            (np.array([a - h, -h, -h]), np.array([a + h, b + h, h])),
        ]

    def box_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Centres and half-sizes (4 x 3 each) of the placed side boxes."""
        ref = self.reference_boxes()
        lo = np.array([b[0] for b in ref])
        hi = np.array([b[1] for b in ref])
        f = self.frame
        return f.apply((lo + hi) / 2), f.scale * (hi - lo) / 2

    def boxes(self) -> list[OrientedBox]:
        c, h = self.box_arrays()
        return [OrientedBox(c[i], self.frame.rotation.copy(), h[i]) for i in range(4)]

    def core(self) -> "CoreCurve":
        pts = np.array([[0, 0, 0], [self.a, 0, 0], [self.a, self.b, 0], [0, self.b, 0]], dtype=float)
        return CoreCurve(self.frame.apply(pts))

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        corners = np.vstack([b.corners() for b in self.boxes()])
        return corners.min(axis=0), corners.max(axis=0)

    def center(self) -> np.ndarray:
        lo, hi = self.bounding_box()
        return (lo + hi) / 2

    def diameter(self) -> float:
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    def dims(self) -> tuple[float, float, float]:
        """(a, b, lambda) of the torus as placed, i.e. times the frame scale."""
        s = self.frame.scale
        return s * self.a, s * self.b, s * self.lam

    def transformed(self, frame: Frame) -> "RectTorus":
        return RectTorus(self.a, self.b, self.lam, self.frame.then(frame))

    def to_json(self) -> dict:
        return {"a": self.a, "b": self.b, "lambda": self.lam, "frame": self.frame.to_json()}

    @classmethod
    def from_json(cls, d: dict) -> "RectTorus":
        return cls(float(d["a"]), float(d["b"]), float(d["lambda"]), Frame.from_json(d["frame"]))


def placed(a: float, b: float, lam: float, rotation: np.ndarray, lower_corner) -> RectTorus:
    """Torus T(a, b, lam) rotated and translated so its bounding box starts at ``lower_corner``."""
    t = RectTorus(a, b, lam, Frame(rotation, np.zeros(3)))
    lo, _ = t.bounding_box()
    return RectTorus(a, b, lam, Frame(rotation, np.asarray(lower_corner, dtype=float) - lo))


def disjoint_margin(t1: RectTorus, t2: RectTorus) -> float:
    """Smallest separating-axis gap over the 16 side-box pairs."""
    c1, h1 = t1.box_arrays()
    c2, h2 = t2.box_arrays()
    return float(_separations(c1, t1.frame.rotation, h1, c2, t2.frame.rotation, h2).min())


def disjoint(t1: RectTorus, t2: RectTorus, tol: float = TAU) -> bool:
    return disjoint_margin(t1, t2) > tol


def containment_margin(outer: RectTorus, inner: RectTorus) -> float:
    """Clearance of ``inner`` inside the solid ``outer`` (world units; > 0 means inside)."""
    f = outer.frame
    a, b, h = outer.a, outer.b, outer.lam / 2
    plus_lo = np.array([-h, -h, -h])
    plus_hi = np.array([a + h, b + h, h])
    # express the inner boxes in outer reference coordinates
    c, half = inner.box_arrays()
    c = f.inverse_apply(c)
    half = half / f.scale
    rot = f.rotation.T @ inner.frame.rotation
    reach = half @ np.abs(rot.T)
    inside = min((c - reach - plus_lo).min(), (plus_hi - c - reach).min())
    # the hole R- x R restricted to a slab comfortably thicker than the torus
    hole_c = np.array([[a / 2, b / 2, 0.0]])
    hole_h = np.array([[a / 2 - h, b / 2 - h, 4 * h + 1.0]])
    away = _separations(c, rot, half, hole_c, np.eye(3), hole_h).min()
    return float(min(inside, away) * f.scale)


def contains(outer: RectTorus, inner: RectTorus, tol: float = TAU) -> bool:
    return containment_margin(outer, inner) >= tol


# ---------------------------------------------------------------------------
# curves and linking


@dataclass(frozen=True)
class CoreCurve:
    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3 or len(v) < 3:
            raise DomainError("a closed polygon needs at least 3 vertices in R^3")
        object.__setattr__(self, "vertices", v)

    def segments(self) -> list[tuple[np.ndarray, np.ndarray]]:
        v = self.vertices
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    def normal(self) -> np.ndarray:
        """Newell normal: right-handed with respect to the vertex order."""
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        n = np.array([
            np.sum((v[:, 1] - w[:, 1]) * (v[:, 2] + w[:, 2])),
            np.sum((v[:, 2] - w[:, 2]) * (v[:, 0] + w[:, 0])),
            np.sum((v[:, 0] - w[:, 0]) * (v[:, 1] + w[:, 1])),
        ])
        norm = np.linalg.norm(n)
        if norm == 0:
            raise DegenerateConfiguration("polygon has zero area")
        return n / norm

    def planarity_defect(self) -> float:
        n = self.normal()
        d = (self.vertices - self.vertices[0]) @ n
        return float(np.abs(d).max())

    def transformed(self, frame: Frame) -> "CoreCurve":
        return CoreCurve(frame.apply(self.vertices))


def rectangle(p0, p1, p2, p3) -> CoreCurve:
    return CoreCurve(np.array([p0, p1, p2, p3], dtype=float))


def segment_distance(p0, p1, q0, q1) -> float:
    """Euclidean distance between two closed segments."""
    p0, p1, q0, q1 = (np.asarray(x, dtype=float) for x in (p0, p1, q0, q1))
    d1, d2, r = p1 - p0, q1 - q0, p0 - q0
    a, e, f = d1 @ d1, d2 @ d2, d2 @ r
    if a <= 1e-300 and e <= 1e-300:
        return float(np.linalg.norm(r))
    if a <= 1e-300:
        s, t = 0.0, min(max(f / e, 0.0), 1.0)
    else:
        c = d1 @ r
        if e <= 1e-300:
            t, s = 0.0, min(max(-c / a, 0.0), 1.0)
        else:
            b = d1 @ d2
            denom = a * e - b * b
            s = min(max((b * f - c * e) / denom, 0.0), 1.0) if denom > 1e-300 else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t, s = 0.0, min(max(-c / a, 0.0), 1.0)
            elif t > 1.0:
                t, s = 1.0, min(max((b - c) / a, 0.0), 1.0)
    return float(np.linalg.norm(p0 + d1 * s - (q0 + d2 * t)))


def curve_distance(c1: CoreCurve, c2: CoreCurve) -> float:
    return min(segment_distance(p0, p1, q0, q1) for p0, p1 in c1.segments() for q0, q1 in c2.segments())


def _plane_basis(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.eye(3)[int(np.argmin(np.abs(n)))]
    u = np.cross(n, helper)
    u /= np.linalg.norm(u)
    return u, np.cross(n, u)


def _point_in_polygon(pt: np.ndarray, poly: np.ndarray) -> bool:
    x, y = pt
    inside = False
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        if (y0 > y) != (y1 > y):
            xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            if xc > x:
                inside = not inside
    return inside


def _distance_to_polygon_2d(pt: np.ndarray, poly: np.ndarray) -> float:
    best = math.inf
    for i in range(len(poly)):
        p, q = poly[i], poly[(i + 1) % len(poly)]
        d = q - p
        t = min(max(float((pt - p) @ d / (d @ d)), 0.0), 1.0)
        best = min(best, float(np.linalg.norm(pt - (p + t * d))))
    return best


def _segment_meets_polygon_2d(p: np.ndarray, q: np.ndarray, poly: np.ndarray, tol: float) -> bool:
    if _point_in_polygon(p, poly) or _point_in_polygon(q, poly):
        return True
    for i in range(len(poly)):
        a, b = poly[i], poly[(i + 1) % len(poly)]
        p3 = np.append(p, 0.0)
        q3 = np.append(q, 0.0)
        if segment_distance(p3, q3, np.append(a, 0.0), np.append(b, 0.0)) <= tol:
            return True
    return False


def linking_number(c1: CoreCurve, c2: CoreCurve, tol: float = TAU) -> int:
    """Signed intersection count of ``c2`` with the flat disk bounded by ``c1``.

    ``c1`` must be planar; the disk is oriented by the right-hand rule from
    the vertex order of ``c1``.  A curve ``c2`` lying entirely in the plane
    of ``c1`` and disjoint from it has linking number 0.
    """
    scale = max(np.ptp(c1.vertices, axis=0).max(), np.ptp(c2.vertices, axis=0).max(), 1.0)
    if c1.planarity_defect() > tol * scale:
        raise DomainError("the first curve must be planar")
    if curve_distance(c1, c2) <= tol:
        raise DegenerateConfiguration("curves intersect or are closer than the tolerance")
    n = c1.normal()
    origin = c1.vertices[0]
    u, w = _plane_basis(n)
    poly = np.column_stack([(c1.vertices - origin) @ u, (c1.vertices - origin) @ w])
    d = (c2.vertices - origin) @ n
    if np.all(np.abs(d) <= tol):
        return 0
    total = 0
    m = len(c2.vertices)
    for i in range(m):
        j = (i + 1) % m
        d0, d1 = d[i], d[j]
        p0, p1 = c2.vertices[i], c2.vertices[j]
        if abs(d0) <= tol and abs(d1) <= tol:
            flat0 = np.array([(p0 - origin) @ u, (p0 - origin) @ w])
            flat1 = np.array([(p1 - origin) @ u, (p1 - origin) @ w])
            if _segment_meets_polygon_2d(flat0, flat1, poly, tol):
                raise DegenerateConfiguration("a segment lies in the spanning disk (non-transversal)")
            continue
        if (d0 > 0) == (d1 > 0):
            continue
        t = d0 / (d0 - d1)
        q = p0 + t * (p1 - p0)
        flat = np.array([(q - origin) @ u, (q - origin) @ w])
        if _distance_to_polygon_2d(flat, poly) <= tol:
            raise DegenerateConfiguration("crossing point on the boundary of the spanning disk")
        if _point_in_polygon(flat, poly):
            total += 1 if d1 > d0 else -1
    return total
