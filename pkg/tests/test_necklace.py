import itertools
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from oracles import cubic_root, projected_linking
from semmeskit.errors import DegenerateConfiguration, DomainError
from semmeskit.necklace import (
    CoreCurve,
    Frame,
    NecklaceSolution,
    RectTorus,
    UnsupportedCase,
    contains,
    containment_margin,
    disjoint,
    export_obj,
    linking_number,
    orientation,
    place_case1,
    rectangle,
    solve_case1_parameters,
    verify_necklace,
)


@pytest.fixture(scope="module")
def sol12():
    return place_case1(12)


# ---------------------------------------------------------------------------
# parameters


def test_case1_parameters_i12():
    p = solve_case1_parameters(12)
    assert p.K == 5
    ref = cubic_root(5)
    assert p.lam == pytest.approx(float(ref), abs=1e-15)
    # closed form of this root: (3 - sqrt 3) / 6, hence A = 11 + 6 sqrt 3
    assert p.lam == pytest.approx((3 - math.sqrt(3)) / 6, abs=1e-15)
    assert p.A == pytest.approx(11 + 6 * math.sqrt(3), rel=1e-13)
    assert p.B == pytest.approx(2 + math.sqrt(3), rel=1e-13)
    assert p.a == pytest.approx(4.5207, abs=1e-4)
    assert p.b == pytest.approx(0.78868, abs=1e-5)
    assert p.a / p.A == pytest.approx(p.lam, rel=1e-12)


@pytest.mark.parametrize("I", [12, 16, 20, 24, 40])
def test_case1_relations(I):
    p = solve_case1_parameters(I)
    assert 0 < p.lam < 0.3
    assert abs(2 * (p.K - 2) * p.lam**3 - p.K * p.lam + 1) < 1e-14
    assert p.lam == pytest.approx(float(cubic_root(p.K)), abs=1e-14)
    rel = p.relations()
    for key in ("ratio", "fit-bothsides", "fit-more", "fit-longsides"):
        assert rel[key] < 1e-10 * max(1.0, p.A)
    assert rel["epsilon"] > 0 and rel["delta"] > 0
    assert 0 < p.eps < 1 / (5 * p.K)
    assert p.delta == pytest.approx((p.K - 1) * p.eps / 2)


@pytest.mark.parametrize("I", [8, 10, 14, 3, 0])
def test_unsupported_cases(I):
    with pytest.raises(UnsupportedCase):
        solve_case1_parameters(I)


# ---------------------------------------------------------------------------
# predicates


def test_disjoint_examples():
    t = RectTorus(4, 1, 0.2)
    far = t.transformed(Frame(np.eye(3), [10, 0, 0]))
    assert disjoint(t, far)
    assert not disjoint(t, t)


def test_box_rotation_invariance_of_disjointness():
    t1 = RectTorus(4, 1, 0.2)
    t2 = t1.transformed(Frame(np.eye(3), [0, 0, 0.5]))
    assert disjoint(t1, t2)
    rot = Rotation.from_euler("xyz", [0.3, -1.1, 2.0]).as_matrix()
    g = Frame(rot, [1, 2, 3], 2.5)
    assert disjoint(t1.transformed(g), t2.transformed(g))
    t3 = t1.transformed(Frame(np.eye(3), [0, 0, 0.1]))
    assert not disjoint(t1.transformed(g), t3.transformed(g))


def test_contains_examples():
    outer = RectTorus(10, 4, 1)
    inner = RectTorus(5, 0.3, 0.2, Frame(np.eye(3), [1, 0, 0]))
    assert contains(outer, inner)
    assert not contains(outer, inner.transformed(Frame(np.eye(3), [0, 1.0, 0])))
    # crossing into the hole
    assert not contains(outer, RectTorus(5, 0.8, 0.2, Frame(np.eye(3), [1, 0, 0])))
    assert containment_margin(outer, inner) > 0


def test_torus_domain():
    with pytest.raises(DomainError):
        RectTorus(1, 2, 0.1)
    with pytest.raises(DomainError):
        Frame(np.diag([1.0, 1.0, -1.0]), np.zeros(3))


def test_orientation_is_proper_permutation():
    for perm in itertools.permutations((1, 2, 3)):
        r = orientation(*perm)
        assert np.linalg.det(r) == pytest.approx(1.0)
        assert sorted(np.abs(r).argmax(axis=0) + 1) == [1, 2, 3]
        assert list(np.abs(r).argmax(axis=0) + 1) == list(perm)


# ---------------------------------------------------------------------------
# linking


C1 = rectangle((0, 0, 0), (2, 0, 0), (2, 1, 0), (0, 1, 0))
C2 = rectangle((1, 0.5, -1), (1, 0.5, 1), (3, 0.5, 1), (3, 0.5, -1))


def test_linking_examples():
    assert abs(linking_number(C1, C2)) == 1
    shifted = CoreCurve(C2.vertices + [10, 0, 0])
    assert linking_number(C1, shifted) == 0
    coplanar = CoreCurve(C1.vertices + [5, 0, 0])
    assert linking_number(C1, coplanar) == 0


def test_linking_degenerate_cases():
    touching = CoreCurve(C2.vertices + [1, 0, 0])  # passes through the edge x = 2
    with pytest.raises(DegenerateConfiguration):
        linking_number(C1, touching)
    in_disk = rectangle((0.5, 0.5, 0), (1.5, 0.5, 0), (1.5, 0.5, 1), (0.5, 0.5, 1))
    with pytest.raises(DegenerateConfiguration):
        linking_number(C1, in_disk)
    bent = CoreCurve(np.array([[0, 0, 0], [1, 0, 0], [1, 1, 1], [0, 1, 0]], dtype=float))
    with pytest.raises(DomainError):
        linking_number(bent, C2)


def test_linking_sign_follows_orientation():
    lk = linking_number(C1, C2)
    assert linking_number(C1, CoreCurve(C2.vertices[::-1])) == -lk
    assert linking_number(CoreCurve(C1.vertices[::-1]), C2) == -lk


def random_rectangle(rng, center_scale=1.5):
    rot = Rotation.random(random_state=rng).as_matrix()
    a, b = rng.uniform(0.5, 2.5, 2)
    pts = np.array([[0, 0, 0], [a, 0, 0], [a, b, 0], [0, b, 0]]) - [a / 2, b / 2, 0]
    return CoreCurve(pts @ rot.T + rng.uniform(-center_scale, center_scale, 3))


def test_linking_against_projection_oracle():
    rng = np.random.default_rng(7)
    seen = {0: 0, 1: 0}
    checked = 0
    while checked < 300:
        c1, c2 = random_rectangle(rng), random_rectangle(rng)
        try:
            lk = linking_number(c1, c2)
            back = linking_number(c2, c1)
        except DegenerateConfiguration:
            continue
        want = projected_linking(c1.vertices, c2.vertices, seed=checked)
        assert abs(lk) == abs(want)
        assert abs(back) == abs(lk)
        seen[min(abs(lk), 1)] += 1
        checked += 1
    assert seen[0] > 20 and seen[1] > 20


@settings(max_examples=80, deadline=None)
@given(
    st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi),
    st.floats(0.1, 20.0), st.tuples(*[st.floats(-50, 50)] * 3),
)
def test_linking_invariant_under_similarities(a, b, c, scale, shift):
    frame = Frame(Rotation.from_euler("zyx", [a, b, c]).as_matrix(), shift, scale)
    for other in (C2, CoreCurve(C2.vertices + [10, 0, 0])):
        assert linking_number(C1.transformed(frame), other.transformed(frame)) == linking_number(C1, other)


# ---------------------------------------------------------------------------
# the Case I necklace


def test_case1_i12_passes(sol12):
    assert len(sol12.tori) == 12
    cert = verify_necklace(sol12)
    assert cert.ok, cert.failure
    assert [c.name for c in cert.checks] == ["disjointness", "containment", "linking", "similarity"]
    assert all(c.margin > 0 for c in cert.checks[:3])
    assert cert.statement == "linking-number pattern verified"
    assert 0 < sol12.mu < 1


def test_case1_linking_pattern(sol12):
    n = len(sol12.tori)
    cores = [t.core() for t in sol12.tori]
    for i, j in itertools.combinations(range(n), 2):
        consecutive = j - i == 1 or (i, j) == (0, n - 1)
        lk = linking_number(cores[i], cores[j])
        assert abs(lk) == (1 if consecutive else 0), (i + 1, j + 1)
        assert abs(projected_linking(cores[i].vertices, cores[j].vertices, seed=i * n + j)) == abs(lk)


def test_case1_all_pairs_disjoint(sol12):
    assert all(disjoint(s, t) for s, t in itertools.combinations(sol12.tori, 2))
    assert all(contains(sol12.outer, t) for t in sol12.tori)


def test_cores_alternate_planes(sol12):
    p = sol12.params
    for idx, t in enumerate(sol12.tori, start=1):
        n = np.abs(t.core().normal())
        if idx in (1, p.K + 2) or idx % 2 == 1:
            assert n[2] == pytest.approx(1.0)
        else:
            assert n[1] == pytest.approx(1.0)


@pytest.mark.parametrize("I", [16, 20])
def test_case1_larger(I):
    sol = place_case1(I)
    assert len(sol.tori) == I
    assert verify_necklace(sol).ok


def test_doubled_torus_fails_similarity(sol12):
    tori = list(sol12.tori)
    t = tori[4]
    f = t.frame
    tori[4] = RectTorus(t.a, t.b, t.lam, Frame(f.rotation, f.translation, 2 * f.scale))
    t = tori[4]
    # doubling alone keeps the ratios equal, so also stretch one side
    tori[4] = RectTorus(t.a * 1.01, t.b, t.lam, t.frame)
    cert = verify_necklace(replace(sol12, tori=tori))
    assert not cert.ok
    assert cert.check("similarity").offending == [5]


def test_doubled_torus_breaks_geometry(sol12):
    tori = list(sol12.tori)
    f = tori[4].frame
    tori[4] = RectTorus(tori[4].a, tori[4].b, tori[4].lam, Frame(f.rotation, f.translation, 2 * f.scale))
    cert = verify_necklace(replace(sol12, tori=tori))
    assert not cert.ok
    assert cert.failure == "disjointness"


def test_translated_onto_neighbor_fails_disjointness(sol12):
    tori = list(sol12.tori)
    tori[2] = tori[3]
    cert = verify_necklace(replace(sol12, tori=tori))
    assert cert.failure == "disjointness"
    assert [3, 4] in cert.check("disjointness").offending


def test_solution_json_round_trip(tmp_path, sol12):
    path = tmp_path / "sol.json"
    sol12.save(path)
    back = NecklaceSolution.load(path)
    assert back.params == sol12.params
    assert verify_necklace(back).ok
    again = tmp_path / "again.json"
    back.save(again)
    assert again.read_bytes() == path.read_bytes()


def test_export_obj(tmp_path, sol12):
    path = tmp_path / "n.obj"
    export_obj(sol12, path)
    lines = path.read_text().splitlines()
    assert sum(1 for x in lines if x.startswith("g ")) == 13
    assert sum(1 for x in lines if x.startswith("v ")) == 13 * 4 * 8
    assert sum(1 for x in lines if x.startswith("f ")) == 13 * 4 * 12
    second = tmp_path / "m.obj"
    export_obj(sol12, second)
    assert second.read_bytes() == path.read_bytes()
    empty = tmp_path / "e.obj"
    export_obj(replace(sol12, tori=[]), empty)
    assert [x for x in empty.read_text().splitlines()] == [lines[0]]
    assert lines[0].startswith("#")


def test_obj_faces_are_outward():
    sol = NecklaceSolution(RectTorus(4, 1, 0.2), [RectTorus(4, 1, 0.2)])
    from semmeskit.necklace.case1 import _TRIANGLES

    box = sol.outer.boxes()[0]
    corners = box.corners()
    for i, j, k in _TRIANGLES:
        n = np.cross(corners[j] - corners[i], corners[k] - corners[i])
        assert n @ ((corners[i] + corners[j] + corners[k]) / 3 - box.center) > 0
