import math

import numpy as np
import pytest

from oracles import hop_distance
from semmeskit.embed import (
    LOWER_CONSTANT,
    UPPER_FACTOR,
    color_tree,
    embed,
    local_count_bound,
    m0,
    separation_radius,
    verify_bilipschitz,
)
from semmeskit.errors import BilipschitzViolation, DomainError
from semmeskit.welding import ChildSlot, CondenserSpec, NodeAddress, WeldingGraph, builtin, expand, rho


def star(k: int) -> WeldingGraph:
    return WeldingGraph(
        {"R": CondenserSpec("R", 1, tuple(ChildSlot("L") for _ in range(k))), "L": CondenserSpec("L", 1, ())},
        "R",
    )


def test_m0_examples():
    assert m0(0.5) == 3
    assert m0(0.2) == 2
    assert m0(0.1) == 1
    with pytest.raises(DomainError):
        m0(1.0)


def test_separation_radius_values():
    assert [separation_radius(x) for x in (0.3, 0.5, 0.7)] == [4, 5, 8]
    for lam in np.linspace(0.05, 0.9, 30):
        assert separation_radius(lam) >= m0(lam)


def test_color_tree_examples():
    tree = expand(star(5), 1)
    n, colors = color_tree(tree, 2)
    assert n == 2
    assert colors[0] == 1 and set(colors[1:]) == {2}
    path = expand(builtin("whitehead"), 5)
    n, colors = color_tree(path, 3)
    assert n == 3
    assert list(colors) == [1, 2, 3, 1, 2, 3]
    n, colors = color_tree(expand(builtin("dogbone"), 3), 1)
    assert n == 1 and set(colors) == {1}


@pytest.mark.parametrize("name", ["bing-double", "dogbone", "antoine:4", "whitehead"])
@pytest.mark.parametrize("sep", [2, 3, 5])
def test_coloring_validity_exhaustive(name, sep):
    tree = expand(builtin(name), 4)
    n, colors = color_tree(tree, sep)
    assert colors.min() >= 1 and colors.max() == n
    for i in range(tree.size):
        for j in range(i + 1, tree.size):
            if colors[i] == colors[j]:
                assert hop_distance(tree, i, j) >= sep


def test_color_count_within_local_bound():
    for name in ["bing-double", "dogbone", "antoine:4"]:
        tree = expand(builtin(name), 5)
        for sep in (2, 3):
            n, _ = color_tree(tree, sep)
            assert n <= local_count_bound(tree, sep)


def test_embedding_examples():
    lam = 0.5
    tree = expand(builtin("whitehead"), 2)
    emb = embed(tree, lam, separation=3)
    assert np.all(emb.coord("root") == 0)
    e = np.eye(emb.dimension)
    c1, c2 = emb.colors[1] - 1, emb.colors[2] - 1
    assert c1 != c2
    # child offsets use the child's level: lam * e_c1, then lam^2 * e_c2
    assert emb.coord("0") == pytest.approx(lam * e[c1])
    assert emb.coord("0.0") == pytest.approx(lam * e[c1] + lam**2 * e[c2])


def test_embedding_inductive_rule_and_injectivity():
    lam = 0.3
    tree = expand(builtin("bing-double"), 6)
    emb = embed(tree, lam)
    par = tree.global_parent()
    lev = tree.levels()
    for v in range(1, tree.size):
        step = emb.coords[v] - emb.coords[par[v]]
        e = np.zeros(emb.dimension)
        e[emb.colors[v] - 1] = lam ** lev[v]
        assert step == pytest.approx(e, abs=1e-15)
    assert len({tuple(np.round(x, 14)) for x in emb.coords}) == tree.size


def test_sibling_ratio_is_sqrt2():
    lam = 0.5
    emb = embed(expand(builtin("bing-double"), 1), lam)
    a, b = emb.coord("0"), emb.coord("1")
    ratio = np.linalg.norm(a - b) / lam ** (rho(NodeAddress.parse("0"), NodeAddress.parse("1")) + 1)
    assert ratio == pytest.approx(math.sqrt(2))


@pytest.mark.parametrize("lam", [0.3, 0.5, 0.7])
def test_bilipschitz_passes_on_bing_double(lam):
    emb = embed(expand(builtin("bing-double"), 6), lam)
    rep = verify_bilipschitz(emb)
    assert rep.ok, rep.failure
    assert rep.color_conflicts == 0
    assert rep.pairs == emb.tree.size * (emb.tree.size - 1) // 2
    assert LOWER_CONSTANT <= rep.min_ratio and rep.max_ratio <= UPPER_FACTOR * math.sqrt(emb.dimension)


def test_single_node_is_vacuous():
    rep = verify_bilipschitz(embed(expand(builtin("dogbone"), 0), 0.5))
    assert rep.ok and rep.pairs == 0


def test_verifier_names_offending_pair():
    emb = embed(expand(builtin("bing-double"), 3), 0.5)
    emb.coords[emb.tree.index_of(NodeAddress.parse("1"))] = emb.coords[emb.tree.index_of(NodeAddress.parse("0"))]
    rep = verify_bilipschitz(emb)
    assert not rep.ok
    assert rep.failure.startswith("pair (") and rep.min_ratio == 0.0
    assert set(rep.min_pair) == {"0", "1"}
    with pytest.raises(BilipschitzViolation) as info:
        verify_bilipschitz(emb, raise_on_failure=True)
    assert info.value.pair is not None


def test_literal_m0_coloring_is_not_enough():
    # at lam = 0.3 the literal m0 = 2 lets siblings share a colour and collide
    emb = embed(expand(builtin("dogbone"), 4), 0.3, separation=m0(0.3))
    assert not verify_bilipschitz(emb).ok


def test_separation_below_m0_rejected():
    with pytest.raises(DomainError):
        embed(expand(builtin("dogbone"), 2), 0.5, separation=2)
