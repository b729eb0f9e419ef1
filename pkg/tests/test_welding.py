import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semmeskit.errors import BudgetError, DomainError, SpaceError
from semmeskit.welding import (
    ChildSlot,
    CondenserSpec,
    NodeAddress,
    WeldingGraph,
    builtin,
    condenser_at,
    expand,
    growth_order,
    level_counts,
    load_space,
    max_genus,
    rho,
    upper_growth,
    validate,
)

BUILTINS = ["whitehead", "bing-double", "dogbone", "antoine:12"]


def graph_from(spec: dict[str, list[str]], root: str = "R", genus: int = 1) -> WeldingGraph:
    return WeldingGraph(
        {cid: CondenserSpec(cid, genus, tuple(ChildSlot(t) for t in kids)) for cid, kids in spec.items()},
        root,
    )


@pytest.mark.parametrize("name", BUILTINS)
def test_builtins_are_valid(name):
    assert validate(builtin(name)) == []


def test_dangling_target_reported_once():
    g = graph_from({"R": ["R", "X"]})
    viol = validate(g)
    assert [v.kind for v in viol] == ["dangling target"]


def test_empty_graph_misses_root():
    viol = validate(WeldingGraph({}, "R"))
    assert [v.kind for v in viol] == ["missing root"]


def test_negative_genus_and_id_mismatch():
    g = WeldingGraph({"R": CondenserSpec("S", -1, ())}, "R")
    kinds = sorted(v.kind for v in validate(g))
    assert kinds == ["id mismatch", "negative genus"]


def test_expand_level_counts():
    assert expand(builtin("bing-double"), 3).level_counts() == [1, 2, 4, 8]
    assert expand(builtin("antoine:4"), 2).level_counts() == [1, 4, 16]
    tree = expand(builtin("dogbone"), 0)
    assert tree.level_counts() == [1]
    assert [str(a) for a, _ in tree.iter_nodes()] == ["root"]


def test_expand_rejects_invalid_graph_and_budget():
    with pytest.raises(SpaceError):
        expand(graph_from({"R": ["Q"]}), 2)
    with pytest.raises(BudgetError):
        expand(builtin("dogbone"), 5, budget=100)
    with pytest.raises(DomainError):
        expand(builtin("dogbone"), -1)


def test_budget_from_environment(monkeypatch):
    monkeypatch.setenv("SEMMESKIT_NODE_BUDGET", "20")
    with pytest.raises(BudgetError):
        expand(builtin("bing-double"), 4)
    assert expand(builtin("bing-double"), 3).size == 15


def test_growth_examples():
    assert growth_order(builtin("whitehead")) == 1
    assert growth_order(builtin("bing-double")) == 2
    assert growth_order(builtin("dogbone")) == 4
    assert upper_growth(builtin("antoine:12")) == 12
    assert max_genus(builtin("dogbone")) == 2
    assert max_genus(builtin("whitehead")) == 1


def test_transient_condenser_drops_out_of_growth():
    # five children at the top, then a single self-similar strand
    g = graph_from({"R": ["C"] * 5, "C": ["C"]})
    assert growth_order(g) == 1
    assert upper_growth(g) == 5
    assert expand(g, 3).level_counts() == [1, 5, 5, 5]


def test_acyclic_graph_has_zero_growth():
    g = graph_from({"R": ["L", "L"], "L": []})
    assert growth_order(g) == 0
    assert expand(g, 3).level_counts() == [1, 2, 0, 0]


def test_rho_examples():
    p = NodeAddress.parse
    assert rho(p("root.0"), p("root.1")) == 0
    assert rho(p("root.0"), p("root.0.0")) == 1
    a = p("2.0.1")
    assert rho(a, a) == a.level == 3


def test_address_parsing_round_trip():
    for text in ["root", "0", "0.3.1"]:
        a = NodeAddress.parse(text)
        assert NodeAddress.parse(str(a)) == a
    assert str(NodeAddress.parse("root.1.2")) == "1.2"
    with pytest.raises(DomainError):
        NodeAddress.parse("0.x")
    with pytest.raises(DomainError):
        condenser_at(builtin("bing-double"), NodeAddress.parse("0.2"))


def test_json_round_trip_and_file_loading(tmp_path):
    g = graph_from({"R": ["C", "C"], "C": ["C", "C", "C"]})
    path = tmp_path / "whitehead.json"
    path.write_text(json.dumps(g.to_json()))
    loaded = load_space(str(path))
    assert loaded.name == "file:whitehead.json"
    assert loaded.to_json() == g.to_json()
    assert growth_order(loaded) == 3
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(SpaceError):
        load_space(str(bad))
    with pytest.raises(SpaceError):
        load_space("no-such-space")


@st.composite
def small_graphs(draw):
    n = draw(st.integers(1, 4))
    ids = [f"c{i}" for i in range(n)]
    spec = {cid: draw(st.lists(st.sampled_from(ids), max_size=3)) for cid in ids}
    return graph_from(spec, root="c0")


@settings(max_examples=60, deadline=None)
@given(small_graphs(), st.integers(0, 4))
def test_branching_sum_gives_next_level(g, depth):
    tree = expand(g, depth + 1)
    counts = tree.level_counts()
    level = [tree.condenser_ids[c] for c in tree.condenser[depth]]
    assert sum(g[cid].branching for cid in level) == counts[depth + 1]
    assert counts == level_counts(g, depth + 1)
    assert growth_order(g) <= upper_growth(g)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 3), max_size=6), st.lists(st.integers(0, 3), max_size=6))
def test_rho_properties(x, y):
    a, b = NodeAddress(tuple(x)), NodeAddress(tuple(y))
    r = rho(a, b)
    assert r == rho(b, a)
    assert r <= min(a.level, b.level)
    assert (r == a.level) == (a.is_prefix_of(b))


def test_rho_agrees_with_ancestor_levels():
    tree = expand(builtin("bing-double"), 4)
    paths = tree.all_paths()
    anc = tree.ancestor_matrix()
    rng = np.random.default_rng(0)
    for _ in range(200):
        i, j = rng.integers(0, tree.size, 2)
        shared = int(((anc[i, 1:] == anc[j, 1:]) & (anc[i, 1:] >= 0)).sum())
        assert rho(NodeAddress(paths[i]), NodeAddress(paths[j])) == shared
