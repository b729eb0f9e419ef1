"""Finite condenser graphs and their unfolding into the component tree.

A :class:`WeldingGraph` is the finite-type data of a self-similar (more
precisely, eventually periodic) defining sequence: every cube-with-handles
of the sequence is an instance of some condenser, and its children in the
next stage are listed by the condenser's child slots.  Unfolding the graph
from the root gives the component tree, whose nodes are addressed by
sequences of child indices.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import BudgetError, DomainError, SpaceError

DEFAULT_NODE_BUDGET = 10**7
NODE_BUDGET_ENV = "SEMMESKIT_NODE_BUDGET"

BUILTIN_NAMES = ("whitehead", "bing-double", "dogbone", "antoine:<I>")


def node_budget() -> int:
    """Node budget for tree expansion, overridable through the environment."""
    raw = os.environ.get(NODE_BUDGET_ENV)
    if raw is None:
        return DEFAULT_NODE_BUDGET
    try:
        value = int(raw)
    except ValueError:
        raise SpaceError(f"{NODE_BUDGET_ENV} must be an integer, got {raw!r}")
    if value < 1:
        raise SpaceError(f"{NODE_BUDGET_ENV} must be positive, got {value}")
    return value


@dataclass(frozen=True)
class ChildSlot:
    target: str
    contractible_in_parent: bool = True


@dataclass(frozen=True)
class CondenserSpec:
    id: str
    genus: int
    children: tuple[ChildSlot, ...] = ()
    label: str = ""

    @property
    def branching(self) -> int:
        return len(self.children)


@dataclass(frozen=True)
class Violation:
    kind: str
    where: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind} at {self.where}: {self.message}"


@dataclass(frozen=True)
class WeldingGraph:
    condensers: Mapping[str, CondenserSpec]
    root: str
    name: str = "custom"

    def __post_init__(self):
        # freeze the mapping so graphs can be shared between threads
        object.__setattr__(self, "condensers", dict(self.condensers))

    def __getitem__(self, cid: str) -> CondenserSpec:
        return self.condensers[cid]

    def reachable(self) -> list[str]:
        """Condenser ids reachable from the root, in BFS order."""
        if self.root not in self.condensers:
            return []
        seen = {self.root}
        order = [self.root]
        i = 0
        while i < len(order):
            for slot in self.condensers[order[i]].children:
                t = slot.target
                if t in self.condensers and t not in seen:
                    seen.add(t)
                    order.append(t)
            i += 1
        return order

    def to_json(self) -> dict:
        return {
            "root": self.root,
            "condensers": {
                cid: {
                    "genus": c.genus,
                    "label": c.label,
                    "children": [
                        {"target": s.target, "contractible": s.contractible_in_parent}
                        for s in c.children
                    ],
                }
                for cid, c in sorted(self.condensers.items())
            },
        }

    @classmethod
    def from_json(cls, data: Mapping, name: str = "custom") -> "WeldingGraph":
        if not isinstance(data, Mapping):
            raise SpaceError("space definition must be a JSON object")
        raw = data.get("condensers", {})
        if not isinstance(raw, Mapping):
            raise SpaceError("'condensers' must be an object")
        condensers = {}
        for cid, spec in raw.items():
            try:
                children = tuple(
                    ChildSlot(str(ch["target"]), bool(ch.get("contractible", True)))
                    for ch in spec.get("children", [])
                )
                condensers[str(cid)] = CondenserSpec(
                    id=str(cid),
                    genus=int(spec.get("genus", 0)),
                    children=children,
                    label=str(spec.get("label", "")),
                )
            except (TypeError, KeyError, AttributeError, ValueError) as exc:
                raise SpaceError(f"malformed condenser {cid!r}: {exc}") from exc
        return cls(condensers, str(data.get("root", "")), name=name)


# ---------------------------------------------------------------------------
# builtins


def _single(cid: str, genus: int, branching: int, label: str, name: str) -> WeldingGraph:
    spec = CondenserSpec(cid, genus, tuple(ChildSlot(cid, True) for _ in range(branching)), label)
    return WeldingGraph({cid: spec}, cid, name=name)


def whitehead() -> WeldingGraph:
    return _single("W", 1, 1, "solid torus with one Whitehead-clasped torus inside", "whitehead")


def bing_double() -> WeldingGraph:
    return _single("B", 1, 2, "solid torus with two Bing-linked tori inside", "bing-double")


def dogbone() -> WeldingGraph:
    return _single("D", 2, 4, "genus-2 handlebody with four linked genus-2 handlebodies", "dogbone")


def antoine(count: int) -> WeldingGraph:
    if count < 3:
        raise SpaceError(f"an Antoine necklace needs at least 3 tori, got {count}")
    return _single("A", 1, count, f"solid torus with a chain of {count} tori", f"antoine:{count}")


def builtin(name: str) -> WeldingGraph:
    key = name.strip().lower()
    if key == "whitehead":
        return whitehead()
    if key in ("bing-double", "bing_double", "bing"):
        return bing_double()
    if key == "dogbone":
        return dogbone()
    if key.startswith("antoine:"):
        try:
            count = int(key.split(":", 1)[1])
        except ValueError:
            raise SpaceError(f"bad Antoine size in {name!r}")
        return antoine(count)
    raise SpaceError(f"unknown builtin space {name!r}; known: {', '.join(BUILTIN_NAMES)}")


def load_space(source: str) -> WeldingGraph:
    """Builtin name or path to a JSON space definition."""
    path = Path(source)
    if path.suffix.lower() == ".json" or path.is_file():
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise SpaceError(f"cannot read space file {source}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise SpaceError(f"space file {source} is not valid JSON: {exc}") from exc
        return WeldingGraph.from_json(data, name=f"file:{path.name}")
    return builtin(source)


def is_builtin(graph: WeldingGraph) -> bool:
    return graph.name in ("whitehead", "bing-double", "dogbone") or graph.name.startswith("antoine:")


# ---------------------------------------------------------------------------
# validation and growth


def validate(graph: WeldingGraph) -> list[Violation]:
    out: list[Violation] = []
    if not graph.condensers:
        out.append(Violation("missing root", "graph", "condenser map is empty"))
        return out
    if graph.root not in graph.condensers:
        out.append(Violation("missing root", "graph", f"root {graph.root!r} is not a condenser"))
    for cid in sorted(graph.condensers):
        c = graph.condensers[cid]
        if c.id != cid:
            out.append(Violation("id mismatch", cid, f"condenser stored under {cid!r} has id {c.id!r}"))
        if c.genus < 0:
            out.append(Violation("negative genus", cid, f"genus {c.genus} < 0"))
        for j, slot in enumerate(c.children):
            if slot.target not in graph.condensers:
                out.append(
                    Violation("dangling target", f"{cid}[{j}]", f"child targets missing id {slot.target!r}")
                )
    return out


def _recurrent(graph: WeldingGraph) -> set[str]:
    """Reachable condensers that occur at arbitrarily deep levels."""
    reach = graph.reachable()
    reach_set = set(reach)
    succ = {
        c: [s.target for s in graph.condensers[c].children if s.target in reach_set] for c in reach
    }
    # a condenser lies on a cycle iff it can reach itself
    on_cycle = set()
    for c in reach:
        stack = list(succ[c])
        seen = set()
        while stack:
            x = stack.pop()
            if x == c:
                on_cycle.add(c)
                break
            if x in seen:
                continue
            seen.add(x)
            stack.extend(succ[x])
    recurrent = set(on_cycle)
    stack = list(on_cycle)
    while stack:
        x = stack.pop()
        for y in succ[x]:
            if y not in recurrent:
                recurrent.add(y)
                stack.append(y)
    return recurrent


def growth_order(graph: WeldingGraph) -> int:
    """Order of growth: the eventual maximal number of children per node.

    Condensers that are not reachable from a directed cycle appear only at
    finitely many levels and do not affect the limit.  A graph without
    cycles generates a finite sequence; its order of growth is 0.
    """
    rec = _recurrent(graph)
    return max((graph.condensers[c].branching for c in rec), default=0)


def upper_growth(graph: WeldingGraph) -> int:
    return max((graph.condensers[c].branching for c in graph.reachable()), default=0)


def max_genus(graph: WeldingGraph) -> int:
    return max((graph.condensers[c].genus for c in graph.reachable()), default=0)


# ---------------------------------------------------------------------------
# addresses


@dataclass(frozen=True, order=True)
class NodeAddress:
    path: tuple[int, ...] = ()

    @property
    def level(self) -> int:
        return len(self.path)

    @classmethod
    def parse(cls, text: str | "NodeAddress" | Sequence[int]) -> "NodeAddress":
        if isinstance(text, NodeAddress):
            return text
        if not isinstance(text, str):
            return cls(tuple(int(i) for i in text))
        s = text.strip()
        if s.lower().startswith("root"):
            s = s[4:].lstrip(".")
        if not s:
            return cls(())
        try:
            path = tuple(int(p) for p in s.split("."))
        except ValueError:
            raise DomainError(f"bad node address {text!r}")
        if any(i < 0 for i in path):
            raise DomainError(f"negative index in address {text!r}")
        return cls(path)

    def __str__(self) -> str:
        return ".".join(map(str, self.path)) if self.path else "root"

    def child(self, i: int) -> "NodeAddress":
        return NodeAddress(self.path + (i,))

    def parent(self) -> "NodeAddress":
        if not self.path:
            raise DomainError("root has no parent")
        return NodeAddress(self.path[:-1])

    def is_prefix_of(self, other: "NodeAddress") -> bool:
        return other.path[: len(self.path)] == self.path


def condenser_at(graph: WeldingGraph, addr: NodeAddress) -> str:
    """Condenser reached by following child targets along ``addr``."""
    cid = graph.root
    if cid not in graph.condensers:
        raise SpaceError(f"graph has no root condenser {cid!r}")
    for step, i in enumerate(addr.path):
        children = graph.condensers[cid].children
        if not 0 <= i < len(children):
            raise DomainError(
                f"address {addr}: index {i} at step {step} invalid for condenser {cid!r} "
                f"with {len(children)} children"
            )
        cid = children[i].target
    return cid


def rho(a: NodeAddress, b: NodeAddress) -> int:
    """Level of the deepest tree node containing both ``a`` and ``b``.

    Containment includes equality, so for an ancestor pair this is the
    ancestor's level; in all cases it is the longest common prefix.
    """
    n = 0
    for x, y in zip(a.path, b.path):
        if x != y:
            break
        n += 1
    return n


# ---------------------------------------------------------------------------
# expansion


@dataclass(frozen=True)
class ExpandedTree:
    """Component tree truncated at ``depth``, stored level by level.

    ``parent[k][i]`` is the index (within level k-1) of node i of level k,
    ``slot[k][i]`` its child index, ``condenser[k][i]`` an index into
    ``condenser_ids``.  Level 0 holds the root only.
    """

    graph: WeldingGraph
    depth: int
    condenser_ids: tuple[str, ...]
    parent: tuple[np.ndarray, ...]
    slot: tuple[np.ndarray, ...]
    condenser: tuple[np.ndarray, ...]
    offsets: tuple[int, ...] = field(default=())

    def level_counts(self) -> list[int]:
        return [len(c) for c in self.condenser]

    @property
    def size(self) -> int:
        return sum(self.level_counts())

    def levels(self) -> np.ndarray:
        """Level of every node in global BFS order."""
        return np.concatenate([np.full(n, k, dtype=np.int64) for k, n in enumerate(self.level_counts())])

    def global_parent(self) -> np.ndarray:
        """Global parent index of every node (-1 for the root)."""
        out = [np.array([-1], dtype=np.int64)]
        for k in range(1, self.depth + 1):
            out.append(self.parent[k] + self.offsets[k - 1])
        return np.concatenate(out)

    def address(self, level: int, index: int) -> NodeAddress:
        path = []
        for k in range(level, 0, -1):
            path.append(int(self.slot[k][index]))
            index = int(self.parent[k][index])
        return NodeAddress(tuple(reversed(path)))

    def addresses(self, level: int | None = None) -> list[NodeAddress]:
        paths = self.all_paths()
        if level is not None:
            lo = self.offsets[level]
            paths = paths[lo : lo + len(self.condenser[level])]
        return [NodeAddress(p) for p in paths]

    def all_paths(self) -> list[tuple[int, ...]]:
        """Paths of all nodes in global BFS order."""
        out: list[tuple[int, ...]] = [()]
        prev: list[tuple[int, ...]] = [()]
        for k in range(1, self.depth + 1):
            cur = [prev[p] + (int(s),) for p, s in zip(self.parent[k], self.slot[k])]
            out.extend(cur)
            prev = cur
        return out

    def index_of(self, addr: NodeAddress) -> int:
        """Global BFS index of ``addr``."""
        if addr.level > self.depth:
            raise DomainError(f"address {addr} deeper than expanded depth {self.depth}")
        condenser_at(self.graph, addr)
        idx = 0
        for k, i in enumerate(addr.path, start=1):
            hits = np.nonzero((self.parent[k] == idx) & (self.slot[k] == i))[0]
            idx = int(hits[0])
        return self.offsets[addr.level] + idx

    def ancestor_matrix(self) -> np.ndarray:
        """``anc[v, k]`` = local index at level k of v's ancestor, -1 above v's level."""
        n = self.size
        anc = np.full((n, self.depth + 1), -1, dtype=np.int64)
        for k in range(self.depth + 1):
            lo, cnt = self.offsets[k], len(self.condenser[k])
            cur = np.arange(cnt, dtype=np.int64)
            anc[lo : lo + cnt, k] = cur
            for j in range(k, 0, -1):
                cur = self.parent[j][cur]
                anc[lo : lo + cnt, j - 1] = cur
        return anc

    def children_lists(self) -> list[list[int]]:
        """Global child indices of every node."""
        kids: list[list[int]] = [[] for _ in range(self.size)]
        gp = self.global_parent()
        for v in range(1, self.size):
            kids[int(gp[v])].append(v)
        return kids

    def iter_nodes(self) -> Iterator[tuple[NodeAddress, str]]:
        ids = self.condenser_ids
        flat = np.concatenate(self.condenser)
        for path, c in zip(self.all_paths(), flat):
            yield NodeAddress(path), ids[int(c)]


def level_counts(graph: WeldingGraph, depth: int) -> list[int]:
    """Number of admissible paths of each length, without building the tree."""
    ids = graph.reachable()
    counts = {c: 0 for c in ids}
    counts[graph.root] = 1
    out = [1]
    for _ in range(depth):
        nxt = {c: 0 for c in ids}
        for c, n in counts.items():
            if n:
                for s in graph.condensers[c].children:
                    nxt[s.target] += n
        counts = nxt
        out.append(sum(counts.values()))
    return out


def expand(graph: WeldingGraph, depth: int, budget: int | None = None) -> ExpandedTree:
    if depth < 0:
        raise DomainError(f"depth must be non-negative, got {depth}")
    problems = validate(graph)
    if problems:
        raise SpaceError("invalid welding graph: " + "; ".join(map(str, problems)))
    budget = node_budget() if budget is None else budget
    counts = level_counts(graph, depth)
    if sum(counts) > budget:
        raise BudgetError(
            f"expanding {graph.name} to depth {depth} needs {sum(counts)} nodes, budget is {budget}"
        )

    ids = tuple(graph.reachable())
    code = {c: i for i, c in enumerate(ids)}
    # per condenser: children targets as codes
    kid_codes = [np.array([code[s.target] for s in graph.condensers[c].children], dtype=np.int64) for c in ids]
    branching = np.array([len(k) for k in kid_codes], dtype=np.int64)

    parents = [np.zeros(0, dtype=np.int64)]
    slots = [np.zeros(0, dtype=np.int64)]
    conds = [np.array([code[graph.root]], dtype=np.int64)]
    for _ in range(depth):
        cur = conds[-1]
        nb = branching[cur]
        par = np.repeat(np.arange(len(cur), dtype=np.int64), nb)
        # child index within the parent: position in its repeat block
        starts = np.repeat(np.cumsum(nb) - nb, nb)
        sl = np.arange(len(par), dtype=np.int64) - starts
        cc = np.empty(len(par), dtype=np.int64)
        for ci in np.unique(cur):
            mask = cur[par] == ci
            cc[mask] = kid_codes[ci][sl[mask]]
        parents.append(par)
        slots.append(sl)
        conds.append(cc)

    offsets = tuple(int(x) for x in np.concatenate([[0], np.cumsum([len(c) for c in conds])[:-1]]))
    return ExpandedTree(graph, depth, ids, tuple(parents), tuple(slots), tuple(conds), offsets)
