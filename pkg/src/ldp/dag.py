"""Directed acyclic graph kernel for exposure-outcome analysis.

Provides the ``Dag`` structure with a designated exposure/outcome pair,
linear-time d-separation (reachability over active trails), exhaustive
active-path enumeration for small graphs, the six-way classification of a
covariate's active paths relative to the exposure and the outcome, the
ground-truth causal partition derived from that classification, and the
backdoor-criterion validity check for candidate adjustment sets.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

__all__ = [
    "Dag",
    "PartitionLabel",
    "PathType",
    "PathTypePair",
    "GROUND_TRUTH_LABELS",
    "d_separated",
    "enumerate_active_paths",
    "path_is_active",
    "classify_path_types",
    "ground_truth_partition",
    "is_valid_adjustment_set",
    "random_dag",
    "format_edge_list",
    "parse_edge_list",
]


class PartitionLabel(str, Enum):
    """Causal partition of a covariate relative to the exposure-outcome pair.

    ``Z1`` through ``Z8`` are the mutually exclusive ground-truth partitions
    (confounders, colliders, mediators, pure prognostic variables,
    instruments, outcome descendants, exposure descendants, and isolated
    variables, each including proxies). ``ZPost`` aggregates the three
    post-treatment partitions ``Z2``/``Z3``/``Z6`` in algorithm output,
    ``Z57`` is the unresolved instrument-or-exposure-descendant superset,
    and ``NotIdentifiable`` marks covariates the procedure could not place.
    """

    Z1 = "Z1"
    Z2 = "Z2"
    Z3 = "Z3"
    Z4 = "Z4"
    Z5 = "Z5"
    Z6 = "Z6"
    Z7 = "Z7"
    Z8 = "Z8"
    Z_POST = "ZPost"
    Z57 = "Z57"
    NOT_IDENTIFIABLE = "NotIdentifiable"


GROUND_TRUTH_LABELS = frozenset(
    {
        PartitionLabel.Z1,
        PartitionLabel.Z2,
        PartitionLabel.Z3,
        PartitionLabel.Z4,
        PartitionLabel.Z5,
        PartitionLabel.Z6,
        PartitionLabel.Z7,
        PartitionLabel.Z8,
    }
)


class PathType(IntEnum):
    """Classification of the multiset of a node's active paths to a target.

    TYPE1: no active paths (outside the excluded endpoint).
    TYPE2: only directed paths from the node into the target.
    TYPE3: only directed paths from the target into the node.
    TYPE4: only fork-confounded paths (interior common-cause source).
    TYPE5: both TYPE2-style and TYPE4-style paths.
    TYPE6: both TYPE3-style and TYPE4-style paths.
    """

    TYPE1 = 1
    TYPE2 = 2
    TYPE3 = 3
    TYPE4 = 4
    TYPE5 = 5
    TYPE6 = 6


@dataclass(frozen=True)
class PathTypePair:
    rel_x: PathType
    rel_y: PathType


# Grid of permissible (type relative to X, type relative to Y) combinations.
# ``None`` cells are unreachable on acyclic inputs; hitting one indicates a
# classification bug and raises.
_PARTITION_GRID: dict[tuple[int, int], Optional[PartitionLabel]] = {
    (1, 1): PartitionLabel.Z8,
    (2, 1): PartitionLabel.Z5,
    (3, 1): PartitionLabel.Z7,
    (4, 1): PartitionLabel.Z5,
    (5, 1): PartitionLabel.Z5,
    (6, 1): PartitionLabel.Z7,
    (1, 2): PartitionLabel.Z4,
    (2, 2): PartitionLabel.Z1,
    (3, 2): PartitionLabel.Z3,
    (4, 2): PartitionLabel.Z1,
    (5, 2): PartitionLabel.Z1,
    (6, 2): PartitionLabel.Z3,
    (1, 3): PartitionLabel.Z6,
    (2, 3): None,
    (3, 3): PartitionLabel.Z2,
    (4, 3): PartitionLabel.Z2,
    (5, 3): None,
    (6, 3): PartitionLabel.Z2,
    (1, 4): PartitionLabel.Z4,
    (2, 4): PartitionLabel.Z1,
    (3, 4): PartitionLabel.Z2,
    (4, 4): PartitionLabel.Z2,
    (5, 4): PartitionLabel.Z1,
    (6, 4): PartitionLabel.Z2,
    (1, 5): PartitionLabel.Z4,
    (2, 5): PartitionLabel.Z1,
    (3, 5): PartitionLabel.Z3,
    (4, 5): PartitionLabel.Z1,
    (5, 5): PartitionLabel.Z1,
    (6, 5): PartitionLabel.Z3,
    (1, 6): PartitionLabel.Z6,
    (2, 6): None,
    (3, 6): PartitionLabel.Z2,
    (4, 6): PartitionLabel.Z2,
    (5, 6): None,
    (6, 6): PartitionLabel.Z2,
}


class Dag:
    """Directed acyclic graph with a designated exposure and outcome.

    Node order is the insertion order of ``nodes`` and fixes the order of
    every set-valued result returned by this module, so downstream output is
    reproducible byte for byte.
    """

    def __init__(
        self,
        nodes: Sequence[str],
        edges: Iterable[tuple[str, str]],
        exposure: str,
        outcome: str,
    ):
        nodes = list(nodes)
        if len(set(nodes)) != len(nodes):
            raise ValueError("node names must be unique")
        node_set = set(nodes)
        if exposure not in node_set or outcome not in node_set:
            raise ValueError("exposure and outcome must be nodes")
        if exposure == outcome:
            raise ValueError("exposure and outcome must be distinct")

        parents: dict[str, list[str]] = {v: [] for v in nodes}
        children: dict[str, list[str]] = {v: [] for v in nodes}
        edge_set = set()
        for parent, child in edges:
            if parent not in node_set or child not in node_set:
                raise ValueError(f"edge ({parent}, {child}) references unknown node")
            if parent == child:
                raise ValueError(f"self-loop on {parent}")
            if (parent, child) in edge_set:
                continue
            edge_set.add((parent, child))
            parents[child].append(parent)
            children[parent].append(child)

        self.nodes: tuple[str, ...] = tuple(nodes)
        self.exposure = exposure
        self.outcome = outcome
        self._index = {v: i for i, v in enumerate(self.nodes)}
        self._parents = {v: tuple(ps) for v, ps in parents.items()}
        self._children = {v: tuple(cs) for v, cs in children.items()}
        self.edges: frozenset[tuple[str, str]] = frozenset(edge_set)

        self._anc_cache: dict[str, frozenset[str]] = {}
        self._desc_cache: dict[str, frozenset[str]] = {}
        self._topological = self._toposort()
        if self.exposure in self.descendants(self.outcome):
            raise ValueError("outcome must not be an ancestor of the exposure")

    def _toposort(self) -> tuple[str, ...]:
        indegree = {v: len(self._parents[v]) for v in self.nodes}
        ready = deque(v for v in self.nodes if indegree[v] == 0)
        order = []
        while ready:
            v = ready.popleft()
            order.append(v)
            for c in self._children[v]:
                indegree[c] -= 1
                if indegree[c] == 0:
                    ready.append(c)
        if len(order) != len(self.nodes):
            raise ValueError("graph contains a cycle")
        return tuple(order)

    # -- structure ---------------------------------------------------------

    def parents(self, v: str) -> tuple[str, ...]:
        self._check_node(v)
        return self._parents[v]

    def children(self, v: str) -> tuple[str, ...]:
        self._check_node(v)
        return self._children[v]

    def topological_order(self) -> tuple[str, ...]:
        return self._topological

    def candidates(self) -> tuple[str, ...]:
        """All nodes other than the exposure and the outcome, in node order."""
        return tuple(v for v in self.nodes if v not in (self.exposure, self.outcome))

    def index(self, v: str) -> int:
        self._check_node(v)
        return self._index[v]

    def sort_nodes(self, names: Iterable[str]) -> tuple[str, ...]:
        """Sort ``names`` by graph node order (the canonical output order)."""
        return tuple(sorted(names, key=self.index))

    def ancestors(self, v: str) -> frozenset[str]:
        """All proper ancestors of ``v`` (``v`` itself excluded)."""
        return self._closure(v, self._parents, self._anc_cache)

    def descendants(self, v: str) -> frozenset[str]:
        """All proper descendants of ``v`` (``v`` itself excluded)."""
        return self._closure(v, self._children, self._desc_cache)

    def _closure(
        self,
        v: str,
        link: Mapping[str, tuple[str, ...]],
        cache: dict[str, frozenset[str]],
    ) -> frozenset[str]:
        self._check_node(v)
        hit = cache.get(v)
        if hit is not None:
            return hit
        seen: set[str] = set()
        stack = list(link[v])
        while stack:
            u = stack.pop()
            if u not in seen:
                seen.add(u)
                stack.extend(link[u])
        out = frozenset(seen)
        cache[v] = out
        return out

    def _check_node(self, v: str) -> None:
        if v not in self._index:
            raise ValueError(f"unknown node: {v!r}")

    def __repr__(self) -> str:
        return (
            f"Dag(nodes={len(self.nodes)}, edges={len(self.edges)}, "
            f"exposure={self.exposure!r}, outcome={self.outcome!r})"
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.edges == other.edges
            and self.exposure == other.exposure
            and self.outcome == other.outcome
        )

    def __hash__(self) -> int:
        return hash((self.nodes, self.edges, self.exposure, self.outcome))


# -- d-separation ----------------------------------------------------------


def _reachable(
    parents: Mapping[str, Sequence[str]],
    children: Mapping[str, Sequence[str]],
    a: str,
    b: str,
    cond: frozenset[str],
) -> bool:
    """Whether an active trail connects ``a`` to ``b`` given ``cond``.

    Reachability formulation of d-connection: walk (node, direction) states,
    where "up" states move against edges and "down" states along them.
    Colliders pass the ball back up only when they have a descendant in the
    conditioning set, which is precomputed as the ancestor closure of
    ``cond``.
    """
    cond_anc: set[str] = set(cond)
    stack = list(cond)
    while stack:
        v = stack.pop()
        for p in parents[v]:
            if p not in cond_anc:
                cond_anc.add(p)
                stack.append(p)

    visited: set[tuple[str, bool]] = set()
    # direction flag: True = arrived from a child (moving up), False = from a parent
    queue: deque[tuple[str, bool]] = deque([(a, True)])
    while queue:
        v, up = queue.popleft()
        if (v, up) in visited:
            continue
        visited.add((v, up))
        if v == b:
            return True
        if up:
            if v not in cond:
                for p in parents[v]:
                    queue.append((p, True))
                for c in children[v]:
                    queue.append((c, False))
        else:
            if v not in cond:
                for c in children[v]:
                    queue.append((c, False))
            if v in cond_anc:
                # collider (or observed node) bouncing the ball back up
                for p in parents[v]:
                    queue.append((p, True))
    return False


def d_separated(g: Dag, a: str, b: str, cond: Iterable[str] = ()) -> bool:
    """True iff no path between ``a`` and ``b`` is active relative to ``cond``."""
    cond = frozenset(cond)
    for v in (a, b, *cond):
        g._check_node(v)
    if a == b:
        raise ValueError("endpoints must be distinct")
    if a in cond or b in cond:
        raise ValueError("endpoints must not be in the conditioning set")
    return not _reachable(g._parents, g._children, a, b, cond)


# -- path enumeration ------------------------------------------------------


def _simple_paths(
    g: Dag, a: str, b: str, exclude: frozenset[str]
) -> list[tuple[str, ...]]:
    """All simple undirected paths from ``a`` to ``b`` avoiding ``exclude``."""
    neighbors: dict[str, tuple[str, ...]] = {}
    for v in g.nodes:
        if v in exclude:
            continue
        adj = [u for u in (*g._parents[v], *g._children[v]) if u not in exclude]
        # deduplicate while keeping node order
        neighbors[v] = tuple(dict.fromkeys(sorted(adj, key=g.index)))

    out: list[tuple[str, ...]] = []
    path = [a]
    on_path = {a}

    def walk(v: str) -> None:
        if v == b:
            out.append(tuple(path))
            return
        for u in neighbors[v]:
            if u not in on_path:
                path.append(u)
                on_path.add(u)
                walk(u)
                path.pop()
                on_path.remove(u)

    walk(a)
    out.sort(key=lambda p: tuple(g.index(v) for v in p))
    return out


def path_is_active(g: Dag, path: Sequence[str], cond: Iterable[str] = ()) -> bool:
    """Per-node activity check for one undirected path.

    A node on the path is active when it is a non-collider outside the
    conditioning set, a collider inside it, or a collider with a descendant
    inside it. The path is active when every interior node is active.
    """
    cond = frozenset(cond)
    if path[0] in cond or path[-1] in cond:
        return False
    for i in range(1, len(path) - 1):
        v = path[i]
        into_left = path[i - 1] in g._parents[v]
        into_right = path[i + 1] in g._parents[v]
        if into_left and into_right:  # collider
            if v not in cond and not (g.descendants(v) & cond):
                return False
        else:
            if v in cond:
                return False
    return True


def enumerate_active_paths(
    g: Dag,
    a: str,
    b: str,
    exclude: Iterable[str] = (),
    max_nodes: int = 24,
) -> list[tuple[str, ...]]:
    """All simple paths between ``a`` and ``b`` active relative to the empty set.

    Exhaustive enumeration; guarded to graphs of at most ``max_nodes``
    usable nodes. Results are ordered lexicographically by node index.
    """
    exclude = frozenset(exclude)
    for v in (a, b, *exclude):
        g._check_node(v)
    if a == b:
        raise ValueError("endpoints must be distinct")
    if a in exclude or b in exclude:
        raise ValueError("endpoints must not be excluded")
    usable = len(g.nodes) - len(exclude)
    if usable > max_nodes:
        raise ValueError(
            f"graph too large for exhaustive path enumeration "
            f"({usable} nodes > limit {max_nodes})"
        )
    return [p for p in _simple_paths(g, a, b, exclude) if path_is_active(g, p)]


# -- path-type classification and ground truth ------------------------------


def _path_kind(g: Dag, path: Sequence[str]) -> str:
    """Orientation class of a collider-free path via its unique source node.

    With no collider, edge orientations along the path form a backward
    prefix followed by a forward suffix; the boundary node is the unique
    source. Source at the start means the path is directed out of the start,
    source at the end means directed out of the end, and an interior source
    is a confounding fork.
    """
    forward = [path[i + 1] in g._children[path[i]] for i in range(len(path) - 1)]
    n_back = 0
    while n_back < len(forward) and not forward[n_back]:
        n_back += 1
    if any(forward[:n_back]) or not all(forward[n_back:]):
        raise ValueError("path is not collider-free")
    if n_back == 0:
        return "from_start"
    if n_back == len(forward):
        return "from_end"
    return "fork"


def _classify_relative(g: Dag, z: str, target: str, other: str, max_nodes: int) -> PathType:
    kinds = set()
    for path in enumerate_active_paths(g, z, target, exclude={other}, max_nodes=max_nodes):
        kinds.add(_path_kind(g, path))
    if not kinds:
        return PathType.TYPE1
    if kinds == {"from_start"}:
        return PathType.TYPE2
    if kinds == {"from_end"}:
        return PathType.TYPE3
    if kinds == {"fork"}:
        return PathType.TYPE4
    if kinds == {"from_start", "fork"}:
        return PathType.TYPE5
    if kinds == {"from_end", "fork"}:
        return PathType.TYPE6
    # from_start plus from_end would require a directed cycle
    raise RuntimeError(f"impossible path-kind combination {kinds!r} for node {z!r}")


def classify_path_types(g: Dag, z: str, max_nodes: int = 24) -> PathTypePair:
    """Classify the active paths of ``z`` relative to exposure and outcome.

    Paths through the respective other endpoint are excluded by deleting
    that endpoint before enumeration.
    """
    g._check_node(z)
    if z in (g.exposure, g.outcome):
        raise ValueError("classification target must be a covariate")
    rel_x = _classify_relative(g, z, g.exposure, g.outcome, max_nodes)
    rel_y = _classify_relative(g, z, g.outcome, g.exposure, max_nodes)
    return PathTypePair(rel_x=rel_x, rel_y=rel_y)


def ground_truth_partition(g: Dag, max_nodes: int = 24) -> dict[str, PartitionLabel]:
    """Ground-truth partition label for every covariate, by grid lookup."""
    labels: dict[str, PartitionLabel] = {}
    for z in g.candidates():
        pair = classify_path_types(g, z, max_nodes=max_nodes)
        label = _PARTITION_GRID[(int(pair.rel_x), int(pair.rel_y))]
        if label is None:
            raise RuntimeError(
                f"node {z!r} classified into forbidden cell "
                f"({int(pair.rel_x)}, {int(pair.rel_y)}); this indicates a bug"
            )
        labels[z] = label
    return labels


# -- backdoor criterion ------------------------------------------------------


def is_valid_adjustment_set(g: Dag, adjustment: Iterable[str]) -> bool:
    """Backdoor-criterion validity of ``adjustment`` for the exposure-outcome pair.

    Valid iff the set contains no descendant of the exposure and, in the
    graph with all edges out of the exposure removed, it d-separates
    exposure from outcome (equivalently: blocks every backdoor path).
    """
    adjustment = frozenset(adjustment)
    for v in adjustment:
        g._check_node(v)
    if g.exposure in adjustment or g.outcome in adjustment:
        raise ValueError("adjustment set must exclude exposure and outcome")
    if adjustment & g.descendants(g.exposure):
        return False
    x = g.exposure
    children = {v: (() if v == x else g._children[v]) for v in g.nodes}
    parents = {
        v: tuple(p for p in g._parents[v] if p != x) if x in g._parents[v] else g._parents[v]
        for v in g.nodes
    }
    return not _reachable(parents, children, x, g.outcome, adjustment)


# -- random graphs for property testing --------------------------------------


def random_dag(
    n_nodes: int,
    seed: int,
    edge_prob: Optional[float] = None,
    max_tries: int = 500,
) -> Dag:
    """Random DAG with forced marginal exposure-outcome dependence.

    Erdos-Renyi edges over a random topological order; exposure and outcome
    sit at fixed order positions (one third and two thirds of the way in).
    Draws are repeated until the pair is marginally d-connected.
    """
    if n_nodes < 4:
        raise ValueError("need at least 4 nodes")
    rng = np.random.default_rng(seed)
    x_pos, y_pos = n_nodes // 3, (2 * n_nodes) // 3
    for _ in range(max_tries):
        p = edge_prob if edge_prob is not None else float(rng.choice([0.2, 0.3]))
        order = rng.permutation(n_nodes)
        names = [f"V{i}" for i in range(n_nodes)]
        ordered = [names[i] for i in order]
        edges = []
        for i in range(n_nodes):
            for j in range(i + 1, n_nodes):
                if rng.random() < p:
                    edges.append((ordered[i], ordered[j]))
        g = Dag(names, edges, exposure=ordered[x_pos], outcome=ordered[y_pos])
        if not d_separated(g, g.exposure, g.outcome):
            return g
    raise RuntimeError("failed to draw a marginally dependent exposure-outcome pair")


# -- edge-list exchange format ------------------------------------------------


def format_edge_list(g: Dag) -> str:
    """Serialize to the text exchange format.

    One ``parent child`` pair per line, ``#exposure``/``#outcome`` directives,
    and ``#node`` directives for isolated nodes so they round-trip.
    """
    lines = [f"#exposure {g.exposure}", f"#outcome {g.outcome}"]
    connected = {v for e in g.edges for v in e}
    for v in g.nodes:
        if v not in connected:
            lines.append(f"#node {v}")
    for parent in g.nodes:
        for child in g._children[parent]:
            lines.append(f"{parent} {child}")
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Dag:
    """Parse the text exchange format produced by :func:`format_edge_list`."""
    exposure = outcome = None
    nodes: dict[str, None] = {}
    edges: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line.split()
            directive = parts[0]
            if directive == "#exposure" and len(parts) == 2:
                exposure = parts[1]
                nodes.setdefault(exposure)
            elif directive == "#outcome" and len(parts) == 2:
                outcome = parts[1]
                nodes.setdefault(outcome)
            elif directive == "#node" and len(parts) == 2:
                nodes.setdefault(parts[1])
            else:
                raise ValueError(f"line {lineno}: bad directive {line!r}")
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'parent child', got {line!r}")
        parent, child = parts
        nodes.setdefault(parent)
        nodes.setdefault(child)
        edges.append((parent, child))
    if exposure is None or outcome is None:
        raise ValueError("missing #exposure or #outcome directive")
    return Dag(list(nodes), edges, exposure=exposure, outcome=outcome)
