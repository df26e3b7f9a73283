"""Finite simple connected graphs and their structural decompositions.

Vertices are 1-indexed.  Two decompositions drive the certificate engine:
iterated leaf removal (2-core plus pendant trees) and the biconnected
block/cut-vertex decomposition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import networkx as nx

Edge = tuple[int, int]


class GraphFormatError(ValueError):
    """Malformed graph input (bad line, bad index, duplicate edge)."""


class DisconnectedGraphError(ValueError):
    """Input graph is not connected; carries one offending component."""

    def __init__(self, component: Sequence[int]):
        self.component = tuple(sorted(component))
        super().__init__(
            f"graph is not connected; isolated component: {self.component}"
        )


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices 1..n with a sorted edge tuple."""

    n: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        if self.n < 1:
            raise GraphFormatError(f"vertex count must be positive, got {self.n}")
        seen = set()
        norm = []
        for e in self.edges:
            i, j = e
            if i == j:
                raise GraphFormatError(f"self-loop at vertex {i}")
            if i > j:
                i, j = j, i
            if not (1 <= i < j <= self.n):
                raise GraphFormatError(f"edge {e} out of range for n={self.n}")
            if (i, j) in seen:
                raise GraphFormatError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
            norm.append((i, j))
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {v: [] for v in range(1, self.n + 1)}
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def degree(self, v: int) -> int:
        return sum(1 for i, j in self.edges if v in (i, j))

    def is_connected(self) -> bool:
        return not self._missing_component()

    def _missing_component(self) -> tuple[int, ...]:
        """BFS from vertex 1; returns the unreached component (empty if none)."""
        adj = self.adjacency()
        seen = {1}
        stack = [1]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) == self.n:
            return ()
        rest = sorted(set(range(1, self.n + 1)) - seen)
        # report the whole component containing the smallest unreached vertex
        comp = {rest[0]}
        stack = [rest[0]]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        return tuple(sorted(comp))

    def require_connected(self) -> "Graph":
        comp = self._missing_component()
        if comp:
            raise DisconnectedGraphError(comp)
        return self

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(1, self.n + 1))
        g.add_edges_from(self.edges)
        return g

    def to_json_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}


def parse_graph(text: str) -> Graph:
    """Parse the line-oriented graph format or its JSON equivalent.

    Line format: optional ``#`` comments, one ``n <count>`` header, then
    ``e <i> <j>`` lines.  JSON: ``{"n": 3, "edges": [[1, 2], ...]}``.
    Disconnected graphs are rejected.
    """
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphFormatError(f"invalid JSON graph: {exc}") from exc
        if "n" not in obj or "edges" not in obj:
            raise GraphFormatError('JSON graph needs keys "n" and "edges"')
        g = Graph(int(obj["n"]), tuple(tuple(int(v) for v in e) for e in obj["edges"]))
        return g.require_connected()

    n = None
    edges: list[Edge] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "n":
            if n is not None:
                raise GraphFormatError(f"line {lineno}: repeated header")
            if len(parts) != 2 or not parts[1].isdigit():
                raise GraphFormatError(f"line {lineno}: bad header {line!r}")
            n = int(parts[1])
        elif parts[0] == "e":
            if n is None:
                raise GraphFormatError(f"line {lineno}: edge before header")
            if len(parts) != 3:
                raise GraphFormatError(f"line {lineno}: bad edge line {line!r}")
            try:
                i, j = int(parts[1]), int(parts[2])
            except ValueError as exc:
                raise GraphFormatError(f"line {lineno}: bad edge line {line!r}") from exc
            edges.append((i, j))
        else:
            raise GraphFormatError(f"line {lineno}: unrecognized line {line!r}")
    if n is None:
        raise GraphFormatError("missing 'n <count>' header")
    try:
        g = Graph(n, tuple(edges))
    except GraphFormatError:
        raise
    return g.require_connected()


def is_tree(g: Graph) -> bool:
    """A connected graph is a tree iff it has n-1 edges."""
    return g.num_edges == g.n - 1


@dataclass(frozen=True)
class PendantTree:
    """One pendant tree: its root lies on the core, the rest was peeled off."""

    root: int
    vertices: tuple[int, ...]  # removed vertices only (root excluded)
    edges: tuple[Edge, ...]  # includes the edge(s) into the root

    def all_vertices(self) -> tuple[int, ...]:
        return tuple(sorted((self.root,) + self.vertices))


@dataclass(frozen=True)
class ContractionDecomposition:
    """2-core plus the forest of pendant trees hanging off it."""

    graph: Graph
    core_vertices: tuple[int, ...]
    core_edges: tuple[Edge, ...]
    pendant_trees: tuple[PendantTree, ...]
    is_tree: bool  # whole graph is a tree: core empty, handle via tree route

    def vertex_map(self) -> dict[int, int | str]:
        """original vertex -> "core" or the root of its pendant tree."""
        out: dict[int, int | str] = {v: "core" for v in self.core_vertices}
        for t in self.pendant_trees:
            for v in t.vertices:
                out[v] = t.root
        return out

    def core_graph(self) -> tuple[Graph, dict[int, int]]:
        """Relabel the core to 1..k; returns (graph, original->relabeled)."""
        if not self.core_vertices:
            raise ValueError("core is empty (graph is a tree)")
        remap = {v: i + 1 for i, v in enumerate(self.core_vertices)}
        edges = tuple((remap[i], remap[j]) for i, j in self.core_edges)
        return Graph(len(self.core_vertices), edges), remap


def contract_pendant_trees(g: Graph) -> ContractionDecomposition:
    """Iteratively strip degree-1 vertices; group removals by core root.

    For a tree the stripping consumes everything and the result is flagged
    so callers route it through the tree certificate instead.
    """
    g.require_connected()
    adj = {v: set(ws) for v, ws in g.adjacency().items()}
    alive = set(range(1, g.n + 1))
    parent: dict[int, int] = {}
    order: list[int] = []
    leaves = sorted(v for v in alive if len(adj[v]) <= 1)
    queue = list(leaves)
    while queue:
        v = queue.pop(0)
        if v not in alive or len(adj[v]) > 1:
            continue
        if len(adj[v]) == 0:
            # n == 1, or the last two vertices of a tree collapse
            alive.discard(v)
            order.append(v)
            continue
        (w,) = adj[v]
        parent[v] = w
        alive.discard(v)
        order.append(v)
        adj[w].discard(v)
        adj[v] = set()
        if len(adj[w]) == 1 and w in alive:
            queue.append(w)
        queue.sort()

    core_vertices = tuple(sorted(alive))
    tree_flag = not core_vertices
    core_set = set(core_vertices)
    core_edges = tuple(e for e in g.edges if e[0] in core_set and e[1] in core_set)

    pendants: tuple[PendantTree, ...] = ()
    if not tree_flag:
        # walk parent pointers to the core to find each removed vertex's root
        root_of: dict[int, int] = {}

        def find_root(v: int) -> int:
            path = []
            while v not in core_set:
                path.append(v)
                v = parent[v]
            for u in path:
                root_of[u] = v
            return v

        groups: dict[int, list[int]] = {}
        for v in order:
            r = find_root(v)
            groups.setdefault(r, []).append(v)
        plist = []
        for r in sorted(groups):
            verts = tuple(sorted(groups[r]))
            vset = set(verts) | {r}
            tedges = tuple(
                e for e in g.edges if e[0] in vset and e[1] in vset and e not in core_edges
            )
            plist.append(PendantTree(root=r, vertices=verts, edges=tedges))
        pendants = tuple(plist)

    return ContractionDecomposition(
        graph=g,
        core_vertices=core_vertices,
        core_edges=core_edges,
        pendant_trees=pendants,
        is_tree=tree_flag,
    )


@dataclass(frozen=True)
class BlockEntry:
    """One biconnected block, both as original vertex/edge sets and relabeled."""

    vertices: tuple[int, ...]
    edges: tuple[Edge, ...]

    def graph(self) -> tuple[Graph, dict[int, int]]:
        remap = {v: i + 1 for i, v in enumerate(self.vertices)}
        return Graph(len(self.vertices), tuple(
            tuple(sorted((remap[i], remap[j]))) for i, j in self.edges
        )), remap

    def is_single_edge(self) -> bool:
        return len(self.edges) == 1

    def is_triangle(self) -> bool:
        return len(self.vertices) == 3 and len(self.edges) == 3


@dataclass(frozen=True)
class BlockDecomposition:
    """Blocks, cut vertices, and a spanning block tree rooted at block 0.

    ``block_tree`` entries are (parent_index, cut_vertex, child_index); there
    are exactly len(blocks) - 1 of them and the structure is acyclic by
    construction (BFS over the bipartite block/cut-vertex tree).
    """

    graph: Graph
    blocks: tuple[BlockEntry, ...]
    cut_vertices: tuple[int, ...]
    block_tree: tuple[tuple[int, int, int], ...]

    def root_index(self) -> int:
        return 0


def block_decomposition(g: Graph) -> BlockDecomposition:
    g.require_connected()
    nxg = g.to_networkx()
    blocks = []
    for edge_set in nx.biconnected_component_edges(nxg):
        edges = tuple(sorted(tuple(sorted(e)) for e in edge_set))
        verts = tuple(sorted({v for e in edges for v in e}))
        blocks.append(BlockEntry(vertices=verts, edges=edges))
    if not blocks:
        # single vertex, no edges
        blocks = [BlockEntry(vertices=(1,), edges=())]
    blocks.sort(key=lambda b: (b.vertices[0], len(b.vertices), b.vertices))
    cuts = tuple(sorted(nx.articulation_points(nxg)))

    # BFS over blocks through shared cut vertices; each block gets one parent
    tree_edges: list[tuple[int, int, int]] = []
    if len(blocks) > 1:
        cut_to_blocks: dict[int, list[int]] = {}
        for bi, b in enumerate(blocks):
            for v in b.vertices:
                if v in cuts:
                    cut_to_blocks.setdefault(v, []).append(bi)
        placed = {0}
        frontier = [0]
        while frontier:
            nxt = []
            for bi in frontier:
                for v in blocks[bi].vertices:
                    if v not in cut_to_blocks:
                        continue
                    for bj in cut_to_blocks[v]:
                        if bj not in placed:
                            placed.add(bj)
                            tree_edges.append((bi, v, bj))
                            nxt.append(bj)
            frontier = nxt
        assert len(placed) == len(blocks)

    return BlockDecomposition(
        graph=g,
        blocks=tuple(blocks),
        cut_vertices=cuts,
        block_tree=tuple(tree_edges),
    )


# small named graphs used across tests and docs

def single_edge() -> Graph:
    return Graph(2, ((1, 2),))


def triangle() -> Graph:
    return Graph(3, ((1, 2), (1, 3), (2, 3)))


def path3() -> Graph:
    """Chain on three vertices; the two leaves come first, the center is 3."""
    return Graph(3, ((1, 3), (2, 3)))


def star(leaves: int) -> Graph:
    """Star with center 1."""
    return Graph(leaves + 1, tuple((1, k) for k in range(2, leaves + 2)))


def cycle(n: int) -> Graph:
    edges = tuple(sorted((i, i % n + 1) if i < i % n + 1 else (i % n + 1, i))
                  for i in range(1, n + 1))
    return Graph(n, edges)


def triangle_with_pendant_tree() -> Graph:
    """8 vertices: a 5-vertex tree rooted on one corner of a triangle."""
    return Graph(8, ((1, 2), (1, 3), (3, 4), (4, 5), (4, 6), (6, 7), (7, 8), (6, 8)))


def two_triangles() -> Graph:
    """Two triangles sharing the single vertex 3."""
    return Graph(5, ((1, 2), (1, 3), (2, 3), (3, 4), (3, 5), (4, 5)))


def two_block_figure() -> Graph:
    """13 vertices, two 2-connected pieces sharing the single cut vertex 4."""
    edges = (
        (1, 2), (1, 3), (2, 3), (2, 5), (3, 4), (3, 5), (4, 5),
        (4, 6), (6, 7), (6, 8), (7, 8), (7, 9), (8, 9),
        (10, 11), (10, 12), (11, 12), (10, 13), (11, 13),
        (9, 13), (8, 10), (6, 10), (4, 10),
    )
    return Graph(13, edges)
