"""
Target graphs for the cluster-state builder and their stabilizer generators.

  - grid_graph: 2D square lattice, rail = row, time bin = column.
  - cubic_graph: 3D cubic lattice, photons flow along x (time).
  - raussendorf_graph: cubic lattice minus the "blue" vertices (0 or 3 odd
    coordinates), leaving degree-4 interior vertices.

Vertex ids are row-major with time fastest: (z, y, x) in 3D, (row, col) in 2D.
"""

import itertools
import logging
from typing import Iterable, Optional

import networkx as nx
import numpy as np

from models.schema import Color, Vertex
from tools.tableau import PauliString

logger = logging.getLogger(__name__)


class TargetGraph:
    """A target cluster graph; vertices carry a `Vertex` record under 'vertex'."""

    def __init__(self, graph: nx.Graph, kind: str, dims: tuple[int, ...]) -> None:
        for u, v in graph.edges:
            if u == v:
                raise ValueError(f"Self-loop on vertex {u}")
        self.graph = graph
        self.kind = kind
        self.dims = dims

    @property
    def vertices(self) -> list[Vertex]:
        return [self.graph.nodes[v]["vertex"] for v in sorted(self.graph.nodes)]

    @property
    def vertex_ids(self) -> list[int]:
        return sorted(self.graph.nodes)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return sorted((min(u, v), max(u, v)) for u, v in self.graph.edges)

    def vertex(self, vid: int) -> Vertex:
        return self.graph.nodes[vid]["vertex"]

    def neighbors(self, vid: int) -> list[int]:
        return sorted(self.graph.neighbors(vid))

    def degree(self, vid: int) -> int:
        return self.graph.degree[vid]

    def is_interior(self, vid: int) -> bool:
        """No coordinate on the boundary of the enclosing box."""
        coords = self.vertex(vid).coords
        return all(0 < c < size - 1 for c, size in zip(coords, self.dims))

    def __len__(self) -> int:
        return self.graph.number_of_nodes()

    def __repr__(self) -> str:
        return f"TargetGraph({self.kind}, dims={self.dims}, V={len(self)}, E={self.graph.number_of_edges()})"


class StabilizerGeneratorSet:
    """One generator K_i = X_i prod_{j in neigh(i)} Z_j per vertex, in vertex-id order."""

    def __init__(self, generators: list[PauliString], vertex_ids: list[int]) -> None:
        self.generators = generators
        self.vertex_ids = vertex_ids

    def labels(self) -> list[str]:
        return [g.to_label() for g in self.generators]

    def __iter__(self):
        return iter(self.generators)

    def __len__(self) -> int:
        return len(self.generators)


def _check_dims(dims: Iterable[int], minimum: int) -> None:
    for d in dims:
        if d < minimum:
            raise ValueError(f"Every dimension must be ≥ {minimum}, got {tuple(dims)}")


def rail_color(y: int, z: int) -> Color:
    """Rails whose kept photons sit on alternating time bins are green."""
    return Color.GREEN if (y + z) % 2 == 0 else Color.RED


def is_blue(coords: Iterable[int]) -> bool:
    odd = sum(c % 2 for c in coords)
    return odd in (0, 3)


def grid_graph(m: int, n: int) -> TargetGraph:
    """m×n square lattice with open boundaries; vertex (r, c) has rail r and time bin c."""
    _check_dims((m, n), 1)
    lattice = nx.grid_2d_graph(m, n)
    graph = nx.Graph()
    for r, c in sorted(lattice.nodes):
        vid = r * n + c
        graph.add_node(vid, vertex=Vertex(id=vid, coords=(r, c), rail=r, time_bin=c))
    graph.add_edges_from((a[0] * n + a[1], b[0] * n + b[1]) for a, b in lattice.edges)
    return TargetGraph(graph, "grid", (m, n))


def cubic_graph(nx_: int, ny: int, nz: int) -> TargetGraph:
    """Integer cubic lattice with 6-neighbour connectivity; x is the time axis."""
    _check_dims((nx_, ny, nz), 1)
    graph = nx.Graph()

    def vid(x: int, y: int, z: int) -> int:
        return (z * ny + y) * nx_ + x

    for z, y, x in itertools.product(range(nz), range(ny), range(nx_)):
        graph.add_node(
            vid(x, y, z),
            vertex=Vertex(
                id=vid(x, y, z),
                coords=(x, y, z),
                color=rail_color(y, z),
                rail=z * ny + y,
                time_bin=x,
            ),
        )
    for z, y, x in itertools.product(range(nz), range(ny), range(nx_)):
        if x + 1 < nx_:
            graph.add_edge(vid(x, y, z), vid(x + 1, y, z))
        if y + 1 < ny:
            graph.add_edge(vid(x, y, z), vid(x, y + 1, z))
        if z + 1 < nz:
            graph.add_edge(vid(x, y, z), vid(x, y, z + 1))
    return TargetGraph(graph, "cubic", (nx_, ny, nz))


def remove_blue_vertices(g: TargetGraph) -> TargetGraph:
    """Drop vertices with 0 or 3 odd coordinates together with their edges."""
    pruned = g.graph.copy()
    pruned.remove_nodes_from([v for v in g.vertex_ids if is_blue(g.vertex(v).coords)])
    return TargetGraph(pruned, "topological", g.dims)


def pruned_cubic_graph(nx_: int, ny: int, nz: int) -> TargetGraph:
    """remove_blue_vertices(cubic_graph(...)) for any box, degenerate slabs included."""
    return remove_blue_vertices(cubic_graph(nx_, ny, nz))


def raussendorf_graph(nx_: int, ny: int, nz: int) -> TargetGraph:
    """Topological cluster lattice on a box of at least 2 in every direction."""
    _check_dims((nx_, ny, nz), 2)
    return pruned_cubic_graph(nx_, ny, nz)


def validate_coloring(g: TargetGraph) -> list[str]:
    """
    Check the consequences of the blue-vertex rule on a pruned 3D graph.

    Returns a list of human-readable violations; empty when all hold:
      1. every interior vertex has degree 4,
      2. green rails are populated on alternating time bins only,
      3. no edge joins two green vertices.
    """
    problems: list[str] = []
    for vid in g.vertex_ids:
        if g.is_interior(vid) and g.degree(vid) != 4:
            problems.append(f"interior vertex {vid} has degree {g.degree(vid)}")

    bins_by_rail: dict[int, list[int]] = {}
    colors: dict[int, Color] = {}
    for v in g.vertices:
        bins_by_rail.setdefault(v.rail, []).append(v.time_bin)
        colors[v.rail] = v.color
    for rail, bins in bins_by_rail.items():
        if colors[rail] is Color.GREEN:
            gaps = set(np.diff(sorted(bins)).tolist())
            if gaps and gaps != {2}:
                problems.append(f"green rail {rail} has bin gaps {sorted(gaps)}")

    for u, v in g.edges:
        if g.vertex(u).color is Color.GREEN and g.vertex(v).color is Color.GREEN:
            problems.append(f"green-green edge ({u}, {v})")
    return problems


def cluster_generators(g: TargetGraph, order: Optional[list[int]] = None) -> StabilizerGeneratorSet:
    """
    Cluster-state stabilizer generators over qubits indexed by position in `order`.

    Args:
        g: Target graph.
        order: Vertex ids defining qubit order; defaults to sorted vertex ids.
    """
    order = order if order is not None else g.vertex_ids
    index = {vid: i for i, vid in enumerate(order)}
    n = len(order)
    generators = []
    for vid in order:
        x = np.zeros(n, dtype=bool)
        z = np.zeros(n, dtype=bool)
        x[index[vid]] = True
        for nb in g.neighbors(vid):
            z[index[nb]] = True
        generators.append(PauliString(x, z, 0))
    return StabilizerGeneratorSet(generators, list(order))
