"""Regular graphs, strong products, expanders and set geometry.

Vertices are dense integers ``0..n-1``.  A :class:`Graph` is simple,
regular and connected; irregular or weighted structure (produced when a
vertex set is collapsed) lives in :class:`WeightedGraph`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

# product construction stores ids as int32 in the walker kernels
MAX_VERTICES = 2**31 - 1
ALL_PAIRS_CUTOFF = 5000


class GraphError(ValueError):
    """Raised when a construction or file violates a graph invariant."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple connected ``degree``-regular graph with sorted neighbour rows.

    ``adjacency[x]`` holds the neighbours of ``x`` in increasing order.  The
    ``vertex_transitive`` flag is set only by constructions that are
    transitive by design (cycles, tori, complete graphs and their strong
    products); it lets :func:`diameter` use a single BFS.
    """

    adjacency: np.ndarray
    label: str = ""
    vertex_transitive: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        adj = np.ascontiguousarray(self.adjacency, dtype=np.int32)
        if adj.ndim != 2:
            raise GraphError("adjacency must be an (n, d) array")
        object.__setattr__(self, "adjacency", adj)
        adj.setflags(write=False)
        _validate(adj)

    @property
    def vertex_count(self) -> int:
        return self.adjacency.shape[0]

    n = vertex_count

    @property
    def degree(self) -> int:
        return self.adjacency.shape[1]

    def neighbors(self, x: int) -> np.ndarray:
        return self.adjacency[x]

    def csr(self) -> csr_matrix:
        n, d = self.adjacency.shape
        indptr = np.arange(0, n * d + 1, d, dtype=np.int64)
        data = np.ones(n * d, dtype=np.float64)
        return csr_matrix((data, self.adjacency.ravel(), indptr), shape=(n, n))

    def edges(self) -> np.ndarray:
        """Undirected edge list ``(x, y)`` with ``x < y``."""
        n, d = self.adjacency.shape
        src = np.repeat(np.arange(n), d)
        dst = self.adjacency.ravel()
        keep = src < dst
        return np.column_stack([src[keep], dst[keep]])

    def __repr__(self):
        return f"Graph(n={self.vertex_count}, d={self.degree}, label={self.label!r})"


def _validate(adj: np.ndarray) -> None:
    n, d = adj.shape
    if n < 1:
        raise GraphError("graph needs at least one vertex")
    if d >= n and n > 1:
        raise GraphError(f"degree {d} impossible on {n} vertices")
    if d == 0:
        if n != 1:
            raise GraphError("degree 0 is only allowed for the single-vertex graph")
        return
    if adj.min() < 0 or adj.max() >= n:
        raise GraphError("neighbour id out of range")
    rows = np.arange(n)[:, None]
    if np.any(adj == rows):
        raise GraphError("self-loop in simple graph")
    if np.any(np.diff(adj, axis=1) <= 0):
        raise GraphError("neighbour rows must be strictly increasing (no multi-edges)")
    # symmetry: the multiset of directed edges equals its reverse
    src = np.repeat(np.arange(n, dtype=np.int64), d)
    dst = adj.ravel().astype(np.int64)
    fwd = np.sort(src * n + dst)
    rev = np.sort(dst * n + src)
    if not np.array_equal(fwd, rev):
        raise GraphError("adjacency is not symmetric")
    if n > 1:
        mat = csr_matrix((np.ones(n * d), adj.ravel(), np.arange(0, n * d + 1, d)), shape=(n, n))
        ncomp, _ = connected_components(mat, directed=False)
        if ncomp != 1:
            raise GraphError(f"graph is disconnected ({ncomp} components)")


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Symmetric nonnegative weights, self-loops allowed.

    A loop weight ``w(x, x)`` counts once in the total weight of ``x``.
    """

    weights: np.ndarray
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise GraphError("weights must be a square matrix")
        if np.any(w < 0):
            raise GraphError("negative edge weight")
        if not np.array_equal(w, w.T):
            raise GraphError("weights are not symmetric")
        if np.any(w.sum(axis=1) <= 0):
            raise GraphError("every vertex needs positive total weight")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def vertex_count(self) -> int:
        return self.weights.shape[0]

    n = vertex_count

    @property
    def total_weight(self) -> np.ndarray:
        return self.weights.sum(axis=1)


@dataclass(frozen=True)
class VertexSet:
    """Strictly increasing tuple of distinct vertex ids."""

    ids: tuple

    def __post_init__(self):
        ids = tuple(int(v) for v in self.ids)
        if any(b <= a for a, b in zip(ids, ids[1:])):
            raise GraphError("VertexSet ids must be strictly increasing")
        if ids and ids[0] < 0:
            raise GraphError("negative vertex id")
        object.__setattr__(self, "ids", ids)

    @classmethod
    def of(cls, ids: Iterable[int], n: int | None = None) -> "VertexSet":
        vals = sorted(set(int(v) for v in ids))
        if n is not None and vals and vals[-1] >= n:
            raise GraphError(f"vertex id {vals[-1]} out of range for n={n}")
        return cls(tuple(vals))

    def __len__(self):
        return len(self.ids)

    def __iter__(self):
        return iter(self.ids)

    def __contains__(self, v):
        return int(v) in self.ids

    def as_array(self) -> np.ndarray:
        return np.asarray(self.ids, dtype=np.int64)


def as_vertex_set(a, n: int | None = None) -> VertexSet:
    if isinstance(a, VertexSet):
        if n is not None and a.ids and a.ids[-1] >= n:
            raise GraphError(f"vertex id {a.ids[-1]} out of range for n={n}")
        return a
    if isinstance(a, (int, np.integer)):
        a = [a]
    return VertexSet.of(a, n)


# --------------------------------------------------------------------------
# constructions


def _from_neighbor_lists(lists: Sequence[Iterable[int]], **kw) -> Graph:
    rows = [sorted(set(int(v) for v in row)) for row in lists]
    degs = {len(r) for r in rows}
    if len(degs) != 1:
        raise GraphError(f"graph is not regular (degrees {sorted(degs)})")
    d = degs.pop()
    adj = np.array(rows, dtype=np.int32).reshape(len(rows), d)
    return Graph(adj, **kw)


def single_vertex() -> Graph:
    return Graph(np.zeros((1, 0), dtype=np.int32), label="K1", vertex_transitive=True, meta={"kind": "complete", "n": 1})


def build_cycle(m: int) -> Graph:
    """Cycle ``C_m``; degree 2, diameter ``m // 2``."""
    if m < 3:
        raise GraphError(f"cycle needs m >= 3, got {m}")
    x = np.arange(m)
    adj = np.sort(np.column_stack([(x - 1) % m, (x + 1) % m]), axis=1)
    return Graph(adj, label=f"C{m}", vertex_transitive=True, meta={"kind": "cycle", "m": m})


def build_complete(n: int) -> Graph:
    if n < 1:
        raise GraphError("complete graph needs n >= 1")
    if n == 1:
        return single_vertex()
    full = np.arange(n)
    adj = np.array([np.delete(full, i) for i in range(n)])
    return Graph(adj, label=f"K{n}", vertex_transitive=True, meta={"kind": "complete", "n": n})


def build_torus(side_lengths: Sequence[int]) -> Graph:
    """Cartesian torus ``Z/L1 x ... x Z/Ld`` in row-major vertex order."""
    sides = [int(s) for s in side_lengths]
    if not sides:
        raise GraphError("torus needs at least one side length")
    if any(s < 3 for s in sides):
        raise GraphError(f"torus sides must be >= 3, got {sides}")
    n = math.prod(sides)
    if n > MAX_VERTICES:
        raise GraphError("torus too large")
    coords = np.indices(sides).reshape(len(sides), -1)
    cols = []
    for axis, L in enumerate(sides):
        for step in (-1, 1):
            shifted = coords.copy()
            shifted[axis] = (shifted[axis] + step) % L
            cols.append(np.ravel_multi_index(shifted, sides))
    adj = np.sort(np.column_stack(cols), axis=1)
    label = "T" + "x".join(map(str, sides))
    return Graph(adj, label=label, vertex_transitive=True, meta={"kind": "torus", "sides": sides})


def strong_product(g1: Graph, g2: Graph) -> Graph:
    """Strong product; vertex ``(x1, x2)`` has id ``x1 * n2 + x2``.

    Two vertices are adjacent when each coordinate is equal or adjacent and
    they are not identical, so the degree is ``(d1 + 1)(d2 + 1) - 1``.
    """
    n1, n2 = g1.vertex_count, g2.vertex_count
    if n1 * n2 > MAX_VERTICES:
        raise GraphError(f"strong product of {n1} x {n2} vertices overflows vertex ids")
    # closed neighbourhoods, self first
    c1 = np.column_stack([np.arange(n1), g1.adjacency])
    c2 = np.column_stack([np.arange(n2), g2.adjacency])
    k1, k2 = c1.shape[1], c2.shape[1]
    ids = (c1[:, None, :, None].astype(np.int64) * n2 + c2[None, :, None, :]).reshape(n1 * n2, k1 * k2)
    adj = np.sort(ids[:, 1:], axis=1)  # column 0 is the vertex itself
    meta = {"kind": "strong_product", "factors": (g1, g2)}
    return Graph(
        adj,
        label=f"({g1.label})x({g2.label})",
        vertex_transitive=g1.vertex_transitive and g2.vertex_transitive,
        meta=meta,
    )


def transition_gap(g: Graph) -> float:
    """``1 - lambda_2`` of the simple random walk transition matrix."""
    n, d = g.vertex_count, g.degree
    if n == 1:
        return 1.0
    a = g.csr().toarray() / d
    ev = np.linalg.eigvalsh(a)
    return float(1.0 - ev[-2])


def feasible_expander_size(target: float, degree: int) -> int:
    """Closest integer ``size > degree`` to ``target`` with ``size * degree`` even."""
    lo = max(degree + 1, int(math.floor(target)))
    best = None
    for cand in range(max(degree + 1, lo - 2), lo + 4):
        if (cand * degree) % 2:
            continue
        if best is None or abs(cand - target) < abs(best - target):
            best = cand
    return best


def build_expander(size: int, degree: int, seed: int = 0, gap_floor: float = 0.1, max_tries: int = 50) -> Graph:
    """Random ``degree``-regular graph certified by its spectral gap.

    Graphs are resampled until one is simple, connected and has transition
    gap ``>= gap_floor``.  The achieved gap is stored in ``meta["gap"]``.
    """
    import networkx as nx

    if degree < 3:
        raise GraphError("expander degree must be >= 3")
    if degree >= size:
        raise GraphError(f"degree {degree} must be smaller than size {size}")
    if (size * degree) % 2:
        raise GraphError(f"size*degree = {size * degree} is odd (handshake parity)")
    rng = np.random.default_rng(seed)
    best_gap = -np.inf
    for attempt in range(max_tries):
        sub = int(rng.integers(0, 2**31 - 1))
        nxg = nx.random_regular_graph(degree, size, seed=sub)
        if not nx.is_connected(nxg):
            continue
        try:
            g = _from_neighbor_lists([list(nxg.neighbors(v)) for v in range(size)])
        except GraphError:
            continue
        gap = transition_gap(g)
        best_gap = max(best_gap, gap)
        if gap >= gap_floor:
            meta = {"kind": "expander", "size": size, "degree": degree, "seed": seed, "gap": gap, "attempt": attempt}
            return Graph(g.adjacency, label=f"RR{degree}n{size}", meta=meta)
    raise GraphError(f"no {degree}-regular graph on {size} vertices reached gap {gap_floor} in {max_tries} tries (best {best_gap:.4f})")


# --------------------------------------------------------------------------
# distances


def bfs_distances(g: Graph, v: int) -> np.ndarray:
    """Graph distances from ``v`` to every vertex (int64)."""
    if g.vertex_count == 1:
        return np.zeros(1, dtype=np.int64)
    dist = shortest_path(g.csr(), unweighted=True, directed=False, indices=int(v))
    return dist.astype(np.int64)


def diameter(g: Graph) -> int:
    """Exact diameter; one BFS when the construction is vertex-transitive."""
    if g.vertex_count == 1:
        return 0
    if g.vertex_transitive:
        return int(bfs_distances(g, 0).max())
    if g.vertex_count > ALL_PAIRS_CUTOFF:
        raise GraphError(f"all-pairs diameter refused above {ALL_PAIRS_CUTOFF} vertices")
    dist = shortest_path(g.csr(), unweighted=True, directed=False)
    return int(dist.max())


def ball_volume(g: Graph, v: int, r: int) -> int:
    return int(np.count_nonzero(bfs_distances(g, v) <= r))


def _pair_distances(g: Graph, ids: Sequence[int]) -> np.ndarray:
    ids = list(ids)
    rows = [bfs_distances(g, x)[ids] for x in ids]
    return np.array(rows, dtype=np.int64)


def mindist(g: Graph, a) -> int:
    """Minimum pairwise graph distance within ``a`` (needs ``|a| >= 2``)."""
    a = as_vertex_set(a, g.vertex_count)
    if len(a) < 2:
        raise GraphError("mindist needs at least two points")
    dm = _pair_distances(g, a.ids)
    iu = np.triu_indices(len(a), 1)
    return int(dm[iu].min())


def skeleton(g: Graph, a, delta: int) -> list[tuple[int, ...]]:
    """Components of the "within distance ``delta``" linkage on ``a``.

    Components are returned sorted by their smallest element.
    """
    if delta < 1:
        raise GraphError("delta must be >= 1")
    a = as_vertex_set(a, g.vertex_count)
    ids = list(a.ids)
    parent = list(range(len(ids)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    if len(ids) > 1:
        dm = _pair_distances(g, ids)
        for i, j in itertools.combinations(range(len(ids)), 2):
            if dm[i, j] <= delta:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i, v in enumerate(ids):
        groups.setdefault(find(i), []).append(v)
    return sorted((tuple(sorted(grp)) for grp in groups.values()), key=lambda c: c[0])


# --------------------------------------------------------------------------
# text format: "n d label" then one line of neighbours per vertex


def save_graph(g: Graph, path) -> None:
    lines = [f"{g.vertex_count} {g.degree} {g.label}".rstrip()]
    lines += [" ".join(map(str, row)) for row in g.adjacency.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def load_graph(path) -> Graph:
    text = Path(path).read_text().splitlines()
    if not text:
        raise GraphError(f"{path}: empty graph file")
    head = text[0].split(maxsplit=2)
    if len(head) < 2:
        raise GraphError(f"{path}: header must be 'n d label'")
    n, d = int(head[0]), int(head[1])
    label = head[2] if len(head) > 2 else ""
    body = [ln for ln in text[1:] if ln.strip()] if d > 0 else text[1 : 1 + n]
    if len(body) != n:
        raise GraphError(f"{path}: expected {n} adjacency lines, found {len(body)}")
    rows = []
    for i, ln in enumerate(body):
        row = [int(tok) for tok in ln.split()]
        if len(row) != d:
            raise GraphError(f"{path}: vertex {i} has {len(row)} neighbours, header says {d}")
        rows.append(sorted(row))
    adj = np.array(rows, dtype=np.int32).reshape(n, d)
    return Graph(adj, label=label, meta={"kind": "file", "path": str(path)})


complete_graph = build_complete
