"""Network graphs and the combination matrices used by diffusion.

A :class:`Topology` is an undirected graph in which every node belongs to its
own neighborhood. :class:`CombinationMatrices` holds the pair ``(A, C)``:
``A`` is left-stochastic (columns sum to one) and weights the diffusion of
intermediate estimates, ``C`` is right-stochastic (rows sum to one) and
weights the exchange of raw measurements.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import breadth_first_order

STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True)
class Topology:
    """Undirected graph with mandatory self-loops.

    Attributes
    ----------
    num_nodes : int
        Number of nodes ``N``.
    adjacency : ndarray of bool, shape (N, N)
        Symmetric neighborhood relation; ``adjacency[l, k]`` is True when
        ``l`` belongs to the neighborhood of ``k``. The diagonal is always
        True.
    connected : bool
        Whether the graph has a single connected component.
    """

    num_nodes: int
    adjacency: np.ndarray = field(repr=False)
    connected: bool = True

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=bool)
        if self.num_nodes < 1:
            raise ValueError(f"num_nodes must be positive, got {self.num_nodes}")
        if adj.shape != (self.num_nodes, self.num_nodes):
            raise ValueError(f"adjacency must be {self.num_nodes}x{self.num_nodes}, got {adj.shape}")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        adj = adj.copy()
        np.fill_diagonal(adj, True)
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    @classmethod
    def from_edges(cls, num_nodes: int, edges) -> "Topology":
        """Build a topology from 0-indexed ``(u, v)`` pairs; connectivity is recorded, not enforced."""
        adj = np.eye(num_nodes, dtype=bool)
        for u, v in edges:
            if not (0 <= u < num_nodes and 0 <= v < num_nodes):
                raise ValueError(f"edge ({u}, {v}) out of range for {num_nodes} nodes")
            adj[u, v] = adj[v, u] = True
        return cls(num_nodes, adj, is_connected(adj))

    @property
    def degrees(self) -> np.ndarray:
        """Neighborhood sizes ``|N_k|`` (self included)."""
        return self.adjacency.sum(axis=0)

    def neighbors(self, k: int) -> np.ndarray:
        """Indices of the neighborhood of node ``k``, including ``k``."""
        return np.flatnonzero(self.adjacency[:, k])

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edges ``u < v`` (self-loops excluded)."""
        iu, iv = np.nonzero(np.triu(self.adjacency, k=1))
        return list(zip(iu.tolist(), iv.tolist()))

    def permuted(self, perm) -> "Topology":
        """Relabel nodes so that old node ``perm[j]`` becomes node ``j``."""
        perm = np.asarray(perm)
        return Topology(self.num_nodes, self.adjacency[np.ix_(perm, perm)], self.connected)


def is_connected(adjacency) -> bool:
    """Breadth-first reachability check from node 0."""
    adj = np.asarray(adjacency, dtype=bool)
    if adj.shape[0] == 0:
        return True
    order = breadth_first_order(adj.astype(np.int8), 0, directed=False, return_predecessors=False)
    return len(order) == adj.shape[0]


def random_geometric_topology(num_nodes: int, radius: float, rng, max_tries: int = 1000) -> Topology:
    """Connected random geometric graph on the unit square.

    Nodes are dropped uniformly and linked when closer than ``radius``;
    placements are redrawn until the graph is connected.

    Parameters
    ----------
    num_nodes : int
        Number of nodes.
    radius : float
        Communication radius.
    rng : numpy.random.Generator
        Source of node positions.
    max_tries : int, optional
        Number of placements attempted before giving up.

    Returns
    -------
    Topology
    """
    for _ in range(max_tries):
        pos = rng.random((num_nodes, 2))
        dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
        adj = dist < radius
        if is_connected(adj):
            return Topology(num_nodes, adj, True)
    raise RuntimeError(f"no connected placement found for N={num_nodes}, radius={radius} in {max_tries} tries")


def load_edge_list(path) -> Topology:
    """Read the plain-text format: a ``nodes N`` header, then one ``u v`` pair per line.

    Blank lines and ``#`` comments are ignored.
    """
    num_nodes = None
    edges = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if num_nodes is None:
            if len(parts) != 2 or parts[0] != "nodes":
                raise ValueError(f"{path}:{lineno}: expected header 'nodes N', got {raw!r}")
            num_nodes = int(parts[1])
            continue
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'u v', got {raw!r}")
        edges.append((int(parts[0]), int(parts[1])))
    if num_nodes is None:
        raise ValueError(f"{path}: missing 'nodes N' header")
    return Topology.from_edges(num_nodes, edges)


def save_edge_list(topology: Topology, path) -> None:
    lines = [f"nodes {topology.num_nodes}"] + [f"{u} {v}" for u, v in topology.edges()]
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class CombinationMatrices:
    """Diffusion weights ``A`` (left-stochastic) and data-exchange weights ``C`` (right-stochastic).

    Entry ``[l, k]`` of either matrix is the weight node ``k`` gives to
    information from node ``l``.
    """

    A: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        for name in ("A", "C"):
            mat = np.array(getattr(self, name), dtype=float)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise ValueError(f"{name} must be square, got shape {mat.shape}")
            mat.setflags(write=False)
            object.__setattr__(self, name, mat)
        if self.A.shape != self.C.shape:
            raise ValueError(f"A and C shapes differ: {self.A.shape} vs {self.C.shape}")

    @property
    def num_nodes(self) -> int:
        return self.A.shape[0]

    @classmethod
    def identity(cls, num_nodes: int) -> "CombinationMatrices":
        """``A = C = I``: the non-cooperative configuration."""
        eye = np.eye(num_nodes)
        return cls(eye, eye)

    def permuted(self, perm) -> "CombinationMatrices":
        perm = np.asarray(perm)
        ix = np.ix_(perm, perm)
        return CombinationMatrices(self.A[ix], self.C[ix])


def build_uniform_combiners(topology: Topology, exchange_data: bool = False,
                            exchange_weights: str = "sender") -> CombinationMatrices:
    """Neighborhood averaging, ``a_{l,k} = 1/|N_k|`` for ``l`` in ``N_k``.

    ``C`` is the identity unless ``exchange_data`` is set. Uniform exchange
    weights come in two flavors:

    * ``"sender"``: ``c_{l,k} = 1/|N_l|``, rows sum to one, so ``C`` is
      right-stochastic on every graph.
    * ``"receiver"``: ``c_{l,k} = 1/|N_k|``, the transpose pattern. Its rows
      only sum to one on regular graphs, so :func:`validate_combiners`
      reports the row-stochastic check as failed elsewhere.
    """
    adj = topology.adjacency.astype(float)
    deg = topology.degrees
    A = adj / deg[None, :]
    if not exchange_data:
        C = np.eye(topology.num_nodes)
    elif exchange_weights == "sender":
        C = adj / deg[:, None]
    elif exchange_weights == "receiver":
        C = A.copy()
    else:
        raise ValueError(f"exchange_weights must be 'sender' or 'receiver', got {exchange_weights!r}")
    return CombinationMatrices(A, C)


@dataclass
class ConstraintCheck:
    name: str
    passed: bool
    max_violation: float


@dataclass
class ValidationReport:
    """Pass/fail per combination-matrix constraint, with the worst violation seen."""

    checks: list[ConstraintCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[ConstraintCheck]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> ConstraintCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __str__(self):
        rows = [f"{c.name:24s} {'pass' if c.passed else 'FAIL'}  max violation {c.max_violation:.3e}" for c in self.checks]
        return "\n".join(rows)


def validate_combiners(mats: CombinationMatrices, topology: Topology, tol: float = STOCHASTIC_TOL) -> ValidationReport:
    """Check nonnegativity, sparsity pattern and stochasticity of ``(A, C)``.

    Returns a report rather than raising; the ``max_violation`` of each check
    is the largest offending magnitude (0 when the constraint holds exactly).
    """
    A, C = mats.A, mats.C
    outside = ~topology.adjacency
    checks = []
    for name, mat in (("A", A), ("C", C)):
        neg = float(max(0.0, -mat.min()))
        checks.append(ConstraintCheck(f"{name} nonnegative", neg <= 0.0, neg))
        leak = float(np.abs(mat[outside]).max()) if outside.any() else 0.0
        checks.append(ConstraintCheck(f"{name} sparsity pattern", leak <= 0.0, leak))
    col_err = float(np.abs(A.sum(axis=0) - 1.0).max())
    checks.append(ConstraintCheck("A column-stochastic", col_err <= tol, col_err))
    row_err = float(np.abs(C.sum(axis=1) - 1.0).max())
    checks.append(ConstraintCheck("C row-stochastic", row_err <= tol, row_err))
    return ValidationReport(checks)


def block_extend(matrix, block_dim: int) -> np.ndarray:
    """Kronecker extension ``matrix (x) I_M`` acting on stacked ``M``-vectors."""
    if block_dim < 1:
        raise ValueError(f"block_dim must be >= 1, got {block_dim}")
    return np.kron(np.asarray(matrix, dtype=float), np.eye(block_dim))
