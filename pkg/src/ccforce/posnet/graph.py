"""Keypoint graph over a stereo pair: 8 tool keypoints per view."""

from dataclasses import dataclass

import numpy as np

from ..simulator import KEYPOINT_NAMES
from ..types import N_KEYPOINTS

# Directed tool-geometry edges within one view, as (source, target) keypoint
# indices: shaft -> wrist -> jaw bases -> jaw tips, with the jaw midpoints as
# a side chain off the wrist.
INTRA_VIEW_EDGES = (
    (0, 1),
    (1, 2),
    (2, 3),
    (1, 4),
    (4, 5),
    (1, 6),
    (6, 7),
)


@dataclass(frozen=True)
class GraphSpec:
    """Fixed message-passing graph.

    ``edges`` are directed (source, target) pairs; messages flow from source
    to target. Cross-view links appear in both directions.
    """

    n_nodes: int
    edges: tuple
    node_names: tuple
    n_cross_view: int = 0

    @property
    def feature_dim(self):
        # one-hot node identity + (u, v)
        return self.n_nodes + 2

    def in_neighbors(self, node):
        return [s for s, t in self.edges if t == node]

    def aggregation_matrix(self):
        """Row-normalized in-neighbour matrix; rows of isolated nodes are zero."""
        A = np.zeros((self.n_nodes, self.n_nodes))
        for s, t in self.edges:
            A[t, s] = 1.0
        deg = A.sum(axis=1, keepdims=True)
        return np.divide(A, deg, out=np.zeros_like(A), where=deg > 0)

    def relabel(self, perm):
        """Same graph with node ``i`` stored at index ``perm[i]``."""
        perm = [int(i) for i in perm]
        names = [None] * self.n_nodes
        for i, j in enumerate(perm):
            names[j] = self.node_names[i]
        return GraphSpec(
            n_nodes=self.n_nodes,
            edges=tuple((perm[s], perm[t]) for s, t in self.edges),
            node_names=tuple(names),
            n_cross_view=self.n_cross_view,
        )


def build_tool_graph():
    """The 16-node stereo tool graph used by the GNN position estimator."""
    names = tuple(f"left_{n}" for n in KEYPOINT_NAMES) + tuple(f"right_{n}" for n in KEYPOINT_NAMES)
    edges = []
    for offset in (0, N_KEYPOINTS):
        edges.extend((s + offset, t + offset) for s, t in INTRA_VIEW_EDGES)
    for i in range(N_KEYPOINTS):
        edges.append((i, i + N_KEYPOINTS))
        edges.append((i + N_KEYPOINTS, i))
    return GraphSpec(n_nodes=2 * N_KEYPOINTS, edges=tuple(edges), node_names=names, n_cross_view=N_KEYPOINTS)


def node_features(keypoint_vectors, n_nodes=2 * N_KEYPOINTS):
    """(n, 32) keypoint vectors -> (n, 16, 18) node features: one-hot identity then (u, v)."""
    kv = np.asarray(keypoint_vectors)
    if not np.issubdtype(kv.dtype, np.floating):
        kv = kv.astype(np.float64)
    if kv.ndim == 1:
        kv = kv[None]
    coords = kv.reshape(kv.shape[0], n_nodes, 2)
    onehot = np.broadcast_to(np.eye(n_nodes, dtype=kv.dtype), (kv.shape[0], n_nodes, n_nodes))
    return np.concatenate([onehot, coords], axis=2)
