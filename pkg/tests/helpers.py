import networkx as nx
import numpy as np

from embedor.graph import NeighborGraph


def from_nx(g: nx.Graph) -> NeighborGraph:
    g = nx.convert_node_labels_to_integers(g)
    e = np.array(sorted(tuple(sorted(uv)) for uv in g.edges()), dtype=np.int64).reshape(-1, 2)
    return NeighborGraph.from_edges(g.number_of_nodes(), e[:, 0], e[:, 1], np.ones(len(e)))


def from_pairs(n, pairs, lengths=None) -> NeighborGraph:
    e = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    w = np.ones(len(e)) if lengths is None else np.asarray(lengths, dtype=float)
    return NeighborGraph.from_edges(n, e[:, 0], e[:, 1], w)
