#!/usr/bin/env python3
"""Synthetic stand-ins for five small benchmark networks.

Each graph is connected and has exactly the node and edge count of the network
it replaces. The generator follows the domain of the original: planar
proximity graphs for street networks, preferential attachment for a protein
interaction network, and community-structured graphs for the social ones.

    python3 tools/desk_surrogates.py data/desk
"""

import argparse
import pathlib

import networkx as nx
import numpy as np
from scipy.spatial import Delaunay

SEED = 20240611


def streets(n, m, rng):
    """Euclidean MST over random intersections, plus the shortest Delaunay edges."""
    pts = rng.random((n, 2))
    tri = Delaunay(pts)
    g = nx.Graph()
    g.add_nodes_from(range(n))
    for simplex in tri.simplices:
        for a in range(3):
            u, v = int(simplex[a]), int(simplex[(a + 1) % 3])
            g.add_edge(u, v, weight=float(np.linalg.norm(pts[u] - pts[v])))
    tree = nx.minimum_spanning_tree(g)
    extra = sorted((d["weight"], u, v) for u, v, d in g.edges(data=True) if not tree.has_edge(u, v))
    out = nx.Graph(tree.edges())
    for _, u, v in extra[: m - out.number_of_edges()]:
        out.add_edge(u, v)
    return out


def interactome(n, m, rng):
    """Preferential-attachment tree, then degree-biased extra interactions."""
    g = nx.Graph()
    g.add_edge(0, 1)
    for v in range(2, n):
        deg = np.array([g.degree(u) for u in range(v)], dtype=float)
        g.add_edge(v, int(rng.choice(v, p=deg / deg.sum())))
    while g.number_of_edges() < m:
        deg = np.array([g.degree(u) for u in range(n)], dtype=float)
        u = int(rng.choice(n, p=deg / deg.sum()))
        v = int(rng.integers(n))
        if u != v:
            g.add_edge(u, v)
    return g


def communities(n, m, k, p_intra, rng):
    """k groups; a random tree inside each group bridged into one component,
    then extra edges placed inside a group with probability p_intra."""
    group = rng.permutation(np.arange(n) % k)
    members = [np.flatnonzero(group == c) for c in range(k)]
    g = nx.Graph()
    g.add_nodes_from(range(n))
    for nodes in members:
        order = rng.permutation(nodes)
        for i in range(1, len(order)):
            g.add_edge(int(order[i]), int(order[rng.integers(i)]))
    for c in range(1, k):
        g.add_edge(int(rng.choice(members[c])), int(rng.choice(members[rng.integers(c)])))
    while g.number_of_edges() < m:
        if rng.random() < p_intra:
            nodes = members[rng.integers(k)]
            u, v = rng.choice(nodes, 2, replace=False)
        else:
            u, v = rng.choice(n, 2, replace=False)
        g.add_edge(int(u), int(v))
    return g


GRAPHS = {
    "student_cooperation": (124, 183, lambda n, m, r: communities(n, m, 12, 0.85, r)),
    "interactome_pdz": (126, 145, interactome),
    "urban_streets_brasilia": (135, 147, streets),
    "urban_streets_san_francisco": (152, 201, streets),
    "sp_high_school_facebook": (156, 1078, lambda n, m, r: communities(n, m, 5, 0.8, r)),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=pathlib.Path)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for i, (name, (n, m, make)) in enumerate(GRAPHS.items()):
        g = make(n, m, np.random.default_rng([SEED, i]))
        assert nx.is_connected(g) and g.number_of_nodes() == n and g.number_of_edges() == m, name
        path = args.out / f"{name}.edges"
        with path.open("w") as f:
            f.write(f"# synthetic stand-in for {name}: {n} nodes, {m} edges\n")
            for u, v in sorted(tuple(sorted(e)) for e in g.edges()):
                f.write(f"{u} {v}\n")
        print(f"{path}: {n} nodes, {m} edges")


if __name__ == "__main__":
    main()
