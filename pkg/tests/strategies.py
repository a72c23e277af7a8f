"""Hypothesis strategies for small graphs."""
from hypothesis import strategies as st

from cusptree.metric_graph import MetricGraph


@st.composite
def graphs(draw, min_n=1, max_n=10, connected=False):
    n = draw(st.integers(min_n, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    edges = set(chosen)
    if connected:
        for v in range(1, n):
            u = draw(st.integers(0, v - 1))
            edges.add((u, v))
    return MetricGraph.from_edges(n, edges)


def connected_graphs(min_n=1, max_n=10):
    return graphs(min_n, max_n, connected=True)
