"""Social graph construction, summary statistics, and assortative mixing.

Nodes are residents; a directed edge runs from each namer to the
resident their contact matched to, carrying the union of naming domains
and a multiplicity.  Statistics are computed on the collapsed simple
graphs; path lengths and triangles run through the CSR kernels.
"""

import xml.sax.saxutils as saxutils
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .records import COVARIATE_FIELDS

NODE_FILTERS = ("all", "adult", "stable_adult")

ASSORTATIVITY_ATTRIBUTES = (
    "age", "sex", "village", "education", "occupation",
    "wealth_index", "alcohol_use", "contraception_use",
)


@dataclass
class EdgeData:
    domains: set
    multiplicity: int


@dataclass
class SocialGraph:
    community_id: str
    node_ids: list
    node_attrs: list            # dict per node, aligned with node_ids
    directed: dict              # (src_idx, dst_idx) -> EdgeData
    node_filter: str = "all"
    _csr: tuple | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    def undirected_edges(self) -> list:
        return sorted({(min(s, t), max(s, t)) for s, t in self.directed})

    @property
    def n_undirected_edges(self) -> int:
        return len({(min(s, t), max(s, t)) for s, t in self.directed})

    def csr(self):
        """Undirected simple-graph CSR with sorted neighbor lists (cached)."""
        if self._csr is None:
            edges = self.undirected_edges()
            n = self.n_nodes
            if edges:
                arr = np.asarray(edges, np.int64)
                src = np.concatenate([arr[:, 0], arr[:, 1]])
                dst = np.concatenate([arr[:, 1], arr[:, 0]])
                order = np.lexsort((dst, src))
                src, dst = src[order], dst[order]
                indptr = np.zeros(n + 1, np.int64)
                np.add.at(indptr, src + 1, 1)
                indptr = np.cumsum(indptr)
                indices = dst
            else:
                indptr = np.zeros(n + 1, np.int64)
                indices = np.empty(0, np.int64)
            self._csr = (indptr, indices)
        return self._csr

    def attribute_values(self, attribute: str) -> list:
        """Per-node attribute values (None = missing / censored)."""
        return [attrs.get(attribute) for attrs in self.node_attrs]


@dataclass
class GraphStats:
    n_nodes: int
    n_undirected_edges: int
    cross_household_fraction: float | None
    average_degree: float
    transitivity: float
    reciprocity: float
    average_path_length: float
    top_cc_coverage: float
    path_length_sampled: bool = False

    def to_dict(self) -> dict:
        return {
            "n_nodes": self.n_nodes,
            "n_undirected_edges": self.n_undirected_edges,
            "cross_household_fraction": self.cross_household_fraction,
            "average_degree": self.average_degree,
            "transitivity": self.transitivity,
            "reciprocity": self.reciprocity,
            "average_path_length": self.average_path_length,
            "top_cc_coverage": self.top_cc_coverage,
            "path_length_sampled": self.path_length_sampled,
        }


def _passes(resident, node_filter: str) -> bool:
    if node_filter == "all":
        return True
    if node_filter == "adult":
        return resident.is_adult
    if node_filter == "stable_adult":
        return resident.is_adult and resident.is_stable
    raise ValueError(f"unknown node filter {node_filter!r} (expected one of {NODE_FILTERS})")


def build_graph(residents, matches, node_filter: str = "all",
                community_id: str = "") -> SocialGraph:
    """Directed multigraph over filtered residents from post-processed matches.

    Edges survive only when both endpoints pass the filter; self-loops
    are dropped; parallel namings collapse into one directed edge with a
    domain-label union and a naming multiplicity.
    """
    kept = [r for r in residents if _passes(r, node_filter)]
    pos = {r.resident_id: i for i, r in enumerate(kept)}
    node_attrs = []
    for r in kept:
        attrs = {
            "age": r.age,
            "sex": r.sex,
            "village": r.village or None,
            "household": r.household_id or None,
            "is_adult": r.is_adult,
            "is_stable": r.is_stable,
        }
        for cov in COVARIATE_FIELDS:
            attrs[cov] = r.covariates.get(cov)
        node_attrs.append(attrs)

    directed: dict = {}
    for m in matches:
        s = pos.get(m.namer_id)
        t = pos.get(m.resident_id)
        if s is None or t is None or s == t:
            continue
        data = directed.get((s, t))
        if data is None:
            directed[(s, t)] = EdgeData(domains={m.domain}, multiplicity=1)
        else:
            data.domains.add(m.domain)
            data.multiplicity += 1
    return SocialGraph(
        community_id=community_id,
        node_ids=[r.resident_id for r in kept],
        node_attrs=node_attrs,
        directed=directed,
        node_filter=node_filter,
    )


def graph_stats(g: SocialGraph, path_sources: int | None = None,
                seed: int = 0) -> GraphStats:
    """Summary statistics on the undirected simple graph (plus reciprocity).

    average_path_length averages over ordered connected node pairs; pass
    *path_sources* to estimate it from a fixed-size BFS source sample
    instead of every node (graphs too large for the exact sweep).
    Degenerate graphs yield 0.0 for ratio statistics with an empty
    denominator.
    """
    n = g.n_nodes
    if n < 1:
        raise ValueError("graph_stats needs at least one node")
    n_und = g.n_undirected_edges
    average_degree = 2.0 * n_und / n

    indptr, indices = g.csr()
    degrees = np.diff(indptr)
    triples = int(np.sum(degrees * (degrees - 1) // 2))
    if triples:
        triangles = int(_kernels.triangle_count(indptr, indices))
        transitivity = 3.0 * triangles / triples
    else:
        transitivity = 0.0

    if g.directed:
        recip_hits = sum((t, s) in g.directed for s, t in g.directed)
        reciprocity = recip_hits / len(g.directed)
    else:
        reciprocity = 0.0

    if path_sources is not None and path_sources < n:
        rng = np.random.default_rng(seed)
        sources = np.sort(rng.choice(n, size=path_sources, replace=False)).astype(np.int64)
        sampled = True
    else:
        sources = np.arange(n, dtype=np.int64)
        sampled = False
    total_dist, total_pairs = _kernels.path_length_stats(indptr, indices, sources)
    average_path_length = float(total_dist) / total_pairs if total_pairs else 0.0

    labels = _kernels.component_labels(indptr, indices)
    top_cc = int(np.bincount(labels).max()) if n else 0
    top_cc_coverage = top_cc / n

    cross = None
    und = g.undirected_edges()
    if und:
        households = [attrs.get("household") for attrs in g.node_attrs]
        diff = sum(
            1 for u, v in und
            if households[u] is None or households[v] is None or households[u] != households[v]
        )
        cross = diff / len(und)

    return GraphStats(
        n_nodes=n,
        n_undirected_edges=n_und,
        cross_household_fraction=cross,
        average_degree=average_degree,
        transitivity=transitivity,
        reciprocity=reciprocity,
        average_path_length=average_path_length,
        top_cc_coverage=top_cc_coverage,
        path_length_sampled=sampled,
    )


def assortativity_discrete(g: SocialGraph, attribute: str) -> float | None:
    """Newman's discrete assortativity coefficient; None when undefined.

    The mixing matrix counts each undirected edge once in each
    orientation and censors edges with a missing endpoint value.
    """
    values = g.attribute_values(attribute)
    edges = [
        (u, v) for u, v in g.undirected_edges()
        if values[u] is not None and values[v] is not None
    ]
    if not edges:
        return None
    cats = sorted({values[u] for u, v in edges} | {values[v] for u, v in edges}, key=str)
    idx = {c: i for i, c in enumerate(cats)}
    k = len(cats)
    e = np.zeros((k, k))
    for u, v in edges:
        e[idx[values[u]], idx[values[v]]] += 1.0
        e[idx[values[v]], idx[values[u]]] += 1.0
    e /= e.sum()
    a = e.sum(axis=1)
    b = e.sum(axis=0)
    ab = float(a @ b)
    if abs(1.0 - ab) < 1e-15:
        return None
    return (float(np.trace(e)) - ab) / (1.0 - ab)


def assortativity_continuous(g: SocialGraph, attribute: str = "age") -> float | None:
    """Pearson correlation of endpoint values over the symmetrized edge list."""
    values = g.attribute_values(attribute)
    xs, ys = [], []
    for u, v in g.undirected_edges():
        if values[u] is None or values[v] is None:
            continue
        xs.extend((values[u], values[v]))
        ys.extend((values[v], values[u]))
    if not xs:
        return None
    x = np.asarray(xs, np.float64)
    y = np.asarray(ys, np.float64)
    sx = x.std()
    sy = y.std()
    if sx == 0.0 or sy == 0.0:
        return None
    return float(((x - x.mean()) * (y - y.mean())).mean() / (sx * sy))


def assortativity_profile(g: SocialGraph) -> dict:
    """All eight covariate coefficients: age continuous, the rest discrete."""
    out = {}
    for attr in ASSORTATIVITY_ATTRIBUTES:
        if attr == "age":
            out[attr] = assortativity_continuous(g, "age")
        else:
            out[attr] = assortativity_discrete(g, attr)
    return out


def write_edge_csv(g: SocialGraph, path) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source", "target", "domains", "multiplicity"])
        for (s, t), data in sorted(g.directed.items()):
            writer.writerow([
                g.node_ids[s], g.node_ids[t],
                "|".join(sorted(data.domains)), data.multiplicity,
            ])


def write_node_csv(g: SocialGraph, path) -> None:
    import csv

    cols = ["age", "sex", "village", "household", "is_adult", "is_stable",
            *COVARIATE_FIELDS]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["resident_id", *cols])
        for rid, attrs in zip(g.node_ids, g.node_attrs):
            row = [rid]
            for col in cols:
                val = attrs.get(col)
                if isinstance(val, bool):
                    val = "1" if val else "0"
                row.append("" if val is None else val)
            writer.writerow(row)


def write_graphml(g: SocialGraph, path) -> None:
    """GraphML export of the directed graph for external visualization tools."""
    cols = ["age", "sex", "village", "household", *COVARIATE_FIELDS]
    attr = lambda v: saxutils.quoteattr(str(v))  # noqa: E731
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
    ]
    for col in cols:
        lines.append(f'  <key id="{col}" for="node" attr.name="{col}" attr.type="string"/>')
    lines.append('  <key id="domains" for="edge" attr.name="domains" attr.type="string"/>')
    lines.append('  <key id="multiplicity" for="edge" attr.name="multiplicity" attr.type="int"/>')
    lines.append('  <graph edgedefault="directed">')
    for rid, attrs in zip(g.node_ids, g.node_attrs):
        lines.append(f"    <node id={attr(rid)}>")
        for col in cols:
            val = attrs.get(col)
            if val is not None:
                lines.append(f'      <data key="{col}">{saxutils.escape(str(val))}</data>')
        lines.append("    </node>")
    for (s, t), data in sorted(g.directed.items()):
        lines.append(f"    <edge source={attr(g.node_ids[s])} target={attr(g.node_ids[t])}>")
        lines.append(f'      <data key="domains">{"|".join(sorted(data.domains))}</data>')
        lines.append(f'      <data key="multiplicity">{data.multiplicity}</data>')
        lines.append("    </edge>")
    lines.append("  </graph>")
    lines.append("</graphml>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
