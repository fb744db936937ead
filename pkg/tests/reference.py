"""Independent brute-force references used as test oracles.

Everything here is written directly from the definitions, favoring
clarity over speed, and deliberately shares no code with the package.
"""

import itertools
import math

import numpy as np


def jaro_reference(s1: str, s2: str) -> float:
    """Jaro similarity by explicit matching-character enumeration.

    A character of s1 matches an unused identical character of s2 within
    a window of floor(max(len)/2) - 1 positions.  The half-transposition
    count compares the matched characters in text order.
    """
    if not s1 or not s2:
        return 0.0
    window = max(0, max(len(s1), len(s2)) // 2 - 1)
    used2 = [False] * len(s2)
    matched1 = []
    matched2_idx = []
    for i, ch in enumerate(s1):
        for j in range(max(0, i - window), min(len(s2), i + window + 1)):
            if not used2[j] and s2[j] == ch:
                used2[j] = True
                matched1.append(ch)
                matched2_idx.append(j)
                break
    m = len(matched1)
    if m == 0:
        return 0.0
    matched2 = [s2[j] for j in sorted(matched2_idx)]
    half_transpositions = sum(a != b for a, b in zip(matched1, matched2))
    t = half_transpositions / 2
    return (m / len(s1) + m / len(s2) + (m - t) / m) / 3


def jaro_winkler_reference(s1: str, s2: str, p: float = 0.1) -> float:
    base = jaro_reference(s1, s2)
    prefix = 0
    for a, b in zip(s1[:4], s2[:4]):
        if a != b:
            break
        prefix += 1
    return base + prefix * p * (1 - base)


def epiweight_reference(p_weights, sims) -> float | None:
    """Normalized weighted similarity over present fields; None if undefined."""
    num = 0.0
    den = 0.0
    for p, s in zip(p_weights, sims):
        if s is None:
            continue
        num += p * s
        den += p
    if den <= 0:
        return None
    return num / den


def error_rate_grid_search(weights, freqs, resolution=1e-4):
    """Brute-force minimizer of sum_i (x_i - w_i)^2 s.t. 0 <= x_i <= 1 - f_i.

    The objective is separable, so each coordinate is scanned on its own
    grid.  Returns (solution, objective value).
    """
    best = []
    total = 0.0
    for w, f in zip(weights, freqs):
        hi = 1.0 - f
        steps = int(round(hi / resolution))
        best_x, best_val = 0.0, (0.0 - w) ** 2
        for k in range(steps + 1):
            x = min(k * resolution, hi)
            val = (x - w) ** 2
            if val < best_val:
                best_x, best_val = x, val
        best.append(best_x)
        total += best_val
    return best, total


def sample_gpd(rng, n, sigma, xi):
    """Inverse-CDF sampling from a generalized Pareto distribution."""
    u = rng.uniform(size=n)
    if abs(xi) < 1e-12:
        return -sigma * np.log(1.0 - u)
    return sigma / xi * ((1.0 - u) ** (-xi) - 1.0)


def blocked_pairs_reference(residents, contacts):
    """Five-field blocking predicate evaluated over the full cross product.

    Agreement on a name field means: some permutation of the contact's
    components, projected onto (first, middle, last), equals the
    resident's projected field exactly.
    """
    out = set()
    for r in residents:
        rf = _project(r.name_components)
        for c in contacts:
            keys = set()
            for perm in set(itertools.permutations(c.name_components)):
                cf = _project(list(perm))
                for name, i in (("first", 0), ("middle", 1), ("last", 2)):
                    if rf[i] is not None and cf[i] is not None and rf[i] == cf[i]:
                        keys.add(name)
            if r.village and c.reported_village and r.village == c.reported_village:
                keys.add("village")
            if r.sex is not None and c.imputed_sex is not None and r.sex == c.imputed_sex:
                keys.add("sex")
            if keys:
                out.add((r.resident_id, c.contact_id, frozenset(keys)))
    return out


def _project(components):
    k = len(components)
    if k == 0:
        return (None, None, None)
    first = components[0]
    last = components[-1] if k >= 2 else None
    middle = " ".join(components[1:-1]) if k >= 3 else None
    return (first, middle, last)


def triangle_count_reference(n, edges):
    edge_set = {frozenset(e) for e in edges}
    count = 0
    for tri in itertools.combinations(range(n), 3):
        a, b, c = tri
        if (frozenset((a, b)) in edge_set
                and frozenset((b, c)) in edge_set
                and frozenset((a, c)) in edge_set):
            count += 1
    return count


def transitivity_reference(n, edges):
    adj = {i: set() for i in range(n)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    triples = sum(len(nb) * (len(nb) - 1) // 2 for nb in adj.values())
    if triples == 0:
        return 0.0
    return 3 * triangle_count_reference(n, edges) / triples


def bfs_distances_reference(n, edges, source):
    adj = {i: [] for i in range(n)}
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    dist = {source: 0}
    frontier = [source]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist


def average_path_length_reference(n, edges):
    total, pairs = 0, 0
    for s in range(n):
        for v, d in bfs_distances_reference(n, edges, s).items():
            if v != s:
                total += d
                pairs += 1
    if pairs == 0:
        return 0.0
    return total / pairs


def top_component_coverage_reference(n, edges):
    best = 0
    seen = set()
    for s in range(n):
        if s in seen:
            continue
        comp = set(bfs_distances_reference(n, edges, s))
        seen |= comp
        best = max(best, len(comp))
    return best / n if n else 0.0


def reciprocity_reference(directed_edges):
    edge_set = set(directed_edges)
    if not edge_set:
        return 0.0
    return sum((t, s) in edge_set for s, t in edge_set) / len(edge_set)


def assortativity_discrete_reference(edges, attr):
    """Newman's discrete assortativity from an explicitly built mixing matrix."""
    eligible = [(u, v) for u, v in edges if attr.get(u) is not None and attr.get(v) is not None]
    if not eligible:
        return None
    cats = sorted({attr[u] for u, v in eligible} | {attr[v] for u, v in eligible})
    idx = {c: i for i, c in enumerate(cats)}
    k = len(cats)
    e = [[0.0] * k for _ in range(k)]
    for u, v in eligible:
        e[idx[attr[u]]][idx[attr[v]]] += 1.0
        e[idx[attr[v]]][idx[attr[u]]] += 1.0
    total = 2.0 * len(eligible)
    for i in range(k):
        for j in range(k):
            e[i][j] /= total
    a = [sum(row) for row in e]
    b = [sum(e[i][j] for i in range(k)) for j in range(k)]
    trace = sum(e[i][i] for i in range(k))
    ab = sum(x * y for x, y in zip(a, b))
    if abs(1.0 - ab) < 1e-15:
        return None
    return (trace - ab) / (1.0 - ab)


def assortativity_continuous_reference(edges, attr):
    """Pearson correlation over the symmetrized edge list."""
    xs, ys = [], []
    for u, v in edges:
        if attr.get(u) is None or attr.get(v) is None:
            continue
        xs.extend([attr[u], attr[v]])
        ys.extend([attr[v], attr[u]])
    if not xs:
        return None
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    if sxx <= 0 or syy <= 0:
        return None
    return sxy / math.sqrt(sxx * syy)
