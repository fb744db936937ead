"""Hot numeric kernels: string similarity, batch pair scoring, graph traversal.

Every function here is nopython-compatible and decorated through
:mod:`linkforge._accel`, so the same code runs JIT-compiled under numba
or as plain Python/numpy when ``LINKFORGE_NO_NUMBA=1`` is set.  Strings
enter as int32 codepoint arrays; record fields are referenced through a
string pool (``pool_data`` / ``pool_offs``) so batch kernels never touch
Python objects.

Field order used throughout: first, middle, last, age, village, sex,
honorific (indexes 0..6).
"""

import numpy as np

from ._accel import njit, prange


@njit(cache=True)
def jaro_codes(s1, s2):
    """Jaro similarity of two codepoint arrays (0.0 when no characters match)."""
    len1 = s1.shape[0]
    len2 = s2.shape[0]
    if len1 == 0 or len2 == 0:
        return 0.0
    window = max(len1, len2) // 2 - 1
    if window < 0:
        window = 0
    flags1 = np.zeros(len1, np.uint8)
    flags2 = np.zeros(len2, np.uint8)
    m = 0
    for i in range(len1):
        lo = i - window
        if lo < 0:
            lo = 0
        hi = i + window + 1
        if hi > len2:
            hi = len2
        for j in range(lo, hi):
            if flags2[j] == 0 and s2[j] == s1[i]:
                flags1[i] = 1
                flags2[j] = 1
                m += 1
                break
    if m == 0:
        return 0.0
    # transpositions: matched characters compared in text order
    half_trans = 0
    k = 0
    for i in range(len1):
        if flags1[i] == 1:
            while flags2[k] == 0:
                k += 1
            if s1[i] != s2[k]:
                half_trans += 1
            k += 1
    fm = float(m)
    t = 0.5 * half_trans
    return (fm / len1 + fm / len2 + (fm - t) / fm) / 3.0


@njit(cache=True)
def jaro_winkler_codes(s1, s2, prefix_scale):
    """Jaro-Winkler similarity: Jaro plus a common-prefix bonus (l capped at 4)."""
    base = jaro_codes(s1, s2)
    max_l = min(s1.shape[0], s2.shape[0])
    if max_l > 4:
        max_l = 4
    l = 0
    while l < max_l and s1[l] == s2[l]:
        l += 1
    return base + l * prefix_scale * (1.0 - base)


@njit(cache=True)
def jw_pool(pool_data, pool_offs, i, j, prefix_scale):
    return jaro_winkler_codes(
        pool_data[pool_offs[i] : pool_offs[i + 1]],
        pool_data[pool_offs[j] : pool_offs[j + 1]],
        prefix_scale,
    )


@njit(cache=True)
def jw_id_pairs(pool_data, pool_offs, ids1, ids2, prefix_scale, out):
    for i in range(ids1.shape[0]):
        out[i] = jw_pool(pool_data, pool_offs, ids1[i], ids2[i], prefix_scale)


@njit(cache=True)
def score_pairs(
    pool_data,
    pool_offs,
    res_name_ids,   # (n_res, 3) pool ids, -1 missing
    res_village,    # (n_res,) pool ids, -1 missing
    res_honor,
    res_age,        # (n_res,) float64, nan missing
    res_sex,        # (n_res,) int8, -1 missing
    con_cand_ids,   # flattened name-field candidate pool ids
    con_cand_offs,  # (3*n_con + 1,) slice bounds: contact c field f -> [c*3+f, c*3+f+1)
    con_village,
    con_honor,
    con_age,
    con_sex,
    pair_res,
    pair_con,
    p_weights,      # (7,) field weights, order first..honorific
    prefix_scale,
    out_sims,       # (n_pairs, 7) float64, nan = missing
    out_scores,     # (n_pairs,) float64, nan = undefined
):
    """Similarity vector and normalized weighted score for each candidate pair.

    Name-field similarity is the max Jaro-Winkler over the contact's
    per-field candidate strings (its name permutations projected onto
    first/middle/last).  Missing fields stay nan and drop out of both the
    numerator and denominator of the score.
    """
    n = pair_res.shape[0]
    for idx in range(n):
        r = pair_res[idx]
        c = pair_con[idx]
        for f in range(3):
            rid = res_name_ids[r, f]
            best = np.nan
            if rid >= 0:
                start = con_cand_offs[c * 3 + f]
                end = con_cand_offs[c * 3 + f + 1]
                if end > start:
                    best = 0.0
                    for k in range(start, end):
                        v = jw_pool(pool_data, pool_offs, rid, con_cand_ids[k], prefix_scale)
                        if v > best:
                            best = v
            out_sims[idx, f] = best
        ra = res_age[r]
        ca = con_age[c]
        if ra == ra and ca == ca:
            d = ra - ca
            if d < 0.0:
                d = -d
            v = 1.0 - d / 100.0
            if v < 0.0:
                v = 0.0
            out_sims[idx, 3] = v
        else:
            out_sims[idx, 3] = np.nan
        rv = res_village[r]
        cv = con_village[c]
        if rv >= 0 and cv >= 0:
            out_sims[idx, 4] = jw_pool(pool_data, pool_offs, rv, cv, prefix_scale)
        else:
            out_sims[idx, 4] = np.nan
        rs = res_sex[r]
        cs = con_sex[c]
        if rs >= 0 and cs >= 0:
            out_sims[idx, 5] = 1.0 if rs == cs else 0.0
        else:
            out_sims[idx, 5] = np.nan
        rh = res_honor[r]
        ch = con_honor[c]
        if rh < 0 and ch < 0:
            out_sims[idx, 6] = np.nan
        elif rh >= 0 and ch >= 0:
            out_sims[idx, 6] = jw_pool(pool_data, pool_offs, rh, ch, prefix_scale)
        else:
            out_sims[idx, 6] = 0.0
        num = 0.0
        den = 0.0
        for f in range(7):
            s = out_sims[idx, f]
            if s == s:
                num += p_weights[f] * s
                den += p_weights[f]
        if den > 0.0:
            out_scores[idx] = num / den
        else:
            out_scores[idx] = np.nan


@njit(cache=True)
def triangle_count(indptr, indices):
    """Triangles in an undirected simple graph (CSR, sorted neighbor lists)."""
    n = indptr.shape[0] - 1
    total = 0
    for u in range(n):
        for ii in range(indptr[u], indptr[u + 1]):
            v = indices[ii]
            if v <= u:
                continue
            a = indptr[u]
            a_end = indptr[u + 1]
            b = indptr[v]
            b_end = indptr[v + 1]
            while a < a_end and b < b_end:
                wa = indices[a]
                wb = indices[b]
                if wa < wb:
                    a += 1
                elif wa > wb:
                    b += 1
                else:
                    if wa > v:
                        total += 1
                    a += 1
                    b += 1
    return total


@njit(cache=True, parallel=True)
def path_length_stats(indptr, indices, sources):
    """BFS from each source: (sum of distances, number of reached pairs).

    Integer reductions keep the result independent of thread scheduling.
    """
    n = indptr.shape[0] - 1
    total_dist = 0
    total_pairs = 0
    for si in prange(sources.shape[0]):
        s = sources[si]
        dist = np.full(n, -1, np.int32)
        queue = np.empty(n, np.int64)
        dist[s] = 0
        queue[0] = s
        head = 0
        tail = 1
        sum_d = 0
        cnt = 0
        while head < tail:
            u = queue[head]
            head += 1
            du = dist[u]
            for ii in range(indptr[u], indptr[u + 1]):
                v = indices[ii]
                if dist[v] < 0:
                    dist[v] = du + 1
                    queue[tail] = v
                    tail += 1
                    sum_d += du + 1
                    cnt += 1
        total_dist += sum_d
        total_pairs += cnt
    return total_dist, total_pairs


@njit(cache=True)
def component_labels(indptr, indices):
    """Connected-component label per node (undirected CSR), BFS flood fill."""
    n = indptr.shape[0] - 1
    labels = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    comp = 0
    for s in range(n):
        if labels[s] >= 0:
            continue
        labels[s] = comp
        queue[0] = s
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            for ii in range(indptr[u], indptr[u + 1]):
                v = indices[ii]
                if labels[v] < 0:
                    labels[v] = comp
                    queue[tail] = v
                    tail += 1
        comp += 1
    return labels
