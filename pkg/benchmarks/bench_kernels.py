"""Benchmark the hot kernels with the JIT on and off.

Each mode runs in a subprocess (the shim reads LINKFORGE_NO_NUMBA at
import), so the comparison is honest: same workloads, same code, only
the decorator changes.

    python3 benchmarks/bench_kernels.py [--pairs N] [--nodes N]
"""

import argparse
import json
import os
import subprocess
import sys
import textwrap

WORKER = textwrap.dedent("""
    import json, sys, time
    import numpy as np

    n_pairs = int(sys.argv[1])
    n_nodes = int(sys.argv[2])

    from linkforge import _kernels
    from linkforge._accel import NUMBA_ENABLED
    from linkforge.matcher import prepare_community, score_batch, iter_blocked_pairs
    from linkforge.epilink import MatchConfig, field_stats
    from linkforge.synthgen import generate_community, CorruptionProfile
    from linkforge.records import CommunityDataset, ResidentRecord, ContactRecord
    from linkforge.preprocess import LookupTables, preprocess_dataset

    results = {"numba": bool(NUMBA_ENABLED)}

    # --- pair scoring over a synthetic community -------------------------
    synth = generate_community("bench", 400, 5, CorruptionProfile.moderate(), seed=1)
    residents = [ResidentRecord(r["resident_id"], r["name"], r["village"],
                                r["household_id"], age=int(r["age"]), sex=r["sex"])
                 for r in synth.resident_rows]
    contacts = [ContactRecord(f"bench-C{i:06d}", row["namer_id"], row["domain"],
                              row["name"],
                              reported_age=int(row["age"]) if row["age"] != "" else None,
                              reported_village=row["village"] or None)
                for i, row in enumerate(synth.contact_rows)]
    ds = CommunityDataset("bench", residents, contacts, set(synth.villages))
    ds, _ = preprocess_dataset(ds, LookupTables())
    prep = prepare_community(ds)
    stats = field_stats(ds, MatchConfig.uniform())

    batches = [(pr, pc) for pr, pc, _ in iter_blocked_pairs(prep)]
    total = sum(len(pr) for pr, _ in batches)
    while total < n_pairs:
        batches += batches
        total *= 2
    # warm-up triggers compilation so the timing below is steady-state
    score_batch(prep, batches[0][0][:64], batches[0][1][:64], stats.p_weights)
    t0 = time.perf_counter()
    scored = 0
    for pr, pc in batches:
        if scored >= n_pairs:
            break
        score_batch(prep, pr, pc, stats.p_weights)
        scored += len(pr)
    results["score_pairs"] = {"pairs": scored, "seconds": time.perf_counter() - t0}

    # --- graph kernels ----------------------------------------------------
    rng = np.random.default_rng(0)
    m = n_nodes * 3
    src = rng.integers(0, n_nodes, size=m)
    dst = rng.integers(0, n_nodes, size=m)
    keep = src != dst
    und = np.unique(np.stack([np.minimum(src[keep], dst[keep]),
                              np.maximum(src[keep], dst[keep])], axis=1), axis=0)
    s = np.concatenate([und[:, 0], und[:, 1]])
    d = np.concatenate([und[:, 1], und[:, 0]])
    order = np.lexsort((d, s))
    s, d = s[order], d[order]
    indptr = np.zeros(n_nodes + 1, np.int64)
    np.add.at(indptr, s + 1, 1)
    indptr = np.cumsum(indptr)
    indices = d.astype(np.int64)

    sources = np.arange(n_nodes, dtype=np.int64)
    _kernels.path_length_stats(indptr, indices, sources[:2])  # warm-up
    t0 = time.perf_counter()
    dist_sum, pairs = _kernels.path_length_stats(indptr, indices, sources)
    results["bfs_all_pairs"] = {"nodes": n_nodes, "seconds": time.perf_counter() - t0}

    _kernels.triangle_count(np.zeros(2, np.int64), np.empty(0, np.int64))  # warm-up
    t0 = time.perf_counter()
    tri = _kernels.triangle_count(indptr, indices)
    results["triangles"] = {"nodes": n_nodes, "count": int(tri),
                            "seconds": time.perf_counter() - t0}

    print(json.dumps(results))
""")


def run_mode(no_numba: bool, pairs: int, nodes: int) -> dict:
    env = dict(os.environ)
    env["LINKFORGE_NO_NUMBA"] = "1" if no_numba else "0"
    out = subprocess.run(
        [sys.executable, "-c", WORKER, str(pairs), str(nodes)],
        env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=2_000_000)
    parser.add_argument("--nodes", type=int, default=4000)
    parser.add_argument("--nodes-fallback", type=int, default=400,
                        help="smaller BFS size for the non-JIT run")
    args = parser.parse_args()

    print("running JIT mode...", file=sys.stderr)
    fast = run_mode(False, args.pairs, args.nodes)
    print("running fallback mode...", file=sys.stderr)
    slow = run_mode(True, max(args.pairs // 20, 10_000), args.nodes_fallback)

    def rate(entry, key):
        return entry[key] / max(entry["seconds"], 1e-9)

    print(f"{'kernel':<16} {'jit rate':>16} {'fallback rate':>16} {'speedup':>9}")
    for name, key in (("score_pairs", "pairs"), ("bfs_all_pairs", "nodes"),
                      ("triangles", "nodes")):
        f = rate(fast[name], key)
        s = rate(slow[name], key)
        unit = key + "/s"
        print(f"{name:<16} {f:>12.0f} {unit:<6} {s:>10.0f} {unit:<6} {f / s:>8.1f}x")


if __name__ == "__main__":
    main()
