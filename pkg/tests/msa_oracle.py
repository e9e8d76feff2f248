"""Method-of-successive-averages equilibrium oracle.

Independent of the package's Frank-Wolfe path: it keeps its own link-cost
code, its own all-or-nothing loader, and the fixed 1/k averaging step.
Running this module regenerates the frozen equilibrium constants used by
the test suite (slow: the 1e-6 gap target takes on the order of an hour).
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra


def msa_equilibrium(network, gap_target=1e-6, max_iter=5_000_000, log_every=0):
    """Return (total_travel_time, iterations, gap) at the first gap <= target."""
    links = network.links
    t0 = np.array([l.fftime for l in links])
    cap = np.array([l.capacity for l in links])
    bb = np.array([l.b for l in links])
    pw = np.array([l.power for l in links])
    row = np.array([l.init for l in links])
    col = np.array([l.term for l in links])
    n = network.n_nodes
    origins = sorted(o for o, dests in network.od.items() if dests)
    od_pairs = [
        (r, dest, q)
        for r, o in enumerate(origins)
        for dest, q in sorted(network.od[o].items())
        if q > 0
    ]

    def cost_of(v):
        return t0 * (1.0 + bb * (v / cap) ** pw)

    def aon(costs):
        matrix = csr_matrix((np.maximum(costs, 1e-300), (row, col)), shape=(n, n))
        dist, pred = dijkstra(matrix, directed=True, indices=origins, return_predecessors=True)
        arc_to_link = {(int(a), int(b)): i for i, (a, b) in enumerate(zip(row, col))}
        w = np.zeros(len(links))
        sptt = 0.0
        for r, dest, q in od_pairs:
            if not np.isfinite(dist[r, dest]):
                raise RuntimeError(f"disconnected OD pair ({origins[r]}, {dest})")
            sptt += q * dist[r, dest]
            node = dest
            while node != origins[r]:
                prev = pred[r, node]
                w[arc_to_link[(int(prev), int(node))]] += q
                node = prev
        return w, sptt

    v, _ = aon(cost_of(np.zeros(len(links))))
    for k in range(1, max_iter + 1):
        costs = cost_of(v)
        w, sptt = aon(costs)
        tstt = float(v @ costs)
        gap = 0.0 if tstt == 0 else (tstt - sptt) / tstt
        if log_every and k % log_every == 0:
            print(f"iter {k}: gap={gap:.3e} tstt={tstt:.2f}", flush=True)
        if gap <= gap_target:
            return tstt, k, gap
        v = v + (w - v) / (k + 1)
    raise RuntimeError(f"gap target {gap_target} not reached in {max_iter} iterations")


if __name__ == "__main__":
    import pathlib
    import sys

    sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))
    from graphbo.traffic import parse_tntp

    data = pathlib.Path(__file__).resolve().parents[1] / "src" / "graphbo" / "data"
    net = parse_tntp(data / "siouxfalls_net.tntp", data / "siouxfalls_trips.tntp")
    tstt, iters, gap = msa_equilibrium(net, gap_target=1e-6, log_every=20000)
    print(f"FROZEN: SIOUXFALLS_MSA_TTT = {tstt!r}  # gap {gap:.3e} after {iters} iterations")
