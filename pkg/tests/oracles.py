"""Independent brute-force implementations used to cross-check the package.

Everything here deliberately takes a different computational route from the
production code: dense eigensolvers and linear solves instead of power
iterations, exhaustive path enumeration instead of Brandes, Floyd-Warshall
instead of BFS, subset enumeration instead of fixed-point iteration.
"""

from __future__ import annotations

from itertools import permutations, product

import numpy as np

from interbank.metrics import EIGEN_DAMPING


# ---------------------------------------------------------------------------
# Centrality oracles
# ---------------------------------------------------------------------------

def brute_betweenness(adj: np.ndarray) -> np.ndarray:
    """Betweenness by enumerating every simple path and keeping the shortest."""
    n = adj.shape[0]
    paths_between: dict[tuple[int, int], list[tuple[int, ...]]] = {}
    for s in range(n):
        for t in range(n):
            if s == t:
                continue
            found: list[tuple[int, ...]] = []

            def dfs(node: int, path: tuple[int, ...]) -> None:
                if node == t:
                    found.append(path)
                    return
                for nxt in range(n):
                    if adj[node, nxt] and nxt not in path:
                        dfs(nxt, path + (nxt,))

            dfs(s, (s,))
            if found:
                shortest = min(len(p) for p in found)
                paths_between[(s, t)] = [p for p in found if len(p) == shortest]
    bc = np.zeros(n)
    for (s, t), paths in paths_between.items():
        sigma = len(paths)
        for v in range(n):
            if v in (s, t):
                continue
            through = sum(1 for p in paths if v in p)
            bc[v] += through / sigma
    return bc


def brute_closeness(adj: np.ndarray) -> np.ndarray:
    """Out-closeness from Floyd-Warshall distances, reachable-share corrected."""
    n = adj.shape[0]
    if n <= 1:
        return np.zeros(n)
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    dist[adj > 0] = 1.0
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if dist[i, k] + dist[k, j] < dist[i, j]:
                    dist[i, j] = dist[i, k] + dist[k, j]
    out = np.zeros(n)
    for i in range(n):
        reachable = np.isfinite(dist[i])
        r = int(reachable.sum())
        if r <= 1:
            continue
        out[i] = ((r - 1) / dist[i][reachable].sum()) * ((r - 1) / (n - 1))
    return out


def solve_pagerank(adj: np.ndarray, damping: float = 0.85) -> np.ndarray:
    """PageRank as the exact solution of its linear system."""
    n = adj.shape[0]
    if n == 0:
        return np.zeros(0)
    out = adj.sum(axis=1)
    p = np.zeros((n, n))
    for i in range(n):
        if out[i] > 0:
            p[i] = adj[i] / out[i]
        else:
            p[i] = 1.0 / n
    return np.linalg.solve(np.eye(n) - damping * p.T, np.full(n, (1.0 - damping) / n))


def eig_hits(adj: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Authority/hub as top-eigenspace projections of the iteration's start vectors.

    The hub iteration starts from the uniform vector; the authority
    iteration's first iterate is the in-degree vector.
    """
    n = adj.shape[0]
    if n == 0 or adj.sum() == 0:
        return np.zeros(n), np.zeros(n)
    ones = np.ones(n)
    a = _top_projection(adj.T @ adj, adj.T @ ones)
    h = _top_projection(adj @ adj.T, ones)
    return a / a.sum(), h / h.sum()


def _top_projection(m: np.ndarray, start: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(m.astype(float))
    top = vals.max()
    space = vecs[:, np.abs(vals - top) < 1e-9 * max(top, 1.0)]
    proj = space @ (space.T @ start.astype(float))
    if proj.sum() < 0:
        proj = -proj
    return np.abs(proj)


def eig_eigen_centrality(adj: np.ndarray, damping: float = EIGEN_DAMPING) -> np.ndarray:
    """Perron vector of the damped shifted in-adjacency via a dense eigensolve."""
    n = adj.shape[0]
    if n == 0:
        return np.zeros(0)
    step = (adj > 0).astype(np.int64)
    power = step.copy()
    for _ in range(n):
        if not power.any():
            return np.zeros(n)
        power = ((power @ step) > 0).astype(np.int64)
    m = adj.T.astype(float) + np.eye(n) + damping / n
    vals, vecs = np.linalg.eig(m)
    k = int(np.argmax(vals.real))
    v = np.abs(vecs[:, k].real)
    return v / v.sum()


def series_alpha_centrality(adj: np.ndarray, alpha: float, terms: int = 20000,
                            tol: float = 1e-15) -> np.ndarray:
    """Neumann series sum of (alpha A^T)^k applied to the ones vector."""
    n = adj.shape[0]
    x = np.ones(n)
    term = np.ones(n)
    at = alpha * adj.T.astype(float)
    for _ in range(terms):
        term = at @ term
        x = x + term
        if np.abs(term).max(initial=0.0) < tol:
            break
    return x


def survival_k_shell(adj: np.ndarray) -> np.ndarray:
    """Core number as the largest k whose prune-below-k fixpoint keeps the node."""
    n = adj.shape[0]
    shell = np.zeros(n)
    max_deg = int((adj.sum(axis=0) + adj.sum(axis=1)).max(initial=0))
    for k in range(max_deg + 1):
        alive = np.ones(n, dtype=bool)
        changed = True
        while changed:
            changed = False
            sub = adj[np.ix_(alive, alive)]
            idx = np.flatnonzero(alive)
            deg = sub.sum(axis=0) + sub.sum(axis=1)
            drop = idx[deg < k]
            if drop.size:
                alive[drop] = False
                changed = True
        shell[alive] = k
    return shell


# ---------------------------------------------------------------------------
# Threshold cascade oracle
# ---------------------------------------------------------------------------

def least_fixed_point_defaults(
    exposures: np.ndarray,
    buffers: np.ndarray,
    initial_losses: np.ndarray,
    seeds: np.ndarray,
    lgd: float,
) -> np.ndarray:
    """Exhaustive Knaster-Tarski: intersect every pre-fixed default set.

    A set D is pre-fixed when every bank forced to default by D is already
    in D; the least fixed point is the intersection of all of them.
    """
    n = buffers.shape[0]

    def forced(dset: np.ndarray) -> np.ndarray:
        losses = initial_losses + lgd * exposures[:, dset].sum(axis=1)
        return seeds | ((losses >= buffers) & (losses > 0))

    least = np.ones(n, dtype=bool)
    found = False
    for bits in product([False, True], repeat=n):
        d = np.array(bits)
        if not seeds[~d].sum() == 0:
            continue  # must contain the seeds
        f = forced(d)
        if (f & ~d).any():
            continue  # not pre-fixed
        least &= d
        found = True
    assert found, "no pre-fixed point; the full set should always qualify"
    f = forced(least)
    assert (f == least).all(), "intersection of pre-fixed points must be a fixed point"
    return least


# ---------------------------------------------------------------------------
# Digraph corpus
# ---------------------------------------------------------------------------

def _mask_to_adj(mask: int, n: int) -> np.ndarray:
    adj = np.zeros((n, n), dtype=int)
    bit = 0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if mask >> bit & 1:
                adj[i, j] = 1
            bit += 1
    return adj


def _adj_to_mask(adj: np.ndarray) -> int:
    n = adj.shape[0]
    mask = 0
    bit = 0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if adj[i, j]:
                mask |= 1 << bit
            bit += 1
    return mask


def _canonical_mask(adj: np.ndarray) -> int:
    n = adj.shape[0]
    best = None
    for perm in permutations(range(n)):
        p = list(perm)
        mask = _adj_to_mask(adj[np.ix_(p, p)])
        if best is None or mask < best:
            best = mask
    return best


def digraph_corpus(total: int = 853, sample_seed: int = 2024) -> list[np.ndarray]:
    """Deterministic corpus of pairwise non-isomorphic digraphs with n <= 5.

    All 238 isomorphism classes with up to four nodes (exhaustive), topped up
    with canonical five-node digraphs drawn from a seeded stream until the
    corpus reaches ``total`` members.
    """
    corpus: list[np.ndarray] = []
    for n in range(1, 5):
        seen: set[int] = set()
        for mask in range(1 << (n * (n - 1))):
            adj = _mask_to_adj(mask, n)
            canon = _canonical_mask(adj)
            if canon not in seen:
                seen.add(canon)
                corpus.append(_mask_to_adj(canon, n))
    rng = np.random.default_rng(sample_seed)
    seen5: set[int] = set()
    n = 5
    bits = n * (n - 1)
    while len(corpus) + len(seen5) < total:
        mask = int(rng.integers(0, 1 << bits))
        canon = _canonical_mask(_mask_to_adj(mask, n))
        seen5.add(canon)
    corpus.extend(_mask_to_adj(m, n) for m in sorted(seen5))
    return corpus
