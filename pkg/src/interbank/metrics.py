"""Per-bank and system-level risk indicators.

The indicator matrix covers four families: balance-sheet features,
network centralities on the binary exposure adjacency, entity risk
indicators (fragility, impact diffusion, impact susceptibility) and shock
outcomes (stress, loss, defaults).  A min-max normalized copy feeds the
display heatmap and the risk-similarity layout.

Centralities are computed on the directed binary adjacency with our own
iterative implementations; the test suite checks every one of them against
independent brute-force routes (dense eigensolvers, exhaustive path
enumeration, Neumann series).
"""

from __future__ import annotations

import io
import csv
from dataclasses import dataclass
from collections import deque

import numpy as np
from numpy.typing import NDArray

from .contagion import PropagationResult
from .network import FinancialNetwork, degree_adjacency

BANKRUPT_SENTINEL = -np.inf

# Uniform damping added to the shifted adjacency so the eigenvector iteration
# has a unique Perron vector on every digraph (periodic or reducible ones
# stall a plain power iteration).
EIGEN_DAMPING = 1e-3

COLUMNS = (
    "assets",
    "liabilities",
    "capital_buffer",
    "weight",
    "in_degree",
    "out_degree",
    "authority",
    "hub",
    "pagerank",
    "k_shell",
    "betweenness",
    "closeness",
    "eigen_centrality",
    "alpha_centrality",
    "fragility",
    "impact_diffusion",
    "impact_susceptibility",
    "stress",
    "loss",
    "defaults",
    "defaulted",
)


@dataclass
class RiskMatrix:
    ids: tuple[str, ...]
    columns: tuple[str, ...]
    raw: NDArray[np.float64]
    normalized: NDArray[np.float64]

    def column(self, name: str, normalized: bool = False) -> NDArray[np.float64]:
        j = self.columns.index(name)
        return (self.normalized if normalized else self.raw)[:, j]

    @property
    def n(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class SystemRisk:
    concentration: float
    fragility: float
    max_stress: float
    total_defaults: int
    total_loss: float
    total_stress: float

    FIELDS = ("concentration", "fragility", "max_stress", "total_defaults", "total_loss", "total_stress")

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in self.FIELDS}


# ---------------------------------------------------------------------------
# Centralities
# ---------------------------------------------------------------------------

def in_out_degrees(adj: NDArray[np.int_]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    return adj.sum(axis=0).astype(float), adj.sum(axis=1).astype(float)


def pagerank(adj: NDArray[np.int_], damping: float = 0.85, tol: float = 1e-12,
             max_iters: int = 100000) -> NDArray[np.float64]:
    """Power iteration with uniform teleportation; dangling mass spread uniformly."""
    n = adj.shape[0]
    if n == 0:
        return np.zeros(0)
    out = adj.sum(axis=1)
    dangling = out == 0
    p = np.where(dangling[:, None], 0.0, adj / np.where(out[:, None] == 0, 1, out[:, None]))
    x = np.full(n, 1.0 / n)
    for _ in range(max_iters):
        x_new = (1.0 - damping) / n + damping * (p.T @ x + x[dangling].sum() / n)
        if np.abs(x_new - x).sum() < tol:
            return x_new
        x = x_new
    return x


def hits(adj: NDArray[np.int_], tol: float = 1e-12,
         max_iters: int = 100000) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Authority and hub scores by mutual reinforcement, sum-normalized."""
    n = adj.shape[0]
    if n == 0 or adj.sum() == 0:
        return np.zeros(n), np.zeros(n)
    a = np.full(n, 1.0 / n)
    h = np.full(n, 1.0 / n)
    at = adj.T.astype(float)
    af = adj.astype(float)
    for _ in range(max_iters):
        a_new = at @ h
        h_new = af @ a_new
        na = np.linalg.norm(a_new)
        nh = np.linalg.norm(h_new)
        if na > 0:
            a_new = a_new / na
        if nh > 0:
            h_new = h_new / nh
        if np.abs(a_new - a).max() < tol and np.abs(h_new - h).max() < tol:
            a, h = a_new, h_new
            break
        a, h = a_new, h_new
    sa, sh = a.sum(), h.sum()
    return (a / sa if sa > 0 else a, h / sh if sh > 0 else h)


def eigen_centrality(adj: NDArray[np.int_], tol: float = 1e-12,
                     max_iters: int = 100000, damping: float = EIGEN_DAMPING) -> NDArray[np.float64]:
    """Perron vector of the damped shifted in-adjacency, sum-normalized.

    Status flows along incoming links: x = normalize(M x) with
    M = A^T + I + damping * J / n.  The damping makes M strictly positive so
    the iteration converges on every digraph; acyclic graphs get zeros.
    """
    n = adj.shape[0]
    if n == 0:
        return np.zeros(0)
    if _is_nilpotent(adj):
        return np.zeros(n)
    m = adj.T.astype(float) + np.eye(n) + damping / n
    x = np.full(n, 1.0 / n)
    for _ in range(max_iters):
        x_new = m @ x
        x_new = x_new / np.linalg.norm(x_new)
        if np.abs(x_new - x).max() < tol:
            x = x_new
            break
        x = x_new
    return x / x.sum()


def _is_nilpotent(adj: NDArray[np.int_]) -> bool:
    """Boolean-semiring check: the graph has no directed cycle iff A^n = 0."""
    n = adj.shape[0]
    step = (adj > 0).astype(np.int64)
    power = step.copy()
    for _ in range(n):
        if not power.any():
            return True
        power = ((power @ step) > 0).astype(np.int64)
    return not power.any()


def spectral_radius(adj: NDArray[np.int_]) -> float:
    if adj.shape[0] == 0:
        return 0.0
    return float(np.abs(np.linalg.eigvals(adj.astype(float))).max())


def alpha_centrality(adj: NDArray[np.int_], alpha_scale: float = 0.9) -> NDArray[np.float64]:
    """x = (I - alpha A^T)^{-1} 1 with alpha = alpha_scale / spectral radius."""
    n = adj.shape[0]
    if n == 0:
        return np.zeros(0)
    rho = spectral_radius(adj)
    alpha = alpha_scale / rho if rho > 1e-12 else alpha_scale
    return np.linalg.solve(np.eye(n) - alpha * adj.T.astype(float), np.ones(n))


def k_shell(adj: NDArray[np.int_]) -> NDArray[np.float64]:
    """Iterative pruning on total (in + out) degree."""
    n = adj.shape[0]
    shell = np.zeros(n)
    alive = np.ones(n, dtype=bool)
    k = 0
    while alive.any():
        sub = adj[np.ix_(alive, alive)]
        degrees = sub.sum(axis=0) + sub.sum(axis=1)
        if degrees.size and degrees.min() > k:
            k = int(degrees.min())
        # peel everything with degree <= k, repeatedly
        while True:
            sub = adj[np.ix_(alive, alive)]
            idx = np.flatnonzero(alive)
            degrees = sub.sum(axis=0) + sub.sum(axis=1)
            peel = idx[degrees <= k]
            if peel.size == 0:
                break
            shell[peel] = k
            alive[peel] = False
            if not alive.any():
                break
    return shell


def _bfs_distances(adj_list: list[list[int]], source: int, n: int) -> NDArray[np.float64]:
    dist = np.full(n, np.inf)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj_list[u]:
            if dist[v] == np.inf:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def closeness(adj: NDArray[np.int_]) -> NDArray[np.float64]:
    """Out-closeness with the reachable-share correction.

    c_i = ((r_i - 1) / sum of distances to reachable nodes) * ((r_i - 1) / (n - 1))
    where r_i counts i plus the nodes reachable from i; 0 when nothing is
    reachable.
    """
    n = adj.shape[0]
    if n <= 1:
        return np.zeros(n)
    adj_list = [list(np.flatnonzero(adj[i])) for i in range(n)]
    out = np.zeros(n)
    for i in range(n):
        dist = _bfs_distances(adj_list, i, n)
        reachable = np.isfinite(dist)
        r = int(reachable.sum())  # includes i
        if r <= 1:
            continue
        total = float(dist[reachable].sum())
        out[i] = ((r - 1) / total) * ((r - 1) / (n - 1))
    return out


def betweenness(adj: NDArray[np.int_]) -> NDArray[np.float64]:
    """Directed unweighted betweenness (Brandes), unnormalized, endpoints excluded."""
    n = adj.shape[0]
    adj_list = [list(np.flatnonzero(adj[i])) for i in range(n)]
    bc = np.zeros(n)
    for s in range(n):
        sigma = np.zeros(n)
        sigma[s] = 1
        dist = np.full(n, -1)
        dist[s] = 0
        order: list[int] = []
        preds: list[list[int]] = [[] for _ in range(n)]
        queue = deque([s])
        while queue:
            u = queue.popleft()
            order.append(u)
            for v in adj_list[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
                if dist[v] == dist[u] + 1:
                    sigma[v] += sigma[u]
                    preds[v].append(u)
        delta = np.zeros(n)
        for v in reversed(order):
            for u in preds[v]:
                delta[u] += sigma[u] / sigma[v] * (1.0 + delta[v])
            if v != s:
                bc[v] += delta[v]
    return bc


def centralities(net: FinancialNetwork, threshold: float = 0.0) -> dict[str, NDArray[np.float64]]:
    """All centrality columns, computed on the binary adjacency."""
    adj = degree_adjacency(net, threshold)
    in_deg, out_deg = in_out_degrees(adj)
    auth, hub = hits(adj)
    return {
        "in_degree": in_deg,
        "out_degree": out_deg,
        "authority": auth,
        "hub": hub,
        "pagerank": pagerank(adj),
        "k_shell": k_shell(adj),
        "betweenness": betweenness(adj),
        "closeness": closeness(adj),
        "eigen_centrality": eigen_centrality(adj),
        "alpha_centrality": alpha_centrality(adj),
    }


# ---------------------------------------------------------------------------
# Entity risk indicators
# ---------------------------------------------------------------------------

def fragility(net: FinancialNetwork, result: PropagationResult) -> NDArray[np.float64]:
    """Remaining-equity ratio after the shock; negative means bankrupt.

    Zero-buffer banks get a -inf sentinel, later mapped to the column
    minimum for display.
    """
    buffers = net.buffers()
    out = np.empty(net.n)
    pos = buffers > 0
    out[pos] = (buffers[pos] - result.losses[pos]) / buffers[pos]
    out[~pos] = BANKRUPT_SENTINEL
    return out


def stress_matrix(net: FinancialNetwork) -> NDArray[np.float64]:
    """S[i, j] = min(1, exposure(i -> j) / buffer_i); zero-buffer rows cap at 1."""
    buffers = net.buffers()
    e = net.exposures
    s = np.zeros_like(e)
    pos = buffers > 0
    s[pos, :] = np.minimum(1.0, e[pos, :] / buffers[pos, None])
    s[~pos, :] = (e[~pos, :] > 0).astype(float)
    return s


def impact_accumulation(s: NDArray[np.float64], k_max: int = 50,
                        tail_tol: float = 1e-12) -> NDArray[np.float64]:
    """M = sum of S^k for k = 1..K, truncated once the increment is negligible."""
    m = np.zeros_like(s)
    power = np.eye(s.shape[0])
    for _ in range(k_max):
        power = power @ s
        if np.abs(power).max(initial=0.0) < tail_tol:
            break
        m += power
    return m


def impact_susceptibility(net: FinancialNetwork, materiality: float = 1e-6,
                          k_max: int = 50) -> NDArray[np.float64]:
    """Share of non-neighbours whose distress can materially reach the bank."""
    n = net.n
    if n <= 1:
        return np.zeros(n)
    s = stress_matrix(net)
    m = impact_accumulation(s, k_max=k_max)
    adj = degree_adjacency(net)
    out = np.zeros(n)
    for i in range(n):
        remote = (m[i] > materiality) & (adj[i] == 0)
        remote[i] = False
        out[i] = remote.sum() / (n - 1)
    return out


def impact_diffusion(net: FinancialNetwork, materiality: float = 1e-6,
                     k_max: int = 50) -> NDArray[np.float64]:
    """Increase in network-wide impact attributable to each bank's intermediation.

    For each bank the accumulation is recomputed with its in/out edges
    removed; the positive parts of the difference over all other pairs are
    summed and the vector max-normalized.  The leave-one-out accumulations
    run as one batched matrix product.
    """
    n = net.n
    s = stress_matrix(net)
    m = impact_accumulation(s, k_max=k_max)
    # batch[i] = S with bank i's in/out edges removed
    batch = np.broadcast_to(s, (n, n, n)).copy()
    idx = np.arange(n)
    batch[idx, idx, :] = 0.0
    batch[idx, :, idx] = 0.0
    acc = np.zeros_like(batch)
    power = np.broadcast_to(np.eye(n), (n, n, n)).copy()
    for _ in range(k_max):
        power = power @ batch
        if np.abs(power).max(initial=0.0) < 1e-12:
            break
        acc += power
    out = np.zeros(n)
    for i in range(n):
        diff = np.maximum(m - acc[i], 0.0)
        diff[i, :] = 0.0
        diff[:, i] = 0.0
        out[i] = diff.sum()
    peak = out.max(initial=0.0)
    return out / peak if peak > 0 else out


# ---------------------------------------------------------------------------
# System-level indicators
# ---------------------------------------------------------------------------

def systemic_indicators(
    net: FinancialNetwork, result: PropagationResult, weights: NDArray[np.float64] | None = None
) -> SystemRisk:
    """Aggregate the settled result; ``net`` is the pre-shock snapshot."""
    if weights is None:
        weights = net.weights()
    total_loss = float(result.losses.sum())
    if total_loss > 0:
        shares = result.losses / total_loss
        concentration = float((shares**2).sum())
    else:
        concentration = 0.0
    frag = fragility(net, result)
    finite = np.isfinite(frag)
    floor = frag[finite].min() if finite.any() else 0.0
    frag = np.where(finite, frag, floor)
    return SystemRisk(
        concentration=concentration,
        fragility=float((weights * frag).sum()),
        max_stress=float(result.final_stress.max(initial=0.0)),
        total_defaults=int(result.defaulted.sum()),
        total_loss=total_loss,
        total_stress=float((weights * result.final_stress).sum()),
    )


# ---------------------------------------------------------------------------
# The indicator matrix
# ---------------------------------------------------------------------------

def normalize_columns(raw: NDArray[np.float64]) -> NDArray[np.float64]:
    """Per-column min-max to [0, 1]; constant columns map to 0.

    -inf sentinels are first replaced by the finite column minimum so the
    scale is set by the finite range.
    """
    out = np.zeros_like(raw)
    for j in range(raw.shape[1]):
        col = raw[:, j].copy()
        finite = np.isfinite(col)
        if not finite.any():
            continue
        floor = col[finite].min()
        col[~finite] = floor
        lo, hi = col.min(), col.max()
        if hi > lo:
            out[:, j] = (col - lo) / (hi - lo)
    return out


def risk_matrix(
    net: FinancialNetwork, result: PropagationResult | None = None
) -> RiskMatrix:
    """Assemble the full indicator matrix for one pipeline leg.

    ``net`` is the pre-shock network of the leg (FN_o or FN_i); ``result``
    carries the shock outcome, or None before any shock.
    """
    n = net.n
    cols: dict[str, NDArray[np.float64]] = {
        "assets": np.array([b.interbank_assets for b in net.banks]),
        "liabilities": np.array([b.interbank_liabilities for b in net.banks]),
        "capital_buffer": net.buffers(),
        "weight": net.weights(),
    }
    cols.update(centralities(net))
    if result is not None:
        cols["fragility"] = fragility(net, result)
        cols["stress"] = result.final_stress
        cols["loss"] = result.losses
        cols["defaults"] = result.additional_defaults.astype(float)
        cols["defaulted"] = result.defaulted.astype(float)
    else:
        zero = np.zeros(n)
        cols["fragility"] = np.ones(n)
        cols["stress"] = zero
        cols["loss"] = zero.copy()
        cols["defaults"] = zero.copy()
        cols["defaulted"] = zero.copy()
    cols["impact_susceptibility"] = impact_susceptibility(net)
    cols["impact_diffusion"] = impact_diffusion(net)
    raw = np.column_stack([cols[name] for name in COLUMNS])
    return RiskMatrix(
        ids=net.ids,
        columns=COLUMNS,
        raw=raw,
        normalized=normalize_columns(raw),
    )


def risk_matrix_to_csv(matrix: RiskMatrix, normalized: bool = False) -> str:
    data = matrix.normalized if normalized else matrix.raw
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bank_id", *matrix.columns])
    for i, bank_id in enumerate(matrix.ids):
        writer.writerow([bank_id, *[repr(float(v)) for v in data[i]]])
    return buf.getvalue()
