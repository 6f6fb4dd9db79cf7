"""Risk-island layout: place banks in 2-D by risk-profile similarity.

Pipeline: Gaussian-kernel similarities over the normalized risk rows with a
per-bank bandwidth matched to a target perplexity, then gradient descent on
the KL divergence between those similarities and a heavy-tailed kernel over
the 2-D positions (momentum plus early exaggeration), then a repulsion pass
that removes node overlaps, and finally force-directed bundling of the
exposure edges.

Everything is computed in bank-id-sorted order internally (seed streams are
keyed by bank id, not list position), so permuting the input order permutes
the output bit-identically.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .metrics import RiskMatrix
from .network import FinancialNetwork


@dataclass(frozen=True)
class LayoutConfig:
    perplexity: float = 15.0
    learning_rate: float = 100.0
    iterations: int = 1000
    momentum_early: float = 0.5
    momentum_late: float = 0.8
    momentum_switch: int = 250
    early_exaggeration: float = 4.0
    exaggeration_until: int = 100
    seed: int = 0
    repulsion_k: float = 0.0  # 0 = 2x mean radius
    radius_indicator: str = "stress"
    radius_min: float = 4.0
    radius_max: float = 18.0
    bundle_cycles: int = 6
    bundle_segments: int = 16
    bundle_compatibility: float = 0.6
    bundle_iterations: int = 30
    bundle_step: float = 0.04

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")

    def as_dict(self) -> dict:
        from dataclasses import asdict

        return asdict(self)


@dataclass
class Layout:
    ids: tuple[str, ...]
    positions: NDArray[np.float64]  # (n, 2)
    radii: NDArray[np.float64]
    kl_trace: NDArray[np.float64]
    islands: NDArray[np.int_]  # cluster label per bank, -1 = noise
    island_profiles: list[dict] = field(default_factory=list)
    edges: list[dict] = field(default_factory=list)  # {from,to,amount,points}

    @property
    def n(self) -> int:
        return len(self.ids)


# ---------------------------------------------------------------------------
# Similarities (feature space)
# ---------------------------------------------------------------------------

def feature_similarities(features: NDArray[np.float64], perplexity: float,
                         tol: float = 1e-5, max_steps: int = 64) -> NDArray[np.float64]:
    """Symmetric joint similarity matrix from risk-feature rows.

    Conditional Gaussians get per-row bandwidths found by bisection so each
    row's perplexity matches the target; the result is symmetrized and
    normalized to sum to 1 with a zero diagonal.  Duplicate rows (zero
    distances) are fine: the conditionals degrade to uniform.
    """
    n = features.shape[0]
    if n < 3:
        raise ValueError("need at least 3 banks to embed")
    d2 = _pairwise_sq_dists(features)
    target = min(perplexity, n - 1.0)
    log_target = np.log(target)
    p_cond = np.zeros((n, n))
    for i in range(n):
        row = np.delete(d2[i], i)
        beta = _bisect_beta(row, log_target, tol, max_steps)
        kernel = np.exp(-row * beta)
        total = kernel.sum()
        if total <= 0:
            kernel = np.ones_like(row)
            total = kernel.sum()
        probs = kernel / total
        p_cond[i, np.arange(n) != i] = probs
    p = (p_cond + p_cond.T) / (2.0 * n)
    np.fill_diagonal(p, 0.0)
    return p


def _pairwise_sq_dists(x: NDArray[np.float64]) -> NDArray[np.float64]:
    sq = (x**2).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def _bisect_beta(d2_row: NDArray[np.float64], log_target: float,
                 tol: float, max_steps: int) -> float:
    """Find precision beta = 1/(2 sigma^2) whose entropy matches the target."""
    beta = 1.0
    lo, hi = 0.0, np.inf
    for _ in range(max_steps):
        kernel = np.exp(-d2_row * beta)
        total = kernel.sum()
        if total <= 0:
            entropy = np.log(d2_row.shape[0])
        else:
            probs = kernel / total
            nz = probs > 0
            entropy = float(-(probs[nz] * np.log(probs[nz])).sum())
        diff = entropy - log_target
        if abs(diff) < tol:
            break
        if diff > 0:  # too spread out: sharpen
            lo = beta
            beta = beta * 2.0 if hi == np.inf else (beta + hi) / 2.0
        else:
            hi = beta
            beta = beta / 2.0 if lo == 0.0 else (beta + lo) / 2.0
    return beta


# ---------------------------------------------------------------------------
# Embedding (position space)
# ---------------------------------------------------------------------------

def _seed_positions(ids: tuple[str, ...], seed: int, scale: float = 1e-2) -> NDArray[np.float64]:
    """Isotropic Gaussian init with the random stream keyed by (seed, bank id)."""
    out = np.empty((len(ids), 2))
    for i, bank_id in enumerate(ids):
        digest = hashlib.sha256(f"{seed}:{bank_id}".encode()).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        out[i] = rng.normal(0.0, scale, size=2)
    return out


def embed(p: NDArray[np.float64], config: LayoutConfig,
          ids: tuple[str, ...]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Gradient descent on KL(P || Q); returns positions and the KL trace."""
    n = p.shape[0]
    y = _seed_positions(ids, config.seed)
    velocity = np.zeros_like(y)
    trace = np.empty(config.iterations)
    p_mask = p > 0
    for it in range(config.iterations):
        exaggeration = config.early_exaggeration if it < config.exaggeration_until else 1.0
        diff = y[:, None, :] - y[None, :, :]
        d2 = (diff**2).sum(axis=2)
        w = 1.0 / (1.0 + d2)
        np.fill_diagonal(w, 0.0)
        z = w.sum()
        q = w / z
        # true objective, without exaggeration
        q_safe = np.maximum(q, 1e-300)
        trace[it] = float((p[p_mask] * np.log(p[p_mask] / q_safe[p_mask])).sum())
        coeff = (exaggeration * p - q) * w
        grad = 4.0 * (coeff.sum(axis=1)[:, None] * y - coeff @ y)
        if not np.isfinite(grad).all():
            raise FloatingPointError(
                "non-finite embedding gradient; lower the learning rate"
            )
        momentum = config.momentum_early if it < config.momentum_switch else config.momentum_late
        velocity = momentum * velocity - config.learning_rate * grad
        y = y + velocity
        y = y - y.mean(axis=0)
    return y, trace


# ---------------------------------------------------------------------------
# Overlap removal
# ---------------------------------------------------------------------------

def remove_overlaps(positions: NDArray[np.float64], radii: NDArray[np.float64],
                    repulsion_k: float, ids: tuple[str, ...],
                    seed: int = 0, max_passes: int = 500) -> NDArray[np.float64]:
    """Push overlapping pairs apart until no pair overlaps (or passes run out).

    Pairs are processed sequentially in index order; each node of an
    overlapping pair moves by min(k^2/d, 0.6 * gap) along the separation
    direction, so the repulsion law governs near-touching pairs while hard
    overlaps always make progress.  Coincident nodes are jittered apart
    first with an id-keyed offset.  Non-overlapping pairs feel no force.
    """
    y = positions.copy()
    n = y.shape[0]
    if repulsion_k <= 0:
        repulsion_k = 2.0 * float(radii.mean()) if n else 1.0
    k2 = repulsion_k**2
    limits = radii[:, None] + radii[None, :]
    for _ in range(max_passes):
        d = np.sqrt(_pairwise_sq_dists(y))
        overlap = np.triu(d < limits, k=1)
        pairs = np.argwhere(overlap)
        if pairs.size == 0:
            break
        # Gauss-Seidel: pairs see positions already moved earlier in the pass.
        for i, j in pairs:
            limit = limits[i, j]
            delta = y[i] - y[j]
            dist = float(np.hypot(delta[0], delta[1]))
            if dist >= limit:
                continue
            if dist < 1e-12:
                y[i] += _id_jitter(ids[i], seed)
                y[j] += _id_jitter(ids[j], seed)
                delta = y[i] - y[j]
                dist = float(np.hypot(delta[0], delta[1]))
                if dist < 1e-12:
                    delta = np.array([limit * 1e-3, 0.0])
                    dist = float(np.hypot(delta[0], delta[1]))
            unit = delta / dist
            gap = limit - dist
            step = min(k2 / dist, 0.6 * gap)
            y[i] += unit * step
            y[j] -= unit * step
    return y


def _id_jitter(bank_id: str, seed: int) -> NDArray[np.float64]:
    digest = hashlib.sha256(f"jitter:{seed}:{bank_id}".encode()).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    return rng.normal(0.0, 1e-6, size=2)


# ---------------------------------------------------------------------------
# Edge bundling
# ---------------------------------------------------------------------------

def bundle_edges(positions: NDArray[np.float64], edges: list[tuple[int, int]],
                 config: LayoutConfig) -> list[NDArray[np.float64]]:
    """Force-directed edge bundling; returns one polyline per edge.

    Each edge is subdivided into ``bundle_segments`` pieces; interior points
    of compatible edge pairs (angle x scale x position compatibility above
    the threshold) attract each other for a fixed number of cycles with a
    halving step size.  Endpoints stay pinned to the node positions.
    """
    n_pts = config.bundle_segments - 1
    polylines: list[NDArray[np.float64]] = []
    for a, b in edges:
        t = np.linspace(0.0, 1.0, config.bundle_segments + 1)[:, None]
        polylines.append(positions[a] * (1 - t) + positions[b] * t)
    m = len(edges)
    if m == 0 or n_pts < 1:
        return polylines

    starts = np.array([positions[a] for a, _ in edges])
    ends = np.array([positions[b] for _, b in edges])
    vec = ends - starts
    lengths = np.hypot(vec[:, 0], vec[:, 1])
    mids = (starts + ends) / 2.0
    compat_pairs: list[tuple[int, int, float]] = []
    for e1 in range(m):
        for e2 in range(e1 + 1, m):
            l1, l2 = lengths[e1], lengths[e2]
            if l1 < 1e-12 or l2 < 1e-12:
                continue
            angle = abs(float(vec[e1] @ vec[e2]) / (l1 * l2))
            lavg = (l1 + l2) / 2.0
            scale = 2.0 / (lavg / min(l1, l2) + max(l1, l2) / lavg)
            mid_dist = float(np.hypot(*(mids[e1] - mids[e2])))
            position = lavg / (lavg + mid_dist)
            compat = angle * scale * position
            if compat > config.bundle_compatibility:
                compat_pairs.append((e1, e2, compat))
    if not compat_pairs:
        return polylines

    pts = np.stack(polylines)  # (m, segments+1, 2)
    pair_a = np.array([p[0] for p in compat_pairs])
    pair_b = np.array([p[1] for p in compat_pairs])
    pair_c = np.array([p[2] for p in compat_pairs])[:, None, None]
    closure = 0.45  # max fraction of the gap closed per iteration; no crossing
    step = config.bundle_step * float(lengths.mean())
    for _ in range(config.bundle_cycles):
        for _ in range(config.bundle_iterations):
            inner = pts[:, 1:-1, :]
            # gentle Laplacian smoothing keeps subdivision points spread out
            spring = 0.05 * ((pts[:, :-2, :] - inner) + (pts[:, 2:, :] - inner))
            attract = np.zeros_like(inner)
            delta = pts[pair_b, 1:-1, :] - pts[pair_a, 1:-1, :]
            dist = np.sqrt((delta**2).sum(axis=2, keepdims=True))
            # displacement toward the partner, capped so points never cross
            frac = np.minimum(closure, step * pair_c / np.maximum(dist, 1e-9))
            pull = delta * frac
            np.add.at(attract, pair_a, pull)
            np.add.at(attract, pair_b, -pull)
            pts[:, 1:-1, :] += spring + attract
        step *= 0.5
    return [pts[i] for i in range(m)]


# ---------------------------------------------------------------------------
# Island labeling
# ---------------------------------------------------------------------------

def label_islands(positions: NDArray[np.float64], min_size: int = 3,
                  radius_factor: float = 3.0) -> NDArray[np.int_]:
    """Density-based grouping of the final positions; -1 marks noise.

    The neighbourhood radius is ``radius_factor`` times the median
    nearest-neighbour distance.
    """
    n = positions.shape[0]
    labels = np.full(n, -1, dtype=np.int_)
    if n == 0:
        return labels
    if n == 1:
        labels[0] = 0
        return labels
    d = np.sqrt(_pairwise_sq_dists(positions))
    np.fill_diagonal(d, np.inf)
    nearest = d.min(axis=1)
    eps = radius_factor * float(np.median(nearest))
    neighbours = [np.flatnonzero(d[i] <= eps) for i in range(n)]
    core = np.array([len(nb) + 1 >= min_size for nb in neighbours])
    cluster = 0
    for i in range(n):
        if labels[i] != -1 or not core[i]:
            continue
        queue = [i]
        labels[i] = cluster
        while queue:
            u = queue.pop()
            for v in neighbours[u]:
                if labels[v] == -1:
                    labels[v] = cluster
                    if core[v]:
                        queue.append(v)
        cluster += 1
    return labels


ISLAND_KINDS = ("RI", "SSI", "VI", "TI")


def island_profile(matrix: RiskMatrix, members: NDArray[np.int_]) -> dict:
    """Mean normalized risk profile of a cluster plus a heuristic name.

    High systemic columns name a Threatening Island, high susceptibility a
    Vulnerable Island, moderate levels a Suboptimal Status Island, and low
    risk a Resilient Island.
    """
    mean = matrix.normalized[members].mean(axis=0)
    profile = {name: float(mean[matrix.columns.index(name)]) for name in matrix.columns}
    threat = np.mean(
        [profile["stress"], profile["loss"], profile["defaults"], profile["impact_diffusion"]]
    )
    if threat >= 0.6:
        kind = "TI"
    elif profile["impact_susceptibility"] >= 0.6:
        kind = "VI"
    elif threat >= 0.3:
        kind = "SSI"
    else:
        kind = "RI"
    return {"kind": kind, "threat": float(threat), "profile": profile}


# ---------------------------------------------------------------------------
# Full pipeline
# ---------------------------------------------------------------------------

def node_radii(matrix: RiskMatrix, config: LayoutConfig) -> NDArray[np.float64]:
    values = matrix.column(config.radius_indicator, normalized=True)
    return config.radius_min + values * (config.radius_max - config.radius_min)


def compute_layout(net: FinancialNetwork, matrix: RiskMatrix,
                   config: LayoutConfig | None = None,
                   progress: "callable | None" = None) -> Layout:
    """Run the whole pipeline on one network stage.

    ``matrix`` must be the risk matrix of the same bank order as ``net``.
    ``progress(iteration, kl)`` is invoked every 100 embedding iterations.
    """
    if config is None:
        config = LayoutConfig()
    order = np.argsort(np.array(net.ids, dtype=object))
    inverse = np.empty_like(order)
    inverse[order] = np.arange(net.n)
    sorted_ids = tuple(net.ids[i] for i in order)

    features = matrix.normalized[order]
    p = feature_similarities(features, config.perplexity)
    positions, trace = embed(p, config, sorted_ids)
    if progress is not None:
        for it in range(0, config.iterations, 100):
            progress(it, float(trace[it]))
        progress(config.iterations - 1, float(trace[-1]))
    radii = node_radii(matrix, config)[order]
    positions = remove_overlaps(positions, radii, config.repulsion_k, sorted_ids, config.seed)
    labels = label_islands(positions)

    # back to input order
    positions = positions[inverse]
    radii = radii[inverse]
    labels = labels[inverse]

    e = net.exposures
    edge_list = [(i, j) for i in range(net.n) for j in range(net.n) if e[i, j] > 0]
    polylines = bundle_edges(positions, edge_list, config)
    edges = [
        {
            "from": net.ids[i],
            "to": net.ids[j],
            "amount": float(e[i, j]),
            "points": [[float(x), float(y)] for x, y in poly],
        }
        for (i, j), poly in zip(edge_list, polylines)
    ]
    profiles = []
    for label in sorted(set(labels.tolist())):
        if label == -1:
            continue
        members = np.flatnonzero(labels == label)
        info = island_profile(matrix, members)
        info["label"] = int(label)
        info["member_ids"] = [net.ids[i] for i in members]
        profiles.append(info)
    return Layout(
        ids=net.ids,
        positions=positions,
        radii=radii,
        kl_trace=trace,
        islands=labels,
        island_profiles=profiles,
        edges=edges,
    )


def layout_to_document(layout: Layout) -> dict:
    return {
        "positions": [
            {
                "id": layout.ids[i],
                "x": float(layout.positions[i, 0]),
                "y": float(layout.positions[i, 1]),
                "r": float(layout.radii[i]),
                "island": int(layout.islands[i]),
            }
            for i in range(layout.n)
        ],
        "edges": layout.edges,
        "islands": layout.island_profiles,
        "kl_trace": [float(v) for v in layout.kl_trace],
    }
