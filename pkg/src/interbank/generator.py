"""Synthetic interbank exposure matrices from marginals.

Two estimators:

* ``max_entropy_estimate`` spreads exposures as evenly as the marginals
  allow: iterative proportional fitting (RAS) on the outer product of the
  marginals with the diagonal pinned to zero.
* ``min_density_estimate`` concentrates exposures on as few links as
  possible: a greedy largest-remaining-marginal matcher (a deterministic,
  desk-scale approximation of minimum-density estimation, not the full
  optimization).

Marginal samplers plus balance-sheet synthesis turn an estimated matrix into
a complete :class:`~interbank.network.FinancialNetwork`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .network import FinancialNetwork, make_network


class InfeasibleMarginals(ValueError):
    """Marginals admit no zero-diagonal non-negative matrix."""

    def __init__(self, bank_index: int, message: str):
        super().__init__(message)
        self.bank_index = bank_index


@dataclass(frozen=True)
class Marginals:
    """Target row sums (assets) and column sums (liabilities)."""

    assets: NDArray[np.float64]
    liabilities: NDArray[np.float64]

    def __post_init__(self) -> None:
        a = np.ascontiguousarray(self.assets, dtype=np.float64)
        l = np.ascontiguousarray(self.liabilities, dtype=np.float64)
        if a.shape != l.shape or a.ndim != 1:
            raise ValueError("assets and liabilities must be 1-D vectors of equal length")
        if (a < 0).any() or (l < 0).any():
            raise ValueError("marginals must be non-negative")
        ta, tl = a.sum(), l.sum()
        if ta > 0 and abs(ta - tl) > 1e-6 * max(ta, tl):
            raise ValueError(f"market does not clear: sum assets {ta} != sum liabilities {tl}")
        object.__setattr__(self, "assets", a)
        object.__setattr__(self, "liabilities", l)

    @property
    def n(self) -> int:
        return self.assets.shape[0]


@dataclass(frozen=True)
class GeneratorConfig:
    method: str = "min_density"  # or "max_entropy"
    seed: int = 0
    ras_tolerance: float = 1e-9
    ras_max_iters: int = 10000
    min_density_link_cost: float = 1.0
    sampler: str = "lognormal"  # lognormal | pareto | explicit
    sampler_params: dict = field(default_factory=dict)
    # balance-sheet synthesis for generated networks
    external_ratio: float = 3.0
    capital_ratio: float = 0.3
    buffer_sigma: float = 0.5  # lognormal spread of per-bank capitalization

    def __post_init__(self) -> None:
        if self.ras_tolerance <= 0 or self.ras_max_iters <= 0:
            raise ValueError("tolerances must be positive")
        if self.min_density_link_cost <= 0:
            raise ValueError("link cost must be positive")


def sample_marginals(n: int, config: GeneratorConfig) -> Marginals:
    """Draw balanced marginals; deterministic for a given seed.

    Liability draws are rescaled proportionally so totals clear.
    """
    if n < 2:
        raise ValueError("need at least 2 banks")
    params = config.sampler_params
    if config.sampler == "explicit":
        assets = np.asarray(params["assets"], dtype=np.float64)
        liabilities = np.asarray(params["liabilities"], dtype=np.float64)
        if assets.shape[0] != n:
            raise ValueError(f"explicit marginals have length {assets.shape[0]}, expected {n}")
        return Marginals(assets=assets, liabilities=liabilities)
    rng = np.random.default_rng(config.seed)
    if config.sampler == "lognormal":
        mu = float(params.get("mu", 0.0))
        sigma = float(params.get("sigma", 1.0))
        if sigma <= 0:
            raise ValueError("lognormal sigma must be positive")
        assets = rng.lognormal(mu, sigma, size=n)
        liabilities = rng.lognormal(mu, sigma, size=n)
    elif config.sampler == "pareto":
        alpha = float(params.get("alpha", 1.5))
        x_min = float(params.get("x_min", 1.0))
        if alpha <= 0 or x_min <= 0:
            raise ValueError("pareto parameters must be positive")
        assets = x_min * (1.0 + rng.pareto(alpha, size=n))
        liabilities = x_min * (1.0 + rng.pareto(alpha, size=n))
    else:
        raise ValueError(f"unknown sampler {config.sampler!r}")
    liabilities *= assets.sum() / liabilities.sum()
    return Marginals(assets=assets, liabilities=liabilities)


def _check_feasible(m: Marginals) -> None:
    # A zero-diagonal matrix exists iff no bank's marginal exceeds everyone
    # else's opposite-side total.
    total_l = m.liabilities.sum()
    total_a = m.assets.sum()
    for i in range(m.n):
        if m.assets[i] > total_l - m.liabilities[i] + 1e-9 * max(total_l, 1.0):
            raise InfeasibleMarginals(
                i, f"bank {i}: assets {m.assets[i]} exceed other banks' total liabilities"
            )
        if m.liabilities[i] > total_a - m.assets[i] + 1e-9 * max(total_a, 1.0):
            raise InfeasibleMarginals(
                i, f"bank {i}: liabilities {m.liabilities[i]} exceed other banks' total assets"
            )


def max_entropy_estimate(m: Marginals, config: GeneratorConfig) -> NDArray[np.float64]:
    """RAS-balanced zero-diagonal matrix matching the marginals.

    Starts from the outer product assets x liabilities with the diagonal
    zeroed and alternates row/column scaling until the worst relative
    marginal error drops below ``ras_tolerance``.
    """
    _check_feasible(m)
    n = m.n
    a, l = m.assets, m.liabilities
    x = np.outer(a, l)
    np.fill_diagonal(x, 0.0)
    if x.sum() == 0.0:
        return x
    a_pos = a > 0
    l_pos = l > 0

    def rel_err(matrix: NDArray[np.float64]) -> float:
        row = matrix.sum(axis=1)
        col = matrix.sum(axis=0)
        row_err = np.abs(row - a) / np.where(a_pos, a, 1.0)
        col_err = np.abs(col - l) / np.where(l_pos, l, 1.0)
        return float(max(row_err.max(initial=0.0), col_err.max(initial=0.0)))

    for _ in range(config.ras_max_iters):
        row = x.sum(axis=1)
        r = np.where(row > 0, a / np.where(row > 0, row, 1.0), 0.0)
        x *= r[:, None]
        col = x.sum(axis=0)
        s = np.where(col > 0, l / np.where(col > 0, col, 1.0), 0.0)
        x *= s[None, :]
        if rel_err(x) < config.ras_tolerance:
            return x
        scale = max(r.max(initial=0.0), s.max(initial=0.0))
        if not np.isfinite(scale) or scale > 1e12:
            break
    # Diverged or ran out of iterations: name the worst-off bank.
    row = x.sum(axis=1)
    col = x.sum(axis=0)
    row_err = np.abs(row - a) / np.where(a_pos, a, 1.0)
    col_err = np.abs(col - l) / np.where(l_pos, l, 1.0)
    worst = int(np.argmax(np.maximum(row_err, col_err)))
    raise InfeasibleMarginals(
        worst,
        f"RAS did not converge within {config.ras_max_iters} iterations; "
        f"worst marginal residual at bank {worst}",
    )


def min_density_estimate(m: Marginals, config: GeneratorConfig) -> NDArray[np.float64]:
    """Sparse zero-diagonal matrix matching the marginals.

    Greedy largest-remaining-marginal matching: repeatedly link the bank
    with the largest unallocated assets to the bank with the largest
    unallocated liabilities (self-links excluded), allocating the smaller of
    the two residuals; ties break toward the lower bank index.  The result
    has at most ``2n - 1`` links.

    A feasible instance can still dead-end with the last asset and liability
    residual stranded on one bank; that residual is rerouted through an
    existing link, which preserves every other bank's marginals exactly.
    """
    _check_feasible(m)
    n = m.n
    x = np.zeros((n, n))
    ra = m.assets.copy()
    rl = m.liabilities.copy()
    eps = 1e-12 * max(float(m.assets.sum()), 1.0)
    for _ in range(4 * n + 4):
        i = int(np.argmax(ra))
        if ra[i] <= eps:
            break
        rl_masked = rl.copy()
        rl_masked[i] = -np.inf
        j = int(np.argmax(rl_masked))
        if rl_masked[j] > eps:
            amount = float(min(ra[i], rl[j]))
            x[i, j] += amount
            ra[i] -= amount
            rl[j] -= amount
            continue
        # Liabilities left only on bank i: drain other banks' assets into it,
        # then reroute whatever is matched on i itself.
        ra_masked = ra.copy()
        ra_masked[i] = -np.inf
        k = int(np.argmax(ra_masked))
        if ra_masked[k] > eps:
            amount = float(min(ra[k], rl[i]))
            x[k, i] += amount
            ra[k] -= amount
            rl[i] -= amount
            continue
        stranded = float(min(ra[i], rl[i]))
        if stranded > eps:
            _reroute_residual(x, i, stranded)
        ra[i] = rl[i] = 0.0
        break
    if ra.max(initial=0.0) > eps or rl.max(initial=0.0) > eps:
        worst = int(np.argmax(np.maximum(ra, rl)))
        raise InfeasibleMarginals(worst, f"bank {worst}: residual marginals left unplaced")
    return x


def _reroute_residual(x: NDArray[np.float64], s: int, residual: float) -> None:
    """Consume bank ``s``'s matched asset+liability residual via detours.

    Shifting ``t`` units from an existing link u->v (u, v != s) onto the two
    links u->s and s->v leaves u's and v's marginals unchanged while giving
    ``s`` ``t`` units of both assets and liabilities.
    """
    n = x.shape[0]
    remaining = residual
    while remaining > 0:
        best = None
        for u in range(n):
            if u == s:
                continue
            for v in range(n):
                if v == s or v == u or x[u, v] <= 0:
                    continue
                if best is None or x[u, v] > x[best[0], best[1]]:
                    best = (u, v)
        if best is None:
            raise InfeasibleMarginals(
                s, f"bank {s}: stranded residual {remaining} cannot be rerouted"
            )
        u, v = best
        t = min(remaining, float(x[u, v]))
        x[u, v] -= t
        x[u, s] += t
        x[s, v] += t
        remaining -= t


def edge_count(matrix: NDArray[np.float64], threshold: float = 0.0) -> int:
    return int((matrix > threshold).sum())


def build_network(m: Marginals, matrix: NDArray[np.float64], config: GeneratorConfig) -> FinancialNetwork:
    """Wrap an estimated matrix in a full network with synthesized balance sheets.

    external_assets = external_ratio * interbank assets and capital_buffer =
    capital_ratio * total assets, with a per-bank lognormal capitalization
    factor (sigma = buffer_sigma) so leverage is heterogeneous; weights are
    total-asset shares.
    """
    n = m.n
    ids = [f"b{i}" for i in range(n)]
    interbank_assets = matrix.sum(axis=1)
    external = config.external_ratio * interbank_assets
    total = external + interbank_assets
    rng = np.random.default_rng([config.seed, 0xB0FF])
    factor = rng.lognormal(0.0, config.buffer_sigma, size=n) if config.buffer_sigma > 0 else np.ones(n)
    buffers = config.capital_ratio * total * factor
    return make_network(
        ids=ids,
        exposures=matrix,
        external_assets=external,
        capital_buffer=buffers,
        stage_tag="FN_o",
    )


def generate_network(n: int, config: GeneratorConfig) -> FinancialNetwork:
    """Sample marginals, estimate the matrix with the configured method, assemble."""
    m = sample_marginals(n, config)
    if config.method == "max_entropy":
        matrix = max_entropy_estimate(m, config)
    elif config.method == "min_density":
        matrix = min_density_estimate(m, config)
    else:
        raise ValueError(f"unknown method {config.method!r}")
    return build_network(m, matrix, config)
