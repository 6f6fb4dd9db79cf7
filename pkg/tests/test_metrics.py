from __future__ import annotations

import numpy as np
import pytest

from conftest import random_net
from oracles import (
    brute_betweenness,
    brute_closeness,
    eig_eigen_centrality,
    eig_hits,
    series_alpha_centrality,
    solve_pagerank,
    survival_k_shell,
)

from interbank import ShockSpec, make_network, propagate
from interbank.metrics import (
    BANKRUPT_SENTINEL,
    COLUMNS,
    alpha_centrality,
    betweenness,
    centralities,
    closeness,
    eigen_centrality,
    fragility,
    hits,
    impact_diffusion,
    impact_susceptibility,
    k_shell,
    normalize_columns,
    pagerank,
    risk_matrix,
    risk_matrix_to_csv,
    spectral_radius,
    systemic_indicators,
)


# -- centralities -----------------------------------------------------------

def test_star_degrees_and_betweenness():
    net = make_network(
        ["c", "l1", "l2", "l3"],
        np.array([[0, 1, 1, 1], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]], dtype=float),
        [0, 0, 0, 0],
        [1, 1, 1, 1],
    )
    cols = centralities(net)
    assert cols["out_degree"].tolist() == [3.0, 0.0, 0.0, 0.0]
    assert cols["in_degree"].tolist() == [0.0, 1.0, 1.0, 1.0]
    assert (cols["betweenness"] == 0.0).all()


def test_cycle_pagerank_uniform():
    adj = np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
    assert np.allclose(pagerank(adj), 1.0 / 3.0, atol=1e-12)


def test_five_node_betweenness_matches_path_enumeration():
    rng = np.random.default_rng(5)
    adj = (rng.random((5, 5)) < 0.5).astype(int)
    np.fill_diagonal(adj, 0)
    assert np.allclose(betweenness(adj), brute_betweenness(adj), atol=1e-12)


def test_iterative_centralities_match_independent_routes():
    rng = np.random.default_rng(17)
    for _ in range(25):
        n = int(rng.integers(2, 7))
        adj = (rng.random((n, n)) < 0.45).astype(int)
        np.fill_diagonal(adj, 0)
        assert np.abs(pagerank(adj) - solve_pagerank(adj)).max() < 1e-9
        a, h = hits(adj)
        ao, ho = eig_hits(adj)
        assert np.abs(a - ao).max() < 1e-9
        assert np.abs(h - ho).max() < 1e-9
        assert np.abs(eigen_centrality(adj) - eig_eigen_centrality(adj)).max() < 1e-9
        rho = spectral_radius(adj)
        alpha = 0.9 / rho if rho > 1e-12 else 0.9
        assert np.abs(alpha_centrality(adj) - series_alpha_centrality(adj, alpha)).max() < 1e-9
        assert (k_shell(adj) == survival_k_shell(adj)).all()
        assert np.abs(closeness(adj) - brute_closeness(adj)).max() < 1e-12
        assert np.abs(betweenness(adj) - brute_betweenness(adj)).max() < 1e-9


def test_empty_graph_centralities_are_zero():
    adj = np.zeros((3, 3), dtype=int)
    assert (eigen_centrality(adj) == 0).all()
    a, h = hits(adj)
    assert (a == 0).all() and (h == 0).all()
    assert (betweenness(adj) == 0).all()
    assert (k_shell(adj) == 0).all()


# -- entity indicators ------------------------------------------------------

def test_fragility_boundaries(two_bank_net):
    spec = ShockSpec(model="linear", targets=("b0",), magnitude=1.0)
    result = propagate(two_bank_net, spec)
    frag = fragility(two_bank_net, result)
    assert frag[0] == 0.0  # loss equals buffer
    assert frag[1] == pytest.approx(0.5)
    result.losses[:] = 0.0
    assert fragility(two_bank_net, result).tolist() == [1.0, 1.0]


def test_fragility_zero_buffer_sentinel():
    net = make_network(["a", "b"], np.zeros((2, 2)), [0, 0], [0.0, 10.0])
    result = propagate(net, ShockSpec(model="linear", targets=("b",), magnitude=0.5))
    frag = fragility(net, result)
    assert frag[0] == BANKRUPT_SENTINEL


def test_susceptibility_chain_counts_remote_source():
    # C holds B, B holds A; stress entries saturate at 1
    net = make_network(
        ["A", "B", "C"],
        np.array([[0, 0, 0], [100.0, 0, 0], [0, 100.0, 0]]),
        [0, 0, 0],
        [50.0, 50.0, 50.0],
    )
    s = impact_susceptibility(net)
    assert s.tolist() == [0.0, 0.0, 0.5]


def test_susceptibility_isolated_bank_is_zero():
    net = make_network(["a", "b", "c"], np.zeros((3, 3)), [0, 0, 0], [1.0, 1.0, 1.0])
    assert (impact_susceptibility(net) == 0).all()


def test_diffusion_middle_of_chain_positive_endpoints_zero():
    net = make_network(
        ["A", "B", "C"],
        np.array([[0, 0, 0], [100.0, 0, 0], [0, 100.0, 0]]),
        [0, 0, 0],
        [50.0, 50.0, 50.0],
    )
    d = impact_diffusion(net)
    assert d[0] == 0.0 and d[2] == 0.0
    assert d[1] == 1.0  # max-normalized


def test_diffusion_complete_graph_symmetric():
    net = make_network(
        ["a", "b", "c"],
        np.array([[0, 10.0, 10], [10, 0, 10], [10, 10, 0]]),
        [0, 0, 0],
        [30.0, 30.0, 30.0],
    )
    assert np.allclose(impact_diffusion(net), 1.0)


def test_diffusion_permutation_equivariant():
    rng = np.random.default_rng(23)
    net = random_net(rng, 6)
    d = impact_diffusion(net)
    perm = rng.permutation(6)
    permuted = make_network(
        [net.ids[i] for i in perm],
        net.exposures[np.ix_(perm, perm)],
        [net.banks[i].external_assets for i in perm],
        [net.banks[i].capital_buffer for i in perm],
        [net.banks[i].weight for i in perm],
    )
    assert np.allclose(impact_diffusion(permuted), d[perm], atol=1e-12)


# -- systemic ---------------------------------------------------------------

def test_systemic_no_shock_zeros(two_bank_net):
    spec = ShockSpec(model="linear", targets=("b0",), magnitude=0.5)
    result = propagate(two_bank_net, spec)
    result.losses[:] = 0.0
    result.final_stress[:] = 0.0
    result.defaulted[:] = False
    sr = systemic_indicators(two_bank_net, result)
    assert sr.total_stress == 0.0
    assert sr.concentration == 0.0
    assert sr.total_defaults == 0


def test_concentration_boundaries(two_bank_net):
    spec = ShockSpec(model="linear", targets=("b0",), magnitude=1.0)
    result = propagate(two_bank_net, spec)
    result.losses = np.array([10.0, 0.0])
    sr = systemic_indicators(two_bank_net, result)
    assert sr.concentration == 1.0
    result.losses = np.array([10.0, 10.0])
    sr = systemic_indicators(two_bank_net, result)
    assert sr.concentration == pytest.approx(0.5)


def test_concentration_within_herfindahl_bounds():
    rng = np.random.default_rng(9)
    for _ in range(20):
        net = random_net(rng, 8)
        result = propagate(net, ShockSpec(model="linear", targets="all", magnitude=0.4))
        sr = systemic_indicators(net, result)
        if sr.total_loss > 0:
            assert 1.0 / net.n - 1e-12 <= sr.concentration <= 1.0 + 1e-12


# -- normalization and assembly ----------------------------------------------

def test_normalize_min_max():
    out = normalize_columns(np.array([[1.0], [2.0], [3.0]]))
    assert out.ravel().tolist() == [0.0, 0.5, 1.0]


def test_normalize_constant_column_to_zero():
    assert normalize_columns(np.array([[5.0], [5.0]])).ravel().tolist() == [0.0, 0.0]


def test_normalize_sentinel_maps_to_zero():
    out = normalize_columns(np.array([[-np.inf], [0.0], [2.0]])).ravel()
    assert out.tolist() == [0.0, 0.0, 1.0]


def test_risk_matrix_shape_and_bounds(two_bank_net):
    spec = ShockSpec(model="linear", targets=("b0",), magnitude=1.0)
    result = propagate(two_bank_net, spec)
    matrix = risk_matrix(two_bank_net, result)
    assert matrix.raw.shape == (2, len(COLUMNS))
    assert matrix.normalized.shape == matrix.raw.shape
    assert (matrix.normalized >= 0.0).all() and (matrix.normalized <= 1.0).all()
    assert matrix.column("stress").tolist() == [1.0, 0.5]


def test_risk_matrix_csv_row_count(two_bank_net):
    spec = ShockSpec(model="linear", targets=("b0",), magnitude=1.0)
    matrix = risk_matrix(two_bank_net, propagate(two_bank_net, spec))
    lines = risk_matrix_to_csv(matrix).splitlines()
    assert len(lines) == 3
    assert lines[0].split(",")[0] == "bank_id"
