from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from interbank import make_network, recompute_marginals, validate_network, degree_adjacency
from interbank.network import (
    dumps_network,
    loads_network,
    network_to_csv,
)


def test_identity_two_bank_net_is_valid():
    net = make_network(
        ["a", "b"], np.array([[0.0, 50.0], [0.0, 0.0]]),
        external_assets=[1.0, 1.0], capital_buffer=[1.0, 1.0],
    )
    assert net.banks[0].interbank_assets == 50.0
    assert validate_network(net).ok


def test_nonzero_diagonal_reported():
    net = make_network(
        ["a", "b"], np.array([[1.0, 50.0], [0.0, 0.0]]),
        external_assets=[1.0, 1.0], capital_buffer=[1.0, 1.0],
    )
    report = validate_network(net)
    assert [v.code for v in report] == ["nonzero_diagonal"]
    assert "(0,0)" in report.violations[0].message


def test_weight_sum_violation():
    net = make_network(
        ["a", "b"], np.zeros((2, 2)),
        external_assets=[1.0, 1.0], capital_buffer=[1.0, 1.0], weight=[0.6, 0.6],
    )
    report = validate_network(net)
    assert [v.code for v in report] == ["weight_sum"]


def test_duplicate_ids_and_negative_entries_reported():
    net = make_network(
        ["a", "a"], np.array([[0.0, -1.0], [0.0, 0.0]]),
        external_assets=[1.0, 1.0], capital_buffer=[1.0, 1.0],
    )
    codes = {v.code for v in validate_network(net)}
    assert "duplicate_id" in codes and "negative_entry" in codes


def test_marginal_mismatch_reported():
    net = make_network(
        ["a", "b"], np.array([[0.0, 50.0], [0.0, 0.0]]),
        external_assets=[1.0, 1.0], capital_buffer=[1.0, 1.0],
    )
    broken = net.banks[0].__class__(
        id="a", external_assets=1.0, interbank_assets=99.0,
        interbank_liabilities=0.0, capital_buffer=1.0, weight=net.banks[0].weight,
    )
    bad = net.__class__(banks=(broken, net.banks[1]), exposures=net.exposures)
    codes = [v.code for v in validate_network(bad)]
    assert "marginal_mismatch" in codes


def test_recompute_marginals_single_entry():
    net = make_network(
        ["a", "b"], np.array([[0.0, 50.0], [0.0, 0.0]]),
        external_assets=[0.0, 0.0], capital_buffer=[1.0, 1.0],
    )
    fresh = recompute_marginals(net)
    assert [b.interbank_assets for b in fresh.banks] == [50.0, 0.0]
    assert [b.interbank_liabilities for b in fresh.banks] == [0.0, 50.0]


def test_recompute_marginals_zero_matrix():
    net = make_network(["a", "b"], np.zeros((2, 2)), [0, 0], [1, 1])
    fresh = recompute_marginals(net)
    assert all(b.interbank_assets == 0.0 for b in fresh.banks)


def test_recompute_marginals_cycle():
    e = np.array([[0.0, 10.0, 0.0], [0.0, 0.0, 10.0], [10.0, 0.0, 0.0]])
    net = recompute_marginals(make_network(["a", "b", "c"], e, [0, 0, 0], [1, 1, 1]))
    assert [b.interbank_assets for b in net.banks] == [10.0, 10.0, 10.0]
    assert [b.interbank_liabilities for b in net.banks] == [10.0, 10.0, 10.0]


def test_recompute_marginals_idempotent(two_bank_net):
    once = recompute_marginals(two_bank_net)
    twice = recompute_marginals(once)
    assert once.banks == twice.banks


def test_degree_adjacency_threshold():
    net = make_network(["a", "b"], np.array([[0.0, 50.0], [0.0, 0.0]]), [0, 0], [1, 1])
    assert degree_adjacency(net).tolist() == [[0, 1], [0, 0]]
    tiny = make_network(["a", "b"], np.array([[0.0, 1e-12], [0.0, 0.0]]), [0, 0], [1, 1])
    assert degree_adjacency(tiny, threshold=1e-9).sum() == 0


def test_exposures_are_read_only(two_bank_net):
    with pytest.raises(ValueError):
        two_bank_net.exposures[0, 1] = 3.0


def test_unknown_bank_id_raises(two_bank_net):
    with pytest.raises(KeyError):
        two_bank_net.index_of("zz")


@st.composite
def networks(draw):
    n = draw(st.integers(min_value=1, max_value=6))
    amounts = draw(
        st.lists(
            st.floats(min_value=0.0, max_value=1e6, allow_nan=False, width=32),
            min_size=n * n, max_size=n * n,
        )
    )
    exposures = np.array(amounts, dtype=np.float64).reshape(n, n)
    np.fill_diagonal(exposures, 0.0)
    buffers = draw(
        st.lists(st.floats(min_value=0.0, max_value=1e6, allow_nan=False, width=32),
                 min_size=n, max_size=n)
    )
    externals = draw(
        st.lists(st.floats(min_value=0.0, max_value=1e6, allow_nan=False, width=32),
                 min_size=n, max_size=n)
    )
    return make_network([f"b{i}" for i in range(n)], exposures, externals, buffers)


@settings(max_examples=60, deadline=None)
@given(networks())
def test_serialization_round_trip_is_byte_identical(net):
    text = dumps_network(net)
    again = dumps_network(loads_network(text))
    assert text == again


@settings(max_examples=40, deadline=None)
@given(networks())
def test_loaded_network_is_valid(net):
    assert validate_network(loads_network(dumps_network(net))).ok


def test_csv_export_header_and_rows(two_bank_net):
    lines = network_to_csv(two_bank_net).splitlines()
    assert lines[0] == "from,to,amount"
    assert lines[1] == "b1,b0,50.0"
