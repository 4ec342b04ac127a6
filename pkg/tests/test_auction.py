#! /usr/bin/env python
#
# Copyright (C) 2024 The multivcg developers.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.
#
# pylint: disable=missing-docstring

from __future__ import absolute_import

# this is needed to get logging info in `py.test` when something fails
import logging
logging.basicConfig()

from collections import OrderedDict

import numpy as np
import pytest
from hypothesis import given, settings

from multivcg.auction import (
    AuctionMetrics,
    Bid,
    compute_payments,
    exclusion_welfare,
    run_vcg_auction,
    solve_allocation,
    vcg_payment,
)
from multivcg.exceptions import CapacityMismatch, ContractViolation
from multivcg.oracles import brute_force_vcg, brute_force_welfare, invariant_violations
from multivcg.ubds import KINDS
from multivcg.valuation import ResourceCapacity, close

from _helpers.builders import bid, dataset_bids, small_auctions


def test_single_bid():
    result = run_vcg_auction([bid('a', [2], [0, 5, 8])])
    assert result.allocations == OrderedDict([('a', (2,))])
    assert result.social_welfare == 8.0
    assert result.payments['a'] == 0.0
    assert result.winners == ['a']


@pytest.mark.parametrize("kind", KINDS)
def test_vickrey(kind):
    bids = [bid(1, [1], [0, 5]), bid(2, [1], [0, 3])]
    result = run_vcg_auction(bids, ds_kind=kind)
    assert result.allocations[1] == (1,)
    assert result.allocations[2] == (0,)
    assert result.social_welfare == 5.0
    assert result.payments == OrderedDict([(1, 3.0), (2, 0.0)])
    assert result.welfare_without == OrderedDict([(1, 3.0)])
    assert result.revenue == 3.0


def test_concave_tie_goes_to_first_split_found():
    bids = [bid(1, [2], [0, 4, 7]), bid(2, [2], [0, 3, 5])]
    result = run_vcg_auction(bids)
    assert result.social_welfare == 7.0
    assert result.allocations[1] == (1,)
    assert result.allocations[2] == (1,)
    # 5 - (7 - 4) and 7 - (7 - 3)
    assert result.payments[1] == 2.0
    assert result.payments[2] == 3.0


def test_no_externality_means_no_payment():
    # agents want different resources
    bids = [bid('x', [1, 1], [0, 0, 4, 4]), bid('y', [1, 1], [0, 6, 0, 6])]
    result = run_vcg_auction(bids)
    assert result.social_welfare == 10.0
    assert result.allocations['x'] == (1, 0)
    assert result.allocations['y'] == (0, 1)
    assert result.payments['x'] == 0.0
    assert result.payments['y'] == 0.0


def test_zero_value_agents_are_not_winners():
    bids = [bid('a', [1], [0, 5]), bid('b', [1], [0, 0])]
    result = run_vcg_auction(bids)
    assert result.winners == ['a']
    assert result.payments['b'] == 0.0
    assert 'b' not in result.welfare_without


def test_rows():
    bids = [bid(1, [1], [0, 5]), bid(2, [1], [0, 3])]
    rows = list(run_vcg_auction(bids).rows())
    assert [row.agent_id for row in rows] == [1, 2]
    assert rows[0].allocation == (1,)
    assert rows[0].value == 5.0
    assert rows[0].payment == 3.0


def test_empty_bid_list():
    with pytest.raises(ContractViolation):
        run_vcg_auction([])


def test_duplicate_agent_ids():
    with pytest.raises(ContractViolation):
        run_vcg_auction([bid(1, [1], [0, 5]), bid(1, [1], [0, 3])])


def test_capacity_mismatch_names_the_agent():
    bids = [bid(1, [1], [0, 5]), bid(2, [2], [0, 3, 4])]
    with pytest.raises(CapacityMismatch) as err:
        run_vcg_auction(bids)
    assert err.value.agent_id == 2


def test_solve_allocation_chain():
    bids = dataset_bids('increasing', 4, [3, 3], seed=5)
    allocations, welfare, chain = solve_allocation(bids)
    assert len(chain) == 4
    assert chain[0] is bids[0].valuation
    assert close(welfare, chain[-1].max())
    assert close(welfare, sum(b.valuation(a) for b, a in zip(bids, allocations)))


def test_payments_from_parts_match_run_vcg_auction():
    bids = dataset_bids('mostly-increasing', 5, [3, 2], seed=9)
    cap = bids[0].valuation.capacity
    allocations, welfare, chain = solve_allocation(bids, cap, 'sim_2d_trees')
    payments = compute_payments(bids, cap, 'sim_2d_trees', chain, allocations, welfare)
    result = run_vcg_auction(bids, cap, 'sim_2d_trees')
    assert list(payments) == list(result.payments)
    for agent_id, payment in payments.items():
        assert close(payment, result.payments[agent_id])


def test_exclusion_welfare_needs_forward_chain():
    bids = dataset_bids('increasing', 3, [2], seed=2)
    cap = bids[0].valuation.capacity
    with pytest.raises(ContractViolation):
        exclusion_welfare(bids, cap, 'combination', None, [0])
    _, _, chain = solve_allocation(bids)
    assert exclusion_welfare(bids, cap, 'combination', chain, []) == {}


def test_exclusion_welfare_matches_brute_force():
    bids = dataset_bids('increasing', 4, [2, 2], seed=3)
    cap = bids[0].valuation.capacity
    _, _, chain = solve_allocation(bids)
    without = exclusion_welfare(bids, cap, 'combination', chain, [0, 1, 2, 3])
    for j in range(4):
        expected, _ = brute_force_welfare(bids, cap, exclude=j)
        assert close(without[j], expected)


@pytest.mark.parametrize("welfare_without,welfare,value,expected", [
    (3.0, 5.0, 5.0, 3.0),
    (5.0, 7.0, 4.0, 2.0),
    (7.0, 10.0, 3.0 - 1e-12, 0.0),
    # rounding noise scales with the welfare
    (10000.0, 15000.0 + 2e-9, 5000.0, 0.0),
    (2e4, 3e4 + 4e-9, 1e4, 0.0),
])
def test_vcg_payment(welfare_without, welfare, value, expected):
    assert vcg_payment(welfare_without, welfare, value) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("kind", ['concave', 'increasing'])
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_matches_brute_force_vcg(kind, seed):
    bids = dataset_bids(kind, 3, [2, 2], seed=seed)
    expected = brute_force_vcg(bids)
    actual = run_vcg_auction(bids)
    assert close(actual.social_welfare, expected.social_welfare)
    for agent_id, payment in expected.payments.items():
        assert close(actual.payments[agent_id], payment)
    assert invariant_violations(actual, bids, bids[0].valuation.capacity) == []


@pytest.mark.parametrize("seed", [1, 2, 3, 4])
def test_mostly_increasing_welfare_matches_brute_force(seed):
    bids = dataset_bids('mostly-increasing', 3, [2, 2], seed=seed)
    expected = brute_force_vcg(bids)
    actual = run_vcg_auction(bids)
    assert close(actual.social_welfare, expected.social_welfare)
    assert invariant_violations(actual, bids, bids[0].valuation.capacity) == []


@settings(max_examples=60, deadline=None)
@given(small_auctions())
def test_welfare_matches_brute_force_with_ties(bids):
    # with ties the winners may differ, welfare values may not
    expected = brute_force_vcg(bids)
    actual = run_vcg_auction(bids)
    assert close(actual.social_welfare, expected.social_welfare)
    cap = bids[0].valuation.capacity
    assert invariant_violations(actual, bids, cap) == []
    for j, b in enumerate(bids):
        if b.agent_id in actual.welfare_without:
            without, _ = brute_force_welfare(bids, cap, exclude=j)
            assert close(actual.welfare_without[b.agent_id], without)


def test_threaded_payments_are_identical():
    bids = dataset_bids('increasing', 6, [4, 4], seed=4)
    serial = run_vcg_auction(bids, max_workers=1)
    threaded = run_vcg_auction(bids, max_workers=4)
    assert serial.payments == threaded.payments
    assert serial.allocations == threaded.allocations


def test_metrics():
    bids = dataset_bids('increasing', 5, [3], seed=6)
    result = run_vcg_auction(bids, ds_kind='linear_scan')
    metrics = result.metrics
    assert isinstance(metrics, AuctionMetrics)
    assert metrics.forward_joins == 4
    assert metrics.bridging_joins == len(result.winners)
    assert metrics.winners == len(result.winners)
    assert metrics.join.joins == (metrics.forward_joins + metrics.suffix_joins
                                  + metrics.bridging_joins)
    assert metrics.join.false_positive_ratio == 0.0
    assert metrics.allocation_ns > 0
    row = metrics.as_row()
    assert row.n == 5
    assert row.ds_kind == 'linear_scan'
    assert run_vcg_auction(bids, metrics=False).metrics is None


def test_explicit_capacity():
    bids = [Bid('a', bid('a', [2], [0, 5, 8]).valuation)]
    result = run_vcg_auction(bids, [2])
    assert result.social_welfare == 8.0
    with pytest.raises(CapacityMismatch):
        run_vcg_auction(bids, ResourceCapacity([3]))


if __name__ == "__main__":
    pytest.main(['-v', __file__])
