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

import pytest

from multivcg.auction import AuctionResult, run_vcg_auction
from multivcg.exceptions import ContractViolation
from multivcg.oracles import (
    MAX_TUPLES,
    brute_force_vcg,
    brute_force_welfare,
    compare_results,
    feasible_tuple_count,
    invariant_violations,
    naive_chain_vcg,
)
from multivcg.valuation import ResourceCapacity, close

from _helpers.builders import bid, dataset_bids


def test_feasible_tuple_count():
    # two agents sharing 2 units: (0,0) (0,1) (0,2) (1,0) (1,1) (2,0)
    assert feasible_tuple_count(2, ResourceCapacity([2])) == 6
    assert feasible_tuple_count(3, ResourceCapacity([1, 1])) == 16


def test_brute_force_vickrey():
    bids = [bid(1, [1], [0, 5]), bid(2, [1], [0, 3])]
    welfare, allocations = brute_force_welfare(bids)
    assert welfare == 5.0
    assert allocations == [(1,), (0,)]
    without, allocations = brute_force_welfare(bids, exclude=0)
    assert without == 3.0
    assert allocations == [(0,), (1,)]


def test_brute_force_vcg_vickrey():
    result = brute_force_vcg([bid(1, [1], [0, 5]), bid(2, [1], [0, 3])])
    assert result.payments == OrderedDict([(1, 3.0), (2, 0.0)])
    assert result.winners == [1]


def test_brute_force_refuses_large_instances():
    bids = [bid(k, [40, 40], [0] + [1] * (41 * 41 - 1)) for k in range(6)]
    assert feasible_tuple_count(6, bids[0].valuation.capacity) > MAX_TUPLES
    with pytest.raises(ContractViolation):
        brute_force_welfare(bids)


def test_brute_force_empty():
    with pytest.raises(ContractViolation):
        brute_force_welfare([])


@pytest.mark.parametrize("seed", [1, 2])
def test_naive_chain_agrees_with_brute_force(seed):
    bids = dataset_bids('increasing', 3, [2, 1], seed=seed)
    expected = brute_force_vcg(bids)
    actual = naive_chain_vcg(bids)
    assert compare_results(expected, actual) == []
    assert actual.metrics.ds_kind == 'naive'


def test_compare_results_reports_differences():
    one = AuctionResult(OrderedDict([('a', (1,))]), OrderedDict([('a', 3.0)]), 5.0)
    two = AuctionResult(OrderedDict([('a', (1,))]), OrderedDict([('a', 2.0)]), 5.0 + 1e-12)
    differences = compare_results(one, two)
    assert len(differences) == 1
    assert 'payment' in differences[0]
    other = AuctionResult(OrderedDict([('b', (1,))]), OrderedDict([('b', 3.0)]), 6.0)
    differences = compare_results(one, other)
    assert len(differences) == 2
    assert 'social welfare' in differences[0]
    assert 'agents' in differences[1]


def test_invariant_violations():
    bids = [bid(1, [1], [0, 5]), bid(2, [1], [0, 3])]
    cap = ResourceCapacity([1])
    good = run_vcg_auction(bids)
    assert invariant_violations(good, bids, cap) == []

    overfull = AuctionResult(
        OrderedDict([(1, (1,)), (2, (1,))]),
        OrderedDict([(1, 6.0), (2, 0.5)]),
        8.0)
    problems = invariant_violations(overfull, bids, cap)
    assert any('capacity' in p for p in problems)
    assert any('agent `1` pays' in p for p in problems)
    assert not any('agent `2`' in p for p in problems)

    freeloader = AuctionResult(
        OrderedDict([(1, (1,)), (2, (0,))]),
        OrderedDict([(1, 3.0), (2, 1.0)]),
        4.0)
    problems = invariant_violations(freeloader, bids, cap)
    assert any('sum of values' in p for p in problems)
    assert any('without winning' in p for p in problems)


def test_tolerance_is_relative():
    big = 1e7
    bids = [bid(1, [1], [0, big]), bid(2, [1], [0, big / 2])]
    result = run_vcg_auction(bids)
    assert close(result.payments[1], big / 2)


if __name__ == "__main__":
    pytest.main(['-v', __file__])
