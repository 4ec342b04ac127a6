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

import numpy as np
import pytest

from multivcg.auction import Bid, run_vcg_auction
from multivcg.baselines import (
    SeparateOutcome,
    SingleResourceBid,
    concave_auction,
    greedy_allocation,
    separate_auctions,
)
from multivcg.datasets import DatasetSpec, build_dataset, project
from multivcg.exceptions import CapacityMismatch, ContractViolation, NotConcave
from multivcg.oracles import compare_results

from _helpers.builders import dataset_bids, tensor


@pytest.mark.parametrize("values", [
    [1, 4, 7],     # nonzero at 0 units
    [0, 4, 4],     # flat
    [0, 3, 7],     # convex
    [0],           # no units
])
def test_single_resource_bid_rejects(values):
    with pytest.raises(NotConcave):
        SingleResourceBid('x', values)


def test_single_resource_bid_accepts_linear():
    b = SingleResourceBid('x', [0, 2, 4, 6])
    assert b.units == 3


def test_greedy_tie_goes_to_first_bid():
    bids = [SingleResourceBid(1, [0, 4, 7]), SingleResourceBid(2, [0, 3, 5])]
    welfare, units = greedy_allocation(bids, 2)
    assert welfare == 7.0
    assert units == [2, 0]


def test_greedy_exclude():
    bids = [SingleResourceBid(1, [0, 4, 7]), SingleResourceBid(2, [0, 3, 5])]
    welfare, units = greedy_allocation(bids, 2, exclude=0)
    assert welfare == 5.0
    assert units == [0, 2]


def test_concave_auction_vickrey():
    result = concave_auction([SingleResourceBid(1, [0, 5]), SingleResourceBid(2, [0, 3])], 1)
    assert result.allocations[1] == (1,)
    assert result.payments[1] == 3.0
    assert result.payments[2] == 0.0


def test_concave_auction_checks_units():
    with pytest.raises(CapacityMismatch):
        concave_auction([SingleResourceBid(1, [0, 5]), SingleResourceBid(2, [0, 3, 4])], 1)
    with pytest.raises(ContractViolation):
        concave_auction([], 1)


@pytest.mark.parametrize("seed", [1, 2, 3, 4])
def test_concave_auction_agrees_with_vcg(seed):
    bids = dataset_bids('concave', 6, [7], seed=seed)
    single = [SingleResourceBid(b.agent_id, b.valuation.flat) for b in bids]
    expected = concave_auction(single, 7)
    actual = run_vcg_auction(bids)
    assert compare_results(expected, actual) == []
    assert list(expected.allocations.items()) == list(actual.allocations.items())


def test_separate_single_resource_is_optimal():
    bids = dataset_bids('concave', 8, [5], seed=3)
    outcome = separate_auctions(bids)
    assert isinstance(outcome, SeparateOutcome)
    assert outcome.ratio == pytest.approx(1.0)
    assert outcome.improvement == pytest.approx(1.0)


def test_separate_never_beats_joint():
    clients = build_dataset(DatasetSpec('concave', 12, [4, 4, 4], seed=5))
    for R in (1, 2, 3):
        bids = [client.as_bid() for client in project(clients, R)]
        outcome = separate_auctions(bids)
        assert outcome.achieved <= outcome.optimal * (1 + 1e-9)
        assert len(outcome.per_resource) == R
        for result in outcome.per_resource:
            assert sum(a for a, in result.allocations.values()) <= 4
        for agent_id, bundle in outcome.allocations.items():
            assert len(bundle) == R


def test_separate_runs_a_vcg_auction_per_resource():
    clients = build_dataset(DatasetSpec('concave', 6, [5, 5], seed=8))
    bids = [client.as_bid() for client in clients]
    outcome = separate_auctions(bids)
    for r, result in enumerate(outcome.per_resource):
        single = [SingleResourceBid(b.agent_id, b.max_value / 2 * np.asarray(b.components[r]))
                  for b in bids]
        expected = concave_auction(single, 5)
        assert compare_results(expected, result) == []
        assert result.payments == expected.payments
        for agent_id, bundle in outcome.allocations.items():
            assert result.allocations[agent_id] == (bundle[r],)


def test_separate_uses_given_optimum():
    bids = dataset_bids('concave', 4, [3, 3], seed=2)
    outcome = separate_auctions(bids, optimal=1e12)
    assert outcome.optimal == 1e12
    assert outcome.ratio < 1e-3


def test_separate_needs_components():
    bids = [Bid('a', tensor([1], [0, 5]))]
    with pytest.raises(ContractViolation):
        separate_auctions(bids)


def test_separate_rejects_nonconcave_components():
    bids = dataset_bids('increasing', 8, [6], seed=1)
    # random-order increments are concave only by chance
    if all(np.all(np.diff(b.components[0], 2) <= 1e-9) for b in bids):
        pytest.skip("drew concave components only")
    with pytest.raises(NotConcave):
        separate_auctions(bids)


def test_improvement_without_welfare():
    assert SeparateOutcome({}, 0.0, 0.0, []).improvement == 1.0
    assert SeparateOutcome({}, 0.0, 2.0, []).improvement == float('inf')


if __name__ == "__main__":
    pytest.main(['-v', __file__])
