#! /usr/bin/env python
#
#   Copyright (C) 2024 The multivcg developers.
#
#   This program is free software: you can redistribute it and/or modify
#   it under the terms of the GNU General Public License as published by
#   the Free Software Foundation, either version 3 of the License, or
#   (at your option) any later version.
#
#   This program is distributed in the hope that it will be useful,
#   but WITHOUT ANY WARRANTY; without even the implied warranty of
#   MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
#   GNU General Public License for more details.
#
#   You should have received a copy of the GNU General Public License
#   along with this program.  If not, see <http://www.gnu.org/licenses/>.
#
"""
Simpler auctions to compare the multi-resource auction with.

`concave_auction` allocates a single resource among concave, strictly
increasing valuations by handing out one unit at a time to the highest
marginal bid, which is optimal for such valuations.
`separate_auctions` runs one such auction per resource, splitting each
client's maximal value equally among the resources.
"""

__docformat__ = 'reStructuredText'


# stdlib imports
from builtins import object
from collections import OrderedDict
import heapq

# 3rd party imports
import numpy as np

# multivcg imports
from multivcg import log
from multivcg.auction import AuctionResult, solve_allocation, vcg_payment
from multivcg.exceptions import CapacityMismatch, ContractViolation, NotConcave
from multivcg.join import DEFAULT_DS_KIND
from multivcg.valuation import TOLERANCE, ResourceCapacity


class SingleResourceBid(object):
    """
    Valuation of one agent over a single resource, given as the values
    of 0, 1, ..., m units.

    :raise NotConcave: unless the values start at 0 and their first
                       differences are positive and nonincreasing
                       (within `tol`)
    """

    __slots__ = ('agent_id', 'values')

    def __init__(self, agent_id, values, tol=TOLERANCE):
        values = np.array(values, dtype=np.float64)
        if values.ndim != 1 or len(values) < 2:
            raise NotConcave(
                "Bid of agent `{0}` needs the values of 0 and at least 1 unit"
                .format(agent_id))
        if values[0] != 0:
            raise NotConcave(
                "Bid of agent `{0}` values the empty allocation at {1!r}"
                .format(agent_id, values[0]))
        marginals = np.diff(values)
        if np.any(marginals <= 0):
            raise NotConcave(
                "Bid of agent `{0}` is not strictly increasing".format(agent_id))
        if np.any(np.diff(marginals) > tol):
            raise NotConcave(
                "Bid of agent `{0}` is not concave".format(agent_id))
        values.setflags(write=False)
        self.agent_id = agent_id
        self.values = values

    @property
    def units(self):
        return len(self.values) - 1

    def __repr__(self):
        return 'SingleResourceBid({0!r}, {1!r})'.format(
            self.agent_id, list(self.values))


def greedy_allocation(bids, m, exclude=None):
    """
    Return ``(social_welfare, units)``, with `units` a list parallel to
    `bids`, handing out the `m` units one by one to the bid with the
    largest next marginal value.

    Ties go to the bid that comes first.  The bid at position
    `exclude` gets no units.
    """
    units = [0] * len(bids)
    heap = [(-bid.values[1], k) for k, bid in enumerate(bids) if k != exclude]
    heapq.heapify(heap)
    for _ in range(m):
        if not heap:
            break
        _, k = heapq.heappop(heap)
        units[k] += 1
        if units[k] < bids[k].units:
            marginal = bids[k].values[units[k] + 1] - bids[k].values[units[k]]
            heapq.heappush(heap, (-marginal, k))
    welfare = sum(float(bid.values[u]) for bid, u in zip(bids, units))
    return welfare, units


def concave_auction(bids, m):
    """
    Run a single-resource VCG auction among concave bids.

    Payments rerun the greedy allocation without each winner.

    :return: `AuctionResult` with 1-tuples as allocations
    """
    if not bids:
        raise ContractViolation("An auction needs at least one bid.")
    m = int(m)
    if m < 1:
        raise ContractViolation("Need at least one unit, got {0}".format(m))
    for bid in bids:
        if bid.units != m:
            raise CapacityMismatch(
                "Bid of agent `{0}` covers {1} units, auction has {2}"
                .format(bid.agent_id, bid.units, m), agent_id=bid.agent_id)
    social_welfare, units = greedy_allocation(bids, m)
    result = AuctionResult(
        allocations=OrderedDict((bid.agent_id, (u,)) for bid, u in zip(bids, units)),
        payments=OrderedDict((bid.agent_id, 0.0) for bid in bids),
        social_welfare=social_welfare,
        values=OrderedDict(
            (bid.agent_id, float(bid.values[u])) for bid, u in zip(bids, units)))
    for j, bid in enumerate(bids):
        value = result.values[bid.agent_id]
        if value > 0:
            without, _ = greedy_allocation(bids, m, exclude=j)
            result.welfare_without[bid.agent_id] = without
            result.payments[bid.agent_id] = vcg_payment(without, social_welfare, value)
    log.debug("Concave auction of %d units among %d bids: welfare %g",
              m, len(bids), social_welfare)
    return result


class SeparateOutcome(object):
    """
    Result of `separate_auctions`.

    `allocations` maps agent ids to the bundle combining the units won
    in every per-resource auction; `achieved` is the true multi-resource
    value of those bundles, summed over agents.
    """

    def __init__(self, allocations, achieved, optimal, per_resource):
        self.allocations = allocations
        self.achieved = achieved
        self.optimal = optimal
        self.per_resource = per_resource

    @property
    def ratio(self):
        if self.optimal <= 0:
            return 1.0
        return self.achieved / self.optimal

    @property
    def improvement(self):
        """How many times the optimum exceeds the achieved welfare."""
        if self.achieved <= 0:
            return float('inf') if self.optimal > 0 else 1.0
        return self.optimal / self.achieved


def separate_auctions(bids, cap=None, optimal=None, ds_kind=DEFAULT_DS_KIND):
    """
    Auction every resource on its own and evaluate the combined bundles.

    In the auction for resource *r*, a client bids ``max_value / R``
    times its *r*-th component function.

    :param list bids: `multivcg.auction.Bid` instances carrying
                      `components` and `max_value`
    :param optimal: optimal social welfare; computed with
                    `solve_allocation` if not given
    :return: `SeparateOutcome`, whose `per_resource` holds the
             `AuctionResult` of every single-resource auction
    :raise ContractViolation: if a bid lacks its component functions
    :raise NotConcave: if a component function is not concave
    """
    if not bids:
        raise ContractViolation("An auction needs at least one bid.")
    if cap is None:
        cap = bids[0].valuation.capacity
    elif not isinstance(cap, ResourceCapacity):
        cap = ResourceCapacity(cap)
    for bid in bids:
        if bid.components is None or bid.max_value is None or len(bid.components) != cap.R:
            raise ContractViolation(
                "Bid of agent `{0}` does not carry {1} component functions"
                " and a maximal value".format(bid.agent_id, cap.R))

    per_resource = []
    for r, m in enumerate(cap.units):
        single = [SingleResourceBid(bid.agent_id,
                                    bid.max_value / cap.R * np.asarray(bid.components[r]))
                  for bid in bids]
        per_resource.append(concave_auction(single, m))

    allocations = OrderedDict()
    achieved = 0.0
    for bid in bids:
        bundle = tuple(result.allocations[bid.agent_id][0] for result in per_resource)
        allocations[bid.agent_id] = bundle
        achieved += bid.valuation(bundle)

    if optimal is None:
        _, optimal, _ = solve_allocation(bids, cap, ds_kind)
    outcome = SeparateOutcome(allocations, achieved, optimal, per_resource)
    log.info("Separate auctions over %d resources: %g of optimal %g (ratio %.3f)",
             cap.R, achieved, optimal, outcome.ratio)
    return outcome
