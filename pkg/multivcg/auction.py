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
VCG auction over a chain of joins.

The bids are joined left to right into one effective agent whose
maximum is the optimal social welfare; the optimal allocation is read
back from the division maps.  Payments follow the exclusion
compensation principle: each winner pays the welfare the others would
reach without it, minus what the others reach with it.  The welfare
without winner *j* is the maximum of the join of the prefix chain
(agents before *j*) with the suffix chain (agents after *j*).
"""

__docformat__ = 'reStructuredText'


# stdlib imports
from builtins import object
from collections import OrderedDict
from functools import partial
import time

# multivcg imports
from multivcg import log
from multivcg.exceptions import ContractViolation
from multivcg.join import DEFAULT_DS_KIND, JoinMetrics, JointValuation, join
from multivcg.utils import Struct, pool_map
from multivcg.valuation import (
    ResourceCapacity,
    ValuationTensor,
    close,
)


class Bid(object):
    """
    Valuation submitted by one agent.

    Bids built by `multivcg.datasets` also carry the 1-d component
    functions and the maximal value the valuation was generated from;
    `multivcg.baselines.separate_auctions` needs them.
    """

    __slots__ = ('agent_id', 'valuation', 'components', 'max_value')

    def __init__(self, agent_id, valuation, components=None, max_value=None):
        self.agent_id = agent_id
        self.valuation = valuation
        self.components = components
        self.max_value = max_value

    def __repr__(self):
        return ('Bid({0!r}, <capacity {1}>)'
                .format(self.agent_id, list(self.valuation.capacity.units)))


class AuctionMetrics(object):
    """
    Work done by one auction: joins per chain, summed join counters and
    wall-clock time (ns) of the allocation and payment phases.
    """

    def __init__(self, n, cap, ds_kind):
        self.n = n
        self.R = cap.R
        self.N = cap.size
        self.ds_kind = ds_kind
        self.winners = 0
        self.forward_joins = 0
        self.suffix_joins = 0
        self.bridging_joins = 0
        self.allocation_ns = 0
        self.payment_ns = 0
        self.join = JoinMetrics(ds_kind, cap)
        self.join.joins = 0

    def record(self, chain, joint):
        setattr(self, chain + '_joins', getattr(self, chain + '_joins') + 1)
        if joint.metrics is not None:
            self.join += joint.metrics

    @property
    def total_ns(self):
        return self.allocation_ns + self.payment_ns

    def as_row(self):
        row = Struct()
        for name in ('n', 'R', 'N', 'ds_kind', 'winners', 'forward_joins',
                     'suffix_joins', 'bridging_joins', 'allocation_ns',
                     'payment_ns'):
            row[name] = getattr(self, name)
        return row


class AuctionResult(object):
    """
    Outcome of an auction.

    All maps are keyed by agent id and keep the order of the bids.
    `welfare_without` only holds winners.
    """

    def __init__(self, allocations, payments, social_welfare,
                 welfare_without=None, values=None, metrics=None):
        self.allocations = allocations
        self.payments = payments
        self.social_welfare = social_welfare
        self.welfare_without = welfare_without if welfare_without is not None else OrderedDict()
        self.values = values if values is not None else OrderedDict()
        self.metrics = metrics

    @property
    def winners(self):
        """Ids of the agents whose allocation has positive value."""
        return [agent_id for agent_id, value in self.values.items() if value > 0]

    @property
    def revenue(self):
        return sum(self.payments.values())

    def rows(self):
        """
        Yield one `Struct` per agent, with keys `agent_id`,
        `allocation`, `value` and `payment`.
        """
        for agent_id, allocation in self.allocations.items():
            yield Struct(agent_id=agent_id,
                         allocation=tuple(allocation),
                         value=self.values.get(agent_id, 0.0),
                         payment=self.payments.get(agent_id, 0.0))

    def __repr__(self):
        return ('<AuctionResult agents={0} winners={1} welfare={2:g}>'
                .format(len(self.allocations), len(self.winners),
                        self.social_welfare))


def _check_bids(bids, cap):
    if not bids:
        raise ContractViolation("An auction needs at least one bid.")
    if cap is None:
        cap = bids[0].valuation.capacity
    elif not isinstance(cap, ResourceCapacity):
        cap = ResourceCapacity(cap)
    seen = set()
    for bid in bids:
        if bid.agent_id in seen:
            raise ContractViolation(
                "Agent `{0}` submitted more than one bid.".format(bid.agent_id))
        seen.add(bid.agent_id)
        bid.valuation.check_capacity(cap, agent_id=bid.agent_id)
    return cap


def _tensor(V):
    if isinstance(V, JointValuation):
        return V.tensor
    return V


def _solve(bids, cap, joiner, metrics=None):
    chain = [bids[0].valuation]
    for bid in bids[1:]:
        joint = joiner(chain[-1], bid.valuation, cap)
        if metrics is not None:
            metrics.record('forward', joint)
        chain.append(joint)

    final = _tensor(chain[-1])
    social_welfare = final.max()
    allocations = [cap.zero()] * len(bids)
    total = final.argmax()
    for k in range(len(bids) - 1, 0, -1):
        split = chain[k].division[total]
        if split is None:
            # unfilled cell: nobody up to `k` gets anything
            total = None
            break
        total, allocations[k] = split
    if total is not None:
        allocations[0] = total
    return allocations, social_welfare, chain


def solve_allocation(bids, cap=None, ds_kind=DEFAULT_DS_KIND):
    """
    Find a welfare-maximizing allocation of `cap` among the bidders.

    :return: tuple ``(allocations, social_welfare, forward_chain)``;
             `allocations` is a list parallel to `bids`, and
             `forward_chain[k]` is the joint valuation of the first
             ``k+1`` bidders.
    """
    cap = _check_bids(bids, cap)
    return _solve(bids, cap, partial(join, ds_kind=ds_kind))


def _exclusion_welfare(bids, cap, joiner, forward_chain, winners,
                       max_workers=1, metrics=None):
    n = len(bids)
    if forward_chain is None or len(forward_chain) != n:
        raise ContractViolation(
            "Payments need the forward join chain of all {0} bids.".format(n))
    if not winners:
        return {}
    identity = ValuationTensor.zeros(cap)

    lowest = min(winners)
    suffix = {n - 1: bids[n - 1].valuation}
    for k in range(n - 2, lowest, -1):
        joint = joiner(bids[k].valuation, suffix[k + 1], cap)
        if metrics is not None:
            metrics.record('suffix', joint)
        suffix[k] = joint
    log.debug("Built %d suffix joints down to agent #%d", n - 1 - lowest, lowest + 1)

    def bridge(j):
        before = forward_chain[j - 1] if j > 0 else identity
        after = suffix[j + 1] if j + 1 < n else identity
        return joiner(before, after, cap)

    bridged = pool_map(bridge, winners, max_workers)
    result = {}
    for j, joint in zip(winners, bridged):
        if metrics is not None:
            metrics.record('bridging', joint)
        result[j] = joint.max()
    return result


def exclusion_welfare(bids, cap, ds_kind, forward_chain, winners, max_workers=1):
    """
    Return a dict mapping the position of each winner in `bids` to the
    social welfare of the auction without that winner.

    :param list winners: positions (not agent ids) in `bids`
    :param int max_workers: threads for the per-winner joins
    """
    cap = _check_bids(bids, cap)
    return _exclusion_welfare(bids, cap, partial(join, ds_kind=ds_kind),
                              forward_chain, winners, max_workers)


def vcg_payment(welfare_without, social_welfare, value):
    payment = welfare_without - (social_welfare - value)
    if payment < 0 and close(welfare_without, social_welfare - value):
        payment = 0.0
    return payment


def _values_of(bids, allocations):
    return [bid.valuation(a) for bid, a in zip(bids, allocations)]


def compute_payments(bids, cap, ds_kind, forward_chain, allocations,
                     social_welfare, max_workers=1):
    """
    Return an `OrderedDict` mapping agent ids to VCG payments.

    Agents whose allocation has zero value pay 0 and are not excluded.
    """
    cap = _check_bids(bids, cap)
    values = _values_of(bids, allocations)
    winners = [j for j, value in enumerate(values) if value > 0]
    without = _exclusion_welfare(bids, cap, partial(join, ds_kind=ds_kind),
                                 forward_chain, winners, max_workers)
    payments = OrderedDict((bid.agent_id, 0.0) for bid in bids)
    for j, welfare in without.items():
        payments[bids[j].agent_id] = vcg_payment(welfare, social_welfare, values[j])
    return payments


def run_chain_auction(bids, cap, joiner, label, max_workers=1, metrics=True):
    """
    Run a VCG auction where every join is done by `joiner`.

    `joiner` is called as ``joiner(V_left, V_right, cap)`` and must
    return a `JointValuation`; `label` names it in metrics and logs.
    """
    cap = _check_bids(bids, cap)
    stats = AuctionMetrics(len(bids), cap, label) if metrics else None
    clock = time.perf_counter_ns

    start = clock()
    allocations, social_welfare, chain = _solve(bids, cap, joiner, stats)
    values = _values_of(bids, allocations)
    winners = [j for j, value in enumerate(values) if value > 0]
    allocated = clock()
    log.info("Allocated %d bids over capacity %s: welfare %g, %d winners",
             len(bids), cap, social_welfare, len(winners))

    without = _exclusion_welfare(bids, cap, joiner, chain, winners,
                                 max_workers, stats)
    done = clock()

    result = AuctionResult(
        allocations=OrderedDict(
            (bid.agent_id, a) for bid, a in zip(bids, allocations)),
        payments=OrderedDict((bid.agent_id, 0.0) for bid in bids),
        social_welfare=social_welfare,
        values=OrderedDict(
            (bid.agent_id, value) for bid, value in zip(bids, values)),
        metrics=stats)
    for j in winners:
        agent_id = bids[j].agent_id
        result.welfare_without[agent_id] = without[j]
        result.payments[agent_id] = vcg_payment(without[j], social_welfare, values[j])
    if stats is not None:
        stats.winners = len(winners)
        stats.allocation_ns = allocated - start
        stats.payment_ns = done - allocated
    log.info("Computed %d payments, revenue %g", len(winners), result.revenue)
    return result


def run_vcg_auction(bids, cap=None, ds_kind=DEFAULT_DS_KIND,
                    max_workers=1, metrics=True):
    """
    Allocate `cap` among the bidders and compute VCG payments.

    :param list bids: `Bid` instances with pairwise distinct agent ids
    :param cap: common `ResourceCapacity` (default: that of the first bid)
    :param str ds_kind: upper-bound index used by every join
    :param int max_workers: threads for the per-winner joins
    :param bool metrics: attach an `AuctionMetrics` record to the result
    :return: `AuctionResult`
    """
    return run_chain_auction(bids, cap, partial(join, ds_kind=ds_kind),
                             ds_kind, max_workers, metrics)
