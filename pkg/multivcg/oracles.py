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
Reference auction solvers to check `run_vcg_auction` against.

`brute_force_welfare` enumerates every feasible tuple of allocations
and only works for tiny instances; `naive_chain_vcg` runs the regular
join chain with `naive_join` in every step, which is exact at every
cell and scales to the sizes of the benchmark datasets.
"""

__docformat__ = 'reStructuredText'


# stdlib imports
from collections import OrderedDict
from itertools import product
from math import factorial

# multivcg imports
from multivcg import log
from multivcg.auction import AuctionResult, run_chain_auction, vcg_payment
from multivcg.exceptions import ContractViolation
from multivcg.join import naive_join
from multivcg.valuation import TOLERANCE, ResourceCapacity, close


MAX_TUPLES = 2 * 10 ** 6
"""
Largest number of feasible allocation tuples `brute_force_welfare`
agrees to enumerate.
"""


def _binomial(n, k):
    return factorial(n) // (factorial(k) * factorial(n - k))


def feasible_tuple_count(n, cap):
    """
    Return the number of ways to hand out at most `cap` among `n` agents.

    Per resource, that is the number of ``n``-tuples of nonnegative
    integers summing to at most ``m``, i.e. ``C(m + n, n)``.
    """
    count = 1
    for m in cap.units:
        count *= _binomial(m + n, n)
    return count


def brute_force_welfare(bids, cap=None, exclude=None):
    """
    Return ``(social_welfare, allocations)`` by exhaustive search.

    Allocations are tried depth-first in row-major order, giving each
    agent at most what the previous agents left over; the first tuple
    reaching the maximum is kept.  The agent at position `exclude` (if
    any) takes no part and gets the empty allocation.

    :raise ContractViolation: if there are more than `MAX_TUPLES`
                              tuples to try
    """
    if not bids:
        raise ContractViolation("An auction needs at least one bid.")
    if cap is None:
        cap = bids[0].valuation.capacity
    elif not isinstance(cap, ResourceCapacity):
        cap = ResourceCapacity(cap)
    active = [k for k in range(len(bids)) if k != exclude]
    count = feasible_tuple_count(len(active), cap)
    if count > MAX_TUPLES:
        raise ContractViolation(
            "Exhaustive search over {0} allocation tuples is not feasible"
            " (limit: {1})".format(count, MAX_TUPLES))
    tables = [bids[k].valuation.values for k in active]

    def search(pos, remaining):
        if pos == len(tables):
            return 0.0, ()
        best_value, best_choice = None, None
        for a in product(*[range(x + 1) for x in remaining]):
            rest_value, rest = search(
                pos + 1, tuple(x - y for x, y in zip(remaining, a)))
            value = tables[pos][a] + rest_value
            if best_value is None or value > best_value:
                best_value, best_choice = value, (a,) + rest
        return best_value, best_choice

    social_welfare, choice = search(0, cap.units)
    allocations = [cap.zero()] * len(bids)
    for k, a in zip(active, choice):
        allocations[k] = tuple(int(x) for x in a)
    log.debug("Brute force over %d tuples: welfare %g", count, social_welfare)
    return float(social_welfare), allocations


def brute_force_vcg(bids, cap=None):
    """
    Return the VCG `AuctionResult` computed by exhaustive search, rerun
    once per winner for the payments.
    """
    if cap is None and bids:
        cap = bids[0].valuation.capacity
    social_welfare, allocations = brute_force_welfare(bids, cap)
    result = AuctionResult(
        allocations=OrderedDict(
            (bid.agent_id, a) for bid, a in zip(bids, allocations)),
        payments=OrderedDict((bid.agent_id, 0.0) for bid in bids),
        social_welfare=social_welfare,
        values=OrderedDict(
            (bid.agent_id, bid.valuation(a)) for bid, a in zip(bids, allocations)))
    for j, bid in enumerate(bids):
        value = result.values[bid.agent_id]
        if value > 0:
            without, _ = brute_force_welfare(bids, cap, exclude=j)
            result.welfare_without[bid.agent_id] = without
            result.payments[bid.agent_id] = vcg_payment(without, social_welfare, value)
    return result


def naive_chain_vcg(bids, cap=None, max_workers=1):
    """
    Return the VCG `AuctionResult` computed with `naive_join` in every
    step of the join chains.
    """
    return run_chain_auction(bids, cap, naive_join, 'naive',
                             max_workers=max_workers)


def compare_results(expected, actual, tol=TOLERANCE):
    """
    Return a list of human-readable differences between two auction
    results; an empty list means they agree.

    Social welfare and payments are compared with `close`:func:.
    Allocations are not compared since value ties may be resolved
    differently.
    """
    differences = []
    if not close(expected.social_welfare, actual.social_welfare, tol):
        differences.append(
            "social welfare: expected {0!r}, got {1!r}"
            .format(expected.social_welfare, actual.social_welfare))
    if list(expected.payments) != list(actual.payments):
        differences.append(
            "agents: expected {0}, got {1}"
            .format(list(expected.payments), list(actual.payments)))
        return differences
    for agent_id, payment in expected.payments.items():
        other = actual.payments[agent_id]
        if not close(payment, other, tol):
            differences.append(
                "payment of agent `{0}`: expected {1!r}, got {2!r}"
                .format(agent_id, payment, other))
    return differences


def invariant_violations(result, bids, cap, tol=TOLERANCE):
    """
    Return a list of the auction outcome properties that `result` breaks.

    Checked: the allocations fit in `cap`, the social welfare is the
    sum of the allocated values, winners pay between 0 and their value,
    and agents with zero value pay nothing.
    """
    violations = []
    totals = [0] * cap.R
    for a in result.allocations.values():
        totals = [t + x for t, x in zip(totals, a)]
    if any(t > m for t, m in zip(totals, cap.units)):
        violations.append(
            "allocations use {0} units, capacity is {1}"
            .format(totals, list(cap.units)))
    welfare = sum(bid.valuation(result.allocations[bid.agent_id]) for bid in bids)
    if not close(welfare, result.social_welfare, tol):
        violations.append(
            "social welfare {0!r} differs from the sum of values {1!r}"
            .format(result.social_welfare, welfare))
    for bid in bids:
        value = bid.valuation(result.allocations[bid.agent_id])
        payment = result.payments[bid.agent_id]
        if value > 0:
            too_low = payment < 0 and not close(payment, 0.0, tol)
            too_high = payment > value and not close(payment, value, tol)
            if too_low or too_high:
                violations.append(
                    "agent `{0}` pays {1!r} for a value of {2!r}"
                    .format(bid.agent_id, payment, value))
        elif payment != 0:
            violations.append(
                "agent `{0}` pays {1!r} without winning anything"
                .format(bid.agent_id, payment))
    return violations
