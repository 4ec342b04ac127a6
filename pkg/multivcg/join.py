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
Join two valuations into the valuation of the pair of agents.

The joint valuation at total ``c`` is the best sum ``V_i(a_i) +
V_j(a_j)`` with ``a_i + a_j = c``; the split achieving it is kept in
a `DivisionMap`.  `join`:func: only considers pairs where both sides
are Pareto survivors and no single-unit transfer between the two
agents can raise the sum, i.e. for every resource *r*::

    right_r V_i(a_i) <= left_r V_j(a_j)   and
    right_r V_j(a_j) <= left_r V_i(a_i)   and   a_i + a_j <= m

These pairs are found with one upper-bound query per surviving
allocation of one side against an index of the other side.  Cells
reached by no such pair keep value 0 and an empty division ("nobody
gets anything at this total").  The maximum of the joint valuation
is the same as with `naive_join`:func:, which compares every split.
"""

__docformat__ = 'reStructuredText'


# stdlib imports
from builtins import object
from contextlib import contextmanager
from functools import reduce
import operator
import time

# 3rd party imports
import numpy as np

# multivcg imports
from multivcg import log
from multivcg.exceptions import CapacityMismatch, ContractViolation
from multivcg.ubds import DEFAULT_KIND, VectorSet, construct, query_bounds
from multivcg.utils import Struct
from multivcg.valuation import (
    ResourceCapacity,
    ValuationTensor,
    allocation_at,
    linear_index,
    pareto_mask,
)


DEFAULT_DS_KIND = DEFAULT_KIND

PHASES = ('construct', 'query', 'fetch', 'compare')


## fault injection, used by `multivcg verify --inject-fault`

FAULTS = ('zero-left-boundary',)
"""
Deliberate defects that `injected_fault` can switch on:

``zero-left-boundary``
  take the left derivative at ``a[r] == 0`` as 0 instead of ``+inf``,
  so that no allocation with an empty resource survives the Pareto
  filter.
"""

_active_faults = frozenset()


@contextmanager
def injected_fault(*names):
    """
    Context manager to run joins with the named defects switched on.
    """
    global _active_faults
    for name in names:
        if name not in FAULTS:
            raise ContractViolation(
                "Unknown fault `{0}`; known faults are: {1}"
                .format(name, ', '.join(FAULTS)))
    previous = _active_faults
    _active_faults = frozenset(names)
    try:
        yield
    finally:
        _active_faults = previous


def _survivors(V):
    mask = pareto_mask(V)
    if 'zero-left-boundary' in _active_faults:
        mask = mask & np.all(np.indices(V.capacity.shape) > 0, axis=0)
    return np.flatnonzero(mask.reshape(-1))


class DivisionMap(object):
    """
    Per cell of a joint valuation, the split into the two joined sides.

    Splits are stored as linear indices in arrays `left` and `right`;
    ``-1`` marks an unfilled cell.
    """

    __slots__ = ('capacity', 'left', 'right')

    def __init__(self, cap, left, right):
        self.capacity = cap
        self.left = left
        self.right = right
        self.left.setflags(write=False)
        self.right.setflags(write=False)

    def __getitem__(self, a):
        """
        Return ``(a_left, a_right)`` for the cell of allocation `a`, or
        ``None`` if the cell is unfilled.
        """
        cell = linear_index(a, self.capacity)
        if self.left[cell] < 0:
            return None
        return (allocation_at(self.left[cell], self.capacity),
                allocation_at(self.right[cell], self.capacity))

    @property
    def filled(self):
        """Boolean array, true at filled cells (row-major)."""
        return self.left >= 0


class JoinMetrics(object):
    """
    Counters and phase timings of one join (or the sum of several).

    Phase times are in nanoseconds of the monotonic clock.
    """

    COUNTERS = ('queries_issued', 'candidates_fetched',
                'exact_matches', 'comparisons_made')

    def __init__(self, ds_kind=None, cap=None):
        self.ds_kind = ds_kind
        self.R = cap.R if cap is not None else 0
        self.N = cap.size if cap is not None else 0
        self.joins = 1
        self.queries_issued = 0
        self.candidates_fetched = 0
        self.exact_matches = 0
        self.comparisons_made = 0
        self.survivors_left = 0
        self.survivors_right = 0
        self.swapped = False
        self.phase_ns = dict((phase, 0) for phase in PHASES)

    @property
    def false_positive_ratio(self):
        if not self.candidates_fetched:
            return 0.0
        return ((self.candidates_fetched - self.exact_matches)
                / float(self.candidates_fetched))

    @property
    def matches_per_query(self):
        if not self.queries_issued:
            return 0.0
        return self.exact_matches / float(self.queries_issued)

    @property
    def total_ns(self):
        return sum(self.phase_ns.values())

    def __iadd__(self, other):
        self.joins += other.joins
        for name in self.COUNTERS:
            setattr(self, name, getattr(self, name) + getattr(other, name))
        for phase in PHASES:
            self.phase_ns[phase] += other.phase_ns[phase]
        return self

    @classmethod
    def total(cls, records, ds_kind=None, cap=None):
        """Return the sum of the given metrics records."""
        result = cls(ds_kind, cap)
        result.joins = 0
        for record in records:
            result += record
        return result

    def as_row(self):
        """Return the record as a flat `Struct`, for CSV output."""
        row = Struct()
        row.ds_kind = self.ds_kind
        row.R = self.R
        row.N = self.N
        for name in self.COUNTERS:
            row[name] = getattr(self, name)
        row.false_positive_ratio = self.false_positive_ratio
        row.matches_per_query = self.matches_per_query
        for phase in PHASES:
            row[phase + '_ns'] = self.phase_ns[phase]
        return row

    def __repr__(self):
        return ('<JoinMetrics {0} R={1} N={2} queries={3} candidates={4}'
                ' matches={5}>'.format(self.ds_kind, self.R, self.N,
                                       self.queries_issued,
                                       self.candidates_fetched,
                                       self.exact_matches))


class JointValuation(object):
    """
    Valuation of a group of agents, with the division map recording
    how each cell splits between the two joined sides.
    """

    __slots__ = ('tensor', 'division', 'metrics')

    def __init__(self, tensor, division, metrics=None):
        self.tensor = tensor
        self.division = division
        self.metrics = metrics

    @property
    def capacity(self):
        return self.tensor.capacity

    def __call__(self, a):
        return self.tensor(a)

    def max(self):
        return self.tensor.max()

    def __repr__(self):
        return ('<JointValuation capacity={0} max={1:g} filled={2}>'
                .format(list(self.capacity.units), self.max(),
                        int(self.division.filled.sum())))


def _as_tensor(V):
    if isinstance(V, JointValuation):
        return V.tensor
    if isinstance(V, ValuationTensor):
        return V
    raise ContractViolation(
        "Expected a valuation, got {0!r}".format(V))


def _common_capacity(left, right, cap):
    if cap is None:
        cap = left.capacity
    elif not isinstance(cap, ResourceCapacity):
        cap = ResourceCapacity(cap)
    if left.capacity != cap or right.capacity != cap:
        raise CapacityMismatch(
            "Cannot join valuations of capacities {0} and {1} under {2}"
            .format(list(left.capacity.units), list(right.capacity.units),
                    list(cap.units)))
    return cap


def join(V_i, V_j, cap=None, ds_kind=DEFAULT_DS_KIND):
    """
    Join two valuations with derivative filtering.

    The index is built over the side with more Pareto survivors and
    queried once for every survivor of the other side, in row-major
    order.  A cell takes a new split only when its value is strictly
    larger than the one stored, so the first split found wins ties.

    :param V_i: left `ValuationTensor` (or `JointValuation`)
    :param V_j: right `ValuationTensor` (or `JointValuation`)
    :param cap: common capacity (default: that of `V_i`)
    :param str ds_kind: upper-bound index kind, see `multivcg.ubds.KINDS`
    :return: `JointValuation` whose divisions are ``(a_i, a_j)`` pairs,
             with a `JoinMetrics` record in attribute `metrics`
    """
    left = _as_tensor(V_i)
    right = _as_tensor(V_j)
    cap = _common_capacity(left, right, cap)
    metrics = JoinMetrics(ds_kind, cap)
    phase_ns = metrics.phase_ns
    clock = time.perf_counter_ns

    left_alive = _survivors(left)
    right_alive = _survivors(right)
    metrics.survivors_left = len(left_alive)
    metrics.survivors_right = len(right_alive)
    swapped = len(left_alive) > len(right_alive)
    metrics.swapped = swapped
    if swapped:
        queried, queried_alive, indexed, indexed_alive = right, right_alive, left, left_alive
    else:
        queried, queried_alive, indexed, indexed_alive = left, left_alive, right, right_alive

    start = clock()
    vectors = VectorSet.from_valuation(indexed, indexed_alive)
    index = construct(vectors, ds_kind)
    phase_ns['construct'] += clock() - start

    N = cap.size
    best = np.zeros(N)
    filled = np.zeros(N, dtype=bool)
    div_queried = np.full(N, -1, dtype=np.int64)
    div_indexed = np.full(N, -1, dtype=np.int64)
    queried_values = queried.flat
    indexed_values = indexed.flat
    coords = vectors.coords
    payload = vectors.payload

    bounds = query_bounds(queried, queried_alive)
    for cell, q in zip(queried_alive, bounds):
        t0 = clock()
        handle = index.query(q)
        t1 = clock()
        rows = index.fetch(handle)
        t2 = clock()
        metrics.queries_issued += 1
        metrics.candidates_fetched += len(rows)
        if len(rows):
            # false positives go before any comparison
            hits = rows[np.all(coords[rows] <= q, axis=1)]
            metrics.exact_matches += len(hits)
            if len(hits):
                partners = payload[hits]
                targets = partners + cell
                if swapped:
                    values = indexed_values[partners] + queried_values[cell]
                else:
                    values = queried_values[cell] + indexed_values[partners]
                improve = ~filled[targets] | (best[targets] < values)
                cells = targets[improve]
                best[cells] = values[improve]
                filled[cells] = True
                div_queried[cells] = cell
                div_indexed[cells] = partners[improve]
                metrics.comparisons_made += len(hits)
        t3 = clock()
        phase_ns['query'] += t1 - t0
        phase_ns['fetch'] += t2 - t1
        phase_ns['compare'] += t3 - t2

    if swapped:
        division = DivisionMap(cap, div_indexed, div_queried)
    else:
        division = DivisionMap(cap, div_queried, div_indexed)
    log.debug(
        "Joined %s valuations (%s, N=%d): %d/%d survivors, %d queries,"
        " %d candidates, %d matches",
        ds_kind, str(cap), N, metrics.survivors_left, metrics.survivors_right,
        metrics.queries_issued, metrics.candidates_fetched, metrics.exact_matches)
    return JointValuation(ValuationTensor(cap, best), division, metrics)


def naive_comparison_count(cap):
    """
    Return the number of splits `naive_join` compares under capacity `cap`.

    Summing the ``prod(c_r + 1)`` splits of every total ``c <= m``
    gives ``prod((m_r + 1) * (m_r + 2) / 2)``.

      >>> naive_comparison_count(ResourceCapacity([2]))
      6
    """
    if not isinstance(cap, ResourceCapacity):
        cap = ResourceCapacity(cap)
    return reduce(operator.mul, ((m + 1) * (m + 2) // 2 for m in cap.units), 1)


def naive_join(V_i, V_j, cap=None):
    """
    Join two valuations by comparing every split of every total.

    Splits are enumerated row-major over the allocation of `V_i`; the
    first split reaching the maximum is kept.  The number of splits
    compared is recorded in ``metrics.comparisons_made`` and always
    equals `naive_comparison_count(cap)`:func:.
    """
    left = _as_tensor(V_i)
    right = _as_tensor(V_j)
    cap = _common_capacity(left, right, cap)
    metrics = JoinMetrics('naive', cap)
    shape = cap.shape
    units = cap.units
    N = cap.size

    start = time.perf_counter_ns()
    best = np.full(shape, -np.inf)
    div_left = np.full(shape, -1, dtype=np.int64)
    div_right = np.full(shape, -1, dtype=np.int64)
    cells = np.arange(N, dtype=np.int64).reshape(shape)
    left_values = left.values
    right_values = right.values
    comparisons = 0
    for cell in range(N):
        a = np.unravel_index(cell, shape)
        src = tuple(slice(0, m - x + 1) for m, x in zip(units, a))
        dst = tuple(slice(x, m + 1) for m, x in zip(units, a))
        candidates = left_values[a] + right_values[src]
        view = best[dst]
        better = candidates > view
        view[better] = candidates[better]
        div_left[dst][better] = cell
        div_right[dst][better] = cells[src][better]
        comparisons += candidates.size
    metrics.comparisons_made = comparisons
    metrics.phase_ns['compare'] = time.perf_counter_ns() - start

    division = DivisionMap(cap, div_left.reshape(-1), div_right.reshape(-1))
    log.debug("Naive join (N=%d): %d comparisons", N, comparisons)
    return JointValuation(ValuationTensor(cap, best), division, metrics)


def join_metrics(joint):
    """
    Return the `JoinMetrics` record of a joint valuation.
    """
    metrics = getattr(joint, 'metrics', None)
    if metrics is None:
        raise ContractViolation("No metrics were recorded for this valuation.")
    return metrics
