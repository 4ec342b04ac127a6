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
Synthetic bids.

Every client gets one 1-d *component function* per resource, with
values in [0, 1] and starting at 0; its valuation is its maximal value
times the tensor product of the components.  Maximal values follow a
Pareto tail above the client's bundle cost.  Each component saturates
past a randomly drawn demand, so that clients want different shares
of every resource.

Random numbers come from `numpy.random.PCG64` generators seeded
through `numpy.random.SeedSequence`: the dataset seed spawns one child
sequence per client, and each child spawns three streams, used for
the bundle cost, the maximal value and the component functions (drawn
in resource order).  Hence the first *r* components of a client do not
depend on how many resources the dataset has.
"""

__docformat__ = 'reStructuredText'


# stdlib imports
from builtins import object
from collections import OrderedDict
import csv
from functools import reduce
import os

# 3rd party imports
import numpy as np

# multivcg imports
from multivcg import log
from multivcg.auction import Bid
from multivcg.exceptions import ContractViolation, DatasetError
from multivcg.valuation import TOLERANCE, ResourceCapacity, ValuationTensor


KINDS = ('concave', 'increasing', 'mostly-increasing')

DEFAULT_PARETO_INDEX = 1.1

SYNTHETIC = 'synthetic'

MOSTLY_INCREASING_LOW = -0.25
"""
Lower end of the increments of mostly-increasing components; the
upper end is 1.
"""

SATURATION_RATE = 4.0
"""
Past its demand, a component's increments shrink by a factor
`exp(-SATURATION_RATE)` every `demand` units.
"""

SATURATED_SHARE = 0.05
"""
Floor of the damping factor, times `demand / m`.
"""


class DatasetSpec(object):
    """
    Parameters of a generated dataset.

    `cost_source` is either ``'synthetic'`` (log-normal bundle costs)
    or the path of a CSV file with columns ``agent_id,cost``.
    """

    __slots__ = ('kind', 'n_clients', 'units', 'seed', 'pareto_index',
                 'cost_source')

    def __init__(self, kind, n_clients, units, seed=0,
                 pareto_index=DEFAULT_PARETO_INDEX, cost_source=SYNTHETIC):
        if kind not in KINDS:
            raise ContractViolation(
                "Unknown dataset kind `{0}`; known kinds are: {1}"
                .format(kind, ', '.join(KINDS)))
        if int(n_clients) < 1:
            raise ContractViolation("A dataset needs at least one client.")
        if not float(pareto_index) > 1:
            raise ContractViolation(
                "Pareto index must be > 1, got {0}".format(pareto_index))
        if not (0 <= int(seed) < 2 ** 64):
            raise ContractViolation("Seed must be in [0, 2**64), got {0}".format(seed))
        self.kind = kind
        self.n_clients = int(n_clients)
        self.units = ResourceCapacity(units).units
        self.seed = int(seed)
        self.pareto_index = float(pareto_index)
        self.cost_source = cost_source or SYNTHETIC

    @property
    def R(self):
        return len(self.units)

    @property
    def capacity(self):
        return ResourceCapacity(self.units)

    @property
    def dataset_id(self):
        return '{0}-R{1}-m{2}-n{3}-s{4}'.format(
            self.kind, self.R, 'x'.join(str(m) for m in self.units),
            self.n_clients, self.seed)

    def as_dict(self):
        return OrderedDict([
            ('kind', self.kind),
            ('n_clients', self.n_clients),
            ('resources', self.R),
            ('units', ','.join(str(m) for m in self.units)),
            ('seed', self.seed),
            ('pareto_index', self.pareto_index),
            ('cost_source', self.cost_source),
        ])

    def __eq__(self, other):
        if not isinstance(other, DatasetSpec):
            return NotImplemented
        return self.as_dict() == other.as_dict()

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    __hash__ = None

    def __repr__(self):
        return 'DatasetSpec({0})'.format(
            ', '.join('{0}={1!r}'.format(k, v) for k, v in self.as_dict().items()))


class GeneratedClient(object):
    """
    One synthetic bidder.
    """

    __slots__ = ('agent_id', 'components', 'max_value', 'bundle_cost',
                 'valuation')

    def __init__(self, agent_id, components, max_value, bundle_cost,
                 valuation=None):
        self.agent_id = agent_id
        self.components = [np.asarray(v, dtype=np.float64) for v in components]
        self.max_value = float(max_value)
        self.bundle_cost = float(bundle_cost)
        if valuation is None:
            valuation = valuation_from_components(self.components, self.max_value)
        self.valuation = valuation

    def as_bid(self):
        return Bid(self.agent_id, self.valuation,
                   components=self.components, max_value=self.max_value)

    def __repr__(self):
        return ('<GeneratedClient {0} max_value={1:g} cost={2:g}>'
                .format(self.agent_id, self.max_value, self.bundle_cost))


def demand_envelope(length, demand):
    """
    Return the factors applied to the ``length - 1`` increments of a
    component whose client wants about `demand` units.

    Increments up to `demand` keep their draw; later ones decay
    geometrically down to a floor, so the component saturates past
    the demand while staying strictly increasing.
    """
    m = length - 1
    k = np.arange(1, length, dtype=np.float64)
    floor = SATURATED_SHARE * demand / m
    decay = np.exp(-SATURATION_RATE * (k - demand) / demand)
    return np.where(k <= demand, 1.0, np.maximum(decay, floor))


def gen_component(kind, length, rng):
    """
    Draw a component function with `length` values.

    The client wants ``demand = m ** u`` units, with ``m = length - 1``
    and `u` uniform on [0, 1); increments past the demand are damped
    by `demand_envelope`.  The undamped increments are:

    * ``concave``: positive, sorted in decreasing order;
    * ``increasing``: positive, in random order;
    * ``mostly-increasing``: uniform on [-0.25, 1], with the running
      sum floored at 0.

    The values are normalized so that their maximum is 1.
    """
    if length < 2:
        raise ContractViolation(
            "A component function needs at least 2 values, got {0}".format(length))
    if kind not in KINDS:
        raise ContractViolation("Unknown dataset kind `{0}`".format(kind))
    while True:
        demand = float(length - 1) ** rng.random()
        if kind == 'mostly-increasing':
            increments = rng.uniform(MOSTLY_INCREASING_LOW, 1.0, length - 1)
        else:
            # in (0, 1]
            increments = 1.0 - rng.random(length - 1)
        increments = increments * demand_envelope(length, demand)
        if kind == 'concave':
            increments = np.sort(increments)[::-1]
        values = np.concatenate(([0.0], np.cumsum(increments)))
        if kind == 'mostly-increasing':
            values = np.maximum(values, 0.0)
        top = values.max()
        if top > 0:
            break
        log.warning("Redrawing a %s component function that is identically 0", kind)
    values = values / top
    values[0] = 0.0
    return values


def draw_max_value(rng, pareto_index, bundle_cost):
    """
    Draw a maximal valuation from the Pareto distribution with index
    `pareto_index`, conditioned to exceed `bundle_cost`.
    """
    if not bundle_cost > 0:
        raise ContractViolation(
            "Bundle cost must be positive, got {0!r}".format(bundle_cost))
    u = rng.random()
    return bundle_cost * (1.0 - u) ** (-1.0 / pareto_index)


def client_streams(seed, n):
    """
    Return a list of `n` triples ``(cost_rng, value_rng, component_rng)``.
    """
    streams = []
    for child in np.random.SeedSequence(seed).spawn(n):
        streams.append(tuple(np.random.Generator(np.random.PCG64(s))
                             for s in child.spawn(3)))
    return streams


def valuation_from_components(components, max_value):
    """
    Return the `ValuationTensor` ``max_value * v1 (x) ... (x) vR``.
    """
    cap = ResourceCapacity([len(v) - 1 for v in components])
    values = max_value * reduce(np.multiply.outer, components)
    return ValuationTensor(cap, values)


def build_dataset(spec, costs=None):
    """
    Return the list of `GeneratedClient` described by `spec`.

    :param dict costs: bundle cost per agent id; read from
                       ``spec.cost_source`` when it names a CSV file
    :raise DatasetError: if a client has no bundle cost
    """
    if costs is None and spec.cost_source != SYNTHETIC:
        costs = read_cost_csv(spec.cost_source)
    if costs is not None:
        missing = [k for k in range(spec.n_clients) if k not in costs]
        if missing:
            raise DatasetError(
                "No bundle cost for {0} client(s)".format(len(missing)),
                rows=['agent_id {0}: missing'.format(k) for k in missing])

    clients = []
    for k, (cost_rng, value_rng, component_rng) in enumerate(
            client_streams(spec.seed, spec.n_clients)):
        bundle_cost = cost_rng.lognormal(0.0, 1.0)
        if costs is not None:
            bundle_cost = costs[k]
        max_value = draw_max_value(value_rng, spec.pareto_index, bundle_cost)
        components = [gen_component(spec.kind, m + 1, component_rng)
                      for m in spec.units]
        clients.append(GeneratedClient(k, components, max_value, bundle_cost))
    log.info("Generated %d %s clients over capacity %s (seed %d)",
             spec.n_clients, spec.kind, spec.capacity, spec.seed)
    return clients


def project(clients, r):
    """
    Return the clients restricted to their first `r` resources.
    """
    result = []
    for client in clients:
        if not (1 <= r <= len(client.components)):
            raise ContractViolation(
                "Cannot project client {0} with {1} resources onto {2}"
                .format(client.agent_id, len(client.components), r))
        result.append(GeneratedClient(client.agent_id, client.components[:r],
                                      client.max_value, client.bundle_cost))
    return result


def read_cost_csv(path):
    """
    Read bundle costs from a CSV file with header ``agent_id,cost``.

    :return: `OrderedDict` mapping integer agent ids to costs
    :raise DatasetError: listing every malformed row
    """
    if not os.path.isfile(path):
        raise DatasetError("Cost file `{0}` does not exist".format(path))
    costs = OrderedDict()
    problems = []
    with open(path, newline='') as stream:
        reader = csv.DictReader(stream)
        if not reader.fieldnames or not {'agent_id', 'cost'} <= set(reader.fieldnames):
            raise DatasetError(
                "Cost file `{0}` must have header `agent_id,cost`".format(path))
        for row in reader:
            line = reader.line_num
            try:
                agent_id = int(row['agent_id'])
                cost = float(row['cost'])
            except (TypeError, ValueError):
                problems.append("line {0}: cannot parse {1!r}"
                                .format(line, [row.get('agent_id'), row.get('cost')]))
                continue
            if not cost > 0 or not np.isfinite(cost):
                problems.append("line {0}: cost must be positive, got {1!r}"
                                .format(line, cost))
            elif agent_id in costs:
                problems.append("line {0}: duplicate agent_id {1}"
                                .format(line, agent_id))
            else:
                costs[agent_id] = cost
    if problems:
        raise DatasetError(
            "Invalid rows in cost file `{0}`".format(path), rows=problems)
    return costs


def _lines(values, axis):
    """
    Return a mask of the cells whose coordinates other than `axis` are
    all positive.
    """
    grid = np.indices(values.shape)
    others = [grid[s] > 0 for s in range(values.ndim) if s != axis]
    if not others:
        return np.ones(values.shape, dtype=bool)
    return np.logical_and.reduce(others)


def kind_violations(valuation, kind, tol=TOLERANCE):
    """
    Return a list of the ways `valuation` departs from dataset `kind`.

    ``concave`` needs nonincreasing first differences along every
    axis; ``increasing`` needs positive first differences along every
    axis on lines through cells with no other coordinate equal to 0
    (elsewhere a tensor product is identically 0) and nonnegative ones
    everywhere; ``mostly-increasing`` only needs nonnegative values.
    """
    values = valuation.values
    problems = []
    if np.any(values < 0):
        problems.append("negative values")
    if kind == 'mostly-increasing':
        return problems
    for axis in range(values.ndim):
        diff = np.diff(values, axis=axis)
        if kind == 'concave':
            if values.shape[axis] > 2 and np.any(np.diff(values, n=2, axis=axis) > tol):
                problems.append("not concave along axis {0}".format(axis))
            if np.any(diff < -tol):
                problems.append("decreasing along axis {0}".format(axis))
        elif kind == 'increasing':
            inner = _lines(values, axis)
            inner = np.take(inner, range(1, values.shape[axis]), axis=axis)
            if np.any(diff[inner] <= 0):
                problems.append("not strictly increasing along axis {0}".format(axis))
            if np.any(diff < -tol):
                problems.append("decreasing along axis {0}".format(axis))
        else:
            raise ContractViolation("Unknown dataset kind `{0}`".format(kind))
    return problems
