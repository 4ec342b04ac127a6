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
Seeded verification suites.

Every suite checks a number of random instances.  Instance *k* of
suite *S* under seed *s* is generated from a `numpy.random.Generator`
seeded with ``SeedSequence([s, index of S, k])``, so any single
failing instance can be rerun with::

  multivcg verify --suite S --seed s --instances 1 --offset k

Each instance check returns a list of problems; an empty list means
the instance passed.
"""

__docformat__ = 'reStructuredText'


# stdlib imports
from builtins import object
from collections import OrderedDict
from contextlib import contextmanager
import os

# 3rd party imports
import numpy as np

# multivcg imports
from multivcg import log
from multivcg.auction import Bid, run_vcg_auction
from multivcg.baselines import SingleResourceBid, concave_auction, separate_auctions
from multivcg.conf import SUITES
from multivcg.datasets import KINDS as DATASET_KINDS, DatasetSpec, build_dataset, project
from multivcg.exceptions import VerificationFailed
from multivcg.join import injected_fault, join, naive_join
from multivcg.oracles import (
    brute_force_vcg,
    compare_results,
    invariant_violations,
    naive_chain_vcg,
)
from multivcg.repository import dump_yaml, format_table
from multivcg.ubds import (
    EXACT_KINDS,
    KD_TREE_MAX_RESOURCES,
    KD_TREE_MAX_VECTORS,
    KINDS as DS_KINDS,
    VectorSet,
    construct,
    query_bounds,
)
from multivcg.utils import Struct, pool_map
from multivcg.valuation import ResourceCapacity, ValuationTensor, close


INSTANCES = {
    'oracle': 200,
    'subsets': 60,
    'invariants': 60,
    'ds_soundness': 60,
    'baseline': 60,
    'separate': 10,
}

QUICK_INSTANCES = {
    'oracle': 24,
    'subsets': 8,
    'invariants': 8,
    'ds_soundness': 8,
    'baseline': 8,
    'separate': 2,
}


def instance_rng(seed, suite, k):
    """
    Return the random generator of instance `k` of `suite`.
    """
    entropy = [int(seed), SUITES.index(suite), int(k)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def _ds_kinds_for(cap):
    kinds = [kind for kind in DS_KINDS if kind != 'kd_tree']
    if cap.R <= KD_TREE_MAX_RESOURCES and cap.size <= KD_TREE_MAX_VECTORS:
        kinds.append('kd_tree')
    return kinds


def _random_bids(rng, kind, n, units):
    spec = DatasetSpec(kind, n, units, int(rng.integers(0, 2 ** 63)))
    return spec, [client.as_bid() for client in build_dataset(spec)]


def _small_instance(rng, quick=False):
    """
    Instance small enough for exhaustive search.
    """
    kind = DATASET_KINDS[int(rng.integers(len(DATASET_KINDS)))]
    R = int(rng.integers(1, 5))
    top = {1: 5, 2: 3, 3: 2, 4: 1}[R]
    units = [int(u) for u in rng.integers(1, top + 1, size=R)]
    n = int(rng.integers(1, 4 if quick or R > 2 else 5))
    return _random_bids(rng, kind, n, units)


def _medium_instance(rng, quick=False):
    """
    Instance for the naive-join oracle.
    """
    kind = DATASET_KINDS[int(rng.integers(len(DATASET_KINDS)))]
    R = int(rng.integers(1, 5))
    top = {1: 15, 2: 7, 3: 7, 4: 7}[R]
    if quick:
        top = max(2, top // 2)
    units = [int(u) for u in rng.integers(2, top + 1, size=R)]
    n = int(rng.integers(2, 5 if quick else 7))
    return _random_bids(rng, kind, n, units)


## suites

def check_oracle(rng, quick=False):
    """
    `run_vcg_auction` agrees with the brute-force VCG (small
    instances) or the naive-join chain (larger ones).
    """
    if rng.random() < 0.5:
        spec, bids = _small_instance(rng, quick)
        expected = brute_force_vcg(bids, spec.capacity)
    else:
        spec, bids = _medium_instance(rng, quick)
        expected = naive_chain_vcg(bids, spec.capacity)
    kinds = _ds_kinds_for(spec.capacity)
    ds_kind = kinds[int(rng.integers(len(kinds)))]
    actual = run_vcg_auction(bids, spec.capacity, ds_kind)
    return ['{0} ({1}): {2}'.format(spec.dataset_id, ds_kind, diff)
            for diff in compare_results(expected, actual)]


def _restrict(valuation, totals):
    """
    Return `valuation` on the grid ``0 <= a <= totals``, dropping the
    resources whose total is 0.
    """
    index = tuple(slice(0, t + 1) if t > 0 else 0 for t in totals)
    units = [t for t in totals if t > 0]
    return ValuationTensor(ResourceCapacity(units), valuation.values[index])


def check_subsets(rng, quick=False):
    """
    Re-solving with a subset of the winners and the units they won
    yields the same welfare for that subset.
    """
    spec, bids = _medium_instance(rng, quick)
    result = run_vcg_auction(bids, spec.capacity)
    winners = [bid for bid in bids if result.values[bid.agent_id] > 0]
    if not winners:
        return []
    size = int(rng.integers(1, len(winners) + 1))
    chosen = [winners[k] for k in sorted(rng.choice(len(winners), size, replace=False))]
    totals = [sum(result.allocations[bid.agent_id][r] for bid in chosen)
              for r in range(spec.R)]
    sub_bids = [Bid(bid.agent_id, _restrict(bid.valuation, totals)) for bid in chosen]
    sub = run_vcg_auction(sub_bids, metrics=False)
    expected = sum(result.values[bid.agent_id] for bid in chosen)
    if not close(sub.social_welfare, expected):
        return ['{0}: winners {1} reach {2!r} on their own units, {3!r} in the auction'
                .format(spec.dataset_id, [bid.agent_id for bid in chosen],
                        sub.social_welfare, expected)]
    return []


def _join_problems(spec, left, right):
    problems = []
    cap = spec.capacity
    naive = naive_join(left, right, cap)
    reference = None
    for ds_kind in _ds_kinds_for(cap):
        joint = join(left, right, cap, ds_kind)
        if not close(joint.max(), naive.max()):
            problems.append('{0}: {1} join maximum {2!r}, naive {3!r}'
                            .format(spec.dataset_id, ds_kind, joint.max(), naive.max()))
        filled = joint.division.filled
        values = (left.flat[joint.division.left[filled]]
                  + right.flat[joint.division.right[filled]])
        if not np.array_equal(values, joint.tensor.flat[filled]):
            problems.append('{0}: {1} divisions do not add up to the joint values'
                            .format(spec.dataset_id, ds_kind))
        if reference is None:
            reference = joint.tensor
        elif joint.tensor != reference:
            problems.append('{0}: {1} joint differs from {2}'
                            .format(spec.dataset_id, ds_kind, DS_KINDS[0]))
    swapped = join(right, left, cap)
    if swapped.tensor != reference:
        problems.append('{0}: join is not symmetric'.format(spec.dataset_id))
    return problems


def check_invariants(rng, quick=False):
    """
    Feasibility, individual rationality, join-order independence,
    welfare monotonicity, and per-join consistency.
    """
    spec, bids = _medium_instance(rng, quick)
    cap = spec.capacity
    result = run_vcg_auction(bids, cap)
    problems = ['{0}: {1}'.format(spec.dataset_id, v)
                for v in invariant_violations(result, bids, cap)]

    order = rng.permutation(len(bids))
    permuted = run_vcg_auction([bids[k] for k in order], cap)
    if not close(permuted.social_welfare, result.social_welfare):
        problems.append('{0}: welfare {1!r} after reordering bids, {2!r} before'
                        .format(spec.dataset_id, permuted.social_welfare,
                                result.social_welfare))
    for agent_id, payment in result.payments.items():
        if not close(permuted.payments[agent_id], payment):
            problems.append('{0}: payment of agent `{1}` changes with bid order'
                            .format(spec.dataset_id, agent_id))

    if len(bids) > 1:
        fewer = run_vcg_auction(bids[:-1], cap, metrics=False)
        if fewer.social_welfare > result.social_welfare and not close(
                fewer.social_welfare, result.social_welfare):
            problems.append('{0}: adding a bid decreases welfare'.format(spec.dataset_id))
        problems.extend(_join_problems(spec, bids[0].valuation, bids[1].valuation))
    return problems


def check_ds_soundness(rng, quick=False):
    """
    Every index kind fetches a superset of the exact matches, and
    exact kinds fetch nothing else.
    """
    kind = DATASET_KINDS[int(rng.integers(len(DATASET_KINDS)))]
    R = int(rng.integers(1, 4))
    top = {1: 31, 2: 9, 3: 4}[R]
    if quick:
        top = max(2, top // 2)
    units = [int(u) for u in rng.integers(1, top + 1, size=R)]
    spec, bids = _random_bids(rng, kind, 2, units)
    cap = spec.capacity
    stored, querying = bids[0].valuation, bids[1].valuation
    vectors = VectorSet.from_valuation(stored)
    indices = np.arange(cap.size)
    bounds = query_bounds(querying, indices)
    # also try random bounds around the stored coordinates
    if len(vectors):
        rows = rng.integers(len(vectors), size=min(16, len(vectors)))
        jitter = rng.normal(0.0, 0.5, size=(len(rows), vectors.k))
        bounds = np.vstack([bounds, vectors.coords[rows] + jitter])
    reference = construct(vectors, 'linear_scan')
    problems = []
    for ds_kind in _ds_kinds_for(cap):
        index = construct(vectors, ds_kind)
        for q in bounds:
            expected = set(vectors.matches(reference.fetch(reference.query(q)), q).tolist())
            fetched = index.fetch(index.query(q))
            found = set(vectors.matches(fetched, q).tolist())
            if found != expected:
                problems.append('{0}: {1} finds {2} of {3} matches'
                                .format(spec.dataset_id, ds_kind,
                                        len(found & expected), len(expected)))
                break
            if ds_kind in EXACT_KINDS and len(fetched) != len(expected):
                problems.append('{0}: exact kind {1} fetched {2} false positives'
                                .format(spec.dataset_id, ds_kind,
                                        len(fetched) - len(expected)))
                break
    return problems


def check_baseline(rng, quick=False):
    """
    On one concave resource, the greedy auction and `run_vcg_auction`
    agree on welfare and payments.
    """
    m = int(rng.integers(1, 9))
    n = int(rng.integers(1, 5 if quick else 9))
    spec, bids = _random_bids(rng, 'concave', n, [m])
    single = [SingleResourceBid(bid.agent_id, bid.valuation.flat) for bid in bids]
    expected = concave_auction(single, m)
    actual = run_vcg_auction(bids, spec.capacity)
    return ['{0}: {1}'.format(spec.dataset_id, diff)
            for diff in compare_results(expected, actual)]


def check_separate(rng, quick=False):
    """
    Per-resource auctions never beat the joint auction; with one
    resource they match it.  Welfare ratios are logged at DEBUG level.
    """
    n = int(rng.integers(4, 9 if quick else 17))
    m = int(rng.integers(2, 4 if quick else 6))
    spec, _ = _random_bids(rng, 'concave', n, [m] * 3)
    clients = build_dataset(spec)
    problems = []
    for R in (1, 2, 3):
        bids = [client.as_bid() for client in project(clients, R)]
        outcome = separate_auctions(bids)
        if outcome.achieved > outcome.optimal and not close(outcome.achieved, outcome.optimal):
            problems.append('{0}: separate auctions over {1} resources reach {2!r},'
                            ' above the optimum {3!r}'
                            .format(spec.dataset_id, R, outcome.achieved, outcome.optimal))
        if R == 1 and not close(outcome.achieved, outcome.optimal, 1e-6):
            problems.append('{0}: single-resource separate auction reaches {1!r},'
                            ' optimum is {2!r}'
                            .format(spec.dataset_id, outcome.achieved, outcome.optimal))
        log.debug("Separate auctions on %s, R=%d: ratio %.4f",
                  spec.dataset_id, R, outcome.ratio)
    return problems


CHECKS = OrderedDict([
    ('oracle', check_oracle),
    ('subsets', check_subsets),
    ('invariants', check_invariants),
    ('ds_soundness', check_ds_soundness),
    ('baseline', check_baseline),
    ('separate', check_separate),
])


## driver

def reproduce_command(suite, seed, k, fault=None):
    command = ('multivcg verify --suite {0} --seed {1} --instances 1 --offset {2}'
               .format(suite, seed, k))
    if fault:
        command += ' --inject-fault {0}'.format(fault)
    return command


@contextmanager
def _maybe_fault(fault):
    if fault:
        log.warning("Running verification with injected fault `%s`", fault)
        with injected_fault(fault):
            yield
    else:
        yield


class SuiteReport(object):
    """
    Outcome of one suite: number of instances and the failing ones.
    """

    def __init__(self, suite, instances, failures):
        self.suite = suite
        self.instances = instances
        self.failures = failures

    @property
    def passed(self):
        return not self.failures

    def as_dict(self):
        return OrderedDict([
            ('suite', self.suite),
            ('instances', self.instances),
            ('passed', self.passed),
            ('failures', [dict(f) for f in self.failures]),
        ])


def run_suite(suite, seed=1, instances=None, offset=0, quick=False,
              workers=1, fault=None):
    """
    Run `instances` instances of `suite`, starting at number `offset`.

    :return: `SuiteReport`
    """
    check = CHECKS[suite]
    if instances is None:
        instances = (QUICK_INSTANCES if quick else INSTANCES)[suite]
    numbers = range(offset, offset + instances)

    def run_one(k):
        try:
            problems = check(instance_rng(seed, suite, k), quick)
        except Exception as err:
            problems = ['{0}: {1}'.format(err.__class__.__name__, err)]
        if problems:
            return Struct(instance=k, seed=seed, problems=problems,
                          command=reproduce_command(suite, seed, k, fault))
        return None

    with _maybe_fault(fault):
        outcomes = pool_map(run_one, numbers, workers)
    failures = [outcome for outcome in outcomes if outcome is not None]
    for failure in failures:
        log.error("Suite `%s` failed on instance %d: %s",
                  suite, failure.instance, '; '.join(failure.problems))
    log.info("Suite `%s`: %d of %d instances passed",
             suite, instances - len(failures), instances)
    return SuiteReport(suite, instances, failures)


def run_verify(out, suites=SUITES, seed=1, instances=None, offset=0,
               quick=False, workers=1, fault=None):
    """
    Run the given suites, write ``verify.yaml`` into `out` and return
    the list of `SuiteReport`.
    """
    reports = [run_suite(suite, seed, instances, offset, quick, workers, fault)
               for suite in suites]
    if not os.path.exists(out):
        os.makedirs(out)
    dump_yaml({'seed': seed,
               'quick': bool(quick),
               'fault': fault,
               'suites': [dict(report.as_dict()) for report in reports]},
              os.path.join(out, 'verify.yaml'))
    return reports


def summary_table(reports):
    rows = [{'suite': report.suite,
             'instances': report.instances,
             'failed': len(report.failures),
             'result': 'pass' if report.passed else 'FAIL'} for report in reports]
    return format_table(rows, ['suite', 'instances', 'failed', 'result'])


def raise_for_failures(reports):
    """
    Raise `VerificationFailed` naming the first failing instance.
    """
    for report in reports:
        if report.failures:
            first = report.failures[0]
            raise VerificationFailed(
                "Suite `{0}` failed on {1} of {2} instances; first failure: {3}"
                .format(report.suite, len(report.failures), report.instances,
                        '; '.join(first.problems)),
                seed=first.seed, command=first.command)
