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
Benchmark drivers.

Drivers collect rows (`Struct` instances) in a `BenchRun`;
`BenchRun.write` saves them as CSV files into an output directory:

=======================  ==================================================
``join_timing.csv``      median time of a two-client join
``auction_timing.csv``   median time of a full auction, split in phases
``naive_fit.csv``        comparison counts and time of `naive_join`,
                         plus one linear-fit row per number of resources
``matches.csv``          queries and exact matches per join
``phases.csv``           time spent constructing, querying, fetching
                         and comparing
``false_positives.csv``  candidates fetched vs. exact matches
``separate.csv``         welfare of per-resource auctions vs. optimum
``environment.yaml``     platform, library versions, thread count
``checks.yaml``          outcome of the scaling checks
=======================  ==================================================
"""

__docformat__ = 'reStructuredText'


# stdlib imports
from builtins import object
from datetime import datetime
import math
import os
import platform
import sys

# 3rd party imports
import numpy as np
import scipy
from scipy.stats import linregress

# multivcg imports
from multivcg import log, __version__
from multivcg.auction import run_vcg_auction
from multivcg.baselines import separate_auctions
from multivcg.datasets import DatasetSpec, build_dataset, project
from multivcg.join import PHASES, join, naive_comparison_count, naive_join
from multivcg.repository import dump_yaml, write_csv
from multivcg.ubds import KD_TREE_MAX_RESOURCES, KD_TREE_MAX_VECTORS
from multivcg.utils import MIN_REPEATS, Struct, get_num_processors, median_time_ns


MAX_RATIO_PER_DOUBLING = 2.6
MIN_NAIVE_R2 = 0.98
MAX_MATCHES_GROWTH = 0.5
MAX_SEPARATE_RATIO = 0.7

SEPARATE_RESOURCES = (1, 2, 3)


def _dataset_row(spec, ds_kind=None):
    row = Struct()
    row.dataset_id = spec.dataset_id
    row.seed = spec.seed
    row.kind = spec.kind
    row.R = spec.R
    row.N = spec.capacity.size
    row.n_clients = spec.n_clients
    row.ds_kind = ds_kind
    return row


def kd_tree_fits(cap):
    return cap.R <= KD_TREE_MAX_RESOURCES and cap.size <= KD_TREE_MAX_VECTORS


class BenchRun(object):
    """
    Rows collected by one benchmark run, keyed by product name.
    """

    PRODUCTS = ('join_timing', 'auction_timing', 'naive_fit', 'matches',
                'phases', 'false_positives', 'separate')

    def __init__(self, repeats=MIN_REPEATS, threads=1):
        if repeats < MIN_REPEATS:
            log.warning("Raising number of repeats from %d to %d",
                        repeats, MIN_REPEATS)
            repeats = MIN_REPEATS
        self.repeats = repeats
        self.threads = threads
        self.started = datetime.now()
        self.rows = dict((name, []) for name in self.PRODUCTS)
        self.checks = []

    def environment(self):
        """Return the environment stamp as a plain dict."""
        return {
            'multivcg': __version__,
            'platform': platform.platform(),
            'machine': platform.machine(),
            'python': sys.version.split()[0],
            'numpy': np.__version__,
            'scipy': scipy.__version__,
            'processors': get_num_processors(),
            'threads': self.threads,
            'repeats': self.repeats,
            'clock': 'time.perf_counter_ns',
            'started': self.started.isoformat(),
        }

    ## drivers

    def time_joins(self, spec, clients, ds_kinds):
        """
        Time the join of the first two clients of a dataset with each
        index kind.
        """
        cap = spec.capacity
        if len(clients) < 2:
            log.warning("Dataset `%s` has fewer than 2 clients; skipping joins",
                        spec.dataset_id)
            return
        left, right = clients[0].valuation, clients[1].valuation
        for ds_kind in ds_kinds:
            if ds_kind == 'kd_tree' and not kd_tree_fits(cap):
                log.warning("Skipping kd_tree on `%s`: N=%d, R=%d over the size guard",
                            spec.dataset_id, cap.size, cap.R)
                continue
            median_ns, joint = median_time_ns(
                lambda: join(left, right, cap, ds_kind), self.repeats)
            metrics = joint.metrics

            row = _dataset_row(spec, ds_kind)
            row.median_ns = median_ns
            row.repeats = self.repeats
            self.rows['join_timing'].append(row)

            row = _dataset_row(spec, ds_kind)
            row.queries_issued = metrics.queries_issued
            row.exact_matches = metrics.exact_matches
            row.matches_per_query = metrics.matches_per_query
            self.rows['matches'].append(row)

            row = _dataset_row(spec, ds_kind)
            total = float(metrics.total_ns) or 1.0
            for phase in PHASES:
                row[phase + '_ns'] = metrics.phase_ns[phase]
            for phase in PHASES:
                row[phase + '_fraction'] = metrics.phase_ns[phase] / total
            self.rows['phases'].append(row)

            row = _dataset_row(spec, ds_kind)
            row.candidates_fetched = metrics.candidates_fetched
            row.exact_matches = metrics.exact_matches
            row.false_positive_ratio = metrics.false_positive_ratio
            self.rows['false_positives'].append(row)
            log.info("Join on `%s` with %s: %d ns (median of %d)",
                     spec.dataset_id, ds_kind, median_ns, self.repeats)

    def time_auctions(self, spec, clients, ds_kinds):
        """
        Time a full auction among all clients of a dataset with each
        index kind.
        """
        cap = spec.capacity
        bids = [client.as_bid() for client in clients]
        for ds_kind in ds_kinds:
            if ds_kind == 'kd_tree' and not kd_tree_fits(cap):
                continue
            median_ns, result = median_time_ns(
                lambda: run_vcg_auction(bids, cap, ds_kind), self.repeats)
            row = _dataset_row(spec, ds_kind)
            row.median_ns = median_ns
            row.allocation_ns = result.metrics.allocation_ns
            row.payment_ns = result.metrics.payment_ns
            row.winners = len(result.winners)
            row.social_welfare = result.social_welfare
            row.repeats = self.repeats
            self.rows['auction_timing'].append(row)
            log.info("Auction on `%s` with %s: %d ns (median of %d)",
                     spec.dataset_id, ds_kind, median_ns, self.repeats)

    def fit_naive(self, kind, seed, resources, naive_units):
        """
        Time `naive_join` over a sweep of capacities and fit runtime
        against the number of comparisons.
        """
        for R in resources:
            points = []
            for m in naive_units:
                spec = DatasetSpec(kind, 2, [m] * R, seed)
                clients = build_dataset(spec)
                cap = spec.capacity
                median_ns, joint = median_time_ns(
                    lambda: naive_join(clients[0].valuation, clients[1].valuation, cap),
                    self.repeats)
                expected = naive_comparison_count(cap)
                counted = joint.metrics.comparisons_made
                if counted != expected:
                    log.error("naive_join counted %d comparisons at capacity %s,"
                              " expected %d", counted, cap, expected)
                    self.checks.append({
                        'check': 'naive_counter', 'R': R, 'N': cap.size,
                        'passed': False, 'value': counted, 'expected': expected})
                row = _dataset_row(spec, 'naive')
                row.units = m
                row.comparisons = counted
                row.closed_form = expected
                row.median_ns = median_ns
                row.slope = row.intercept = row.r_squared = ''
                self.rows['naive_fit'].append(row)
                points.append((counted, median_ns))
            if len(points) >= 2 and len(set(x for x, _ in points)) >= 2:
                fit = linregress([x for x, _ in points], [y for _, y in points])
                r_squared = fit.rvalue ** 2
                row = Struct(dataset_id='fit', seed=seed, kind=kind, R=R,
                             N='', n_clients=2, ds_kind='naive', units='',
                             comparisons='', closed_form='', median_ns='',
                             slope=fit.slope, intercept=fit.intercept,
                             r_squared=r_squared)
                self.rows['naive_fit'].append(row)
                self.checks.append({
                    'check': 'naive_fit_r2', 'R': R, 'value': float(r_squared),
                    'threshold': MIN_NAIVE_R2, 'passed': bool(r_squared >= MIN_NAIVE_R2)})

    def compare_separate(self, clients_kind, n_clients, units, seed, datasets):
        """
        Compare per-resource auctions with the joint auction on
        `datasets` concave datasets, projected to 1, 2 and 3 resources.
        """
        for d in range(datasets):
            full = DatasetSpec(clients_kind, n_clients,
                               [units] * max(SEPARATE_RESOURCES), seed + d)
            clients = build_dataset(full)
            for R in SEPARATE_RESOURCES:
                spec = DatasetSpec(clients_kind, n_clients, [units] * R, seed + d)
                bids = [client.as_bid() for client in project(clients, R)]
                outcome = separate_auctions(bids, spec.capacity)
                row = _dataset_row(spec, None)
                row.separate_welfare = outcome.achieved
                row.optimal_welfare = outcome.optimal
                row.ratio = outcome.ratio
                row.improvement = outcome.improvement
                self.rows['separate'].append(row)

    ## checks

    def scaling_checks(self):
        """
        Check per-doubling growth of join time, the trend of matches
        per query over the three largest capacities, and the mean
        welfare ratios of separate auctions; results are appended to
        `checks`.
        """
        series = {}
        for row in self.rows['join_timing']:
            series.setdefault((row.kind, row.R, row.ds_kind), []).append((row.N, row.median_ns))
        for (kind, R, ds_kind), points in sorted(series.items(), key=str):
            points.sort()
            for (n0, t0), (n1, t1) in zip(points, points[1:]):
                if n1 <= n0 or t0 <= 0:
                    continue
                ratio = (t1 / float(t0)) ** (1.0 / math.log(n1 / float(n0), 2))
                self.checks.append({
                    'check': 'time_per_doubling', 'kind': kind, 'R': R,
                    'ds_kind': ds_kind, 'N': n1, 'value': float(ratio),
                    'threshold': MAX_RATIO_PER_DOUBLING,
                    'passed': bool(ratio <= MAX_RATIO_PER_DOUBLING)})
        series = {}
        for row in self.rows['matches']:
            series.setdefault((row.kind, row.R, row.ds_kind), []).append(
                (row.N, row.matches_per_query))
        for (kind, R, ds_kind), points in sorted(series.items(), key=str):
            points.sort()
            tail = points[-3:]
            if len(tail) < 3:
                continue
            fit = linregress([n for n, _ in tail], [m for _, m in tail])
            level = np.mean([m for _, m in tail])
            growth = fit.slope * (tail[-1][0] - tail[0][0]) / level if level > 0 else 0.0
            self.checks.append({
                'check': 'matches_slope', 'kind': kind, 'R': R,
                'ds_kind': ds_kind, 'value': float(fit.slope),
                'growth': float(growth), 'threshold': MAX_MATCHES_GROWTH,
                'passed': bool(growth <= MAX_MATCHES_GROWTH)})
        self._separate_checks()
        for check in self.checks:
            if check.get('passed') is False:
                log.warning("Scaling check failed: %s", check)
        return self.checks

    def _separate_checks(self):
        ratios = {}
        for row in self.rows['separate']:
            ratios.setdefault((row.kind, row.n_clients), {}).setdefault(
                row.R, []).append(row.ratio)
        for (kind, n_clients), by_R in sorted(ratios.items(), key=str):
            means = dict((R, float(np.mean(values))) for R, values in by_R.items())
            if 2 in means:
                self.checks.append({
                    'check': 'separate_ratio', 'kind': kind, 'n_clients': n_clients,
                    'R': 2, 'value': means[2], 'threshold': MAX_SEPARATE_RATIO,
                    'passed': bool(means[2] < MAX_SEPARATE_RATIO)})
            if 2 in means and 3 in means:
                self.checks.append({
                    'check': 'separate_ratio', 'kind': kind, 'n_clients': n_clients,
                    'R': 3, 'value': means[3], 'threshold': means[2],
                    'passed': bool(means[3] < means[2])})

    ## output

    def write(self, out):
        if not os.path.exists(out):
            os.makedirs(out)
        paths = []
        for name in self.PRODUCTS:
            rows = self.rows[name]
            if rows:
                paths.append(write_csv(os.path.join(out, name + '.csv'), rows))
        paths.append(dump_yaml(self.environment(), os.path.join(out, 'environment.yaml')))
        paths.append(dump_yaml(self.checks, os.path.join(out, 'checks.yaml')))
        return paths


def run_bench(out, kind='increasing', resources=(1, 2), units=(3, 7, 15),
              ds_kinds=('combination',), clients=16, seed=1,
              repeats=MIN_REPEATS, naive_units=(3, 5, 7, 9, 11),
              separate_datasets=3):
    """
    Run all benchmark drivers and write their products into `out`.

    :return: the `BenchRun` holding all rows and checks
    """
    run = BenchRun(repeats)
    for R in resources:
        for m in units:
            spec = DatasetSpec(kind, clients, [m] * R, seed)
            dataset = build_dataset(spec)
            run.time_joins(spec, dataset, ds_kinds)
            run.time_auctions(spec, dataset, ds_kinds)
    if naive_units:
        run.fit_naive(kind, seed, resources, naive_units)
    if separate_datasets:
        run.compare_separate('concave', clients, max(units), seed, separate_datasets)
    run.scaling_checks()
    paths = run.write(out)
    log.info("Wrote %d benchmark products to `%s`", len(paths), out)
    return run
