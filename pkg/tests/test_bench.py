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

import csv
import os

import pytest

from multivcg.bench import BenchRun, kd_tree_fits, run_bench
from multivcg.conf import DEFAULTS
from multivcg.datasets import DatasetSpec, build_dataset
from multivcg.utils import MIN_REPEATS, Struct
from multivcg.valuation import ResourceCapacity


def _read_csv(path):
    with open(path) as stream:
        return list(csv.DictReader(stream))


@pytest.fixture(scope='module')
def bench_dir(tmpdir_factory):
    out = tmpdir_factory.mktemp('bench').strpath
    run = run_bench(out, kind='increasing', resources=(1,), units=(2, 3),
                    ds_kinds=('sim_1d', 'kd_tree'), clients=3, seed=1,
                    repeats=5, naive_units=(2, 3), separate_datasets=1)
    return out, run


def test_kd_tree_fits():
    assert kd_tree_fits(ResourceCapacity([31]))
    assert kd_tree_fits(ResourceCapacity([31, 31]))
    assert not kd_tree_fits(ResourceCapacity([40, 40]))
    assert not kd_tree_fits(ResourceCapacity([2, 2, 2]))


def test_repeats_have_a_floor():
    assert BenchRun(repeats=2).repeats == MIN_REPEATS == 5
    assert DEFAULTS['bench']['repeats'] == MIN_REPEATS
    assert BenchRun(repeats=7).repeats == 7


def test_environment_stamp():
    stamp = BenchRun(threads=3).environment()
    assert stamp['threads'] == 3
    assert stamp['repeats'] == 5
    assert stamp['clock'] == 'time.perf_counter_ns'
    for key in ('multivcg', 'python', 'numpy', 'scipy', 'platform'):
        assert stamp[key]


def test_bench_products(bench_dir):
    out, _ = bench_dir
    for name in ('join_timing.csv', 'auction_timing.csv', 'naive_fit.csv',
                 'matches.csv', 'phases.csv', 'false_positives.csv',
                 'separate.csv', 'environment.yaml', 'checks.yaml'):
        assert os.path.isfile(os.path.join(out, name)), name


def test_bench_join_rows(bench_dir):
    out, run = bench_dir
    # two capacities, two index kinds
    assert len(run.rows['join_timing']) == 4
    rows = _read_csv(os.path.join(out, 'join_timing.csv'))
    assert sorted(set(row['ds_kind'] for row in rows)) == ['kd_tree', 'sim_1d']
    assert all(int(row['median_ns']) >= 0 for row in rows)
    assert all(row['repeats'] == '5' for row in rows)
    for row in _read_csv(os.path.join(out, 'phases.csv')):
        total = sum(float(row[phase + '_fraction'])
                    for phase in ('construct', 'query', 'fetch', 'compare'))
        assert total == pytest.approx(1.0, abs=1e-6) or total == 0


def test_bench_naive_counter(bench_dir):
    out, run = bench_dir
    measured = [row for row in _read_csv(os.path.join(out, 'naive_fit.csv'))
                if row['dataset_id'] != 'fit']
    assert [int(row['comparisons']) for row in measured] == [6, 10]
    assert [int(row['closed_form']) for row in measured] == [6, 10]
    assert not any(check['check'] == 'naive_counter' for check in run.checks)
    fits = [check for check in run.checks if check['check'] == 'naive_fit_r2']
    assert len(fits) == 1
    # a line through two points fits perfectly
    assert fits[0]['passed']


def test_bench_separate(bench_dir):
    _, run = bench_dir
    rows = run.rows['separate']
    assert [row.R for row in rows] == [1, 2, 3]
    assert rows[0].ratio == pytest.approx(1.0, rel=1e-6)
    for row in rows:
        assert row.separate_welfare <= row.optimal_welfare * (1 + 1e-9)


def test_time_joins_needs_two_clients():
    spec = DatasetSpec('concave', 1, [3], 5)
    run = BenchRun()
    run.time_joins(spec, build_dataset(spec), ['sim_1d'])
    assert run.rows['join_timing'] == []


def test_time_joins_skips_large_kd_tree():
    spec = DatasetSpec('concave', 2, [2, 2, 2], 5)
    run = BenchRun()
    run.time_joins(spec, build_dataset(spec), ['kd_tree', 'linear_scan'])
    assert [row.ds_kind for row in run.rows['join_timing']] == ['linear_scan']


def test_scaling_checks():
    run = BenchRun()
    for N, t in [(4, 100), (8, 200), (16, 1000)]:
        run.rows['join_timing'].append(
            Struct(kind='increasing', R=1, ds_kind='sim_1d', N=N, median_ns=t))
    for N, m in [(4, 1.0), (8, 2.0), (16, 3.0)]:
        run.rows['matches'].append(
            Struct(kind='increasing', R=1, ds_kind='sim_1d', N=N, matches_per_query=m))
    for N, m in [(4, 2.0), (8, 2.1), (16, 2.0)]:
        run.rows['matches'].append(
            Struct(kind='increasing', R=1, ds_kind='kd_tree', N=N, matches_per_query=m))
    checks = run.scaling_checks()
    doubling = [check for check in checks if check['check'] == 'time_per_doubling']
    assert [check['passed'] for check in doubling] == [True, False]
    assert doubling[0]['value'] == pytest.approx(2.0)
    slopes = dict((check['ds_kind'], check) for check in checks
                  if check['check'] == 'matches_slope')
    assert slopes['sim_1d']['value'] > 0
    # the fitted line rises by almost the mean level across the tail
    assert slopes['sim_1d']['growth'] == pytest.approx(0.964, abs=1e-3)
    assert not slopes['sim_1d']['passed']
    assert slopes['kd_tree']['passed']


def _separate_row(R, ratio, kind='concave', n_clients=8):
    return Struct(kind=kind, n_clients=n_clients, R=R, ratio=ratio)


def test_separate_ratio_checks():
    run = BenchRun()
    for R, ratios in [(1, [1.0, 1.0]), (2, [0.5, 0.7]), (3, [0.4, 0.5])]:
        for ratio in ratios:
            run.rows['separate'].append(_separate_row(R, ratio))
    for R, ratio in [(1, 1.0), (2, 0.9), (3, 0.95)]:
        run.rows['separate'].append(_separate_row(R, ratio, n_clients=4))
    checks = [check for check in run.scaling_checks() if check['check'] == 'separate_ratio']
    passed = dict(((check['n_clients'], check['R']), check) for check in checks)
    assert sorted(passed) == [(4, 2), (4, 3), (8, 2), (8, 3)]
    assert passed[8, 2]['value'] == pytest.approx(0.6)
    assert passed[8, 2]['passed']
    assert passed[8, 3]['threshold'] == pytest.approx(0.6)
    assert passed[8, 3]['passed']
    assert not passed[4, 2]['passed']
    assert not passed[4, 3]['passed']


def test_separate_welfare_drops_with_resources():
    run = BenchRun()
    run.compare_separate('concave', 24, 9, seed=11, datasets=3)
    means = {}
    for row in run.rows['separate']:
        means.setdefault(row.R, []).append(row.ratio)
    means = dict((R, sum(ratios) / len(ratios)) for R, ratios in means.items())
    assert means[1] == pytest.approx(1.0, rel=1e-6)
    assert means[3] < means[2] < 1.0
    checks = [check for check in run.scaling_checks() if check['check'] == 'separate_ratio']
    assert [check['R'] for check in checks] == [2, 3]
    assert checks[1]['passed']


# average exact matches per query of the first two clients of an
# increasing dataset stays below these, by number of resources
MATCHES_PER_QUERY_CEILING = {1: 8.0, 2: 16.0}


@pytest.mark.parametrize("R,units", [(1, (3, 7, 15)), (2, (3, 7))])
def test_matches_per_query_stay_bounded(R, units):
    run = BenchRun()
    for m in units:
        spec = DatasetSpec('increasing', 2, [m] * R, seed=3)
        run.time_joins(spec, build_dataset(spec), ['combination'])
    rows = run.rows['matches']
    assert [row.N for row in rows] == [(m + 1) ** R for m in units]
    for row in rows:
        assert 0 < row.matches_per_query <= MATCHES_PER_QUERY_CEILING[R]


if __name__ == "__main__":
    pytest.main(['-v', __file__])
