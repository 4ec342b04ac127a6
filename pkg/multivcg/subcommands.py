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
from __future__ import print_function

# compatibility imports
from future.utils import with_metaclass

# stdlib imports
from builtins import object
from abc import ABCMeta, abstractmethod
import os

# multivcg imports
from multivcg import log
from multivcg.auction import run_vcg_auction
from multivcg.baselines import SingleResourceBid, concave_auction
from multivcg.bench import run_bench
from multivcg.conf import (
    DEFAULT_CONFIG_FILE,
    SUITES,
    broadcast_units,
    load_config,
    resolve_options,
)
from multivcg.datasets import KINDS as DATASET_KINDS
from multivcg.datasets import SYNTHETIC, DatasetSpec, build_dataset, project
from multivcg.exceptions import ConfigurationError, ContractViolation, OracleMismatch
from multivcg.join import FAULTS
from multivcg.oracles import (
    MAX_TUPLES,
    brute_force_vcg,
    compare_results,
    feasible_tuple_count,
    naive_chain_vcg,
)
from multivcg.repository import DatasetRepository, format_table, write_csv
from multivcg.ubds import KINDS as DS_KINDS
from multivcg.utils import confirm_or_abort
from multivcg.verify import raise_for_failures, run_verify, summary_table


class AbstractCommand(with_metaclass(ABCMeta, object)):
    """
    Defines the general contract every command has to fulfill in
    order to be recognized by the arguments list and executed
    afterwards.

    Option values given on the command line must default to ``None``,
    so that `pre_run` can tell them apart from configuration file
    values and built-in defaults; the merged values end up in
    `self.options`.
    """

    name = None

    def __init__(self, params):
        """
        A reference to the parameters of the command line will be
        passed here to adjust the functionality of the command
        properly.
        """
        self.params = params
        self.options = None

    @abstractmethod
    def setup(self, subparsers):
        """
        Add a parser for this subcommand to `subparsers` and make it
        dispatch to this object, e.g.::

          parser = subparsers.add_parser("gen")
          parser.set_defaults(func=self)
        """
        pass

    @abstractmethod
    def execute(self):
        """
        Run the subcommand; return the exit code.
        """
        pass

    def __call__(self):
        return self.execute()

    def pre_run(self):
        """
        Merge command-line options with the configuration file.
        """
        path = self.params.config
        config = load_config(path or DEFAULT_CONFIG_FILE, explicit=(path is not None))
        self.options = resolve_options(self.name, self.params, config)
        log.debug("Options for `%s`: %s", self.name, self.options)


class Gen(AbstractCommand):
    """
    Generate a synthetic dataset.
    """

    name = 'gen'

    def setup(self, subparsers):
        parser = subparsers.add_parser(
            "gen", help="Generate a synthetic dataset.",
            description=self.__doc__)
        parser.set_defaults(func=self)
        parser.add_argument('--kind', choices=DATASET_KINDS,
                            help="Shape of the component functions (default: increasing).")
        parser.add_argument('--clients', metavar='N',
                            help="Number of clients (default: 256).")
        parser.add_argument('--resources', metavar='R',
                            help="Number of resources (default: number of `--units` values).")
        parser.add_argument('--units', metavar='M[,M...]',
                            help="Units per resource; a single value applies to"
                            " all resources (default: 15).")
        parser.add_argument('--seed', metavar='NUM', help="Random seed (default: 1).")
        parser.add_argument('--pareto-index', metavar='ALPHA',
                            help="Index of the Pareto distribution of maximal"
                            " values; must be > 1 (default: 1.1).")
        parser.add_argument('--cost-csv', metavar='FILE',
                            help="Read bundle costs from CSV file FILE"
                            " (columns `agent_id,cost`) instead of drawing them.")
        parser.add_argument('--out', metavar='DIR',
                            help="Directory to write the dataset into (default: `dataset`).")
        parser.add_argument('--yes', action='store_true', default=None,
                            help="Overwrite an existing dataset without asking.")

    def execute(self):
        opts = self.options
        units = broadcast_units(opts['units'], opts['resources'])
        try:
            spec = DatasetSpec(kind=opts['kind'],
                               n_clients=opts['clients'],
                               units=units,
                               seed=opts['seed'],
                               pareto_index=opts['pareto_index'],
                               cost_source=opts['cost_csv'] or SYNTHETIC)
        except ContractViolation as err:
            raise ConfigurationError(str(err))
        repository = DatasetRepository(opts['out'])
        if repository.exists() and not opts['yes']:
            confirm_or_abort(
                "A dataset already exists in `{0}`. Overwrite it?".format(opts['out']),
                msg="Aborting upon user request.")
        clients = build_dataset(spec)
        repository.save(spec, clients)
        print("Wrote dataset `{0}` ({1} clients, capacity {2}) to `{3}`."
              .format(spec.dataset_id, len(clients), spec.capacity, opts['out']))
        return 0


class Auction(AbstractCommand):
    """
    Run the VCG auction on a stored dataset.
    """

    name = 'auction'

    COLUMNS = ['agent_id', 'allocation', 'value', 'payment']

    def setup(self, subparsers):
        parser = subparsers.add_parser(
            "auction", help="Run the VCG auction on a dataset.",
            description=self.__doc__)
        parser.set_defaults(func=self)
        parser.add_argument('dataset', metavar='DATASET',
                            help="Directory written by `multivcg gen`.")
        parser.add_argument('--ds-kind', choices=DS_KINDS,
                            help="Upper-bound index used by the joins (default: combination).")
        parser.add_argument('--resources', metavar='R',
                            help="Only use the first R resources of the dataset.")
        parser.add_argument('--clients', metavar='N',
                            help="Only use the first N clients of the dataset.")
        parser.add_argument('--out', metavar='DIR',
                            help="Write `result.csv` into directory DIR.")
        parser.add_argument('--oracle', action='store_true', default=None,
                            help="Check the result against exhaustive search"
                            " (or naive joins, when exhaustive search is too large).")
        parser.add_argument('--verify-baseline', action='store_true', default=None,
                            help="Check the result against the greedy auction;"
                            " needs a concave single-resource dataset.")
        parser.add_argument('--workers', metavar='NUM',
                            help="Threads for the payment joins; 0 means one per"
                            " processor core (default: 1).")

    def _load_bids(self):
        opts = self.options
        spec, clients = DatasetRepository(self.params.dataset).load()
        if opts['clients'] is not None:
            clients = clients[:opts['clients']]
        if opts['resources'] is not None:
            if opts['resources'] > spec.R:
                raise ConfigurationError(
                    "Dataset `{0}` only has {1} resources"
                    .format(self.params.dataset, spec.R))
            clients = project(clients, opts['resources'])
        return spec, [client.as_bid() for client in clients]

    def _check(self, expected, actual, what):
        differences = compare_results(expected, actual)
        if differences:
            raise OracleMismatch(
                "Auction result differs from {0} in {1} place(s): {2}"
                .format(what, len(differences), '; '.join(differences)),
                differences=differences)
        print("Result agrees with {0}.".format(what))

    def execute(self):
        opts = self.options
        spec, bids = self._load_bids()
        cap = bids[0].valuation.capacity
        if opts['verify_baseline'] and cap.R != 1:
            raise ConfigurationError(
                "Option `--verify-baseline` needs a single-resource auction,"
                " got {0} resources".format(cap.R))
        result = run_vcg_auction(bids, cap, opts['ds_kind'],
                                 max_workers=opts['workers'])

        if opts['oracle']:
            if feasible_tuple_count(len(bids), cap) <= MAX_TUPLES:
                self._check(brute_force_vcg(bids, cap), result, "exhaustive search")
            else:
                log.info("Too many allocation tuples for exhaustive search;"
                         " comparing with naive joins instead")
                self._check(naive_chain_vcg(bids, cap, opts['workers']), result,
                            "the naive-join auction")
        if opts['verify_baseline']:
            single = [SingleResourceBid(bid.agent_id, bid.valuation.flat) for bid in bids]
            self._check(concave_auction(single, cap.units[0]), result,
                        "the greedy concave auction")

        rows = list(result.rows())
        print(format_table(rows, self.COLUMNS))
        print("\nSocial welfare: {0:.6g}  Revenue: {1:.6g}  Winners: {2} of {3}"
              .format(result.social_welfare, result.revenue,
                      len(result.winners), len(bids)))
        if opts['out']:
            if not os.path.exists(opts['out']):
                os.makedirs(opts['out'])
            path = os.path.join(opts['out'], 'result.csv')
            write_csv(path, ({'agent_id': row.agent_id,
                              'allocation': ' '.join(str(x) for x in row.allocation),
                              'value': repr(row.value),
                              'payment': repr(row.payment)} for row in rows),
                      self.COLUMNS)
            print("Wrote `{0}`.".format(path))
        return 0


class Bench(AbstractCommand):
    """
    Run the benchmark sweeps and write CSV products.
    """

    name = 'bench'

    def setup(self, subparsers):
        parser = subparsers.add_parser(
            "bench", help="Run benchmark sweeps.",
            description=self.__doc__)
        parser.set_defaults(func=self)
        parser.add_argument('--out', metavar='DIR',
                            help="Directory for the CSV products (default: `bench`).")
        parser.add_argument('--kind', choices=DATASET_KINDS,
                            help="Dataset kind for the sweeps (default: increasing).")
        parser.add_argument('--resources', metavar='R[,R...]',
                            help="Numbers of resources to sweep (default: 1,2).")
        parser.add_argument('--units', metavar='M[,M...]',
                            help="Units per resource to sweep (default: 3,7,15).")
        parser.add_argument('--ds-kinds', metavar='KIND[,KIND...]',
                            help="Index kinds to time (default: sim_1d,sim_2d_trees,combination).")
        parser.add_argument('--clients', metavar='N',
                            help="Clients per dataset (default: 16).")
        parser.add_argument('--seed', metavar='NUM', help="Random seed (default: 1).")
        parser.add_argument('--repeats', metavar='NUM',
                            help="Repetitions per measurement; at least 5 (default: 5).")
        parser.add_argument('--naive-units', metavar='M[,M...]',
                            help="Units per resource for the naive-join sweep"
                            " (default: 3,5,7,9,11).")
        parser.add_argument('--separate-datasets', metavar='NUM',
                            help="Number of concave datasets for the"
                            " separate-auctions comparison (default: 3).")

    def execute(self):
        opts = self.options
        run = run_bench(opts['out'],
                        kind=opts['kind'],
                        resources=opts['resources'],
                        units=opts['units'],
                        ds_kinds=opts['ds_kinds'],
                        clients=opts['clients'],
                        seed=opts['seed'],
                        repeats=opts['repeats'],
                        naive_units=opts['naive_units'],
                        separate_datasets=opts['separate_datasets'])
        for name in run.PRODUCTS:
            print("{0:<20} {1:>5} rows".format(name + '.csv', len(run.rows[name])))
        failed = [check for check in run.checks if check.get('passed') is False]
        print("Scaling checks: {0} of {1} failed (see `checks.yaml`)."
              .format(len(failed), sum(1 for c in run.checks if 'passed' in c)))
        return 0


class Verify(AbstractCommand):
    """
    Run the seeded verification suites.
    """

    name = 'verify'

    def setup(self, subparsers):
        parser = subparsers.add_parser(
            "verify", help="Run verification suites.",
            description=self.__doc__)
        parser.set_defaults(func=self)
        parser.add_argument('--out', metavar='DIR',
                            help="Directory for `verify.yaml` (default: `verify`).")
        parser.add_argument('--quick', action='store_true', default=None,
                            help="Run fewer and smaller instances.")
        parser.add_argument('--seed', metavar='NUM', help="Random seed (default: 1).")
        parser.add_argument('--suite', action='append', choices=SUITES,
                            help="Run only this suite; may be repeated (default: all).")
        parser.add_argument('--instances', metavar='NUM',
                            help="Instances per suite (default: depends on the suite).")
        parser.add_argument('--offset', metavar='NUM',
                            help="Number of the first instance (default: 0).")
        parser.add_argument('--workers', metavar='NUM',
                            help="Threads checking instances; 0 means one per"
                            " processor core (default: 1).")
        parser.add_argument('--inject-fault', choices=FAULTS,
                            help="Run with a deliberately broken join;"
                            " the suites are expected to fail.")

    def execute(self):
        opts = self.options
        reports = run_verify(opts['out'],
                             suites=opts['suite'],
                             seed=opts['seed'],
                             instances=opts['instances'],
                             offset=opts['offset'],
                             quick=opts['quick'],
                             workers=opts['workers'],
                             fault=opts['inject_fault'])
        print(summary_table(reports))
        raise_for_failures(reports)
        return 0
