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
Turn configuration files into option defaults for the subcommands.

The configuration file is INI-style, with one section per subcommand;
keys are the long option names with dashes replaced by underscores::

  [auction]
  ds_kind = sim_2d_trees
  workers = 4

  [bench]
  units = 3,7,15
  repeats = 7

Values may reference environment variables as ``${NAME}``.  For any
configuration file ``P``, files ``P.d/*.conf`` are read as well.

Option values are resolved in this order: command-line flag,
configuration file, built-in default (see `DEFAULTS`).
"""

__docformat__ = 'reStructuredText'


# stdlib imports
from configparser import ConfigParser, Error as ConfigParserError
import os
from os.path import expanduser, expandvars

# 3rd-party modules
from schema import Optional, Schema, SchemaError

# multivcg imports
from multivcg import log
from multivcg.datasets import DEFAULT_PARETO_INDEX, KINDS as DATASET_KINDS, SYNTHETIC, DatasetSpec
from multivcg.exceptions import ConfigurationError, ContractViolation
from multivcg.join import DEFAULT_DS_KIND, FAULTS
from multivcg.ubds import KINDS as DS_KINDS
from multivcg.utils import MIN_REPEATS
from multivcg.validate import (
    boolean,
    int_list,
    nonempty_str,
    nonnegative_int,
    one_of,
    pareto_index,
    positive_int,
    readable_file,
    seed,
    str_list,
    units_list,
)


DEFAULT_CONFIG_FILE = '~/.multivcg/config'

SUITES = ('oracle', 'subsets', 'invariants', 'ds_soundness', 'baseline', 'separate')
"""
Names of the verification suites, in the order they run.
"""


## schema and defaults

ds_kind = one_of(*DS_KINDS)
dataset_kind = one_of(*DATASET_KINDS)


SCHEMA = {
    'gen': {
        Optional('kind'): dataset_kind,
        Optional('clients'): positive_int,
        Optional('resources'): positive_int,
        Optional('units'): units_list,
        Optional('seed'): seed,
        Optional('pareto_index'): pareto_index,
        Optional('cost_csv'): readable_file,
        Optional('out'): nonempty_str,
        Optional('yes'): boolean,
    },
    'auction': {
        Optional('ds_kind'): ds_kind,
        Optional('resources'): positive_int,
        Optional('clients'): positive_int,
        Optional('out'): nonempty_str,
        Optional('oracle'): boolean,
        Optional('verify_baseline'): boolean,
        Optional('workers'): nonnegative_int,
    },
    'bench': {
        Optional('out'): nonempty_str,
        Optional('kind'): dataset_kind,
        Optional('resources'): int_list,
        Optional('units'): int_list,
        Optional('ds_kinds'): str_list(*DS_KINDS),
        Optional('clients'): positive_int,
        Optional('seed'): seed,
        Optional('repeats'): positive_int,
        Optional('naive_units'): int_list,
        Optional('separate_datasets'): positive_int,
    },
    'verify': {
        Optional('out'): nonempty_str,
        Optional('quick'): boolean,
        Optional('seed'): seed,
        Optional('suite'): str_list(*SUITES),
        Optional('instances'): positive_int,
        Optional('offset'): nonnegative_int,
        Optional('workers'): nonnegative_int,
        Optional('inject_fault'): one_of(*FAULTS),
    },
}


DEFAULTS = {
    'gen': {
        'kind': 'increasing',
        'clients': 256,
        'resources': None,
        'units': [15],
        'seed': 1,
        'pareto_index': DEFAULT_PARETO_INDEX,
        'cost_csv': None,
        'out': 'dataset',
        'yes': False,
    },
    'auction': {
        'ds_kind': DEFAULT_DS_KIND,
        'resources': None,
        'clients': None,
        'out': None,
        'oracle': False,
        'verify_baseline': False,
        'workers': 1,
    },
    'bench': {
        'out': 'bench',
        'kind': 'increasing',
        'resources': [1, 2],
        'units': [3, 7, 15],
        'ds_kinds': ['sim_1d', 'sim_2d_trees', 'combination'],
        'clients': 16,
        'seed': 1,
        'repeats': MIN_REPEATS,
        'naive_units': [3, 5, 7, 9, 11],
        'separate_datasets': 3,
    },
    'verify': {
        'out': 'verify',
        'quick': False,
        'seed': 1,
        'suite': list(SUITES),
        'instances': None,
        'offset': 0,
        'workers': 1,
        'inject_fault': None,
    },
}


DATASET_SCHEMA = {
    'kind': dataset_kind,
    'n_clients': positive_int,
    'resources': positive_int,
    'units': units_list,
    'seed': seed,
    Optional('pareto_index', default=DEFAULT_PARETO_INDEX): pareto_index,
    Optional('cost_source', default=SYNTHETIC): nonempty_str,
}


## loading and parsing

def make_config_parser():
    parser = ConfigParser(strict=False, interpolation=None)
    # keep keys case-sensitive
    parser.optionxform = str
    return parser


def _expand_config_file_list(paths, ignore_nonexistent=True):
    """
    Return the list of existing configuration files.

    Any path pointing to an existing file is included in the result;
    for any path ``P``, files ``P.d/*.conf`` are included as well.
    Nonexistent paths are skipped, unless `ignore_nonexistent` is
    false, in which case `ConfigurationError` is raised.
    """
    configfiles = []
    for path in paths:
        path = expanduser(path)
        if os.path.isfile(path):
            configfiles.append(path)
        elif not ignore_nonexistent:
            raise ConfigurationError(
                "Configuration file `{0}` does not exist".format(path))
        path_d = path + '.d'
        if os.path.isdir(path_d):
            for entry in sorted(os.listdir(path_d)):
                if entry.endswith('.conf'):
                    configfiles.append(os.path.join(path_d, entry))
    return configfiles


def _read_config_files(paths):
    """
    Return a 2-level mapping ``section -> key -> raw string value``.
    """
    parser = make_config_parser()
    try:
        parser.read(paths)
    except ConfigParserError as err:
        raise ConfigurationError("Cannot parse configuration: {0}".format(err))
    config = {}
    for section in parser.sections():
        config[section] = {}
        for key in parser.options(section):
            config[section][key] = expandvars(parser.get(section, key))
    return config


def _validate_section(name, model, properties):
    log.debug("Checking configuration section `%s` ...", name)
    try:
        return Schema(model).validate(properties)
    except (SchemaError, ValueError) as err:
        raise ConfigurationError(
            "In configuration section `{0}`: {1}".format(name, err))


def load_config(path=None, explicit=False):
    """
    Read and validate the configuration file(s).

    :param str path: configuration file (default `DEFAULT_CONFIG_FILE`)
    :param bool explicit: if true, a missing file is an error
    :return: dict mapping subcommand names to dicts of option values
    :raise ConfigurationError: on any parse or validation error
    """
    if path is None:
        path = DEFAULT_CONFIG_FILE
    configfiles = _expand_config_file_list([path], ignore_nonexistent=not explicit)
    if not configfiles:
        log.debug("No configuration file found at `%s`", path)
        return dict((section, {}) for section in SCHEMA)
    raw = _read_config_files(configfiles)
    config = {}
    for section, model in SCHEMA.items():
        config[section] = _validate_section(section, model, raw.get(section, {}))
    for section in raw:
        if section not in SCHEMA:
            log.warning("Ignoring unknown configuration section `%s`", section)
    log.debug("Loaded configuration from: %s", ', '.join(configfiles))
    return config


def resolve_options(section, args, config):
    """
    Return a dict of option values for subcommand `section`.

    Values from `args` (an `argparse.Namespace` where options that
    were not given are ``None``) take precedence over `config` (as
    returned by `load_config`), which takes precedence over `DEFAULTS`.
    Flag values are validated with the same schema as the file.
    """
    model = SCHEMA[section]
    given = {}
    for key in DEFAULTS[section]:
        value = getattr(args, key, None)
        if value is not None:
            given[key] = value
    given = _validate_section(section, model, given)
    options = dict(DEFAULTS[section])
    options.update(config.get(section, {}))
    options.update(given)
    return options


def broadcast_units(units, resources=None):
    """
    Return the per-resource unit counts, repeating a single value
    `resources` times.

      >>> broadcast_units([15], 2)
      [15, 15]
    """
    units = list(units)
    if resources is None:
        return units
    if len(units) == 1:
        return units * resources
    if len(units) != resources:
        raise ConfigurationError(
            "Got {0} unit counts for {1} resources".format(len(units), resources))
    return units


def dataset_spec_from_section(properties):
    """
    Return the `DatasetSpec` described by the ``[dataset]`` section of
    a dataset's ``spec.cfg``.

    :raise ConfigurationError: if the section is invalid
    """
    values = _validate_section('dataset', DATASET_SCHEMA, dict(properties))
    units = broadcast_units(values['units'], values['resources'])
    try:
        return DatasetSpec(kind=values['kind'],
                           n_clients=values['n_clients'],
                           units=units,
                           seed=values['seed'],
                           pareto_index=values['pareto_index'],
                           cost_source=values['cost_source'])
    except ContractViolation as err:
        raise ConfigurationError("In section `dataset`: {0}".format(err))
