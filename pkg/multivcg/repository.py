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
Persistent storage of datasets and results.

A dataset directory holds:

``spec.cfg``
  INI file with a single ``[dataset]`` section echoing the `DatasetSpec`;
``client_<k>.vft``
  valuation of client *k* in VFT1 text format;
``meta.csv``
  columns ``agent_id,bundle_cost,max_value``;
``components.csv``
  columns ``agent_id,resource,unit,value``.

VFT1 is a plain-text tensor format: the magic line ``VFT1``, a line
``R m_1 ... m_R``, then the ``prod(m_r + 1)`` values in row-major
order, one per line, written with `repr` so they read back exactly.
"""

__docformat__ = 'reStructuredText'


# compatibility imports
from future.utils import with_metaclass

# stdlib imports
from abc import ABCMeta, abstractmethod
from builtins import object
from collections import defaultdict
from configparser import Error as ConfigParserError
import csv
import os

# 3rd party imports
import numpy as np
import yaml

# multivcg imports
from multivcg import log
from multivcg.conf import dataset_spec_from_section, make_config_parser
from multivcg.datasets import GeneratedClient
from multivcg.exceptions import (
    ConfigurationError,
    DatasetError,
    FormatError,
    ValuationError,
)
from multivcg.valuation import ResourceCapacity, ValuationTensor


VFT_MAGIC = 'VFT1'


## VFT1 codec

def write_vft(tensor, stream):
    """
    Write `tensor` to text stream `stream` in VFT1 format.
    """
    cap = tensor.capacity
    stream.write(VFT_MAGIC + '\n')
    stream.write('{0} {1}\n'.format(cap.R, ' '.join(str(m) for m in cap.units)))
    for value in tensor.flat:
        stream.write(repr(float(value)))
        stream.write('\n')


def read_vft(stream):
    """
    Read a `ValuationTensor` in VFT1 format from text stream `stream`.

    :raise FormatError: on a bad magic line, header or value count
    """
    lines = [line.strip() for line in stream]
    lines = [line for line in lines if line]
    if not lines or lines[0] != VFT_MAGIC:
        raise FormatError("Missing `{0}` magic line".format(VFT_MAGIC))
    if len(lines) < 2:
        raise FormatError("Missing header line")
    try:
        header = [int(word) for word in lines[1].split()]
    except ValueError:
        raise FormatError("Malformed header line `{0}`".format(lines[1]))
    if not header or header[0] < 1 or len(header) != header[0] + 1:
        raise FormatError("Malformed header line `{0}`".format(lines[1]))
    units = header[1:]
    if any(m < 1 for m in units):
        raise FormatError("Every resource needs at least one unit, got {0}".format(units))
    cap = ResourceCapacity(units)
    body = ' '.join(lines[2:]).split()
    if len(body) != cap.size:
        raise FormatError(
            "Expected {0} values for capacity {1}, got {2}"
            .format(cap.size, units, len(body)))
    try:
        values = np.array([float(word) for word in body])
    except ValueError as err:
        raise FormatError("Malformed value: {0}".format(err))
    try:
        return ValuationTensor(cap, values)
    except ValuationError as err:
        raise FormatError(str(err))


## result writers

def write_csv(path, rows, fieldnames=None):
    """
    Write `rows` (mappings) to CSV file `path`, with a header line.

    Column order is `fieldnames`, or the keys of the first row.
    """
    rows = list(rows)
    if fieldnames is None:
        fieldnames = list(rows[0].keys()) if rows else []
    with open(path, 'w', newline='') as stream:
        writer = csv.DictWriter(stream, fieldnames=fieldnames, extrasaction='ignore')
        writer.writeheader()
        for row in rows:
            writer.writerow(dict(row))
    log.debug("Wrote %d rows to `%s`", len(rows), path)
    return path


def _cell(value):
    if isinstance(value, float):
        return '{0:.6g}'.format(value)
    if isinstance(value, tuple):
        return ','.join(str(x) for x in value)
    return str(value)


def format_table(rows, columns):
    """
    Return `rows` as a plain-text table with the given `columns`.
    """
    cells = [[_cell(row.get(column, '')) for column in columns] for row in rows]
    widths = [max([len(column)] + [len(line[k]) for line in cells])
              for k, column in enumerate(columns)]
    lines = ['  '.join(column.ljust(width) for column, width in zip(columns, widths))]
    lines.append('  '.join('-' * width for width in widths))
    for line in cells:
        lines.append('  '.join(cell.ljust(width) for cell, width in zip(line, widths)))
    return '\n'.join(lines)


def dump_yaml(data, path):
    """
    Write `data` (plain dicts, lists and scalars) as YAML to `path`.
    """
    with open(path, 'w') as stream:
        yaml.safe_dump(data, stream, default_flow_style=False, indent=4)
    return path


## dataset stores

class AbstractDatasetRepository(with_metaclass(ABCMeta, object)):
    """
    Defines the contract for storing generated datasets.
    """

    @abstractmethod
    def save(self, spec, clients):
        """
        Store the dataset made of `spec` and list of `GeneratedClient`.
        """
        pass

    @abstractmethod
    def load(self):
        """
        Return the pair ``(spec, clients)`` of the stored dataset.
        """
        pass

    @abstractmethod
    def exists(self):
        """
        Return ``True`` if a dataset is stored.
        """
        pass


class DatasetRepository(AbstractDatasetRepository):
    """
    Store a dataset in a directory.

    :param str path: directory holding the dataset files
    """

    spec_file = 'spec.cfg'
    meta_file = 'meta.csv'
    components_file = 'components.csv'

    def __init__(self, path):
        path = os.path.expanduser(path)
        path = os.path.expandvars(path)
        self.path = path

    def _client_path(self, agent_id):
        return os.path.join(self.path, 'client_{0}.vft'.format(agent_id))

    def exists(self):
        return os.path.isfile(os.path.join(self.path, self.spec_file))

    def save(self, spec, clients):
        if not os.path.exists(self.path):
            os.makedirs(self.path)

        parser = make_config_parser()
        parser.add_section('dataset')
        for key, value in spec.as_dict().items():
            parser.set('dataset', key, str(value))
        with open(os.path.join(self.path, self.spec_file), 'w') as stream:
            parser.write(stream)

        for client in clients:
            with open(self._client_path(client.agent_id), 'w') as stream:
                write_vft(client.valuation, stream)

        write_csv(os.path.join(self.path, self.meta_file),
                  ({'agent_id': client.agent_id,
                    'bundle_cost': repr(client.bundle_cost),
                    'max_value': repr(client.max_value)} for client in clients),
                  ['agent_id', 'bundle_cost', 'max_value'])
        write_csv(os.path.join(self.path, self.components_file),
                  ({'agent_id': client.agent_id, 'resource': r, 'unit': u,
                    'value': repr(float(value))}
                   for client in clients
                   for r, component in enumerate(client.components)
                   for u, value in enumerate(component)),
                  ['agent_id', 'resource', 'unit', 'value'])
        log.info("Saved dataset `%s` (%d clients) to `%s`",
                 spec.dataset_id, len(clients), self.path)

    def _read_spec(self):
        path = os.path.join(self.path, self.spec_file)
        parser = make_config_parser()
        try:
            with open(path) as stream:
                parser.read_file(stream)
            section = dict(parser.items('dataset'))
            return dataset_spec_from_section(section)
        except (IOError, OSError) as err:
            raise DatasetError("Cannot read `{0}`: {1}".format(path, err))
        except (ConfigParserError, ConfigurationError) as err:
            raise DatasetError("Invalid dataset description `{0}`: {1}".format(path, err))

    def _read_rows(self, name, columns):
        path = os.path.join(self.path, name)
        try:
            with open(path, newline='') as stream:
                reader = csv.DictReader(stream)
                if not reader.fieldnames or not set(columns) <= set(reader.fieldnames):
                    raise DatasetError(
                        "File `{0}` must have columns {1}".format(path, ', '.join(columns)))
                return [(reader.line_num, row) for row in reader]
        except (IOError, OSError) as err:
            raise DatasetError("Cannot read `{0}`: {1}".format(path, err))

    def _read_meta(self):
        meta = {}
        problems = []
        for line, row in self._read_rows(self.meta_file,
                                         ('agent_id', 'bundle_cost', 'max_value')):
            try:
                meta[int(row['agent_id'])] = (float(row['bundle_cost']),
                                              float(row['max_value']))
            except (TypeError, ValueError):
                problems.append("{0} line {1}: cannot parse {2!r}"
                                .format(self.meta_file, line, dict(row)))
        return meta, problems

    def _read_components(self, units):
        components = defaultdict(lambda: [np.full(m + 1, np.nan) for m in units])
        problems = []
        for line, row in self._read_rows(self.components_file,
                                         ('agent_id', 'resource', 'unit', 'value')):
            try:
                agent_id, r, u = int(row['agent_id']), int(row['resource']), int(row['unit'])
                components[agent_id][r][u] = float(row['value'])
            except (TypeError, ValueError, IndexError):
                problems.append("{0} line {1}: invalid entry {2!r}"
                                .format(self.components_file, line, dict(row)))
        return components, problems

    def load(self):
        """
        Return ``(spec, clients)``.

        :raise DatasetError: listing every missing or malformed entry
        """
        if not self.exists():
            raise DatasetError("No dataset found in `{0}`".format(self.path))
        spec = self._read_spec()
        meta, problems = self._read_meta()
        components, more = self._read_components(spec.units)
        problems.extend(more)

        clients = []
        for k in range(spec.n_clients):
            path = self._client_path(k)
            try:
                with open(path) as stream:
                    valuation = read_vft(stream)
            except (IOError, OSError, FormatError) as err:
                problems.append("client_{0}.vft: {1}".format(k, err))
                continue
            if list(valuation.capacity.units) != list(spec.units):
                problems.append("client_{0}.vft: capacity {1} differs from {2}"
                                .format(k, list(valuation.capacity.units), list(spec.units)))
                continue
            if k not in meta:
                problems.append("{0}: no row for agent_id {1}".format(self.meta_file, k))
                continue
            funcs = components.get(k)
            if funcs is None or any(np.isnan(v).any() for v in funcs):
                problems.append("{0}: incomplete components of agent_id {1}"
                                .format(self.components_file, k))
                continue
            bundle_cost, max_value = meta[k]
            clients.append(GeneratedClient(k, funcs, max_value, bundle_cost,
                                           valuation=valuation))
        if problems:
            raise DatasetError(
                "Invalid dataset in `{0}`".format(self.path), rows=problems)
        log.debug("Loaded dataset `%s` from `%s`", spec.dataset_id, self.path)
        return spec, clients
