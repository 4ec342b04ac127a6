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

import os
from io import StringIO

import numpy as np
import pytest
import yaml

from multivcg.datasets import DatasetSpec, build_dataset
from multivcg.exceptions import DatasetError, FormatError
from multivcg.repository import (
    DatasetRepository,
    dump_yaml,
    format_table,
    read_vft,
    write_csv,
    write_vft,
)
from multivcg.utils import Struct

from _helpers.builders import tensor


def test_vft_layout():
    stream = StringIO()
    write_vft(tensor([1, 1], [0, 0.5, 1.25, 3]), stream)
    assert stream.getvalue() == "VFT1\n2 1 1\n0.0\n0.5\n1.25\n3.0\n"


def test_vft_keeps_every_bit():
    V = tensor([2], [0, 1 / 3.0, 2 / 7.0])
    stream = StringIO()
    write_vft(V, stream)
    stream.seek(0)
    assert read_vft(stream) == V


@pytest.mark.parametrize("text", [
    "",
    "VFT2\n1 1\n0\n1\n",
    "VFT1\n",
    "VFT1\n2 1\n0\n1\n",
    "VFT1\n1 0\n0\n",
    "VFT1\n1 2\n0\n1\n",
    "VFT1\n1 1\n0\nabc\n",
    "VFT1\n1 1\n1\n2\n",
])
def test_vft_malformed(text):
    with pytest.raises(FormatError):
        read_vft(StringIO(text))


def test_vft_values_split_on_any_whitespace():
    expected = tensor([2], [0, 5, 8])
    assert read_vft(StringIO("VFT1\n1 2\n0 5 8\n")) == expected
    assert read_vft(StringIO("VFT1\n1 2\n0\t5\n\n8\n")) == expected


def _saved(tmpdir, spec):
    path = os.path.join(tmpdir.strpath, 'dataset')
    storage = DatasetRepository(path)
    clients = build_dataset(spec)
    storage.save(spec, clients)
    return path, storage, clients


def test_dataset_repository_files(tmpdir):
    spec = DatasetSpec('increasing', 3, [2, 1], seed=4)
    path, storage, _ = _saved(tmpdir, spec)
    names = sorted(os.listdir(path))
    assert names == ['client_0.vft', 'client_1.vft', 'client_2.vft',
                     'components.csv', 'meta.csv', 'spec.cfg']
    with open(os.path.join(path, 'components.csv')) as stream:
        lines = stream.read().splitlines()
    assert lines[0] == 'agent_id,resource,unit,value'
    # 3 clients with components of 3 and 2 values
    assert len(lines) == 1 + 3 * 5


def test_dataset_repository_load(tmpdir):
    spec = DatasetSpec('mostly-increasing', 4, [3, 2], seed=9)
    _, storage, clients = _saved(tmpdir, spec)
    assert storage.exists()
    loaded_spec, loaded = storage.load()
    assert loaded_spec == spec
    assert len(loaded) == 4
    for x, y in zip(clients, loaded):
        assert x.agent_id == y.agent_id
        assert x.valuation == y.valuation
        assert x.max_value == y.max_value
        assert x.bundle_cost == y.bundle_cost
        for u, v in zip(x.components, y.components):
            assert np.array_equal(u, v)


def test_dataset_repository_is_deterministic(tmpdir):
    spec = DatasetSpec('concave', 4, [8], seed=7)
    one = DatasetRepository(os.path.join(tmpdir.strpath, 'one'))
    two = DatasetRepository(os.path.join(tmpdir.strpath, 'two'))
    one.save(spec, build_dataset(spec))
    two.save(spec, build_dataset(spec))
    for name in os.listdir(one.path):
        with open(os.path.join(one.path, name)) as x, open(os.path.join(two.path, name)) as y:
            assert x.read() == y.read()


def test_dataset_repository_missing(tmpdir):
    storage = DatasetRepository(os.path.join(tmpdir.strpath, 'nothing'))
    assert not storage.exists()
    with pytest.raises(DatasetError):
        storage.load()


def test_dataset_repository_reports_every_broken_file(tmpdir):
    spec = DatasetSpec('increasing', 3, [2], seed=1)
    path, storage, _ = _saved(tmpdir, spec)
    os.remove(os.path.join(path, 'client_1.vft'))
    with open(os.path.join(path, 'client_2.vft'), 'w') as stream:
        stream.write("VFT1\n1 2\n0\n")
    with pytest.raises(DatasetError) as err:
        storage.load()
    assert len(err.value.rows) == 2
    assert err.value.rows[0].startswith('client_1.vft')
    assert err.value.rows[1].startswith('client_2.vft')


def test_dataset_repository_bad_spec(tmpdir):
    spec = DatasetSpec('increasing', 2, [2], seed=1)
    path, storage, _ = _saved(tmpdir, spec)
    with open(os.path.join(path, 'spec.cfg'), 'w') as stream:
        stream.write("[dataset]\nkind = convex\n")
    with pytest.raises(DatasetError):
        storage.load()


def test_write_csv(tmpdir):
    path = os.path.join(tmpdir.strpath, 'out.csv')
    write_csv(path, [Struct(a=1, b='x', c=None), Struct(a=2, b='y', c=None)], ['a', 'b'])
    with open(path) as stream:
        assert stream.read().splitlines() == ['a,b', '1,x', '2,y']


def test_format_table():
    rows = [{'agent_id': 1, 'allocation': (2, 0), 'value': 5.0},
            {'agent_id': 10, 'allocation': (0, 1), 'value': 0.125}]
    lines = format_table(rows, ['agent_id', 'allocation', 'value']).splitlines()
    assert lines[0].split() == ['agent_id', 'allocation', 'value']
    assert lines[2].split() == ['1', '2,0', '5']
    assert lines[3].split() == ['10', '0,1', '0.125']


def test_dump_yaml(tmpdir):
    path = os.path.join(tmpdir.strpath, 'out.yaml')
    dump_yaml({'suite': 'oracle', 'passed': True, 'failures': []}, path)
    with open(path) as stream:
        assert yaml.safe_load(stream) == {'suite': 'oracle', 'passed': True, 'failures': []}


if __name__ == "__main__":
    pytest.main(['-v', __file__])
