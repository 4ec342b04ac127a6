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

import pytest
from mock import Mock, patch

from multivcg.utils import (
    Struct,
    confirm_or_abort,
    environment,
    get_thread_pool_size,
    median_time_ns,
    pool_map,
    string_to_boolean,
)


@pytest.mark.parametrize("word,expected", [
    ('yes', True),
    (' 1 ', True),
    ('On', True),
    ('TRUE', True),
    ('no', False),
    ('  ', False),
    ('0', False),
    (True, True),
    (False, False),
])
def test_string_to_boolean(word, expected):
    assert string_to_boolean(word) is expected


def test_struct():
    s = Struct({'a': 1}, b=2)
    s.c = 3
    s['d'] = 4
    assert s['c'] == 3
    assert s.d == 4
    assert sorted(s.keys()) == ['a', 'b', 'c', 'd']
    assert dict(s.copy()) == {'a': 1, 'b': 2, 'c': 3, 'd': 4}
    del s['a']
    assert 'a' not in s
    assert len(s) == 3


def test_environment():
    os.environ['MULTIVCG_TEST_KEEP'] = 'old'
    os.environ.pop('MULTIVCG_TEST_NEW', None)
    try:
        with environment(MULTIVCG_TEST_KEEP='new', MULTIVCG_TEST_NEW='x'):
            assert os.environ['MULTIVCG_TEST_KEEP'] == 'new'
            assert os.environ['MULTIVCG_TEST_NEW'] == 'x'
        assert os.environ['MULTIVCG_TEST_KEEP'] == 'old'
        assert 'MULTIVCG_TEST_NEW' not in os.environ
    finally:
        del os.environ['MULTIVCG_TEST_KEEP']


def test_thread_pool_size():
    assert get_thread_pool_size(4, 2) == 2
    assert get_thread_pool_size(4, 0) == 1
    assert get_thread_pool_size(3) == 3
    with patch('multivcg.utils.get_num_processors', return_value=6):
        assert get_thread_pool_size(0) == 6
    with patch('multivcg.utils.get_num_processors', side_effect=RuntimeError):
        assert get_thread_pool_size(0) == 1


def test_pool_map_keeps_order():
    def square(x):
        return x * x

    assert pool_map(square, range(20), max_workers=4) == [x * x for x in range(20)]
    assert pool_map(square, [], max_workers=4) == []
    assert pool_map(square, [3]) == [9]


def test_median_time_ns():
    func = Mock(return_value='done')
    median_ns, result = median_time_ns(func, repeats=3)
    assert func.call_count == 3
    assert result == 'done'
    assert median_ns >= 0
    with pytest.raises(ValueError):
        median_time_ns(func, repeats=0)


def test_confirm_or_abort():
    with patch('click.confirm', return_value=True):
        assert confirm_or_abort("Overwrite?")
    with patch('click.confirm', return_value=False):
        with pytest.raises(SystemExit) as info:
            confirm_or_abort("Overwrite?", exitcode=3, msg="Aborting.")
    assert info.value.code == 3


if __name__ == "__main__":
    pytest.main(['-v', __file__])
