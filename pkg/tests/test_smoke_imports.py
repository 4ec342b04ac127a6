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
# pylint: disable=missing-docstring,unused-variable,unused-import

from __future__ import absolute_import

# this is needed to get logging info in `py.test` when something fails
import logging
logging.basicConfig()

import pytest


def test_smoke_imports_top():
    import multivcg.__main__
    import multivcg.subcommands


def test_smoke_imports_drivers():
    import multivcg.bench
    import multivcg.verify
    import multivcg.oracles
    import multivcg.baselines


def test_public_api():
    import multivcg
    for name in ('ResourceCapacity', 'ValuationTensor', 'join', 'naive_join',
                 'Bid', 'AuctionResult', 'run_vcg_auction', 'log'):
        assert hasattr(multivcg, name)


if __name__ == "__main__":
    pytest.main(['-v', __file__])
