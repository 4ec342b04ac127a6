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
Exact multi-unit, multi-resource VCG auctions.

Valuations are dense tensors over unit allocations; agents are merged
pairwise into joint valuations by a derivative-filtered join backed by
upper-bound query structures, and payments follow the exclusion
compensation principle.
"""
__docformat__ = 'reStructuredText'
__version__ = '1.0.dev1'


# stdlib imports
import logging

# public API
log = logging.getLogger("multivcg")


from multivcg.valuation import ResourceCapacity, ValuationTensor
from multivcg.join import join, naive_join
from multivcg.auction import Bid, AuctionResult, run_vcg_auction
