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


class ConfigurationError(Exception):
    pass


class ContractViolation(ValueError):
    """
    A library operation was called outside of its preconditions.
    """
    pass


class CapacityMismatch(ContractViolation):
    """
    Two valuations (or a bid and the auction) disagree on the capacity.
    """
    def __init__(self, msg=None, agent_id=None):
        if msg is None:
            if agent_id is None:
                msg = "Valuation capacities do not match."
            else:
                msg = ("Bid of agent `{0}` does not match the auction capacity."
                       .format(agent_id))
        super(CapacityMismatch, self).__init__(msg)
        self.agent_id = agent_id


class StaleHandle(ContractViolation):
    pass


class ValuationError(ValueError):
    """
    Tensor values break the valuation invariants
    (finite, nonnegative, zero at the empty allocation).
    """
    pass


class NotConcave(ValuationError):
    pass


class FormatError(ValueError):
    pass


class DatasetError(Exception):
    """
    A dataset directory or cost file cannot be used.

    The `rows` attribute lists the offending input rows, if any.
    """
    def __init__(self, msg, rows=()):
        super(DatasetError, self).__init__(msg)
        self.rows = list(rows)


class OracleMismatch(AssertionError):
    def __init__(self, msg, differences=()):
        super(OracleMismatch, self).__init__(msg)
        self.differences = list(differences)


class VerificationFailed(AssertionError):
    """
    A verification suite found a counterexample.

    Attributes `seed` and `command` identify the failing instance and
    a command line that reproduces it.
    """
    def __init__(self, msg, seed=None, command=None):
        super(VerificationFailed, self).__init__(msg)
        self.seed = seed
        self.command = command
