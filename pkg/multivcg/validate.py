#! /usr/bin/python
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
Custom validator functions for checking configuration values and
command-line options.
"""

from __future__ import (print_function, division, absolute_import)

# stdlib imports
import os

# 3rd-party modules
import schema

# multivcg imports
from multivcg.utils import string_to_boolean


## custom validators

def validator(fn):
    """
    Decorate a function for use as a validator with `schema`_

    .. _schema: https://github.com/keleshev/schema
    """
    return schema.Use(fn)


def one_of(*choices):
    """
    Allow only the given string values.
    """
    def _one_of(v):
        converted = str(v).strip()
        if converted not in choices:
            raise ValueError(
                "invalid value `{0}`: must be one of {1}"
                .format(v, ', '.join(choices)))
        return converted
    return validator(_one_of)


boolean = schema.Use(string_to_boolean)
"""
Allow values *1/yes/true* and *0/no/false* (case insensitive).
"""


def _file_name(v):
    try:
        return os.path.expanduser(v)
    except Exception as err:
        raise ValueError("invalid file name `{0}`: {1}".format(v, err))


@validator
def readable_file(v):
    f = _file_name(v)
    if os.access(f, os.R_OK):
        return f
    else:
        raise ValueError("cannot read file `{v}`".format(v=v))


@validator
def nonempty_str(v):
    converted = str(v)
    if not converted:
        raise ValueError("value must be a non-empty string")
    return converted


def _positive_int(v):
    converted = int(v)
    if converted > 0:
        return converted
    else:
        raise ValueError("value must be integer > 0")


positive_int = validator(_positive_int)


@validator
def nonnegative_int(v):
    converted = int(v)
    if converted < 0:
        raise ValueError("value must be a non-negative integer")
    return converted


@validator
def seed(v):
    converted = int(v)
    if not (0 <= converted < 2**64):
        raise ValueError("seed must be an integer in [0, 2**64)")
    return converted


@validator
def positive_float(v):
    converted = float(v)
    if converted > 0:
        return converted
    else:
        raise ValueError("value must be a number > 0")


@validator
def pareto_index(v):
    converted = float(v)
    if converted > 1:
        return converted
    else:
        raise ValueError("Pareto index must be > 1, got {0}".format(v))


def _int_list(v):
    if isinstance(v, (list, tuple)):
        items = list(v)
    else:
        items = [item for item in str(v).replace(' ', '').split(',') if item]
    if not items:
        raise ValueError("empty list `{0}`".format(v))
    return [_positive_int(item) for item in items]


int_list = validator(_int_list)
"""
Allow a comma-separated list of positive integers, e.g. ``15,15``.
"""


units_list = int_list
"""
Units per resource; every entry must be >= 1.
"""


def str_list(*choices):
    """
    Allow a comma-separated list of strings, each one of `choices`.
    """
    def _str_list(v):
        if isinstance(v, (list, tuple)):
            items = [str(item).strip() for item in v]
        else:
            items = [item.strip() for item in str(v).split(',') if item.strip()]
        if not items:
            raise ValueError("empty list `{0}`".format(v))
        for item in items:
            if item not in choices:
                raise ValueError(
                    "invalid value `{0}`: must be one of {1}"
                    .format(item, ', '.join(choices)))
        return items
    return validator(_str_list)
