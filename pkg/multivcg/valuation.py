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
Valuation tensors, allocations and discrete gradients.

An *allocation* is a plain tuple of R nonnegative unit counts.  A
valuation assigns a monetary value to every allocation in the grid
``0 <= a <= m``; values are stored densely in row-major order, so
that the linear index of ``a`` is ``sum(a[r] * stride[r])`` and the
linear index of a sum of two allocations is the sum of their linear
indices (as long as the sum stays within the grid).

Boundary conventions for one-sided derivatives: the left derivative
in resource *r* is ``+inf`` where ``a[r] == 0``, the right derivative
is ``0`` where ``a[r] == m[r]``.  Infinity is IEEE ``numpy.inf``; it
is only compared or negated, never added.
"""

__docformat__ = 'reStructuredText'


# stdlib imports
from builtins import object
from collections import namedtuple
from functools import reduce
import operator

# 3rd party imports
import numpy as np

# multivcg imports
from multivcg import log
from multivcg.exceptions import (
    CapacityMismatch,
    ContractViolation,
    ValuationError,
)


INF = np.inf

TOLERANCE = 1e-9
"""
Tolerance for comparing monetary values, see `close`:func:.
"""

_MAX_GRID_SIZE = np.iinfo(np.int64).max


class ResourceCapacity(object):
    """
    Number of units available for each resource.

    Instances are immutable, hashable and compare by value::

      >>> cap = ResourceCapacity([3, 3])
      >>> cap.R, cap.size, cap.shape
      (2, 16, (4, 4))
    """

    __slots__ = ('_units', '_shape', '_strides', '_size')

    def __init__(self, units):
        try:
            units = tuple(int(m) for m in units)
        except TypeError:
            units = (int(units),)
        if not units:
            raise ContractViolation("A capacity needs at least one resource.")
        if any(m < 1 for m in units):
            raise ContractViolation(
                "Every resource needs at least one unit, got {0}"
                .format(list(units)))
        shape = tuple(m + 1 for m in units)
        size = reduce(operator.mul, (int(s) for s in shape), 1)
        if size > _MAX_GRID_SIZE:
            raise ContractViolation(
                "Grid of shape {0} does not fit a 64-bit index".format(shape))
        strides = []
        stride = 1
        for s in reversed(shape):
            strides.append(stride)
            stride *= s
        self._units = units
        self._shape = shape
        self._strides = tuple(reversed(strides))
        self._size = size

    @property
    def units(self):
        return self._units

    @property
    def R(self):
        """Number of resources."""
        return len(self._units)

    @property
    def shape(self):
        return self._shape

    @property
    def strides(self):
        """Row-major strides, in cells."""
        return self._strides

    @property
    def size(self):
        """Number of grid cells ``N = prod(m_r + 1)``."""
        return self._size

    def __iter__(self):
        return iter(self._units)

    def __len__(self):
        return len(self._units)

    def __eq__(self, other):
        if not isinstance(other, ResourceCapacity):
            return NotImplemented
        return self._units == other._units

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    def __hash__(self):
        return hash(self._units)

    def __repr__(self):
        return 'ResourceCapacity({0!r})'.format(list(self._units))

    def __str__(self):
        return ','.join(str(m) for m in self._units)

    def zero(self):
        """Return the all-zero allocation."""
        return (0,) * self.R

    def contains(self, a):
        """Return ``True`` if allocation `a` lies in the grid."""
        return (len(a) == self.R
                and all(0 <= x <= m for x, m in zip(a, self._units)))

    def grid(self):
        """
        Return the integer coordinates of all cells, row-major,
        as an array of shape ``(N, R)``.
        """
        return np.array(np.unravel_index(np.arange(self._size), self._shape)).T


def linear_index(a, cap):
    """
    Return the row-major index of allocation `a` in the grid of `cap`.

      >>> linear_index((1, 2), ResourceCapacity([3, 3]))
      6
    """
    if not cap.contains(a):
        raise ContractViolation(
            "Allocation {0} is outside the grid of capacity {1}"
            .format(tuple(a), list(cap.units)))
    return int(sum(int(x) * s for x, s in zip(a, cap.strides)))


def allocation_at(index, cap):
    """
    Inverse of `linear_index`:func:.

      >>> allocation_at(6, ResourceCapacity([3, 3]))
      (1, 2)
    """
    index = int(index)
    if not (0 <= index < cap.size):
        raise ContractViolation(
            "Index {0} is outside the grid of capacity {1}"
            .format(index, list(cap.units)))
    return tuple(int(x) for x in np.unravel_index(index, cap.shape))


def close(x, y, tol=TOLERANCE):
    """
    Return ``True`` if monetary values `x` and `y` differ by at most
    `tol`, taken relative to their magnitude once it exceeds 1.

      >>> close(1e6, 1e6 + 1e-4)
      True
      >>> close(0.0, 1e-6)
      False
    """
    return abs(x - y) <= tol * max(1.0, abs(x), abs(y))


GradientPair = namedtuple('GradientPair', 'left right')
GradientPair.__doc__ = """
Left and right partial derivatives at one allocation, one entry per resource.
"""


class ValuationTensor(object):
    """
    Dense valuation over all allocations ``0 <= a <= m``.

    The value of the empty allocation is 0; all values are finite and
    nonnegative.  Instances are read-only.

    :param cap: a `ResourceCapacity` (or a sequence of unit counts)
    :param values: array-like holding either ``N`` values in row-major
                   order or an array of shape ``cap.shape``
    :param bool shift: if true, subtract the value of the empty
                       allocation from every cell instead of rejecting
                       a nonzero value there
    """

    __slots__ = ('_capacity', '_values', '_gradients', '__weakref__')

    def __init__(self, cap, values, shift=False):
        if not isinstance(cap, ResourceCapacity):
            cap = ResourceCapacity(cap)
        arr = np.array(values, dtype=np.float64)
        if arr.size != cap.size:
            raise ValuationError(
                "Expected {0} values for capacity {1}, got {2}"
                .format(cap.size, list(cap.units), arr.size))
        arr = arr.reshape(cap.shape)
        if not np.all(np.isfinite(arr)):
            raise ValuationError("Valuation values must be finite.")
        origin = arr.flat[0]
        if origin != 0:
            if not shift:
                raise ValuationError(
                    "Value of the empty allocation must be 0, got {0!r}"
                    .format(origin))
            log.warning(
                "Shifting valuation by %g so that the empty allocation"
                " has value 0", -origin)
            arr = arr - origin
            arr.flat[0] = 0.0
        if np.any(arr < 0):
            raise ValuationError("Valuation values must be nonnegative.")
        arr.setflags(write=False)
        self._capacity = cap
        self._values = arr
        self._gradients = None

    @classmethod
    def zeros(cls, cap):
        """Return the all-zero valuation (the identity of joins)."""
        if not isinstance(cap, ResourceCapacity):
            cap = ResourceCapacity(cap)
        return cls(cap, np.zeros(cap.shape))

    @property
    def capacity(self):
        return self._capacity

    @property
    def values(self):
        """Read-only array of shape ``capacity.shape``."""
        return self._values

    @property
    def flat(self):
        """Read-only row-major view of length ``N``."""
        return self._values.reshape(-1)

    def __call__(self, a):
        if not self._capacity.contains(a):
            raise ContractViolation(
                "Allocation {0} is outside the grid of capacity {1}"
                .format(tuple(a), list(self._capacity.units)))
        return float(self._values[tuple(a)])

    def __eq__(self, other):
        if not isinstance(other, ValuationTensor):
            return NotImplemented
        return (self._capacity == other._capacity
                and np.array_equal(self._values, other._values))

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    __hash__ = None

    def __repr__(self):
        return ('<ValuationTensor capacity={0} max={1:g}>'
                .format(list(self._capacity.units), self.max()))

    def max(self):
        return float(self._values.max())

    def argmax(self):
        """
        Return the allocation with the largest value; ties go to the
        lowest linear index.
        """
        return allocation_at(int(np.argmax(self.flat)), self._capacity)

    def gradient_arrays(self):
        """
        Return ``(left, right)``: arrays of shape ``(R,) + capacity.shape``
        holding the left and right partial derivatives at every cell.

        The arrays are computed once and cached; they are read-only.
        """
        if self._gradients is None:
            self._gradients = _compute_gradients(self._values)
        return self._gradients

    def check_capacity(self, cap, agent_id=None):
        """
        Raise `CapacityMismatch` unless this tensor has capacity `cap`.
        """
        if self._capacity == cap:
            return
        if agent_id is not None:
            raise CapacityMismatch(
                "Bid of agent `{0}` has capacity {1}, auction has {2}"
                .format(agent_id, list(self._capacity.units), list(cap.units)),
                agent_id=agent_id)
        raise CapacityMismatch(
            "Capacity {0} does not match {1}"
            .format(list(self._capacity.units), list(cap.units)))


def _compute_gradients(values):
    R = values.ndim
    left = np.empty((R,) + values.shape)
    right = np.empty((R,) + values.shape)
    for r in range(R):
        diff = np.diff(values, axis=r)
        lead = [slice(None)] * R
        lead[r] = slice(0, 1)
        rest = [slice(None)] * R
        rest[r] = slice(1, None)
        left[r][tuple(lead)] = INF
        left[r][tuple(rest)] = diff
        head = [slice(None)] * R
        head[r] = slice(0, -1)
        tail = [slice(None)] * R
        tail[r] = slice(-1, None)
        right[r][tuple(head)] = diff
        right[r][tuple(tail)] = 0.0
    left.setflags(write=False)
    right.setflags(write=False)
    return left, right


def gradients(V, a):
    """
    Return the `GradientPair` of valuation `V` at allocation `a`.

      >>> V = ValuationTensor([2], [0, 5, 8])
      >>> gradients(V, (1,))
      GradientPair(left=(5.0,), right=(3.0,))
      >>> gradients(V, (0,)).left
      (inf,)
    """
    if not V.capacity.contains(a):
        raise ContractViolation(
            "Allocation {0} is outside the grid of capacity {1}"
            .format(tuple(a), list(V.capacity.units)))
    left, right = V.gradient_arrays()
    cell = (slice(None),) + tuple(a)
    return GradientPair(tuple(float(x) for x in left[cell]),
                        tuple(float(x) for x in right[cell]))


def pareto_mask(V):
    """
    Return a boolean array of shape ``V.capacity.shape``, true where
    every left partial derivative of `V` is positive.
    """
    left, _ = V.gradient_arrays()
    return np.all(left > 0, axis=0)


def survivor_indices(V):
    """
    Return the linear indices of the Pareto survivors of `V`, ascending.
    """
    return np.flatnonzero(pareto_mask(V).reshape(-1))


def pareto_survivors(V):
    """
    Return the set of allocations of `V` whose left partial derivatives
    are all positive.

      >>> sorted(pareto_survivors(ValuationTensor.zeros([2, 2])))
      [(0, 0)]
    """
    cap = V.capacity
    return set(allocation_at(i, cap) for i in survivor_indices(V))
