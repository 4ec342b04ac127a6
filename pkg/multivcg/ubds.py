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
Upper-bound (dominance) query structures.

Every allocation ``a`` of a valuation ``V`` is mapped to a vector of
``k = 3R`` coordinates::

    (right derivatives of V at a, negated left derivatives of V at a, a)

and a query asks for all stored vectors that are element-wise ``<=``
a bound.  All structures share the interface:

* `construct`:func: builds an index of a given *kind*;
* `UpperBoundIndex.query` returns a `QueryHandle` owned by the caller;
* `UpperBoundIndex.fetch` returns the candidate rows for a handle.

Candidates always include every exact match; kinds ``sim_1d``,
``sim_2d_trees`` and ``combination`` may also return false positives,
which callers remove by re-checking the bound.

The searching structures all descend the same implicit binary tree
over a sorted array: node ``[lo, hi)`` splits at ``mid = (lo+hi)//2``
into ``[lo, mid)`` and ``[mid, hi)``.  A descent toward a bound ``q``
goes right when ``a[mid-1] <= q``, in which case the left child
matches entirely; the left children passed over this way (plus a
matching final leaf) partition the prefix of matching entries.
"""

__docformat__ = 'reStructuredText'


# compatibility imports
from future.utils import with_metaclass

# stdlib imports
from abc import ABCMeta, abstractmethod
from builtins import object
from collections import namedtuple
import threading

# 3rd party imports
import numpy as np

# multivcg imports
from multivcg import log
from multivcg.exceptions import ContractViolation, StaleHandle
from multivcg.valuation import (
    ResourceCapacity,
    allocation_at,
    gradients,
    linear_index,
    survivor_indices,
)


KINDS = ('linear_scan', 'sim_1d', 'sim_2d_trees', 'combination', 'kd_tree')
"""
Names of the available index kinds.
"""

EXACT_KINDS = ('linear_scan', 'kd_tree')

DEFAULT_KIND = 'combination'

KD_TREE_MAX_VECTORS = 2 ** 10
KD_TREE_MAX_RESOURCES = 2


UBVector = namedtuple('UBVector', 'coords payload')
UBVector.__doc__ = """
A stored vector: `coords` has ``3R`` entries, `payload` is the
originating allocation.
"""

QueryBound = namedtuple('QueryBound', 'coords')


def ub_vector(V, a):
    """
    Return the `UBVector` of allocation `a` of valuation `V`.
    """
    left, right = _gradients_at(V, a)
    return UBVector(
        tuple(right) + tuple(-x for x in left) + tuple(float(x) for x in a),
        tuple(int(x) for x in a))


def query_bound(V, a):
    """
    Return the `QueryBound` matching partners of allocation `a` of `V`.

    The bound is ``(left derivatives, negated right derivatives, m - a)``.
    """
    left, right = _gradients_at(V, a)
    units = V.capacity.units
    return QueryBound(
        tuple(left) + tuple(-x for x in right)
        + tuple(float(m - x) for m, x in zip(units, a)))


def _gradients_at(V, a):
    pair = gradients(V, a)
    return pair.left, pair.right


class VectorSet(object):
    """
    A batch of stored vectors as a ``(n, 3R)`` matrix.

    `payload` holds, for each row, the linear index of the originating
    allocation (or the position in the input list, when no capacity
    is known).  Rows are kept in ascending payload order, which is the
    tie-break order of every sort in this module.
    """

    def __init__(self, coords, payload, cap=None):
        coords = np.asarray(coords, dtype=np.float64)
        if coords.ndim != 2:
            raise ContractViolation("Stored vectors must form a 2-d matrix.")
        if coords.shape[1] % 3:
            raise ContractViolation(
                "Stored vectors need 3R coordinates, got {0}"
                .format(coords.shape[1]))
        payload = np.asarray(payload, dtype=np.int64)
        if payload.shape != (coords.shape[0],):
            raise ContractViolation("One payload entry per vector is needed.")
        self.coords = coords
        self.payload = payload
        self.cap = cap

    @classmethod
    def from_valuation(cls, V, indices=None):
        """
        Build the stored vectors of valuation `V` at the cells with the
        given linear `indices` (default: its Pareto survivors).
        """
        cap = V.capacity
        if indices is None:
            indices = survivor_indices(V)
        indices = np.asarray(indices, dtype=np.int64)
        R = cap.R
        left, right = V.gradient_arrays()
        lefts = left.reshape(R, -1)[:, indices].T
        rights = right.reshape(R, -1)[:, indices].T
        alloc = np.array(np.unravel_index(indices, cap.shape),
                         dtype=np.float64).reshape(R, -1).T
        coords = np.hstack([rights, -lefts, alloc]).reshape(len(indices), 3 * R)
        return cls(coords, indices, cap)

    @classmethod
    def from_vectors(cls, vectors, cap=None):
        vectors = list(vectors)
        if not vectors:
            k = 3 * cap.R if cap is not None else 0
            return cls(np.empty((0, k)), np.empty(0, dtype=np.int64), cap)
        k = len(vectors[0].coords)
        if any(len(v.coords) != k for v in vectors):
            raise ContractViolation("Stored vectors must share one dimensionality.")
        coords = np.array([v.coords for v in vectors], dtype=np.float64)
        if cap is not None:
            payload = [linear_index(v.payload, cap) for v in vectors]
        else:
            payload = list(range(len(vectors)))
        return cls(coords, payload, cap)

    def __len__(self):
        return self.coords.shape[0]

    @property
    def k(self):
        return self.coords.shape[1]

    @property
    def R(self):
        return self.coords.shape[1] // 3

    def vector(self, row):
        """Return row `row` as a `UBVector`."""
        coords = self.coords[row]
        alloc = tuple(int(x) for x in coords[2 * self.R:])
        return UBVector(tuple(float(x) for x in coords), alloc)

    def matches(self, rows, q):
        """
        Return the subset of `rows` whose vectors are ``<= q`` element-wise.
        """
        if len(rows) == 0:
            return rows
        return rows[np.all(self.coords[rows] <= q, axis=1)]


def query_bounds(V, indices):
    """
    Return the query bounds of `V` at the given linear `indices` as a
    ``(len(indices), 3R)`` matrix.
    """
    cap = V.capacity
    R = cap.R
    indices = np.asarray(indices, dtype=np.int64)
    left, right = V.gradient_arrays()
    lefts = left.reshape(R, -1)[:, indices].T
    rights = right.reshape(R, -1)[:, indices].T
    alloc = np.array(np.unravel_index(indices, cap.shape),
                     dtype=np.float64).reshape(R, -1).T
    units = np.array(cap.units, dtype=np.float64)
    return np.hstack([lefts, -rights, units - alloc]).reshape(len(indices), 3 * R)


## boundary classes

def _nonvital(coords, units, minima):
    """
    Return a boolean matrix marking dimensions that need no filtering.
    """
    n, k = coords.shape
    R = k // 3
    alloc = coords[:, 2 * R:]
    nonvital = np.zeros((n, k), dtype=bool)
    nonvital[:, :R] = alloc == units
    nonvital[:, R:2 * R] = alloc == 0
    if minima is not None:
        nonvital[:, :2 * R] |= coords[:, :2 * R] <= minima[:2 * R]
    return nonvital


def _masks(vital):
    weights = np.left_shift(np.int64(1), np.arange(vital.shape[1], dtype=np.int64))
    return vital.astype(np.int64).dot(weights)


def classify_boundary(v, cap, minima=None):
    """
    Return the bitmask of vital dimensions of stored vector `v`.

    Bit ``d`` is set when dimension ``d`` must be filtered on.  A
    derivative dimension is not vital when a boundary forces it to its
    minimum (right derivative where ``a[r] == m[r]``, negated left
    derivative where ``a[r] == 0``) or, if `minima` is given, when it
    equals the minimum of that dimension over the stored set.
    Allocation dimensions are always vital.
    """
    coords = np.asarray(getattr(v, 'coords', v), dtype=np.float64).reshape(1, -1)
    if coords.shape[1] != 3 * cap.R:
        raise ContractViolation(
            "Vector has {0} coordinates, capacity {1} needs {2}"
            .format(coords.shape[1], list(cap.units), 3 * cap.R))
    units = np.array(cap.units, dtype=np.float64)
    if minima is not None:
        minima = np.asarray(minima, dtype=np.float64)
    return int(_masks(~_nonvital(coords, units, minima))[0])


def vital_dimensions(mask, k):
    """Return the list of dimensions set in `mask`."""
    return [d for d in range(k) if (mask >> d) & 1]


## query handles

class QueryHandle(object):
    """
    Result of `UpperBoundIndex.query`, to be passed to `fetch`.

    A handle holds no reference to internal index state other than
    read-only array views, so any number of handles may be in use
    at the same time.
    """

    __slots__ = ('index', 'segments')

    def __init__(self, index, segments):
        self.index = index
        self.segments = segments

    def __len__(self):
        return sum(len(seg) for seg in self.segments)


class UpperBoundIndex(with_metaclass(ABCMeta, object)):
    """
    Defines the contract every upper-bound index has to fulfill.

    Subclasses implement `_search`, returning a list of integer arrays
    of stored row numbers whose union is the candidate set.
    """

    kind = None

    def __init__(self, vectors):
        self.vectors = vectors

    @property
    def count(self):
        """Number of stored vectors."""
        return len(self.vectors)

    def __len__(self):
        return self.count

    def query(self, q):
        """
        Start an upper-bound query; return a `QueryHandle`.

        :param q: a `QueryBound`, or a sequence of ``3R`` numbers.
        """
        q = np.asarray(getattr(q, 'coords', q), dtype=np.float64)
        if q.shape != (self.vectors.k,):
            raise ContractViolation(
                "Query has shape {0}, index stores {1}-dimensional vectors"
                .format(q.shape, self.vectors.k))
        return QueryHandle(self, self._search(q))

    def fetch(self, handle):
        """
        Return the candidate row numbers of a query, as an integer array.
        """
        if handle.index is not self:
            raise StaleHandle("Query handle was issued by another index.")
        if not handle.segments:
            return np.empty(0, dtype=np.int64)
        if len(handle.segments) == 1:
            return handle.segments[0]
        return np.concatenate(handle.segments)

    def fetch_vectors(self, handle):
        """
        Return the candidates of a query as a list of `UBVector`.
        """
        return [self.vectors.vector(row) for row in self.fetch(handle)]

    @abstractmethod
    def _search(self, q):
        pass


class EmptyIndex(UpperBoundIndex):
    """
    Index over no vectors: every query fetches nothing.
    """

    def __init__(self, vectors, kind):
        super(EmptyIndex, self).__init__(vectors)
        self.kind = kind

    def query(self, q):
        if self.vectors.k == 0:
            # dimensionality unknown
            return QueryHandle(self, [])
        return super(EmptyIndex, self).query(q)

    def _search(self, q):
        return []


class LinearScanIndex(UpperBoundIndex):
    """
    Compare the bound against every stored vector.
    """

    kind = 'linear_scan'

    def _search(self, q):
        rows = np.flatnonzero(np.all(self.vectors.coords <= q, axis=1))
        return [rows] if len(rows) else []


## layered sorted arrays

def _tree_levels(n):
    """
    Return, for each depth of the implicit search tree over ``n`` entries,
    the node boundaries as a pair ``(starts, ends)`` of arrays.

    Leaves are repeated at all depths below their own, so every level
    covers ``[0, n)``.
    """
    starts = np.array([0], dtype=np.int64)
    ends = np.array([n], dtype=np.int64)
    levels = [(starts, ends)]
    while np.any(ends - starts >= 2):
        split = ends - starts >= 2
        mids = (starts + ends) // 2
        new_starts = np.concatenate([starts, mids[split]])
        new_ends = np.concatenate([np.where(split, mids, ends), ends[split]])
        order = np.argsort(new_starts, kind='stable')
        starts, ends = new_starts[order], new_ends[order]
        levels.append((starts, ends))
    return levels


def _secondary_layers(coords, main_rows, dim, levels):
    """
    For each tree level, sort every node's entries by dimension `dim`.

    Return a list of ``(rows, values)`` pairs, one per level; entries of
    node ``[lo, hi)`` occupy positions ``lo..hi-1`` in both arrays.
    """
    values = coords[main_rows, dim]
    layers = []
    for starts, ends in levels:
        seg = np.repeat(np.arange(len(starts)), ends - starts)
        perm = np.lexsort((values, seg))
        layers.append((main_rows[perm], values[perm]))
    return layers


class _LayeredArrays(object):
    """
    Sorted arrays over a subset of stored rows, searched simultaneously.

    `main_dims` are the dimensions with their own sorted array.  For
    each main dimension ``d``, `secondaries[d]` lists dimensions for
    which every binary-search partition of ``d``'s array carries a
    sub-array sorted by that dimension (a layered 2-d tree).
    """

    def __init__(self, coords, rows, main_dims, secondaries=None):
        self._n = len(rows)
        self._main_dims = np.array(main_dims, dtype=np.int64)
        self.sorted_rows = {}
        self._main_vals = np.empty((len(main_dims), self._n))
        for i, d in enumerate(main_dims):
            order = np.argsort(coords[rows, d], kind='stable')
            self.sorted_rows[d] = rows[order]
            self._main_vals[i] = coords[self.sorted_rows[d], d]
        self._secondaries = dict((d, list(es)) for d, es in (secondaries or {}).items() if es)
        self._layers = {}
        if self._secondaries:
            levels = _tree_levels(self._n)
            for d, es in self._secondaries.items():
                for e in es:
                    self._layers[(d, e)] = _secondary_layers(
                        coords, self.sorted_rows[d], e, levels)

    def simultaneous_search(self, q):
        """
        Search all main arrays at once.

        Return ``(dim, partitions)``: the main dimension with the
        fewest entries ``<= q`` (lowest dimension on ties) and the list
        of ``(lo, hi, depth)`` partitions of its array covering exactly
        those entries.
        """
        vals = self._main_vals
        qd = q[self._main_dims]
        active = np.arange(len(self._main_dims))
        lo, hi, depth = 0, self._n, 0
        partitions = []
        while hi - lo >= 2:
            mid = (lo + hi) // 2
            lower = active[vals[active, mid - 1] > qd[active]]
            if len(lower):
                active = lower
                hi = mid
            else:
                partitions.append((lo, mid, depth + 1))
                lo = mid
            depth += 1
        failing = active[vals[active, lo] > qd[active]]
        if len(failing):
            active = failing
        else:
            partitions.append((lo, hi, depth))
        return int(self._main_dims[active[0]]), partitions

    def search(self, q):
        dim, partitions = self.simultaneous_search(q)
        rows = self.sorted_rows[dim]
        secondaries = self._secondaries.get(dim)
        if not secondaries:
            end = partitions[-1][1] if partitions else 0
            return [rows[:end]] if end else []
        segments = []
        for lo, hi, depth in partitions:
            best = None
            for e in secondaries:
                layer_rows, layer_vals = self._layers[(dim, e)][depth]
                found = int(np.searchsorted(layer_vals[lo:hi], q[e], side='right'))
                if best is None or found < best[0]:
                    best = (found, layer_rows)
            found, layer_rows = best
            if found:
                segments.append(layer_rows[lo:lo + found])
        return segments


def _same_resource(dims, R):
    return dict(
        (d, [e for e in dims if e != d and e % R == d % R])
        for d in dims)


class Sim1DIndex(UpperBoundIndex):
    """
    One sorted array per dimension, searched simultaneously; the
    candidates are the matching prefix of the most selective array.
    """

    kind = 'sim_1d'

    def __init__(self, vectors):
        super(Sim1DIndex, self).__init__(vectors)
        rows = np.arange(len(vectors), dtype=np.int64)
        self._arrays = _LayeredArrays(vectors.coords, rows, range(vectors.k))

    def _search(self, q):
        return self._arrays.search(q)


class Sim2DTreesIndex(UpperBoundIndex):
    """
    Simultaneous search over all dimensions; every partition of the
    chosen array is then narrowed through the layered 2-d trees of the
    two other dimensions of the same resource, keeping whichever
    yields fewer vectors.
    """

    kind = 'sim_2d_trees'

    def __init__(self, vectors):
        super(Sim2DTreesIndex, self).__init__(vectors)
        rows = np.arange(len(vectors), dtype=np.int64)
        dims = list(range(vectors.k))
        self._arrays = _LayeredArrays(
            vectors.coords, rows, dims, _same_resource(dims, vectors.R))

    def _search(self, q):
        return self._arrays.search(q)


class _AllRows(object):

    def __init__(self, rows):
        self._rows = rows

    def search(self, q):
        return [self._rows]


class CombinationIndex(UpperBoundIndex):
    """
    Split vectors into classes by their vital dimensions and give each
    class the cheapest structure that filters those dimensions only.
    """

    kind = 'combination'

    def __init__(self, vectors):
        super(CombinationIndex, self).__init__(vectors)
        coords = vectors.coords
        R = vectors.R
        if vectors.cap is not None:
            units = np.array(vectors.cap.units, dtype=np.float64)
        else:
            units = coords[:, 2 * R:].max(axis=0)
        minima = coords.min(axis=0)
        masks = _masks(~_nonvital(coords, units, minima))
        self.classes = []
        for mask in np.unique(masks):
            rows = np.flatnonzero(masks == mask)
            vital = vital_dimensions(int(mask), vectors.k)
            if not vital:
                structure = _AllRows(rows)
            elif len(vital) == 1:
                structure = _LayeredArrays(coords, rows, vital)
            elif len(vital) == 2:
                structure = _LayeredArrays(
                    coords, rows, vital[:1], {vital[0]: vital[1:]})
            else:
                structure = _LayeredArrays(
                    coords, rows, vital, _same_resource(vital, R))
            self.classes.append((int(mask), structure))
        log.debug("Combination index: %d vectors in %d boundary classes",
                  len(vectors), len(self.classes))

    def _search(self, q):
        segments = []
        for _, structure in self.classes:
            segments.extend(structure.search(q))
        return segments


## layered k-d tree

class _DominanceNode(object):
    """
    Entries sorted by one dimension; every binary-search partition
    owns a sub-tree over the next dimension, built on first use.
    """

    __slots__ = ('_coords', '_rows', '_vals', '_dim', '_last', '_children', '_lock')

    def __init__(self, coords, rows, dim, lock):
        order = np.argsort(coords[rows, dim], kind='stable')
        self._coords = coords
        self._rows = rows[order]
        self._vals = coords[self._rows, dim]
        self._dim = dim
        self._last = (dim == coords.shape[1] - 1)
        self._children = {}
        self._lock = lock

    def _child(self, lo, hi):
        child = self._children.get((lo, hi))
        if child is None:
            with self._lock:
                child = self._children.get((lo, hi))
                if child is None:
                    child = _DominanceNode(
                        self._coords, self._rows[lo:hi], self._dim + 1, self._lock)
                    self._children[(lo, hi)] = child
        return child

    def _take(self, lo, hi, q, out):
        if self._last:
            out.append(self._rows[lo:hi])
        else:
            self._child(lo, hi).collect(q, out)

    def collect(self, q, out):
        lo, hi = 0, len(self._rows)
        if hi == 0:
            return
        bound = q[self._dim]
        while hi - lo >= 2:
            mid = (lo + hi) // 2
            if self._vals[mid - 1] <= bound:
                self._take(lo, mid, q, out)
                lo = mid
            else:
                hi = mid
        if self._vals[lo] <= bound:
            self._take(lo, hi, q, out)


class KDTreeIndex(UpperBoundIndex):
    """
    Layered range tree with one layer per dimension; exact.

    Sub-trees are built when a query first reaches them.
    """

    kind = 'kd_tree'

    def __init__(self, vectors):
        if len(vectors) > KD_TREE_MAX_VECTORS or vectors.R > KD_TREE_MAX_RESOURCES:
            raise ContractViolation(
                "kd_tree is limited to {0} vectors and {1} resources,"
                " got {2} vectors over {3} resources"
                .format(KD_TREE_MAX_VECTORS, KD_TREE_MAX_RESOURCES,
                        len(vectors), vectors.R))
        super(KDTreeIndex, self).__init__(vectors)
        rows = np.arange(len(vectors), dtype=np.int64)
        self._root = _DominanceNode(vectors.coords, rows, 0, threading.Lock())

    def _search(self, q):
        segments = []
        self._root.collect(q, segments)
        return segments


_INDEX_CLASSES = {
    'linear_scan': LinearScanIndex,
    'sim_1d': Sim1DIndex,
    'sim_2d_trees': Sim2DTreesIndex,
    'combination': CombinationIndex,
    'kd_tree': KDTreeIndex,
}


def construct(vectors, kind=DEFAULT_KIND, cap=None):
    """
    Build an upper-bound index of the given `kind`.

    :param vectors: a `VectorSet`, or a list of `UBVector`
    :param str kind: one of `KINDS`
    :param cap: capacity the vectors were built under (optional when
                `vectors` is a `VectorSet` that already records it)
    """
    try:
        cls = _INDEX_CLASSES[kind]
    except KeyError:
        raise ContractViolation(
            "Unknown index kind `{0}`; valid kinds are: {1}"
            .format(kind, ', '.join(KINDS)))
    if cap is not None and not isinstance(cap, ResourceCapacity):
        cap = ResourceCapacity(cap)
    if not isinstance(vectors, VectorSet):
        vectors = VectorSet.from_vectors(vectors, cap)
    elif cap is not None and vectors.cap is None:
        vectors.cap = cap
    if len(vectors) == 0:
        return EmptyIndex(vectors, kind)
    return cls(vectors)


def payload_allocations(index, rows):
    """
    Return the allocations of the given stored rows, as tuples.
    """
    cap = index.vectors.cap
    if cap is None:
        return [index.vectors.vector(row).payload for row in rows]
    return [allocation_at(p, cap) for p in index.vectors.payload[rows]]
