#!/usr/bin/env python
# encoding: utf-8

# The MIT License
# Copyright (c) 2024 Ina (http://www.ina.fr/)
# See the LICENSE file distributed with this work for the full license text.

"""
CountSketch: every coordinate i of R^n is hashed to one of r buckets with a
random sign. The r x n matrix has exactly one +/-1 per column, so
``||S v||_1 <= ||v||_1`` for every v.

>>> import numpy as np
>>> from inaL1Sketch.numerics import Rng
>>> from inaL1Sketch.countsketch import build_countsketch
>>> op = build_countsketch(Rng(1), r=4, n=10)
>>> op(np.ones(10)).shape
(4,)
"""

import numpy as np
import scipy.sparse as sp

from .numerics import Rng, SketchOperator


def draw_signs(gen, n):
    """
    n independent uniform +/-1 values (float64)
    """
    return gen.integers(0, 2, int(n)).astype(np.float64) * 2. - 1.


class CountSketchOp(SketchOperator):
    """
    Immutable CountSketch operator with materialized hash and sign tables
    """
    def __init__(self, bucket_of, sign_of, r, seed=None, stream_id=None):
        bucket_of = np.asarray(bucket_of, dtype=np.int64)
        sign_of = np.asarray(sign_of, dtype=np.float64)
        assert bucket_of.shape == sign_of.shape and bucket_of.ndim == 1
        assert len(bucket_of) == 0 or (bucket_of.min() >= 0 and bucket_of.max() < r)
        self.r = int(r)
        self.n = len(bucket_of)
        self.bucket_of = bucket_of
        self.sign_of = sign_of
        self.seed = seed
        self.stream_id = stream_id
        self._matrix = None

    @property
    def input_dim(self):
        return self.n

    @property
    def output_dim(self):
        return self.r

    @property
    def matrix(self):
        """
        scipy.sparse CSR representation (r x n)
        """
        if self._matrix is None:
            self._matrix = sp.csr_matrix((self.sign_of, (self.bucket_of, np.arange(self.n))),
                                         shape=(self.r, self.n))
        return self._matrix

    def apply(self, v):
        """
        out[b] = sum of sign_of(i) * v[i] over i hashed to b,
        only nonzero coordinates of v are visited
        """
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n,):
            raise ValueError('vector of length %s, operator expects %d' % (v.shape, self.n))
        nz = np.flatnonzero(v)
        return np.bincount(self.bucket_of[nz], weights=self.sign_of[nz] * v[nz],
                           minlength=self.r).astype(np.float64)

    def _apply_imp(self, A):
        ret = self.matrix @ A
        if sp.issparse(ret):
            return ret
        return np.asarray(ret)

    def bucket_loads(self):
        """
        number of coordinates hashed to each bucket
        """
        return np.bincount(self.bucket_of, minlength=self.r)

    def descriptor(self):
        """
        JSON-serializable record allowing to rebuild the operator
        """
        return {'type': 'countsketch', 'r': self.r, 'n': self.n,
                'seed': self.seed, 'stream_id': self.stream_id}


def build_countsketch(rng, r, n):
    """
    Draw a CountSketch operator.

    Args:
        rng (:class:`~inaL1Sketch.numerics.Rng`): random stream, the operator
            only depends on its (seed, stream_id) pair
        r (int): number of buckets
        n (int): input dimension

    Returns:
        :class:`CountSketchOp`
    """
    if r < 1 or n < 1:
        raise ValueError('CountSketch requires r >= 1 and n >= 1, got r=%d n=%d' % (r, n))
    gen = rng.derive(0).gen
    bucket_of = gen.integers(0, r, int(n))
    sign_of = draw_signs(gen, n)
    return CountSketchOp(bucket_of, sign_of, r, rng.seed, rng.stream_id)


def countsketch_from_descriptor(desc):
    """
    Rebuild an operator from :meth:`CountSketchOp.descriptor`
    """
    if desc.get('type') != 'countsketch':
        raise ValueError('not a countsketch descriptor: %s' % desc.get('type'))
    return build_countsketch(Rng(desc['seed'], desc['stream_id']), desc['r'], desc['n'])
