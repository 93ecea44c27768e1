#!/usr/bin/env python
# encoding: utf-8

# The MIT License
# Copyright (c) 2024 Ina (http://www.ina.fr/)
# See the LICENSE file distributed with this work for the full license text.

"""
Shared numerical building blocks: reproducible random streams, samplers for
Cauchy, symmetric power-law and p-stable distributions, l1 norms, matrix
file I/O and the :class:`SketchOperator` interface implemented by every
linear sketch of the package.

Every random object of the package draws from an :class:`Rng`, identified by
a ``(seed, stream_id)`` pair. Components derive independent child streams
with :meth:`Rng.derive`, so that rebuilding a structure from the same seed
reproduces it bit for bit.

>>> from inaL1Sketch.numerics import Rng, sample_cauchy, l1_norm
>>> rng = Rng(42)
>>> x = sample_cauchy(rng, 5)
>>> l1_norm(x) > 0
True
"""

import math
import os
from abc import ABC, abstractmethod
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

_MASK64 = (1 << 64) - 1


class Rng:
    """
    Deterministic random stream identified by a (seed, stream_id) pair.

    Samples are drawn from a numpy :class:`numpy.random.Generator` backed by
    the counter-based Philox bit generator, keyed by a
    :class:`numpy.random.SeedSequence` built from both identifiers.
    """
    def __init__(self, seed, stream_id=0):
        assert int(seed) >= 0 and int(stream_id) >= 0
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self.gen = np.random.Generator(np.random.Philox(ss))

    def derive(self, *labels):
        """
        Independent child stream, reproducible from (seed, stream_id, labels).

        Args:
            labels (int): one or several non-negative integers naming the
                component (level index, repetition index...).

        Returns:
            :class:`Rng` sharing the seed with a new stream identifier.
        """
        entropy = [self.seed, self.stream_id] + [int(l) for l in labels]
        sid = np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0]
        return Rng(self.seed, int(sid))

    def __repr__(self):
        return 'Rng(seed=%d, stream_id=%d)' % (self.seed, self.stream_id)


def env_seed(default):
    """
    Seed read from the L1SKETCH_SEED environment variable when defined
    """
    val = os.environ.get('L1SKETCH_SEED')
    if val is None or val.strip() == '':
        return default
    return int(val)


class PowerLawSpec(NamedTuple):
    """
    Symmetric power law with tail 1 - F(x) ~ (x / scale)^-p
    """
    #: tail index
    p : float
    #: scale of the Pareto body
    scale : float = 1.
    #: random sign when True, positive values otherwise
    symmetric : bool = True
    #: draw p-stable values (Chambers-Mallows-Stuck) instead of Pareto ones
    stable : bool = False


def sample_cauchy(rng, count):
    """
    i.i.d. standard Cauchy draws
    """
    assert count >= 0
    return rng.gen.standard_cauchy(int(count))


def sample_stable(rng, p, count):
    """
    Symmetric p-stable draws (unit scale) with the Chambers-Mallows-Stuck
    method. p = 1 gives the standard Cauchy law, p = 2 a Gaussian of
    variance 2.
    """
    if not 0 < p <= 2:
        raise ValueError('stable index p=%s should be in (0, 2]' % p)
    count = int(count)
    v = rng.gen.uniform(-np.pi / 2, np.pi / 2, count)
    w = rng.gen.standard_exponential(count)
    if p == 1:
        return np.tan(v)
    return (np.sin(p * v) / np.cos(v) ** (1. / p)) * (np.cos((1. - p) * v) / w) ** ((1. - p) / p)


def sample_power_law(rng, spec, count):
    """
    Draw from a symmetric power law.

    Pareto draws use the inverse CDF ``scale * U^(-1/p)``, so that
    ``Pr(|X| > t) = (t/scale)^-p`` for ``t >= scale``.

    Args:
        rng (:class:`Rng`): random stream
        spec (:class:`PowerLawSpec`): distribution
        count (int): number of draws

    Returns:
        numpy.ndarray of shape (count,)
    """
    if spec.p <= 0:
        raise ValueError('power law index p=%s should be positive' % spec.p)
    if spec.scale <= 0:
        raise ValueError('power law scale=%s should be positive' % spec.scale)
    count = int(count)
    if spec.stable:
        x = spec.scale * sample_stable(rng, spec.p, count)
        return x if spec.symmetric else np.abs(x)
    # 1 - U lies in (0, 1]
    u = 1. - rng.gen.random(count)
    x = spec.scale * u ** (-1. / spec.p)
    if spec.symmetric:
        x *= rng.gen.choice([-1., 1.], count)
    return x


def l1_norm(v):
    """
    Sum of absolute values. Large vectors are summed with math.fsum.
    """
    a = np.abs(np.asarray(v, dtype=np.float64)).ravel()
    if len(a) >= 100000:
        return math.fsum(a)
    return float(a.sum())


def l1_norm_matrix(A):
    """
    Entrywise l1 norm of a dense or scipy.sparse matrix
    """
    if sp.issparse(A):
        return l1_norm(A.data)
    return l1_norm(A)


def as_matrix(A, name='A'):
    """
    Validate and convert to a 2D float64 array with finite entries
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise ValueError('%s should be a matrix, got %d dimensions' % (name, A.ndim))
    if not np.all(np.isfinite(A)):
        raise ValueError('%s has non finite entries' % name)
    return A


def read_matrix(path):
    """
    Read a matrix file.

    ``.csv`` and ``.txt`` files hold one comma separated row per line;
    other files use the binary layout: two little-endian uint64 counts
    (rows, cols) followed by rows*cols little-endian float64 values in
    row-major order.
    """
    ext = os.path.splitext(path)[1].lower()
    if ext in ['.csv', '.txt']:
        A = np.loadtxt(path, delimiter=',', ndmin=2, dtype=np.float64)
        return as_matrix(A)
    with open(path, 'rb') as fid:
        raw = fid.read()
    if len(raw) < 16:
        raise ValueError('%s is too short to be a matrix file' % path)
    rows, cols = np.frombuffer(raw[:16], dtype='<u8')
    data = np.frombuffer(raw[16:], dtype='<f8')
    if len(data) != rows * cols:
        raise ValueError('%s declares %dx%d entries but holds %d' % (path, rows, cols, len(data)))
    return as_matrix(data.reshape(int(rows), int(cols)).copy())


def write_matrix(path, A):
    """
    Write a matrix with the layout read by :func:`read_matrix`
    """
    A = as_matrix(A)
    ext = os.path.splitext(path)[1].lower()
    if ext in ['.csv', '.txt']:
        np.savetxt(path, A, delimiter=',', fmt='%.17g')
        return
    with open(path, 'wb') as fid:
        fid.write(np.array(A.shape, dtype='<u8').tobytes())
        fid.write(np.ascontiguousarray(A, dtype='<f8').tobytes())


def counter_uniform(key, counters):
    """
    Uniform (0, 1) values obtained by hashing (key, counter) pairs with the
    splitmix64 finalizer. The same counter always maps to the same value,
    which allows evaluating a random matrix column by column over a stream.

    Args:
        key (int): 64-bit key
        counters (array of int): non-negative counters

    Returns:
        numpy.ndarray of float64 in (0, 1), same shape as counters
    """
    z = np.asarray(counters, dtype=np.uint64) + np.uint64(int(key) & _MASK64)
    with np.errstate(over='ignore'):
        z = z * np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    # 53 high bits, shifted away from 0
    return ((z >> np.uint64(11)).astype(np.float64) + .5) / float(1 << 53)


def counter_cauchy(key, counters):
    """
    Standard Cauchy values attached to (key, counter) pairs
    """
    return np.tan(np.pi * (counter_uniform(key, counters) - .5))


class SketchOperator(ABC):
    """
    Linear map from R^n to R^k applied to vectors or to the columns of a
    matrix. Sketch operators are functors: ``op(A)`` applies the map.
    """

    @property
    @abstractmethod
    def input_dim(self):
        pass

    @property
    @abstractmethod
    def output_dim(self):
        pass

    @abstractmethod
    def _apply_imp(self, A):
        pass

    def apply_matrix(self, A):
        """
        Apply the map to every column of A (n x d), returns a k x d array
        """
        if sp.issparse(A):
            if A.shape[0] != self.input_dim:
                raise ValueError('input has %d rows, operator expects %d' % (A.shape[0], self.input_dim))
            return self._apply_imp(A)
        A = as_matrix(A)
        if A.shape[0] != self.input_dim:
            raise ValueError('input has %d rows, operator expects %d' % (A.shape[0], self.input_dim))
        return self._apply_imp(A)

    def apply(self, v):
        """
        Apply the map to a single vector of length n
        """
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 1:
            raise ValueError('apply expects a vector, use apply_matrix for matrices')
        return self.apply_matrix(v[:, None])[:, 0]

    def __call__(self, A):
        A = np.asarray(A) if not sp.issparse(A) else A
        if not sp.issparse(A) and A.ndim == 1:
            return self.apply(A)
        return self.apply_matrix(A)
