#!/usr/bin/env python
# encoding: utf-8

# The MIT License
# Copyright (c) 2024 Ina (http://www.ina.fr/)
# See the LICENSE file distributed with this work for the full license text.

"""
HeavyHitter structure: a CountSketch whose buckets hold linear sketches.

d items x_1..x_d in R^m are hashed into B buckets with random signs. Each
bucket stores T(sum of signed x_i), where T is a base linear sketch with a
subrecovery procedure (:class:`BaseL1Sketch`, or :class:`ExactBase` when
payloads are stored directly). The estimate of f(x_i) = ||x_i||_1 is the
subrecovery of the bucket of i, aggregated by a median over R independent
repetitions.

Hash tables (:class:`HeavyHitterSketch`) are kept apart from accumulators
(:class:`HeavyHitterState`), so that the same hashes can drive structures
whose payloads are themselves sketches.

>>> from inaL1Sketch.numerics import Rng
>>> from inaL1Sketch.heavy_hitter import hh_build
>>> state = hh_build(Rng(3), d=64, theta=.1, delta=.05)
>>> state.update(5, [10.])
>>> state.query(5)
10.0
"""

import math
from typing import NamedTuple, Callable

import numpy as np

from .countsketch import draw_signs


class RecoveryFunction(NamedTuple):
    """
    The function f recovered by heavy-hitter structures, with its
    companion h (f(x+y) <= (1+h(eps)) f(x) when f(y) <= eps f(x)) and the
    triangle constant C_f. Only l1 is instantiated.
    """
    name : str
    f : Callable
    h : Callable
    h_inv : Callable
    C_f : float


L1 = RecoveryFunction('l1', np.abs, lambda e: e, lambda e: e, 1.)


class ExactBase:
    """
    Identity payload sketch: buckets hold the payload itself
    """
    def __init__(self, m):
        assert m >= 1
        self.m = int(m)
        self.t = int(m)

    def sketch(self, x):
        return np.asarray(x, dtype=np.float64)

    def estimate(self, y):
        return np.abs(y).sum(axis=-1)


class BaseL1Sketch:
    """
    Cauchy median sketch T: R^m -> R^t, estimate = median_i |(Tx)_i|
    """
    def __init__(self, cauchy_rows, gamma, zeta, c):
        self.cauchy_rows = cauchy_rows
        self.t, self.m = cauchy_rows.shape
        self.gamma = gamma
        self.zeta = zeta
        #: constant in t = c gamma^-2 log(1/zeta)
        self.c = c

    def sketch(self, x):
        return np.asarray(x, dtype=np.float64) @ self.cauchy_rows.T

    def estimate(self, y):
        return np.median(np.abs(y), axis=-1)


def base_build(rng, m, gamma, zeta, c=4.):
    """
    Draw a Cauchy median sketch with t = c gamma^-2 log(1/zeta) rows.

    Raises:
        ValueError: when t exceeds 64 m, the payload should then be stored
            directly (:class:`ExactBase`)
    """
    if not 0 < gamma < 1 or not 0 < zeta < 1:
        raise ValueError('gamma=%s and zeta=%s should be in (0, 1)' % (gamma, zeta))
    t = math.ceil(c / gamma ** 2 * math.log(1. / zeta))
    if t > 64 * m:
        raise ValueError('base sketch length %d exceeds 64 x payload dimension %d, store payloads directly' % (t, m))
    rows = rng.derive(0).gen.standard_cauchy((t, int(m)))
    return BaseL1Sketch(rows, gamma, zeta, c)


def base_estimate(base, sketched):
    """
    Subrecovery of a sketched payload
    """
    return base.estimate(np.asarray(sketched, dtype=np.float64))


def hh_bucket_count(theta, d, c_B=8., bucket_cap=None):
    """
    B = c_B / (h^-1(theta) theta)^2 = c_B theta^-4 for l1, capped to
    bucket_cap buckets per item when bucket_cap is given
    """
    B = math.ceil(c_B / (L1.h_inv(theta) * theta) ** 2)
    if bucket_cap is not None:
        B = min(B, bucket_cap * int(d))
    return max(1, B)


def hh_repetitions(d, delta):
    """
    Odd number of repetitions, Theta(log(d/delta))
    """
    R = max(1, math.ceil(math.log(d / delta) / 2))
    return R if R % 2 else R + 1


class HeavyHitterSketch:
    """
    Hash tables of a HeavyHitter structure: bucket_of and sign_of are
    (R, d) arrays
    """
    def __init__(self, d, theta, delta, B, bucket_of, sign_of, base):
        self.d = int(d)
        self.theta = theta
        self.delta = delta
        self.B = int(B)
        self.R = bucket_of.shape[0]
        self.bucket_of = bucket_of
        self.sign_of = sign_of
        self.base = base
        self.function = L1

    @property
    def t(self):
        return self.base.t

    def zeros(self):
        return np.zeros((self.R, self.B, self.t))

    def _check(self, items):
        items = np.asarray(items, dtype=np.int64)
        if items.size and (items.min() < 0 or items.max() >= self.d):
            raise IndexError('item index out of range [0, %d)' % self.d)
        return items

    def update(self, acc, i, delta_vec):
        """
        acc[r, bucket_of(r, i)] += sign_of(r, i) T(delta_vec) for every r
        """
        self._check([i])
        y = self.base.sketch(delta_vec)
        rr = np.arange(self.R)
        acc[rr, self.bucket_of[:, i]] += self.sign_of[:, i, None] * y[None, :]

    def update_many(self, acc, items, deltas):
        """
        Sequential updates of several items, deltas has shape (len(items), m)
        """
        items = self._check(items)
        if len(items) == 0:
            return
        Y = self.base.sketch(np.asarray(deltas, dtype=np.float64).reshape(len(items), -1))
        rr = np.arange(self.R)[:, None]
        np.add.at(acc, (rr, self.bucket_of[:, items]),
                  self.sign_of[:, items, None] * Y[None, :, :])

    def payloads(self, acc, items):
        """
        Sign-corrected bucket contents of items: array (R, len(items), t)
        """
        items = self._check(items)
        rr = np.arange(self.R)[:, None]
        return acc[rr, self.bucket_of[:, items]] * self.sign_of[:, items, None]

    def query(self, acc, items, recover=None):
        """
        Median over repetitions of the subrecovery of each item's bucket
        """
        if recover is None:
            recover = self.base.estimate
        est = recover(self.payloads(acc, items))
        return np.median(est, axis=0)


class HeavyHitterState:
    """
    HeavyHitter hash tables together with their accumulators
    """
    def __init__(self, sketch, acc=None):
        self.sketch = sketch
        self.acc = sketch.zeros() if acc is None else acc

    def update(self, i, delta_vec):
        self.sketch.update(self.acc, i, np.atleast_1d(np.asarray(delta_vec, dtype=np.float64)))

    def update_many(self, items, deltas):
        self.sketch.update_many(self.acc, items, deltas)

    def query(self, i):
        return float(self.sketch.query(self.acc, [i])[0])

    def query_all(self):
        return self.sketch.query(self.acc, np.arange(self.sketch.d))

    def top(self, k):
        """
        Indices of the k largest estimates, largest first
        """
        est = self.query_all()
        return np.argsort(-est, kind='stable')[:k]

    def __add__(self, other):
        assert other.sketch is self.sketch
        return HeavyHitterState(self.sketch, self.acc + other.acc)


def hh_sketch(rng, d, theta, delta, base=None, c_B=8., bucket_cap=None, reps=None):
    """
    Draw the hash tables of a HeavyHitter structure.

    Args:
        d (int): number of items
        theta (float): heaviness threshold in (0, 1/3)
        delta (float): failure probability in (0, 1/3)
        base: payload sketch, defaults to scalar payloads stored directly
        c_B (float): constant of the bucket count c_B theta^-4
        bucket_cap (int, optional): at most bucket_cap * d buckets, uncapped by default
        reps (int, optional): number of repetitions, Theta(log(d/delta)) by default
    """
    if not 0 < theta < 1. / 3 or not 0 < delta < 1. / 3:
        raise ValueError('theta=%s and delta=%s should be in (0, 1/3)' % (theta, delta))
    if d < 1:
        raise ValueError('heavy hitter structure requires d >= 1, got %s' % d)
    if base is None:
        base = ExactBase(1)
    B = hh_bucket_count(theta, d, c_B, bucket_cap)
    R = hh_repetitions(d, delta) if reps is None else int(reps)
    assert R >= 1
    gen = rng.derive(0).gen
    bucket_of = gen.integers(0, B, (R, int(d)))
    sign_of = draw_signs(gen, R * int(d)).reshape(R, int(d))
    return HeavyHitterSketch(d, theta, delta, B, bucket_of, sign_of, base)


def hh_build(rng, d, theta, delta, base_params=None, **kwargs):
    """
    Build an empty HeavyHitter structure.

    Args:
        base_params (dict, optional): ``{'m': ..., 'gamma': ..., 'zeta': ...}``
            to store Cauchy median sketches of m-dimensional payloads. The
            failure probability given to each base sketch is zeta / (B R).
            Scalar payloads are stored directly when omitted.
        kwargs: forwarded to :func:`hh_sketch`

    Returns:
        :class:`HeavyHitterState`
    """
    base = None
    if base_params is not None:
        B = hh_bucket_count(theta, d, kwargs.get('c_B', 8.), kwargs.get('bucket_cap'))
        R = kwargs.get('reps') or hh_repetitions(d, delta)
        zeta = base_params['zeta'] / (B * R)
        base = base_build(rng.derive(1), base_params['m'], base_params['gamma'], zeta,
                          base_params.get('c', 4.))
    return HeavyHitterState(hh_sketch(rng, d, theta, delta, base, **kwargs))


def hh_update(state, i, delta_vec):
    state.update(i, delta_vec)


def hh_query(state, i):
    return state.query(i)


def hh_query_all(state):
    return state.query_all()
