#!/usr/bin/env python
# encoding: utf-8

# The MIT License
# Copyright (c) 2024 Ina (http://www.ina.fr/)
# See the LICENSE file distributed with this work for the full license text.

"""
(1 +/- eps) streaming l1 norm estimation with subsampled heavy hitters.

The structure keeps one HeavyHitter structure D_l per subsampling level
l = 0..L_hat. A pairwise-independent hash assigns each coordinate a level,
with Pr(level >= l) = 2^-l, and an update of coordinate i is routed to
every D_l with l <= level(i).

Recovery sorts heavy hitter estimates into the magnitude windows
[(1+w) zeta M_hat / 2^j, (2-w) zeta M_hat / 2^j], where zeta is uniform in
[1/2, 1]. Windows j <= j0 are summed from level 0. Deeper windows are
estimated from the deepest level whose window count is concentrated enough,
scaled by 2^l. A rough estimate M_hat with M <= M_hat <= K M is required:
:class:`RoughL1Sketch` gives one with K = 4.

>>> import numpy as np
>>> from inaL1Sketch.numerics import Rng
>>> from inaL1Sketch.l1_estimator import shh_build, rough_estimate
>>> x = np.arange(100.)
>>> state = shh_build(Rng(0), eps=.2, K=4, N=100)
>>> state.load(x)
>>> est = state.estimate(4 * np.abs(x).sum() / 2)
"""

import math
from typing import NamedTuple

import numpy as np

from .numerics import counter_cauchy
from .heavy_hitter import ExactBase, BaseL1Sketch, HeavyHitterSketch, hh_bucket_count, hh_repetitions
from .countsketch import draw_signs

# Mersenne prime used by the pairwise-independent level hash
LEVEL_HASH_PRIME = 2 ** 31 - 1


class SHHConfig(NamedTuple):
    """
    Parameters of a subsampling heavy hitter structure (logs in base 2,
    rounded up)
    """
    eps : float
    K : int
    N : int
    #: number of magnitude windows log(K N / eps)
    L : int
    #: deepest subsampling level log N
    L_hat : int
    #: absolute constant alpha < 1
    alpha : float
    #: heaviness threshold min(eps^3/(180 L^3), alpha eps/3, alpha eps/4)
    theta : float
    #: buckets per heavy hitter repetition
    B : int
    #: repetitions inside each heavy hitter structure
    R_hh : int
    #: failure probability of each heavy hitter structure, 0.05/(L_hat+1)
    hh_delta : float
    #: total bucket count B (L_hat+1) R_hh
    Q : int
    #: number of heavy hitters kept per level
    top_count : int
    #: last window summed from level 0, log(4 K eps^-3 L^3)
    j0 : int
    #: window count target L^2/eps^2 of the deep windows
    count_target : float
    #: relative margin of the randomized windows
    window_eps : float
    #: multiplier of L^3/eps^3 in top_count and j0
    topk_factor : float


class LevelEstimate(NamedTuple):
    """
    Contribution of one magnitude window to the estimate
    """
    j : int
    M_j : float
    #: subsampling level used, None when no level qualified
    ell_used : object
    #: number of recovered values inside the window at that level
    s : int


def recovery_fields(eps, K, N, topk_factor=4.):
    """
    (L, j0, top_count, count_target) for a given K
    """
    L = max(1, math.ceil(math.log2(K * N / eps)))
    top_count = math.ceil(topk_factor * L ** 3 / eps ** 3)
    j0 = math.ceil(math.log2(topk_factor * K * L ** 3 / eps ** 3))
    return L, j0, top_count, L ** 2 / eps ** 2


def shh_constants(eps, K, N, alpha=.5, theta_const=1. / 180, topk_factor=4., c_B=8., bucket_cap=4,
                  **overrides):
    """
    Derive the parameters of the structure.

    Args:
        eps (float): accuracy in (0, 1)
        K (int): power of 2, ratio between the rough estimate and the norm
        N (int): vector dimension
        alpha (float): absolute constant alpha < 1
        theta_const (float): multiplier of eps^3/L^3 in theta
        topk_factor (float): multiplier of L^3/eps^3 in the heavy hitter count
        c_B (float): bucket count constant of the heavy hitter structures
        bucket_cap (int): at most bucket_cap * N buckets
        overrides: explicit values for B, R_hh, top_count, j0, count_target
            or window_eps

    Returns:
        :class:`SHHConfig`
    """
    if not 0 < eps < 1:
        raise ValueError('eps=%s should be in (0, 1)' % eps)
    if K < 2 or K & (K - 1):
        raise ValueError('K=%s should be a power of 2, K >= 2' % K)
    if N < 1:
        raise ValueError('dimension N=%s should be positive' % N)
    if not 0 < alpha < 1:
        raise ValueError('alpha=%s should be in (0, 1)' % alpha)
    L, j0, top_count, count_target = recovery_fields(eps, K, N, topk_factor)
    L_hat = math.ceil(math.log2(N)) if N > 1 else 0
    theta = min(theta_const * eps ** 3 / L ** 3, alpha * eps / 3, alpha * eps / 4)
    hh_delta = .05 / (L_hat + 1)
    B = hh_bucket_count(theta, N, c_B, bucket_cap)
    R_hh = hh_repetitions(N, hh_delta)
    fields = dict(B=B, R_hh=R_hh, top_count=top_count, j0=j0, count_target=count_target,
                  window_eps=alpha * eps / 4)
    for k, v in overrides.items():
        if k not in fields:
            raise ValueError('unknown override %s' % k)
        fields[k] = v
    Q = fields['B'] * (L_hat + 1) * fields['R_hh']
    return SHHConfig(eps, int(K), int(N), L, L_hat, alpha, theta, int(fields['B']), int(fields['R_hh']),
                     hh_delta, Q, int(fields['top_count']), int(fields['j0']),
                     float(fields['count_target']), float(fields['window_eps']), topk_factor)


class PairwiseLevelHash:
    """
    Level map i -> number of trailing zero bits of ((a i + b) mod P) mod 2^L_hat,
    capped at L_hat. Pr(level >= l) = 2^-l and levels of distinct items are
    pairwise independent.
    """
    def __init__(self, a, b, L_hat):
        assert 1 <= a < LEVEL_HASH_PRIME and 0 <= b < LEVEL_HASH_PRIME
        self.a = int(a)
        self.b = int(b)
        self.L_hat = int(L_hat)

    def __call__(self, items):
        i = np.asarray(items, dtype=np.int64)
        h = (self.a * i + self.b) % LEVEL_HASH_PRIME
        v = h & ((1 << self.L_hat) - 1)
        low = np.where(v == 0, 1, v & -v)
        return np.where(v == 0, self.L_hat, np.log2(low).astype(np.int64))


def subsampled_recovery(est, M_hat, zeta, config, K=None):
    """
    Sum of the per window contributions from per level heavy hitter
    estimates.

    Args:
        est (numpy.ndarray): (n, L_hat+1, N) estimates, NaN for coordinates
            absent from a level
        M_hat (float or array of n floats): rough estimates
        zeta (float): window shift in [1/2, 1]
        config (:class:`SHHConfig`): parameters
        K (int, optional): ratio M_hat / M assumed, defaults to config.K

    Returns:
        (totals (n,), M_j (n, L+1), ell_used (n, L+1), s (n, L+1)), ell_used
        is -1 for windows without a qualifying level
    """
    n, levels, N = est.shape
    if K is None:
        L, j0, top_count, target = config.L, config.j0, config.top_count, config.count_target
    else:
        L, j0, top_count, target = recovery_fields(config.eps, K, config.N, config.topk_factor)
    lam = np.where(est > 0, est, np.nan)
    if top_count < N:
        filled = np.where(np.isnan(lam), -np.inf, lam)
        rank = np.argsort(np.argsort(-filled, axis=-1, kind='stable'), axis=-1, kind='stable')
        lam = np.where(rank < top_count, lam, np.nan)

    scale = zeta * np.broadcast_to(np.asarray(M_hat, dtype=np.float64), (n,))[:, None, None]
    valid = ~np.isnan(lam)
    safe = np.where(valid, lam, 1.)
    with np.errstate(divide='ignore', invalid='ignore'):
        j = np.ceil(np.log2(scale / safe))
    c = scale / 2. ** j
    w = config.window_eps
    inside = valid & (safe >= (1 + w) * c) & (safe <= (2 - w) * c) & (j >= 0) & (j <= L)
    vals = np.where(inside, safe, 0.)

    eps = config.eps
    lo = max((1 - math.sqrt(20) * eps) * target, 1.)
    hi = 2 * (1 + math.sqrt(20) * eps) * target
    Mj = np.zeros((n, L + 1))
    ell = np.full((n, L + 1), -1, dtype=np.int64)
    s = np.zeros((n, L + 1), dtype=np.int64)
    for jj in range(L + 1):
        inj = j == jj
        counts = (inside & inj).sum(axis=-1)
        sums = (vals * inj).sum(axis=-1)
        if jj <= j0:
            Mj[:, jj] = sums[:, 0]
            s[:, jj] = counts[:, 0]
            ell[:, jj] = 0
            continue
        ok = (counts >= lo) & (counts <= hi)
        has = ok.any(axis=1)
        deepest = levels - 1 - np.argmax(ok[:, ::-1], axis=1)
        rows = np.arange(n)
        Mj[:, jj] = np.where(has, sums[rows, deepest] * 2. ** deepest, 0.)
        s[:, jj] = np.where(has, counts[rows, deepest], 0)
        ell[:, jj] = np.where(has, deepest, -1)
    return Mj.sum(axis=1), Mj, ell, s


class SubsamplingHHSketch:
    """
    Randomness of a subsampling heavy hitter structure: the level hash,
    per level HeavyHitter hash tables and the window shift zeta.
    Accumulators are arrays of shape (L_hat+1, R_hh, B, t).
    """
    def __init__(self, config, level_hash, bucket_of, sign_of, zeta, base):
        self.config = config
        self.level_hash = level_hash
        #: level of every coordinate
        self.level_of = level_hash(np.arange(config.N))
        self.zeta = float(zeta)
        self.base = base
        self.hh = [HeavyHitterSketch(config.N, config.theta, config.hh_delta, config.B,
                                     bucket_of[l], sign_of[l], base)
                   for l in range(config.L_hat + 1)]
        self.members = [np.flatnonzero(self.level_of >= l) for l in range(config.L_hat + 1)]

    @property
    def t(self):
        return self.base.t

    @property
    def shape(self):
        c = self.config
        return (c.L_hat + 1, c.R_hh, c.B, self.t)

    @property
    def size(self):
        return int(np.prod(self.shape))

    def zeros(self):
        return np.zeros(self.shape)

    def update(self, data, i, delta_vec):
        """
        Route an update of coordinate i to every level l <= level(i)
        """
        if not 0 <= i < self.config.N:
            raise IndexError('coordinate %d out of range [0, %d)' % (i, self.config.N))
        for l in range(self.level_of[i] + 1):
            self.hh[l].update(data[l], i, delta_vec)

    def update_many(self, data, items, deltas):
        items = np.asarray(items, dtype=np.int64)
        deltas = np.asarray(deltas, dtype=np.float64).reshape(len(items), -1)
        if len(items) and (items.min() < 0 or items.max() >= self.config.N):
            raise IndexError('coordinate out of range [0, %d)' % self.config.N)
        lev = self.level_of[items] if len(items) else items
        for l in range(self.config.L_hat + 1):
            sel = lev >= l
            self.hh[l].update_many(data[l], items[sel], deltas[sel])

    def level_estimates(self, batch, recover=None):
        """
        Heavy hitter estimates of every level member.

        Args:
            batch (numpy.ndarray): (n, L_hat+1, R_hh, B, t) accumulators
            recover (callable, optional): maps payloads (..., t) to f-values,
                defaults to the base subrecovery

        Returns:
            (n, L_hat+1, N) array, NaN for coordinates absent from a level
        """
        if recover is None:
            recover = self.base.estimate
        n = batch.shape[0]
        c = self.config
        est = np.full((n, c.L_hat + 1, c.N), np.nan)
        rr = np.arange(c.R_hh)[:, None]
        for l in range(c.L_hat + 1):
            items = self.members[l]
            if len(items) == 0:
                continue
            hh = self.hh[l]
            payloads = batch[:, l][:, rr, hh.bucket_of[:, items]] * hh.sign_of[None, :, items, None]
            est[:, l, items] = np.median(recover(payloads), axis=1)
        return est

    def recover_batch(self, batch, M_hat, recover=None, K=None):
        """
        Estimates of a batch of accumulators, see :func:`subsampled_recovery`
        """
        est = self.level_estimates(batch, recover)
        return subsampled_recovery(est, M_hat, self.zeta, self.config, K)


class SubsamplingHHState:
    """
    Subsampling heavy hitter structure together with its accumulators
    """
    def __init__(self, sketch, data=None):
        self.sketch = sketch
        self.data = sketch.zeros() if data is None else data

    @property
    def config(self):
        return self.sketch.config

    def update(self, i, delta):
        self.sketch.update(self.data, int(i), np.atleast_1d(np.asarray(delta, dtype=np.float64)))

    def update_many(self, items, deltas):
        self.sketch.update_many(self.data, items, deltas)

    def load(self, x):
        """
        Stream every nonzero coordinate of x
        """
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.config.N,):
            raise ValueError('vector of shape %s, structure expects (%d,)' % (x.shape, self.config.N))
        nz = np.flatnonzero(x)
        self.update_many(nz, x[nz])

    def estimate(self, M_hat, zeta=None, K=None):
        """
        Recovered norm estimate for a rough estimate M_hat
        """
        if M_hat <= 0:
            raise ValueError('rough estimate M_hat=%s should be positive' % M_hat)
        sk = self.sketch
        if zeta is not None:
            est = sk.level_estimates(self.data[None])
            return float(subsampled_recovery(est, M_hat, zeta, self.config, K)[0][0])
        return float(sk.recover_batch(self.data[None], M_hat, K=K)[0][0])

    def level_estimates(self, M_hat, zeta=None):
        """
        Per window contributions as a list of :class:`LevelEstimate`
        """
        sk = self.sketch
        est = sk.level_estimates(self.data[None])
        _, Mj, ell, s = subsampled_recovery(est, M_hat, sk.zeta if zeta is None else zeta, self.config)
        return [LevelEstimate(j, float(Mj[0, j]), None if ell[0, j] < 0 else int(ell[0, j]), int(s[0, j]))
                for j in range(Mj.shape[1])]

    def touched_levels(self, i):
        """
        Levels whose structure receives updates of coordinate i
        """
        return list(range(self.sketch.level_of[i] + 1))

    def __add__(self, other):
        assert other.sketch is self.sketch
        return SubsamplingHHState(self.sketch, self.data + other.data)


def shh_sketch(rng, eps, K, N, base=None, **kwargs):
    """
    Draw the randomness of a subsampling heavy hitter structure, kwargs
    are forwarded to :func:`shh_constants`
    """
    config = shh_constants(eps, K, N, **kwargs)
    if base is None:
        base = ExactBase(1)
    gen = rng.derive(0).gen
    a = int(gen.integers(1, LEVEL_HASH_PRIME))
    b = int(gen.integers(0, LEVEL_HASH_PRIME))
    level_hash = PairwiseLevelHash(a, b, config.L_hat)
    levels = config.L_hat + 1
    gen = rng.derive(1).gen
    bucket_of = gen.integers(0, config.B, (levels, config.R_hh, config.N))
    sign_of = draw_signs(gen, levels * config.R_hh * config.N).reshape(levels, config.R_hh, config.N)
    zeta = rng.derive(2).gen.uniform(.5, 1.)
    return SubsamplingHHSketch(config, level_hash, bucket_of, sign_of, zeta, base)


def shh_build(rng, eps, K, N, base_len=1, zeta=.05, **kwargs):
    """
    Build an empty subsampling heavy hitter structure.

    Args:
        rng (:class:`~inaL1Sketch.numerics.Rng`): random stream
        eps (float): accuracy
        K (int): power of 2 with M <= M_hat <= K M expected at estimation
        N (int): vector dimension
        base_len (int): per bucket sketch length. 1 stores the scalar
            directly, larger values store a Cauchy median sketch
        zeta (float): failure probability of base sketches
        kwargs: forwarded to :func:`shh_constants`

    Returns:
        :class:`SubsamplingHHState`
    """
    base = None
    if base_len > 1:
        base = BaseL1Sketch(rng.derive(3).gen.standard_cauchy((int(base_len), 1)), None, zeta, None)
    return SubsamplingHHState(shh_sketch(rng, eps, K, N, base, **kwargs))


def shh_update(state, i, delta):
    state.update(i, delta)


def shh_estimate(state, M_hat, K=None):
    """
    Recovered estimate of a structure, K defaults to the one it was built with
    """
    if K is not None and K != state.config.K:
        raise ValueError('structure built for K=%d, queried with K=%d' % (state.config.K, K))
    return state.estimate(M_hat)


class BoostedL1Estimator:
    """
    Independent structures for each K' in {2, 4, ..., K}, with reps
    repetitions each. The estimate is the maximum over K' of the median
    over repetitions.
    """
    def __init__(self, rng, eps, K, N, reps=5, **kwargs):
        if K < 2 or K & (K - 1):
            raise ValueError('K=%s should be a power of 2, K >= 2' % K)
        assert reps >= 1
        self.grid = [2 ** e for e in range(1, int(math.log2(K)) + 1)]
        self.states = {k: [shh_build(rng.derive(k, r), eps, k, N, **kwargs) for r in range(reps)]
                       for k in self.grid}

    def all_states(self):
        return [s for k in self.grid for s in self.states[k]]

    def update(self, i, delta):
        for s in self.all_states():
            s.update(i, delta)

    def load(self, x):
        for s in self.all_states():
            s.load(x)

    def estimates(self, M_hat):
        """
        Median over repetitions for each grid value
        """
        return {k: float(np.median([s.estimate(M_hat) for s in self.states[k]])) for k in self.grid}

    def estimate(self, M_hat):
        return max(self.estimates(M_hat).values())


def shh_estimate_boosted(states, M_hat):
    """
    Maximum over grid values of the median over repetitions.

    Args:
        states (dict): K' -> list of :class:`SubsamplingHHState` built with K'
    """
    return max(float(np.median([s.estimate(M_hat) for s in lst])) for lst in states.values())


def rough_rows(zeta):
    """
    Number of Cauchy rows giving a (1 +/- 1/2) median estimate w.p. 1 - zeta
    """
    return math.ceil(12 * math.log(1. / zeta))


class RoughL1Sketch:
    """
    t x N Cauchy median sketch whose column i is generated from (key, i),
    so that it can be evaluated over a stream or on a whole vector.
    The estimate is M_hat = 2 median |C x|, with ||x||_1 <= M_hat <= 3 ||x||_1
    with probability 1 - zeta.
    """
    def __init__(self, key, t, N):
        self.key = int(key)
        self.t = int(t)
        self.N = int(N)
        self.acc = np.zeros(self.t)

    def columns(self, items):
        """
        Cauchy entries of coordinates items: array (t, len(items))
        """
        items = np.asarray(items, dtype=np.uint64)
        counters = items[None, :] * np.uint64(self.t) + np.arange(self.t, dtype=np.uint64)[:, None]
        return counter_cauchy(self.key, counters)

    def sketch(self, x):
        x = np.asarray(x, dtype=np.float64)
        nz = np.flatnonzero(x)
        return self.columns(nz) @ x[nz]

    def update(self, i, delta):
        if not 0 <= i < self.N:
            raise IndexError('coordinate %d out of range [0, %d)' % (i, self.N))
        self.acc += delta * self.columns([i])[:, 0]

    def load(self, x):
        self.acc += self.sketch(x)

    def estimate(self, acc=None):
        acc = self.acc if acc is None else acc
        return 2. * float(np.median(np.abs(acc)))


def build_rough_sketch(rng, N, zeta=.01):
    key = int(rng.derive(0).gen.integers(0, 2 ** 63))
    return RoughL1Sketch(key, rough_rows(zeta), N)


def rough_estimate(rng, x=None, stream=None, N=None, zeta=.01):
    """
    Rough estimate M_hat of ||x||_1 with ||x||_1 <= M_hat <= 3 ||x||_1 w.h.p.

    Args:
        x (array, optional): vector
        stream (iterable, optional): (i, delta) updates, requires N
    """
    if x is not None:
        x = np.asarray(x, dtype=np.float64)
        sk = build_rough_sketch(rng, len(x), zeta)
        sk.load(x)
        return sk.estimate()
    assert stream is not None and N is not None
    sk = build_rough_sketch(rng, N, zeta)
    for i, delta in stream:
        sk.update(int(i), delta)
    return sk.estimate()


def window_margin_fraction(x, M_hat, window_eps, zetas, L):
    """
    Fraction of nonzero coordinates of x falling in no window j in [0, L],
    averaged over the window shifts zetas
    """
    a = np.abs(np.asarray(x, dtype=np.float64))
    a = a[a > 0]
    zetas = np.asarray(zetas, dtype=np.float64)
    scale = zetas[:, None] * M_hat
    j = np.ceil(np.log2(scale / a[None, :]))
    c = scale / 2. ** j
    inside = (a >= (1 + window_eps) * c) & (a <= (2 - window_eps) * c) & (j >= 0) & (j <= L)
    return float(1. - inside.mean())
