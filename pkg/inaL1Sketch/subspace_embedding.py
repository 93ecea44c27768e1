#!/usr/bin/env python
# encoding: utf-8

# The MIT License
# Copyright (c) 2024 Ina (http://www.ina.fr/)
# See the LICENSE file distributed with this work for the full license text.

"""
Oblivious l1 subspace embeddings.

Two families of operators are provided, and can be chained with
:func:`compose`:

    - :class:`MSketchOp`: the random-boundary M-sketch. A 0th level
      CountSketch with N0 buckets over all coordinates is stacked with
      h_max levels. Level h keeps each coordinate with probability
      p_h = B^-(u+h-1), rescales survivors by 1/p_h and hashes them into N
      buckets. The shift u is uniform in [0, 1] and the signs are shared
      across levels.
    - :class:`DenseCauchyOp`: an r x n matrix of i.i.d. standard Cauchy
      draws, normalized by (2/pi) r log r.

The constants of the analysis (:func:`derive_constants`) overflow for any
realistic (d, eps, delta). Structures are therefore usually built from a
calibrated configuration (:func:`calibrated_config`) whose B, N0, N and
h_max are chosen by the user and whose distortion is measured empirically
with :mod:`inaL1Sketch.oracle_harness`.

>>> from inaL1Sketch.numerics import Rng
>>> from inaL1Sketch.subspace_embedding import calibrated_config, build_msketch
>>> conf = calibrated_config(n=1000, d=3, B=4, N0=8, N=4096, h_max=1)
>>> op = build_msketch(Rng(0), conf)
>>> op.output_dim
4104
"""

import math
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .numerics import Rng, SketchOperator, as_matrix
from .countsketch import CountSketchOp, draw_signs

# largest output dimension accepted by build_msketch
MAX_OUTPUT_DIM = 2 ** 26

_LN_FLOAT_MAX = math.log(np.finfo(np.float64).max)


class MSketchConfig(NamedTuple):
    """
    Constants of a random-boundary M-sketch.

    In theoretical mode every field follows the formulas of the analysis, and N0
    is its value for the largest shift u = 1 (the operator evaluates it with
    the drawn u). In calibrated mode B, N0, N and h_max are user choices.
    """
    n : int
    d : int
    eps : float
    delta : float
    #: number of subsampled levels
    h_max : int
    #: number of weight classes
    q_max : int
    #: net union bound size
    alpha_net : float
    #: overcrowded bucket threshold
    m_crowd : float
    #: branching factor between consecutive sampling rates
    B : float
    #: buckets in the 0th level
    N0 : int
    #: buckets per subsampled level
    N : int
    #: 'theoretical' or 'calibrated'
    scale_mode : str


def _check_unit(name, val):
    if not 0 < val < 1:
        raise ValueError('%s=%s should be in (0, 1)' % (name, val))


def _common_constants(n, d, eps, delta, h_max):
    q_max = max(1, math.ceil(math.log2(n * d * h_max / (delta * eps)))) if h_max > 0 else 1
    ln_alpha = math.log(2.) + d * math.log(3. / eps) + math.log(q_max) - math.log(delta)
    alpha_net = math.exp(ln_alpha) if ln_alpha < _LN_FLOAT_MAX else math.inf
    # log^5 n, with n=1 treated as n=2
    m_crowd = 300. * d ** 11 / (eps ** 9 * delta ** 4) * math.log2(max(n, 2)) ** 5
    return q_max, ln_alpha, alpha_net, m_crowd


def derive_constants(n, d, eps, delta):
    """
    Constants of the analysis (theoretical mode).

    Args:
        n (int): number of rows of the input matrices
        d (int): number of columns
        eps (float): accuracy in (0, 1)
        delta (float): failure probability in (0, 1)

    Returns:
        :class:`MSketchConfig` with scale_mode 'theoretical'

    Raises:
        OverflowError: when B or a bucket count is not representable as a
            64-bit float. Switch to :func:`calibrated_config` in that case.
    """
    if n < 1 or d < 1:
        raise ValueError('dimensions should be positive, got n=%s d=%s' % (n, d))
    _check_unit('eps', eps)
    _check_unit('delta', delta)

    h_max = max(1, math.ceil(math.log2(n / eps)))
    q_max, ln_alpha, alpha_net, m_crowd = _common_constants(n, d, eps, delta, h_max)

    ln_B = d / (delta * eps) * math.log(m_crowd * h_max * q_max / delta)
    if ln_B >= _LN_FLOAT_MAX:
        raise OverflowError('branching factor B = 2^%.1f is not representable, use a calibrated configuration'
                            % (ln_B / math.log(2)))
    B = math.exp(ln_B)
    log2_alpha = ln_alpha / math.log(2)
    # N0 evaluated at u = 1
    n0 = 12. * B * q_max / eps ** 3 * log2_alpha
    n_lev = B * 8. * d ** 2 * max(math.log2(d), 1.) / eps ** 6 * q_max * log2_alpha * math.log2(B / eps)
    if not (math.isfinite(n0) and math.isfinite(n_lev)):
        raise OverflowError('bucket counts N0=%g N=%g are not representable' % (n0, n_lev))
    return MSketchConfig(n, d, eps, delta, h_max, q_max, alpha_net, m_crowd, B,
                         math.ceil(n0), math.ceil(n_lev), 'theoretical')


def calibrated_config(n, d, B, N0, N, h_max=1, eps=.5, delta=.5):
    """
    User-chosen M-sketch configuration.

    Args:
        n (int): number of rows of the input matrices
        d (int): number of columns
        B (float): branching factor (> 1)
        N0 (int): buckets in the 0th level
        N (int): buckets per subsampled level
        h_max (int): number of subsampled levels (0 gives a plain CountSketch)
        eps (float): nominal accuracy, only used by the derived fields
        delta (float): nominal failure probability
    """
    if n < 1 or d < 1:
        raise ValueError('dimensions should be positive, got n=%s d=%s' % (n, d))
    if B <= 1:
        raise ValueError('branching factor B=%s should be > 1' % B)
    if N0 < 1 or N < 1:
        raise ValueError('bucket counts should be positive, got N0=%s N=%s' % (N0, N))
    if h_max < 0:
        raise ValueError('h_max=%s should be non-negative' % h_max)
    _check_unit('eps', eps)
    _check_unit('delta', delta)
    q_max, _, alpha_net, m_crowd = _common_constants(n, d, eps, delta, max(h_max, 1))
    return MSketchConfig(n, d, eps, delta, int(h_max), q_max, alpha_net, m_crowd, float(B),
                         int(N0), int(N), 'calibrated')


def sample_rates(u, B, h_max):
    """
    Sampling rates p_h = B^-(u+h-1) for h = 1..h_max
    """
    if not 0 <= u <= 1:
        raise ValueError('shift u=%s should be in [0, 1]' % u)
    if B <= 1:
        raise ValueError('branching factor B=%s should be > 1' % B)
    return float(B) ** -(u + np.arange(int(h_max), dtype=np.float64))


class MSketchOp(SketchOperator):
    """
    Stack of CountSketch blocks over geometrically subsampled coordinates.

    Rows [0, N0) hold the 0th level, rows N0 + (h-1)N ... N0 + hN - 1 hold
    level h. The operator is stored as one scipy sparse matrix.
    """
    def __init__(self, config, u, rates, sign_of, bucket0, N0, survivors, level_buckets,
                 kind='msketch', seed=None, stream_id=None):
        self.config = config
        #: random shift, None for fixed rates
        self.u = u
        self.rates = np.asarray(rates, dtype=np.float64)
        self.sign_of = sign_of
        self.N0 = int(N0)
        self.N = int(config.N)
        self.h_max = len(self.rates)
        #: C^(0), sharing its signs with every level
        self.c0 = CountSketchOp(bucket0, sign_of, self.N0)
        #: survivors[h-1]: coordinates kept at level h
        self.survivors = survivors
        #: level_buckets[h-1]: bucket of each original coordinate at level h
        self.level_buckets = level_buckets
        self.kind = kind
        self.seed = seed
        self.stream_id = stream_id

        n = config.n
        rows = [bucket0]
        cols = [np.arange(n)]
        vals = [sign_of]
        for h in range(self.h_max):
            s = survivors[h]
            rows.append(self.N0 + h * self.N + level_buckets[h][s])
            cols.append(s)
            vals.append(sign_of[s] / self.rates[h])
        self.matrix = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                                    shape=(self.output_dim, n))

    @property
    def input_dim(self):
        return self.config.n

    @property
    def output_dim(self):
        return self.N0 + self.h_max * self.N

    def _apply_imp(self, A):
        ret = self.matrix @ A
        return ret if sp.issparse(ret) else np.asarray(ret)

    def block_rows(self, h):
        """
        Row slice of level h (h = 0 is the 0th level CountSketch)
        """
        if not 0 <= h <= self.h_max:
            raise IndexError('level %d not in [0, %d]' % (h, self.h_max))
        if h == 0:
            return slice(0, self.N0)
        start = self.N0 + (h - 1) * self.N
        return slice(start, start + self.N)

    def block(self, A, h):
        """
        C^(h) S^(h) A for a single level h
        """
        return self.apply_matrix(A)[self.block_rows(h)]

    def descriptor(self):
        """
        JSON-serializable record allowing to rebuild the operator
        """
        c = self.config
        ret = {'type': self.kind, 'n': c.n, 'd': c.d, 'eps': c.eps, 'delta': c.delta,
               'seed': self.seed, 'stream_id': self.stream_id, 'scale_mode': c.scale_mode}
        ret['overrides'] = {'B': c.B, 'N0': c.N0, 'N': c.N, 'h_max': c.h_max} if c.scale_mode == 'calibrated' else {}
        return ret


def assemble_msketch(rng, config, rates, N0, u=None, kind='msketch'):
    """
    Draw the signs, the hash tables and the survivors of an M-sketch with
    given sampling rates. Survivors at each level are drawn independently;
    level hashes are indexed by original coordinate.
    """
    n = config.n
    sign_of = draw_signs(rng.derive(2).gen, n)
    bucket0 = rng.derive(3).gen.integers(0, N0, n)
    survivors = []
    level_buckets = []
    for h, p in enumerate(rates):
        gen = rng.derive(10, h + 1).gen
        keep = gen.random(n) < p
        survivors.append(np.flatnonzero(keep))
        level_buckets.append(gen.integers(0, config.N, n))
    return MSketchOp(config, u, rates, sign_of, bucket0, N0, survivors, level_buckets,
                     kind, rng.seed, rng.stream_id)


def build_msketch(rng, config, u=None, max_output_dim=MAX_OUTPUT_DIM):
    """
    Draw a random-boundary M-sketch.

    Args:
        rng (:class:`~inaL1Sketch.numerics.Rng`): random stream
        config (:class:`MSketchConfig`): constants
        u (float, optional): force the random shift instead of drawing it
        max_output_dim (int): refuse to allocate larger operators

    Returns:
        :class:`MSketchOp`
    """
    if u is None:
        u = float(rng.derive(1).gen.random())
    rates = sample_rates(u, config.B, config.h_max)
    if config.scale_mode == 'theoretical':
        log2_alpha = math.log2(config.alpha_net) if math.isfinite(config.alpha_net) else math.inf
        N0 = 12. * config.B ** u * config.q_max / config.eps ** 3 * log2_alpha
        if not math.isfinite(N0):
            raise OverflowError('N0 is not representable for u=%f' % u)
        N0 = math.ceil(N0)
    else:
        N0 = config.N0
    k = N0 + config.h_max * config.N
    if k > max_output_dim:
        raise OverflowError('output dimension %g exceeds the allocation limit %d' % (k, max_output_dim))
    return assemble_msketch(rng, config, rates, N0, u)


def msketch_from_descriptor(desc):
    """
    Rebuild an M-sketch from :meth:`MSketchOp.descriptor`
    """
    if desc.get('type') != 'msketch':
        raise ValueError('not an msketch descriptor: %s' % desc.get('type'))
    rng = Rng(desc['seed'], desc['stream_id'])
    if desc['scale_mode'] == 'theoretical':
        conf = derive_constants(desc['n'], desc['d'], desc['eps'], desc['delta'])
    else:
        conf = calibrated_config(desc['n'], desc['d'], eps=desc['eps'], delta=desc['delta'], **desc['overrides'])
    return build_msketch(rng, conf)


class DenseCauchyOp(SketchOperator):
    """
    r x n matrix of i.i.d. standard Cauchy draws normalized by
    calibration * (2/pi) r log r
    """
    def __init__(self, entries, calibration=1., seed=None, stream_id=None):
        self.entries = entries
        self.r, self.n = entries.shape
        #: measured multiplicative constant, see calibrate_dense_cauchy
        self.calibration = float(calibration)
        self.seed = seed
        self.stream_id = stream_id

    @property
    def input_dim(self):
        return self.n

    @property
    def output_dim(self):
        return self.r

    @property
    def normalization(self):
        return cauchy_normalization(self.r) * self.calibration

    def _apply_imp(self, A):
        ret = self.entries @ A if not sp.issparse(A) else (A.T @ self.entries.T).T
        return np.asarray(ret) / self.normalization

    def calibrated(self, calibration):
        """
        Same matrix with another calibration constant
        """
        return DenseCauchyOp(self.entries, calibration, self.seed, self.stream_id)


def cauchy_normalization(r):
    """
    (2/pi) r log r, the median l1 mass of r absolute Cauchy draws
    """
    return 2. / np.pi * r * max(math.log(r), 1.)


def build_dense_cauchy(rng, r, n, calibration=1.):
    """
    Draw a dense Cauchy embedding from R^n to R^r
    """
    if r < 1 or n < 1:
        raise ValueError('dense Cauchy embedding requires r >= 1 and n >= 1, got r=%d n=%d' % (r, n))
    entries = rng.derive(0).gen.standard_cauchy((int(r), int(n)))
    return DenseCauchyOp(entries, calibration, rng.seed, rng.stream_id)


def apply_msketch(op, A):
    """
    M A for an n x d matrix A, returns k x d
    """
    return op.apply_matrix(A)


def apply_dense(op, A):
    """
    (C A) / normalization
    """
    return op.apply_matrix(A)


def calibrate_dense_cauchy(rng, r, trials=51):
    """
    Median over trials of ||C e_1||_1 / ((2/pi) r log r).

    C e_1 is a vector of r standard Cauchy draws, so the constant does not
    depend on the input dimension.
    """
    assert trials > 0
    ratios = [np.abs(rng.derive(t).gen.standard_cauchy(int(r))).sum() / cauchy_normalization(r)
              for t in range(trials)]
    return float(np.median(ratios))


class ComposedSketch(SketchOperator):
    """
    second o first: a dense Cauchy stage followed by an M-sketch
    """
    def __init__(self, first, second):
        if second.input_dim != first.output_dim:
            raise ValueError('cannot compose: first stage outputs %d rows, second expects %d'
                             % (first.output_dim, second.input_dim))
        self.first = first
        self.second = second

    @property
    def input_dim(self):
        return self.first.input_dim

    @property
    def output_dim(self):
        return self.second.output_dim

    def _apply_imp(self, A):
        return self.second.apply_matrix(as_matrix(self.first.apply_matrix(A)))


def compose(first, second):
    """
    Operator applying ``first`` and then ``second``
    """
    return ComposedSketch(first, second)
