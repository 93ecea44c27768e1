#!/usr/bin/env python
# encoding: utf-8

# The MIT License
# Copyright (c) 2024 Ina (http://www.ina.fr/)
# See the LICENSE file distributed with this work for the full license text.

"""
Entrywise l1 embedding with a dimension / distortion trade-off.

The operator is an M-sketch with deterministic rates p_h = B^-h and
B = (d/delta log n)^alpha. Larger alpha gives fewer levels, more buckets
and a smaller distortion O(1/(delta alpha)). The estimator of ||A||_1 is the
entrywise norm of the sketch.
"""

import math
from typing import NamedTuple

import numpy as np
import pandas as pd
from scipy import stats

from .numerics import Rng, l1_norm_matrix, sample_cauchy
from .countsketch import build_countsketch
from .subspace_embedding import assemble_msketch


class EntrywiseConfig(NamedTuple):
    """
    Constants of the entrywise embedding
    """
    n : int
    d : int
    alpha : float
    delta : float
    B : float
    h_max : int
    q_max : int
    N0 : int
    N : int
    #: 'theoretical' or 'calibrated'
    scale_mode : str
    #: multiplier hidden in N0 = c_N0 B/delta log log n
    c_N0 : float = 1.
    #: multiplier hidden in N = c_N B log n
    c_N : float = 1.


def _levels(n, B):
    # ceil(log_B n), robust to rounding of exact powers
    if n <= 1:
        return 0
    return max(0, math.ceil(math.log(n) / math.log(B) - 1e-9))


def _q_max(n, d, h_max, delta):
    return max(1, math.ceil(math.log2(max(n * d * max(h_max, 1) / delta, 2))))


def entrywise_constants(n, d, alpha, delta, c_N0=1., c_N=1.):
    """
    Theoretical constants: B = (d/delta log n)^alpha, h_max = log_B n,
    N0 = c_N0 B/delta log log n, N = c_N B log n (logs in base 2)
    """
    if not 0 < alpha < 1:
        raise ValueError('alpha=%s should be in (0, 1)' % alpha)
    if not 0 < delta < 1:
        raise ValueError('delta=%s should be in (0, 1)' % delta)
    if n < 2 or d < 1:
        raise ValueError('entrywise constants require n >= 2 and d >= 1, got n=%s d=%s' % (n, d))
    B = (d / delta * math.log2(n)) ** alpha
    if B <= 1:
        raise ValueError('branching factor B=%s should be > 1, increase d/delta or alpha' % B)
    h_max = _levels(n, B)
    loglog = math.log2(math.log2(n)) if n > 2 else 0.
    N0 = max(1, math.ceil(c_N0 * B / delta * loglog))
    N = max(1, math.ceil(c_N * B * math.log2(n)))
    return EntrywiseConfig(n, d, alpha, delta, B, h_max, _q_max(n, d, h_max, delta), N0, N,
                           'theoretical', c_N0, c_N)


def calibrated_entrywise(n, d, B, N0, N, h_max=None, alpha=.5, delta=.5):
    """
    User-chosen entrywise configuration, h_max defaults to ceil(log_B n)
    """
    if B <= 1:
        raise ValueError('branching factor B=%s should be > 1' % B)
    if N0 < 1 or N < 1:
        raise ValueError('bucket counts should be positive, got N0=%s N=%s' % (N0, N))
    if h_max is None:
        h_max = _levels(n, B)
    return EntrywiseConfig(n, d, alpha, delta, float(B), int(h_max), _q_max(n, d, h_max, delta),
                           int(N0), int(N), 'calibrated')


def build_entrywise(rng, config):
    """
    M-sketch with fixed rates p_h = B^-h, h = 1..h_max (no random shift)
    """
    if not 0 < config.alpha < 1:
        raise ValueError('alpha=%s should be in (0, 1)' % config.alpha)
    rates = float(config.B) ** -np.arange(1, config.h_max + 1, dtype=np.float64)
    return assemble_msketch(rng, config, rates, config.N0, None, 'entrywise')


def entrywise_from_descriptor(desc):
    """
    Rebuild an entrywise operator from its descriptor
    """
    if desc.get('type') != 'entrywise':
        raise ValueError('not an entrywise descriptor: %s' % desc.get('type'))
    o = desc['overrides']
    if desc['scale_mode'] == 'theoretical':
        conf = entrywise_constants(desc['n'], desc['d'], o['alpha'], desc['delta'])
    else:
        conf = calibrated_entrywise(desc['n'], desc['d'], o['B'], o['N0'], o['N'], o['h_max'],
                                    o['alpha'], desc['delta'])
    return build_entrywise(Rng(desc['seed'], desc['stream_id']), conf)


def entrywise_descriptor(op):
    """
    JSON-serializable record of an entrywise operator
    """
    c = op.config
    return {'type': 'entrywise', 'n': c.n, 'd': c.d, 'eps': None, 'delta': c.delta,
            'seed': op.seed, 'stream_id': op.stream_id, 'scale_mode': c.scale_mode,
            'overrides': {'alpha': c.alpha, 'B': c.B, 'N0': c.N0, 'N': c.N, 'h_max': c.h_max}}


def estimate_entrywise_norm(op, A):
    """
    ||S A||_1, entrywise
    """
    return l1_norm_matrix(op.apply_matrix(A))


def gen_entrywise_hard_instance(rng, d, r, which):
    """
    Hard input distributions of the entrywise lower bound.

    Args:
        d (int): matrix size (d x d)
        r (int): number of sketch rows
        which (str): 'mu1' for i.i.d. Cauchy entries, 'mu2' for r i.i.d.
            Cauchy columns scaled by d/r followed by zero columns
    """
    if r > d or r < 1:
        raise ValueError('hard instance requires 1 <= r <= d, got r=%d d=%d' % (r, d))
    if which == 'mu1':
        return sample_cauchy(rng, d * d).reshape(d, d)
    if which == 'mu2':
        A = np.zeros((d, d))
        A[:, :r] = sample_cauchy(rng, d * r).reshape(d, r) * (d / r)
        return A
    raise ValueError('unknown hard instance %s, should be mu1 or mu2' % which)


def hard_instance_separation(rng, d=256, r=16, draws=100):
    """
    Two-sample location test between ||SA||_1/||A||_1 ratios under mu1 and
    mu2, for a fixed r x d CountSketch S.

    Returns:
        (p-value of the Mann-Whitney U test, mu1 ratios, mu2 ratios)
    """
    op = build_countsketch(rng.derive(0), r, d)
    ratios = {}
    for k, which in enumerate(['mu1', 'mu2']):
        lr = []
        for t in range(draws):
            A = gen_entrywise_hard_instance(rng.derive(1, k, t), d, r, which)
            lr.append(estimate_entrywise_norm(op, A) / l1_norm_matrix(A))
        ratios[which] = np.array(lr)
    pval = stats.mannwhitneyu(ratios['mu1'], ratios['mu2'], alternative='two-sided').pvalue
    return float(pval), ratios['mu1'], ratios['mu2']


def tradeoff_curve(rng, n, d, alphas=(.2, .4, .6, .8), delta=.5, trials=21, verbose=False):
    """
    Sketch size and median distortion ||SA||_1/||A||_1 over Gaussian
    matrices for each alpha, with theoretical constants.

    Returns:
        pandas.DataFrame with columns alpha, B, h_max, k, median_distortion
    """
    rows = []
    for ia, alpha in enumerate(alphas):
        conf = entrywise_constants(n, d, alpha, delta)
        lr = []
        for t in range(trials):
            op = build_entrywise(rng.derive(0, ia, t), conf)
            A = rng.derive(1, ia, t).gen.standard_normal((n, d))
            lr.append(estimate_entrywise_norm(op, A) / l1_norm_matrix(A))
        rows.append({'alpha': alpha, 'B': conf.B, 'h_max': conf.h_max,
                     'k': conf.N0 + conf.h_max * conf.N, 'median_distortion': float(np.median(lr))})
        if verbose:
            print('alpha %.2f: B=%.2f h_max=%d median distortion %.3f' % (alpha, conf.B, conf.h_max, rows[-1]['median_distortion']))
    return pd.DataFrame(rows)
