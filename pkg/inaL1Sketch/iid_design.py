#!/usr/bin/env python
# encoding: utf-8

# The MIT License
# Copyright (c) 2024 Ina (http://www.ina.fr/)
# See the LICENSE file distributed with this work for the full license text.

"""
l1 embeddings specialized to design matrices with i.i.d. symmetric power
law entries of tail index p.

The operator depends on the regime of (p, n, d):

==========  ====================================  ===========================
p           condition                             operator
==========  ====================================  ===========================
(0, 1)                                            CountSketch, d^2 log^2 d rows
1           (d log d)^2 <= r <= o(sqrt(n))        CountSketch
(1, 2)      n^(1-1/p) >= d^(1/p) log d            row sampling, scaled
(1, 2)      otherwise                             CountSketch
[2, inf)                                          uniform row sampling, n/r
==========  ====================================  ===========================

>>> from inaL1Sketch.iid_design import plan_embedding
>>> plan_embedding(3, 10 ** 6, 4, 10 ** 4).scale
100.0
"""

import math
import warnings
from typing import NamedTuple

import numpy as np
import pandas as pd

from .numerics import Rng, PowerLawSpec, sample_power_law
from .countsketch import build_countsketch
from .oracle_harness import direction_matrix, distortion_ratios, summarize_ratios

METHODS = ['countsketch_p_lt_1', 'countsketch_p_eq_1', 'sample_scale_p12', 'countsketch_p12',
           'uniform_sample_p_ge_2']


class IIDEmbeddingPlan(NamedTuple):
    p : float
    n : int
    d : int
    r : int
    method : str
    scale : float
    #: 1 + d^(1/p) log d / n^(1-1/p), sampling regime of 1 < p < 2 only
    kappa_n : float = None


def _logd(d):
    return max(math.log2(d), 1.)


def rows_p_lt_1(d, c=1.):
    """
    c d^2 log^2 d
    """
    return math.ceil(c * d ** 2 * _logd(d) ** 2)


def rows_p_eq_1(d, c=1.):
    """
    c (d log d)^2, smallest row count of the p = 1 regime
    """
    return math.ceil(c * (d * _logd(d)) ** 2)


def rows_p_ge_2(p, d, eps, c=1.):
    """
    c max(eps^-p, (d^(3/2+1/p) eps^-1 log(1/eps))^(p/(p-1)))
    """
    core = d ** (1.5 + 1. / p) / eps * math.log2(1. / eps)
    return math.ceil(c * max(eps ** -p, core ** (p / (p - 1.))))


def sampling_regime(p, n, d):
    """
    True when n^(1-1/p) >= d^(1/p) log d, ties go to sampling
    """
    return n ** (1. - 1. / p) >= d ** (1. / p) * _logd(d)


def plan_embedding(p, n, d, r=None, eps=.3, c=1., strict=False):
    """
    Choose the operator for a n x d design of tail index p.

    Args:
        p (float): tail index
        n (int): rows of the design
        d (int): columns of the design
        r (int, optional): rows of the sketch, defaults to the row formula of
            the regime (capped at n)
        eps (float): accuracy used by the p >= 2 row formula
        c (float): multiplier of the row formulas
        strict (bool): raise instead of warning when the p = 1 condition
            r <= sqrt(n)/4 fails

    Returns:
        :class:`IIDEmbeddingPlan`
    """
    if p <= 0:
        raise ValueError('tail index p=%s should be positive' % p)
    if n < 1 or d < 1:
        raise ValueError('dimensions should be positive, got n=%s d=%s' % (n, d))
    if p < 1:
        r = min(rows_p_lt_1(d, c), n) if r is None else int(r)
        method, scale, kappa = 'countsketch_p_lt_1', 1., None
    elif p == 1:
        lo = rows_p_eq_1(d, c)
        r = lo if r is None else int(r)
        if r < lo:
            raise ValueError('p=1 requires r >= C (d log d)^2 = %d, got r=%d' % (lo, r))
        if r > math.sqrt(n) / 4:
            msg = 'p=1 requires r <= sqrt(n)/4 = %.1f, got r=%d' % (math.sqrt(n) / 4, r)
            if strict:
                raise ValueError(msg)
            warnings.warn(msg)
        method, scale, kappa = 'countsketch_p_eq_1', 1., None
    elif p < 2:
        r = min(rows_p_lt_1(d, c), n) if r is None else int(r)
        if sampling_regime(p, n, d):
            kappa = 1. + d ** (1. / p) * _logd(d) / n ** (1. - 1. / p)
            method, scale = 'sample_scale_p12', kappa * d ** (1. - 1. / p) * n / r
        else:
            method, scale, kappa = 'countsketch_p12', 1., None
    else:
        r = min(rows_p_ge_2(p, d, eps, c), n) if r is None else int(r)
        method, scale, kappa = 'uniform_sample_p_ge_2', n / r, None
    if not 1 <= r <= n:
        raise ValueError('row count r=%d should be in [1, n=%d]' % (r, n))
    return IIDEmbeddingPlan(p, int(n), int(d), int(r), method, float(scale), kappa)


def apply_plan(plan, rng, A):
    """
    Apply the planned operator to A (n x d), returns r x d
    """
    A = np.asarray(A, dtype=np.float64)
    if A.shape != (plan.n, plan.d):
        raise ValueError('design of shape %s, plan expects (%d, %d)' % (A.shape, plan.n, plan.d))
    return _apply_rows(plan, rng, A)


def _apply_rows(plan, rng, A):
    if plan.method.startswith('countsketch'):
        return plan.scale * build_countsketch(rng, plan.r, plan.n).apply_matrix(A)
    rows = rng.derive(0).gen.choice(plan.n, plan.r, replace=False)
    return plan.scale * A[rows]


class PlanOp:
    """
    Planned operator with its randomness fixed, as a functor on n x k arrays
    """
    def __init__(self, plan, rng):
        self.plan = plan
        self.rng = rng

    def __call__(self, M):
        M = np.asarray(M, dtype=np.float64)
        if M.shape[0] != self.plan.n:
            raise ValueError('input has %d rows, plan expects %d' % (M.shape[0], self.plan.n))
        return _apply_rows(self.plan, self.rng, M)


def empirical_distortion_iid(p, n, d, r=None, trials=11, rng=None, directions=16, eps=.3, plan=None,
                             keep_ratios=False, verbose=False):
    """
    Ratios ||S A x||_1 / ||A x||_1 over power law designs A and Gaussian,
    sparse and coordinate directions x.

    Returns:
        :class:`~inaL1Sketch.oracle_harness.DistortionReport`
    """
    rng = Rng(0) if rng is None else rng
    if plan is None:
        plan = plan_embedding(p, n, d, r, eps)
    ratios, skipped = [], 0
    for t in range(trials):
        A = sample_power_law(rng.derive(1, t), PowerLawSpec(p), n * d).reshape(n, d)
        op = PlanOp(plan, rng.derive(2, t))
        drng = rng.derive(3, t)
        X = np.hstack([direction_matrix(drng, d, directions, 'gaussian'),
                       direction_matrix(drng, d, directions, 'sparse'),
                       direction_matrix(drng, d, directions, 'coordinate')])
        lr, sk = distortion_ratios(op, A, X)
        ratios.append(lr)
        skipped += sk
        if verbose:
            print('trial %d: median ratio %.3f' % (t, np.median(lr)))
    return summarize_ratios(np.concatenate(ratios), trials, skipped, keep_ratios)


def trial_ratios(p, n, d, r=None, trials=11, rng=None, directions=16, eps=.3):
    """
    Per trial median ratios as a pandas.DataFrame (bench output)
    """
    rng = Rng(0) if rng is None else rng
    plan = plan_embedding(p, n, d, r, eps)
    rows = []
    for t in range(trials):
        rep = empirical_distortion_iid(p, n, d, trials=1, rng=rng.derive(t), directions=directions,
                                       plan=plan)
        rows.append({'trial': t, 'p': p, 'n': n, 'd': d, 'r': plan.r, 'method': plan.method,
                     'min_ratio': rep.min_ratio, 'median_ratio': rep.median_ratio,
                     'max_ratio': rep.max_ratio})
    return pd.DataFrame(rows)


def concentration_rate(p, n, d, eps, c, trials, rng, directions=16):
    """
    Fraction of (trial, direction) ratios inside [1 - 3 eps, 1 + 3 eps] for
    the uniform sampling plan with row constant c
    """
    plan = plan_embedding(p, n, d, eps=eps, c=c)
    rep = empirical_distortion_iid(p, n, d, trials=trials, rng=rng, directions=directions, plan=plan,
                                   keep_ratios=True)
    r = rep.ratios
    return float(np.mean((r >= 1 - 3 * eps) & (r <= 1 + 3 * eps)))


def calibrate_uniform_sample(p, n, d, eps=.3, trials=11, rng=None, threshold=.9, max_const=64):
    """
    Smallest power of two c such that the p >= 2 plan with row constant c
    passes the concentration criterion.

    Returns:
        (c, rate). c may exceed max_const when no constant passes, a
        warning is then issued.
    """
    if p < 2:
        raise ValueError('uniform sampling calibration requires p >= 2, got p=%s' % p)
    rng = Rng(0) if rng is None else rng
    c = 1
    while True:
        rate = concentration_rate(p, n, d, eps, c, trials, rng.derive(c))
        if rate >= threshold:
            return c, rate
        if c >= max_const or rows_p_ge_2(p, d, eps, c) >= n:
            warnings.warn('no row constant up to %d reaches rate %.2f (got %.3f)' % (c, threshold, rate))
            return 2 * c, rate
        c *= 2


def truncated_moment_slope(p, order, rng=None, samples=10 ** 6, log2_T=range(2, 11)):
    """
    Log-log slope of the truncated moments E[|X|^order 1{|X| <= T}] of a
    Pareto law of index p, fitted on the increments over the doubling shells
    (T, 2T]. The increments are exact powers T^(order - p) for order > p.

    Returns:
        fitted slope (float)
    """
    rng = Rng(0) if rng is None else rng
    x = np.abs(sample_power_law(rng, PowerLawSpec(p, symmetric=False), samples))
    T = 2. ** np.asarray(list(log2_T), dtype=np.float64)
    incr = np.array([np.sum(np.where((x > t) & (x <= 2 * t), x ** order, 0.)) / samples for t in T])
    if np.any(incr <= 0):
        raise ValueError('empty shell, increase samples or lower the largest T')
    return float(np.polyfit(np.log2(T), np.log2(incr), 1)[0])
