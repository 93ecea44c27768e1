#!/usr/bin/env python
# encoding: utf-8

# The MIT License
# Copyright (c) 2024 Ina (http://www.ina.fr/)
# See the LICENSE file distributed with this work for the full license text.

"""
Ground truth oracles and Monte Carlo drivers used to validate sketches:
exact l1 distances between joint and product distributions, empirical
distortion of an operator over sets of directions, randomized boundary and
Rademacher checks, and hard i.i.d. design generators.

>>> import numpy as np
>>> from inaL1Sketch.oracle_harness import exact_tvd
>>> exact_tvd(np.array([[1, 0], [0, 1]]))
1.0
"""

import itertools
import math
from typing import NamedTuple

import numpy as np
import pandas as pd
from scipy import stats

from .numerics import Rng, SketchOperator, sample_cauchy, sample_stable, l1_norm

#: largest joint tensor materialized by :func:`exact_tvd`
TVD_SIZE_CAP = 10 ** 7


class DistortionReport(NamedTuple):
    """
    Summary of ratios ||S A x||_1 / ||A x||_1
    """
    min_ratio : float
    max_ratio : float
    median_ratio : float
    direction_count : int
    trial_count : int
    #: directions with A x = 0, left out of the ratios
    skipped : int = 0
    ratios : object = None

    def to_dict(self):
        ret = self._asdict()
        del ret['ratios']
        return ret

    def to_frame(self):
        """
        One row per ratio when ratios are kept, a single summary row otherwise
        """
        if self.ratios is not None:
            return pd.DataFrame({'ratio': np.asarray(self.ratios)})
        return pd.DataFrame([self.to_dict()])


def summarize_ratios(ratios, trial_count=1, skipped=0, keep=False):
    ratios = np.asarray(ratios, dtype=np.float64)
    if len(ratios) == 0:
        return DistortionReport(np.nan, np.nan, np.nan, 0, trial_count, skipped, ratios if keep else None)
    return DistortionReport(float(ratios.min()), float(ratios.max()), float(np.median(ratios)),
                            len(ratios), trial_count, skipped, ratios if keep else None)


def frequency_tensor(tuples, d, deltas=None):
    """
    Joint count tensor of shape (d,) * q from (n, q) index tuples
    """
    tuples = np.asarray(tuples, dtype=np.int64)
    q = tuples.shape[1]
    if d ** q > TVD_SIZE_CAP:
        raise ValueError('d^q=%d exceeds the oracle size cap %d' % (d ** q, TVD_SIZE_CAP))
    counts = np.zeros((d,) * q)
    deltas = np.ones(len(tuples)) if deltas is None else np.asarray(deltas, dtype=np.float64)
    np.add.at(counts, tuple(tuples.T), deltas)
    return counts


def product_of_marginals(P):
    """
    Outer product of the marginals of a normalized joint tensor
    """
    q = P.ndim
    Q = np.ones(())
    for k in range(q):
        marg = P.sum(axis=tuple(a for a in range(q) if a != k))
        Q = np.multiply.outer(Q, marg)
    return Q


def exact_tvd(joint_counts, m=None):
    """
    ||P - Q||_1 with P the normalized joint counts and Q the product of its
    marginals (twice the total variation distance).

    Args:
        joint_counts (array): tensor of shape (d,) * q
        m (float, optional): number of samples, defaults to the total count

    Raises:
        ValueError: tensor larger than the size cap or m = 0
    """
    counts = np.asarray(joint_counts, dtype=np.float64)
    if counts.size > TVD_SIZE_CAP:
        raise ValueError('joint tensor of %d entries exceeds the oracle size cap %d' % (counts.size, TVD_SIZE_CAP))
    m = counts.sum() if m is None else m
    if m == 0:
        raise ValueError('empty joint tensor, m = 0')
    P = counts / m
    return l1_norm(P - product_of_marginals(P))


class IdentityOp(SketchOperator):
    def __init__(self, n):
        self.n = int(n)

    @property
    def input_dim(self):
        return self.n

    @property
    def output_dim(self):
        return self.n

    def _apply_imp(self, A):
        return A.copy()


class ZeroOp(SketchOperator):
    def __init__(self, n, k=1):
        self.n = int(n)
        self.k = int(k)

    @property
    def input_dim(self):
        return self.n

    @property
    def output_dim(self):
        return self.k

    def _apply_imp(self, A):
        return np.zeros((self.k, A.shape[1]))


def l1_sphere_grid(d, eps):
    """
    Points z / k of the l1 unit sphere with z integer, ||z||_1 = k and
    k = ceil(1/eps): every unit vector lies within l1 distance 2 eps d of one
    of them. Only enumerated for d <= 3.

    Returns:
        (count, d) array
    """
    if d > 3:
        raise ValueError('grid enumeration limited to d <= 3, got d=%d' % d)
    k = math.ceil(1. / eps)
    pts = [z for z in itertools.product(range(-k, k + 1), repeat=d) if sum(abs(v) for v in z) == k]
    return np.array(pts, dtype=np.float64) / k


def direction_matrix(rng, d, count, mode, eps=.1):
    """
    Directions as the columns of a d x count matrix.

    Args:
        mode (str): 'gaussian', 'sparse' (3 nonzero Gaussian coordinates),
            'coordinate' (the d canonical vectors, count is ignored) or
            'net_tiny' (:func:`l1_sphere_grid`, count is ignored)
    """
    if mode == 'gaussian':
        return rng.gen.standard_normal((d, count))
    if mode == 'sparse':
        X = np.zeros((d, count))
        s = min(d, 3)
        for c in range(count):
            X[rng.gen.choice(d, s, replace=False), c] = rng.gen.standard_normal(s)
        return X
    if mode == 'coordinate':
        return np.eye(d)
    if mode == 'net_tiny':
        return l1_sphere_grid(d, eps).T
    raise ValueError('unknown direction mode %s' % mode)


def distortion_ratios(op, A, X):
    """
    Ratios ||S A x||_1 / ||A x||_1 for the columns x of X.

    Returns:
        (ratios, number of skipped directions with A x = 0)
    """
    AX = np.asarray(A, dtype=np.float64) @ X
    den = np.abs(AX).sum(axis=0)
    num = np.abs(np.asarray(op(AX))).sum(axis=0)
    keep = den > 0
    return num[keep] / den[keep], int((~keep).sum())


def empirical_distortion(op, A, directions=64, mode='gaussian', rng=None, eps=.1, keep_ratios=False):
    """
    Distortion of an operator on the column space of A.

    Args:
        op (:class:`~inaL1Sketch.numerics.SketchOperator`): sketch
        A (array): n x d matrix
        directions (int): number of sampled directions
        mode (str): see :func:`direction_matrix`
        rng (:class:`~inaL1Sketch.numerics.Rng`): direction sampling
        eps (float): grid resolution of the net_tiny mode
        keep_ratios (bool): keep every ratio in the report

    Returns:
        :class:`DistortionReport`
    """
    A = np.asarray(A, dtype=np.float64)
    rng = Rng(0) if rng is None else rng
    X = direction_matrix(rng, A.shape[1], directions, mode, eps)
    ratios, skipped = distortion_ratios(op, A, X)
    return summarize_ratios(ratios, 1, skipped, keep_ratios)


def mc_boundary_lemma(a, b, delta_prime, t, trials=100000, rng=None, expanding=False):
    """
    Frequency of p t in [a, b] for p = B'^-u, u uniform on [0, 1] and
    B' = (b/a)^(1/delta_prime). With expanding=True, p = B'^u.
    The interval of exponents hitting [a, b] has length delta_prime, so the
    frequency is at most delta_prime up to sampling noise, and it is 0 when
    the whole range of p t misses [a, b].
    """
    if not 0 < a < 1 < b:
        raise ValueError('expected 0 < a < 1 < b, got a=%s b=%s' % (a, b))
    if not 0 < delta_prime <= 1:
        raise ValueError('delta_prime=%s should be in (0, 1]' % delta_prime)
    rng = Rng(0) if rng is None else rng
    Bp = (b / a) ** (1. / delta_prime)
    u = rng.gen.random(int(trials))
    p = Bp ** u if expanding else Bp ** -u
    pt = p * t
    return float(np.mean((pt >= a) & (pt <= b)))


def binomial_bound(prob, trials, sigmas=3.):
    """
    prob + sigmas binomial standard deviations
    """
    return prob + sigmas * math.sqrt(prob * (1. - prob) / trials)


def rademacher_bound(s, d, delta):
    """
    d sqrt(log(2d/delta) / 2) sqrt(s), natural logarithm
    """
    return d * math.sqrt(.5 * math.log(2. * d / delta)) * math.sqrt(s)


def mc_rademacher_l1(s, d, delta, trials=1000, rng=None, vectors=None):
    """
    Check ||sum_i eps_i x_i||_1 <= d sqrt(log(2d/delta)/2) sqrt(s) for random
    signs eps_i and unit l1 vectors x_i.

    Args:
        vectors (array, optional): (s, d) vectors, normalized Gaussian ones
            are drawn when omitted

    Returns:
        (passed, violation rate), passed when the rate is within 3 binomial
        standard deviations of delta
    """
    rng = Rng(0) if rng is None else rng
    if vectors is None:
        vectors = rng.derive(0).gen.standard_normal((s, d))
    vectors = np.asarray(vectors, dtype=np.float64)
    vectors = vectors / np.abs(vectors).sum(axis=1, keepdims=True)
    signs = rng.derive(1).gen.choice([-1., 1.], (int(trials), s))
    lhs = np.abs(signs @ vectors).sum(axis=1)
    rate = float(np.mean(lhs > rademacher_bound(s, d, delta)))
    return rate <= binomial_bound(delta, trials), rate


def gen_hard_iid_instance(rng, kind, n, d, p=1.5):
    """
    Design matrices of the i.i.d. lower bounds.

    Args:
        kind (str): 'cauchy_design' for i.i.d. Cauchy entries,
            'pstable_design' for i.i.d. symmetric p-stable entries
        p (float): stability index of pstable_design
    """
    if n < 1 or d < 1:
        raise ValueError('design dimensions should be positive, got n=%s d=%s' % (n, d))
    if kind == 'cauchy_design':
        return sample_cauchy(rng, n * d).reshape(n, d)
    if kind == 'pstable_design':
        return sample_stable(rng, p, n * d).reshape(n, d)
    raise ValueError('unknown hard instance %s' % kind)


def stable_ks_pvalue(x, p):
    """
    Kolmogorov-Smirnov p-value of samples against the standard symmetric
    p-stable law
    """
    return float(stats.kstest(np.ravel(x), stats.levy_stable(p, 0.).cdf).pvalue)
