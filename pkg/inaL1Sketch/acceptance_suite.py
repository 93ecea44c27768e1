#!/usr/bin/env python
# encoding: utf-8

# The MIT License
# Copyright (c) 2024 Ina (http://www.ina.fr/)
# See the LICENSE file distributed with this work for the full license text.

"""
Named Monte Carlo checks run by the ``suite`` command.

Each check returns rows (suite, case, value, threshold, passed) and
:func:`run_suite` gathers them into a pandas.DataFrame. Every draw comes
from an :class:`~inaL1Sketch.numerics.Rng` derived from the suite seed, so
reports are identical across runs. ``quick=True`` shrinks the sizes and
seed counts for unit tests.
"""

import math
import warnings

import numpy as np
import pandas as pd

from .numerics import Rng, l1_norm
from .countsketch import build_countsketch
from .subspace_embedding import calibrated_config, build_msketch
from .entrywise_embedding import calibrated_entrywise, build_entrywise, hard_instance_separation
from .heavy_hitter import hh_build
from .l1_estimator import shh_build, BoostedL1Estimator, build_rough_sketch
from .tensor_independence import build_tensor_state
from .oracle_harness import (exact_tvd, frequency_tensor, empirical_distortion, mc_boundary_lemma,
                             binomial_bound)
from .iid_design import calibrate_uniform_sample, empirical_distortion_iid, truncated_moment_slope


def _row(suite, case, value, threshold, passed):
    return {'suite': suite, 'case': case, 'value': float(value), 'threshold': float(threshold),
            'passed': bool(passed)}


def check_no_expansion(rng, quick=False):
    pairs = 100 if quick else 1000
    worst = {'countsketch': 0., 'entrywise-level0': 0.}
    for t in range(pairs):
        g = rng.derive(0, t).gen
        n = int(g.integers(1, 200))
        r = int(g.integers(1, 64))
        v = g.standard_cauchy(n)
        cs = build_countsketch(rng.derive(1, t), r, n)
        worst['countsketch'] = max(worst['countsketch'], l1_norm(cs(v)) / l1_norm(v))
        conf = calibrated_entrywise(max(n, 2), 2, B=4, N0=r, N=r)
        op = build_entrywise(rng.derive(2, t), conf)
        v2 = g.standard_normal(conf.n)
        worst['entrywise-level0'] = max(worst['entrywise-level0'], l1_norm(op.c0(v2)) / l1_norm(v2))
    return [_row('no-expansion', k, v, 1 + 1e-12, v <= 1 + 1e-12) for k, v in worst.items()]


def _random_stream(g, N, length):
    return g.integers(0, N, length), g.integers(-5, 6, length).astype(np.float64)


def check_linearity(rng, quick=False):
    pairs = 10 if quick else 100
    failures = {'heavy-hitter': 0, 'subsampling': 0, 'rough': 0, 'tensor': 0}
    N = 64
    for t in range(pairs):
        g = rng.derive(0, t).gen
        s1 = _random_stream(g, N, 50)
        s2 = _random_stream(g, N, 50)
        both = (np.concatenate([s1[0], s2[0]]), np.concatenate([s1[1], s2[1]]))

        def hh(stream):
            st = hh_build(rng.derive(1, t), N, .1, .05)
            st.update_many(*stream)
            return st.acc

        def shh(stream):
            st = shh_build(rng.derive(2, t), .2, 4, N)
            st.update_many(*stream)
            return st.data

        def rough(stream):
            sk = build_rough_sketch(rng.derive(3, t), N)
            for i, delta in zip(*stream):
                sk.update(int(i), delta)
            return sk.acc

        for name, fn in [('heavy-hitter', hh), ('subsampling', shh)]:
            if not np.array_equal(fn(both), fn(s1) + fn(s2)):
                failures[name] += 1
        # Cauchy columns are not integers, sums only agree up to rounding
        if not np.allclose(rough(both), rough(s1) + rough(s2), rtol=1e-12, atol=1e-9):
            failures['rough'] += 1

        tuples = g.integers(0, 4, (40, 2))
        deltas = g.integers(-3, 4, 40).astype(np.float64)

        def tensor(sel):
            st = build_tensor_state(rng.derive(4, t), 2, 4, .3, reps=1, R_hh=1, B=4)
            for idx, delta in zip(tuples[sel], deltas[sel]):
                st.update(idx, delta)
            return np.concatenate([st.P] + [st.marginal_vector(k) for k in range(1, 3)])

        a, b = np.arange(40) < 20, np.arange(40) >= 20
        if not np.array_equal(tensor(np.ones(40, dtype=bool)), tensor(a) + tensor(b)):
            failures['tensor'] += 1
    return [_row('linearity', k, v, 0, v == 0) for k, v in failures.items()]


def boundary_configs():
    """
    20 (a, b, delta_prime, t) cases with t in the sensitive range
    [b, a B'] of the contracting rates
    """
    ret = []
    for a in [.25, .5]:
        for b in [2., 4.]:
            for dp in [.05, .1, .2, .3, .5]:
                Bp = (b / a) ** (1. / dp)
                ret.append((a, b, dp, math.sqrt(b * a * Bp)))
    return ret


def check_boundary_lemma(rng, quick=False):
    trials = 10 ** 4 if quick else 10 ** 5
    rows = []
    for k, (a, b, dp, t) in enumerate(boundary_configs()):
        freq = mc_boundary_lemma(a, b, dp, t, trials, rng.derive(k))
        bound = binomial_bound(dp, trials)
        rows.append(_row('boundary-lemma', 'a=%g b=%g dp=%g' % (a, b, dp), freq, bound, freq <= bound))
    freq = mc_boundary_lemma(.5, 2., .2, 2., trials, rng.derive(100), expanding=True)
    rows.append(_row('boundary-lemma', 't>=b expanding', freq, 0, freq == 0))
    freq = mc_boundary_lemma(.5, 2., .2, .5 / 2. ** 10, trials, rng.derive(101), expanding=True)
    rows.append(_row('boundary-lemma', "B't<=a expanding", freq, 0, freq == 0))
    return rows


def sample_vector(rng, kind, N):
    """
    'gaussian', 'spiky' (8 spikes over Gaussian noise) or 'mixed' (5% of the
    coordinates scaled by 10)
    """
    g = rng.gen
    x = g.standard_normal(N)
    if kind == 'spiky':
        x[g.choice(N, 8, replace=False)] = 100.
    elif kind == 'mixed':
        x[g.choice(N, N // 20, replace=False)] *= 10
    elif kind != 'gaussian':
        raise ValueError('unknown test vector %s' % kind)
    return x


def check_l1_accuracy(rng, quick=False):
    seeds, N = (10, 512) if quick else (100, 4096)
    rows = []
    for k, kind in enumerate(['gaussian', 'spiky', 'mixed']):
        single, boosted = 0, 0
        for s in range(seeds):
            x = sample_vector(rng.derive(0, k, s), kind, N)
            M = l1_norm(x)
            M_hat = M * (2. + 2. * rng.derive(1, k, s).gen.random())
            st = shh_build(rng.derive(2, k, s), .2, 4, N)
            st.load(x)
            single += abs(st.estimate(M_hat) - M) <= .25 * M
            be = BoostedL1Estimator(rng.derive(3, k, s), .2, 4, N)
            be.load(x)
            boosted += abs(be.estimate(M_hat) - M) <= .25 * M
        rows.append(_row('l1-accuracy', kind + ' single', single / seeds, .6, single >= .6 * seeds))
        rows.append(_row('l1-accuracy', kind + ' boosted', boosted / seeds, .9, boosted >= .9 * seeds))
    return rows


def check_bad_mhat(rng, quick=False):
    seeds, N = (10, 512) if quick else (100, 4096)
    rows = []
    for k, factor in enumerate([.25, 8.]):
        ok = 0
        for s in range(seeds):
            x = sample_vector(rng.derive(0, k, s), 'mixed', N)
            M = l1_norm(x)
            st = shh_build(rng.derive(1, k, s), .2, 4, N)
            st.load(x)
            ok += st.estimate(factor * M) <= 1.3 * M
        rows.append(_row('bad-mhat', 'M_hat=%gM' % factor, ok / seeds, .9, ok >= .9 * seeds))
    return rows


def tensor_case(rng, q, d):
    """
    Small tower and random turnstile stream, returns (state, tuples, deltas)
    """
    g = rng.derive(0).gen
    st = build_tensor_state(rng.derive(1), q, d, .3, reps=1 + int(g.integers(0, 2)), R_hh=1 + int(g.integers(0, 2)),
                            B=d)
    length = int(g.integers(1, 30))
    tuples = g.integers(0, d, (length, q))
    deltas = g.integers(-3, 4, length).astype(np.float64)
    return st, tuples, deltas


def check_tensor_consistency(rng, quick=False):
    cases = 20 if quick else 200
    worst_p, worst_q = 0., 0.
    for c in range(cases):
        g = rng.derive(0, c).gen
        q = int(g.integers(1, 4))
        d = int(g.integers(2, 5)) if q < 3 else int(g.integers(2, 4))
        st, tuples, deltas = tensor_case(rng.derive(1, c), q, d)
        for idx, delta in zip(tuples, deltas):
            st.update(idx, delta)
        st.end_stream()
        Pi = st.operator_matrix()
        pf = frequency_tensor(tuples, d, deltas).ravel(order='F')
        ref = Pi @ pf
        worst_p = max(worst_p, np.abs(st.P - ref).max() / max(np.abs(ref).max(), 1.))
        refq = Pi @ st.product_tensor()
        worst_q = max(worst_q, np.abs(st.tensorize_Q() - refq).max() / max(np.abs(refq).max(), 1.))
    return [_row('tensor-consistency', 'P', worst_p, 1e-9, worst_p <= 1e-9),
            _row('tensor-consistency', 'Q', worst_q, 1e-9, worst_q <= 1e-9)]


def correlated_stream(rng, d, m):
    i = rng.gen.integers(0, d, m)
    return np.stack([i, i], axis=1)


def independent_stream(rng, d, m):
    return rng.gen.integers(0, d, (m, 2))


def check_independence(rng, quick=False):
    seeds, d, m = (6, 8, 2000) if quick else (100, 16, 10 ** 4)
    good, ratios = 0, []
    for s in range(seeds):
        tuples = correlated_stream(rng.derive(0, s), d, m)
        st = build_tensor_state(rng.derive(1, s), 2, d, .3)
        st.ingest(tuples)
        est = st.estimate_tvd()
        oracle = exact_tvd(frequency_tensor(tuples, d))
        good += abs(est - oracle) <= .35 * oracle
        tuples = independent_stream(rng.derive(2, s), d, m)
        st = build_tensor_state(rng.derive(3, s), 2, d, .3)
        st.ingest(tuples)
        ratios.append(st.estimate_tvd() / exact_tvd(frequency_tensor(tuples, d)))
    med = float(np.median(ratios))
    return [_row('independence', 'correlated', good / seeds, .6, good >= .6 * seeds),
            _row('independence', 'independent median ratio', med, 1.35, med <= 1.35)]


def check_heavy_hitter(rng, quick=False):
    seeds = 20 if quick else 100
    ok = 0
    for s in range(seeds):
        g = rng.derive(0, s).gen
        x = np.abs(g.standard_normal(64))
        planted = int(g.integers(0, 64))
        x[planted] = 0.
        x[planted] = x.sum()
        st = hh_build(rng.derive(1, s), 64, .1, .05)
        st.update_many(np.arange(64), x)
        ok += int(st.top(1)[0]) == planted
    return [_row('heavy-hitter', 'planted argmax', ok / seeds, .95, ok >= .95 * seeds)]


def check_subspace(rng, quick=False):
    """
    Per trial distortion max_ratio / min_ratio of a one level M-sketch over
    a grid of bucket counts N: its median over trials should not grow with N
    """
    trials, dirs, n = (10, 20, 300) if quick else (100, 100, 1000)
    rows = []
    grid = [256, 1024, 4096]
    spreads, mins = [], []
    for N in grid:
        ratios, spread = [], []
        for t in range(trials):
            A = rng.derive(0, t).gen.standard_normal((n, 3))
            op = build_msketch(rng.derive(1, t), calibrated_config(n, 3, B=4, N0=8, N=N, h_max=1))
            rep = empirical_distortion(op, A, dirs, 'gaussian', rng.derive(2, t), keep_ratios=True)
            ratios.append(rep.ratios)
            spread.append(rep.max_ratio / rep.min_ratio)
        ratios = np.concatenate(ratios)
        spreads.append(float(np.median(spread)))
        mins.append(float(ratios.min()))
        rows.append(_row('subspace', 'median distortion N=%d' % N, spreads[-1], spreads[0], spreads[-1] <= spreads[0]))
        if N == grid[-1]:
            med = float(np.median(ratios))
            rows.append(_row('subspace', 'min ratio N=%d' % N, mins[-1], .5, mins[-1] >= .5))
            rows.append(_row('subspace', 'median ratio N=%d' % N, med, 1., .7 <= med <= 1.3))
    # 2% slack for Monte Carlo noise between neighbouring grid points
    mono = all(b <= 1.02 * a for a, b in zip(spreads, spreads[1:]))
    rows.append(_row('subspace', 'median distortion non increasing in N', float(mono), 1, mono))
    mono = all(a <= b for a, b in zip(mins, mins[1:]))
    rows.append(_row('subspace', 'min ratio non decreasing in N', float(mono), 1, mono))
    return rows


def check_iid(rng, quick=False):
    rows = []
    n = 2 * 10 ** 4 if quick else 10 ** 5
    trials = 3 if quick else 11
    with warnings.catch_warnings():
        warnings.simplefilter('ignore')
        c, rate = calibrate_uniform_sample(3., n, 3, .3, trials, rng.derive(0))
        rows.append(_row('iid', 'p=3 calibrated constant', c, 64, c <= 64 and rate >= .9))
        meds = []
        for r in [2 ** 10, 2 ** 12, 2 ** 14]:
            rep = empirical_distortion_iid(1., n, 4, r, trials, rng.derive(1))
            meds.append(rep.median_ratio)
    mono = all(a <= b for a, b in zip(meds, meds[1:]))
    rows.append(_row('iid', 'p=1 median ratio non decreasing in r', float(mono), 1, mono))
    samples = 2 * 10 ** 5 if quick else 10 ** 6
    for k, (p, order) in enumerate([(.5, 1), (1.5, 2), (.5, 2)]):
        slope = truncated_moment_slope(p, order, rng.derive(2, k), samples)
        expected = order - p
        rows.append(_row('iid', 'slope p=%g order=%d' % (p, order), slope, expected,
                         abs(slope - expected) <= .1))
    return rows


def check_hard_instance(rng, quick=False):
    pval, _, _ = hard_instance_separation(rng, 256, 16, 30 if quick else 100)
    return [_row('hard-instance', 'mann-whitney p-value', pval, .01, pval < .01)]


SUITES = {
    'no-expansion': check_no_expansion,
    'linearity': check_linearity,
    'boundary-lemma': check_boundary_lemma,
    'l1-accuracy': check_l1_accuracy,
    'bad-mhat': check_bad_mhat,
    'tensor-consistency': check_tensor_consistency,
    'independence': check_independence,
    'heavy-hitter': check_heavy_hitter,
    'subspace': check_subspace,
    'iid': check_iid,
    'hard-instance': check_hard_instance,
}


def run_suite(only=None, seed=0, quick=False, verbose=False):
    """
    Run named checks.

    Args:
        only (list of str, optional): suite names, all by default
        seed (int): master seed, suite k draws from Rng(seed).derive(k)
        quick (bool): reduced sizes
        verbose (bool): print each suite outcome

    Returns:
        pandas.DataFrame with columns suite, case, value, threshold, passed

    Raises:
        KeyError: unknown suite name
    """
    names = list(SUITES) if not only else list(only)
    for name in names:
        if name not in SUITES:
            raise KeyError('unknown suite %s, available: %s' % (name, ', '.join(SUITES)))
    master = Rng(seed)
    rows = []
    for name in names:
        ret = SUITES[name](master.derive(list(SUITES).index(name)), quick)
        if verbose:
            print('%s: %s' % (name, 'pass' if all(r['passed'] for r in ret) else 'FAIL'))
        rows += ret
    return pd.DataFrame(rows, columns=['suite', 'case', 'value', 'threshold', 'passed'])
