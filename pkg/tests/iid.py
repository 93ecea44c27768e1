#!/usr/bin/env python
# encoding: utf-8

# The MIT License

# Copyright (c) 2024 Ina (http://www.ina.fr/)

# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:

# The above copyright notice and this permission notice shall be included in
# all copies or substantial portions of the Software.

# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN
# THE SOFTWARE.


import unittest
import warnings
import numpy as np
from inaL1Sketch.numerics import Rng
from inaL1Sketch.iid_design import (plan_embedding, apply_plan, PlanOp, rows_p_lt_1, rows_p_eq_1, rows_p_ge_2,
                                    sampling_regime, empirical_distortion_iid, trial_ratios,
                                    calibrate_uniform_sample, truncated_moment_slope)


class TestPlan(unittest.TestCase):

    def test_uniform_sampling_scale(self):
        plan = plan_embedding(3, 10 ** 6, 4, 10 ** 4)
        self.assertEqual(plan.method, 'uniform_sample_p_ge_2')
        self.assertEqual(plan.scale, 100.)

    def test_small_tail_index(self):
        plan = plan_embedding(.5, 10 ** 5, 4)
        self.assertEqual(plan.method, 'countsketch_p_lt_1')
        self.assertEqual(plan.r, rows_p_lt_1(4))
        self.assertEqual(rows_p_lt_1(4), 64)

    def test_cauchy_regime(self):
        self.assertEqual(rows_p_eq_1(4), 64)
        with warnings.catch_warnings():
            warnings.simplefilter('error')
            plan = plan_embedding(1, 10 ** 6, 4)
        self.assertEqual(plan.method, 'countsketch_p_eq_1')
        with self.assertWarns(UserWarning):
            plan_embedding(1, 10 ** 4, 4)
        with self.assertRaises(ValueError):
            plan_embedding(1, 10 ** 4, 4, strict=True)
        with self.assertRaises(ValueError):
            plan_embedding(1, 10 ** 6, 4, r=10)

    def test_intermediate_regimes(self):
        self.assertTrue(sampling_regime(1.5, 10 ** 6, 4))
        self.assertFalse(sampling_regime(1.5, 8, 4))
        plan = plan_embedding(1.5, 10 ** 6, 4, 1000)
        self.assertEqual(plan.method, 'sample_scale_p12')
        self.assertGreater(plan.kappa_n, 1.)
        self.assertAlmostEqual(plan.scale, plan.kappa_n * 4 ** (1. / 3) * 1000.)
        self.assertEqual(plan_embedding(1.5, 8, 4, 4).method, 'countsketch_p12')

    def test_row_formula(self):
        self.assertGreater(rows_p_ge_2(3, 4, .3, 2.), rows_p_ge_2(3, 4, .3, 1.))
        self.assertGreaterEqual(rows_p_ge_2(3, 4, .3), int(np.ceil(.3 ** -3)))

    def test_validation(self):
        with self.assertRaises(ValueError):
            plan_embedding(0, 100, 4)
        with self.assertRaises(ValueError):
            plan_embedding(3, 100, 4, r=200)


class TestApply(unittest.TestCase):

    def test_shapes(self):
        plan = plan_embedding(3, 1000, 3, 100)
        A = Rng(0).gen.standard_normal((1000, 3))
        self.assertEqual(apply_plan(plan, Rng(1), A).shape, (100, 3))
        with self.assertRaises(ValueError):
            apply_plan(plan, Rng(1), A[:, :2])
        op = PlanOp(plan, Rng(1))
        self.assertEqual(op(A @ np.ones((3, 5))).shape, (100, 5))
        np.testing.assert_allclose(op(A), apply_plan(plan, Rng(1), A))

    def test_sampled_rows_scaled(self):
        plan = plan_embedding(3, 1000, 3, 100)
        A = np.ones((1000, 3))
        np.testing.assert_allclose(apply_plan(plan, Rng(2), A), 10.)


class TestDistortionIID(unittest.TestCase):

    def test_light_tails_concentrate(self):
        rep = empirical_distortion_iid(3., 20000, 3, 2000, trials=2, rng=Rng(0))
        self.assertGreater(rep.median_ratio, .8)
        self.assertLess(rep.median_ratio, 1.2)
        self.assertEqual(rep.trial_count, 2)

    def test_trial_ratios(self):
        df = trial_ratios(3., 5000, 2, 500, trials=3, rng=Rng(1))
        self.assertEqual(len(df), 3)
        self.assertEqual(list(df.trial), [0, 1, 2])
        self.assertTrue(set(['min_ratio', 'median_ratio', 'max_ratio', 'method']).issubset(df.columns))

    def test_calibration_requires_light_tails(self):
        with self.assertRaises(ValueError):
            calibrate_uniform_sample(1.5, 1000, 3)

    def test_truncated_moment_slope(self):
        slope = truncated_moment_slope(.5, 1, Rng(0), 2 * 10 ** 5)
        self.assertAlmostEqual(slope, .5, delta=.15)
