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


import math
import unittest
import numpy as np
from inaL1Sketch.numerics import Rng
from inaL1Sketch.countsketch import build_countsketch
from inaL1Sketch.oracle_harness import (exact_tvd, frequency_tensor, product_of_marginals, IdentityOp, ZeroOp,
                                        l1_sphere_grid, direction_matrix, empirical_distortion,
                                        mc_boundary_lemma, binomial_bound, rademacher_bound, mc_rademacher_l1,
                                        gen_hard_iid_instance, stable_ks_pvalue, TVD_SIZE_CAP)


class TestExactTvd(unittest.TestCase):

    def test_diagonal(self):
        self.assertEqual(exact_tvd(np.array([[1, 0], [0, 1]])), 1.)

    def test_product_is_zero(self):
        counts = np.multiply.outer(np.array([1., 2., 3.]), np.array([4., 1.]))
        self.assertAlmostEqual(exact_tvd(counts), 0.)

    def test_three_modes(self):
        counts = np.zeros((2, 2, 2))
        counts[0, 0, 0] = counts[1, 1, 1] = 1
        # P: 1/2 on two cells, Q: 1/8 everywhere
        self.assertAlmostEqual(exact_tvd(counts), 2 * (.5 - .125) + 6 * .125)

    def test_errors(self):
        with self.assertRaises(ValueError):
            exact_tvd(np.zeros((2, 2)))
        with self.assertRaises(ValueError):
            frequency_tensor(np.zeros((1, 3), dtype=int), int(math.ceil(TVD_SIZE_CAP ** (1 / 3))) + 1)

    def test_frequency_tensor(self):
        t = frequency_tensor([[0, 1], [0, 1], [1, 0]], 2, [1, 2, -1])
        np.testing.assert_array_equal(t, [[0, 3], [-1, 0]])

    def test_marginals(self):
        P = np.array([[.5, 0.], [0., .5]])
        np.testing.assert_allclose(product_of_marginals(P), np.full((2, 2), .25))


class TestDistortion(unittest.TestCase):

    def test_identity(self):
        A = Rng(0).gen.standard_normal((4, 4))
        rep = empirical_distortion(IdentityOp(4), A, 20)
        self.assertEqual((rep.min_ratio, rep.median_ratio, rep.max_ratio), (1., 1., 1.))
        self.assertEqual(rep.direction_count, 20)
        self.assertNotIn('ratios', rep.to_dict())

    def test_zero(self):
        A = Rng(0).gen.standard_normal((5, 2))
        rep = empirical_distortion(ZeroOp(5, 3), A, 10)
        self.assertEqual(rep.max_ratio, 0.)

    def test_skipped_directions(self):
        A = np.zeros((6, 2))
        A[:, 0] = 1.
        rep = empirical_distortion(IdentityOp(6), A, mode='coordinate')
        self.assertEqual((rep.direction_count, rep.skipped), (1, 1))

    def test_keep_ratios(self):
        A = Rng(0).gen.standard_normal((50, 3))
        rep = empirical_distortion(build_countsketch(Rng(1), 10, 50), A, 30, 'sparse', keep_ratios=True)
        self.assertEqual(len(rep.ratios), 30)
        self.assertEqual(len(rep.to_frame()), 30)
        self.assertTrue(rep.max_ratio <= 1 + 1e-12)

    def test_sphere_grid(self):
        pts = l1_sphere_grid(2, .5)
        np.testing.assert_allclose(np.abs(pts).sum(axis=1), 1.)
        self.assertEqual(len(pts), 8)
        with self.assertRaises(ValueError):
            l1_sphere_grid(4, .5)

    def test_direction_modes(self):
        rng = Rng(2)
        self.assertEqual(direction_matrix(rng, 5, 7, 'gaussian').shape, (5, 7))
        X = direction_matrix(rng, 5, 7, 'sparse')
        self.assertTrue(np.all((X != 0).sum(axis=0) == 3))
        np.testing.assert_array_equal(direction_matrix(rng, 3, 0, 'coordinate'), np.eye(3))
        with self.assertRaises(ValueError):
            direction_matrix(rng, 3, 2, 'dense')


class TestMonteCarloChecks(unittest.TestCase):

    def test_boundary_frequency(self):
        a, b, dp = .5, 2., .2
        Bp = (b / a) ** (1. / dp)
        freq = mc_boundary_lemma(a, b, dp, math.sqrt(a * b * Bp), 10 ** 5, Rng(0))
        self.assertLessEqual(freq, binomial_bound(dp, 10 ** 5))
        self.assertGreater(freq, 0.)

    def test_boundary_outside(self):
        self.assertEqual(mc_boundary_lemma(.5, 2., .2, 2., 10 ** 4, Rng(1), expanding=True), 0.)
        with self.assertRaises(ValueError):
            mc_boundary_lemma(1.5, 2., .2, 1.)
        with self.assertRaises(ValueError):
            mc_boundary_lemma(.5, 2., 0., 1.)

    def test_rademacher(self):
        self.assertAlmostEqual(rademacher_bound(4, 2, .1), 2 * math.sqrt(.5 * math.log(40.)) * 2)
        passed, rate = mc_rademacher_l1(16, 4, .1, 2000, Rng(0))
        self.assertTrue(passed)
        self.assertLessEqual(rate, .1)

    def test_hard_instances(self):
        self.assertEqual(gen_hard_iid_instance(Rng(0), 'cauchy_design', 10, 3).shape, (10, 3))
        with self.assertRaises(ValueError):
            gen_hard_iid_instance(Rng(0), 'gaussian_design', 10, 3)

    def test_stable_ks(self):
        x = gen_hard_iid_instance(Rng(1), 'pstable_design', 500, 2, p=1.5)
        self.assertGreater(stable_ks_pvalue(x, 1.5), .001)
        y = Rng(2).gen.standard_normal(1000) * 5
        self.assertLess(stable_ks_pvalue(y, 1.), .001)
