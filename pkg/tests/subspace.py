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
import numpy as np
from inaL1Sketch.numerics import Rng, l1_norm
from inaL1Sketch.subspace_embedding import (calibrated_config, derive_constants, sample_rates, build_msketch,
                                            msketch_from_descriptor, build_dense_cauchy, calibrate_dense_cauchy,
                                            cauchy_normalization, compose, apply_msketch)
from inaL1Sketch.oracle_harness import empirical_distortion


class TestConfigs(unittest.TestCase):

    def test_calibrated_dimensions(self):
        op = build_msketch(Rng(0), calibrated_config(1000, 3, B=4, N0=8, N=4096, h_max=1))
        self.assertEqual(op.output_dim, 4104)
        self.assertEqual(op.input_dim, 1000)

    def test_calibrated_validation(self):
        with self.assertRaises(ValueError):
            calibrated_config(100, 3, B=1, N0=8, N=64)
        with self.assertRaises(ValueError):
            calibrated_config(100, 3, B=4, N0=0, N=64)
        with self.assertRaises(ValueError):
            calibrated_config(100, 3, B=4, N0=8, N=64, eps=1.5)

    def test_theoretical_constants_validation(self):
        with self.assertRaises(ValueError):
            derive_constants(100, 3, 0., .5)
        with self.assertRaises(ValueError):
            derive_constants(0, 3, .5, .5)

    def test_theoretical_constants_overflow(self):
        # B = exp(d / (delta eps) ...) is not representable for d = 50
        with self.assertRaises(OverflowError):
            derive_constants(1000, 50, .1, .1)

    def test_sample_rates(self):
        np.testing.assert_allclose(sample_rates(0., 4., 3), [1., .25, 1. / 16])
        np.testing.assert_allclose(sample_rates(1., 4., 2), [.25, 1. / 16])
        with self.assertRaises(ValueError):
            sample_rates(1.5, 4., 2)


class TestMSketch(unittest.TestCase):

    conf = calibrated_config(500, 3, B=4, N0=8, N=1024, h_max=2)

    def test_deterministic(self):
        A = Rng(1).gen.standard_normal((500, 3))
        np.testing.assert_array_equal(build_msketch(Rng(9), self.conf)(A), build_msketch(Rng(9), self.conf)(A))

    def test_descriptor(self):
        op = build_msketch(Rng(9).derive(4), self.conf)
        op2 = msketch_from_descriptor(op.descriptor())
        self.assertEqual(op.u, op2.u)
        self.assertEqual((op.matrix != op2.matrix).nnz, 0)

    def test_blocks(self):
        op = build_msketch(Rng(3), self.conf)
        A = Rng(4).gen.standard_normal((500, 3))
        SA = op(A)
        np.testing.assert_allclose(op.block(A, 0), op.c0(A))
        np.testing.assert_allclose(np.vstack([op.block(A, h) for h in range(3)]), SA)
        np.testing.assert_array_equal(apply_msketch(op, A), SA)
        with self.assertRaises(IndexError):
            op.block_rows(3)

    def test_level0_no_expansion(self):
        op = build_msketch(Rng(3), self.conf)
        v = Rng(5).gen.standard_normal(500)
        self.assertLessEqual(l1_norm(op.c0(v)), l1_norm(v) * (1 + 1e-12))

    def test_survivor_rescaling(self):
        op = build_msketch(Rng(6), self.conf, u=0.)
        # rate 1 at level 1: every coordinate survives with weight 1
        self.assertEqual(len(op.survivors[0]), 500)
        A = Rng(7).gen.standard_normal((500, 3))
        self.assertTrue(np.all(np.abs(op.block(A, 1)).sum(axis=0) <= np.abs(A).sum(axis=0) + 1e-9))

    def test_output_limit(self):
        with self.assertRaises(OverflowError):
            build_msketch(Rng(0), self.conf, max_output_dim=100)

    def test_distortion_close_to_one(self):
        n = 1000
        A = Rng(8).gen.standard_normal((n, 3))
        op = build_msketch(Rng(10), calibrated_config(n, 3, B=4, N0=8, N=4096, h_max=1))
        rep = empirical_distortion(op, A, 50, 'gaussian', Rng(11))
        self.assertGreater(rep.median_ratio, .5)
        self.assertLess(rep.median_ratio, 2.)
        self.assertEqual(rep.direction_count, 50)


class TestDenseCauchy(unittest.TestCase):

    def test_normalization(self):
        op = build_dense_cauchy(Rng(0), 64, 10)
        self.assertEqual(op.normalization, cauchy_normalization(64))
        np.testing.assert_allclose(op(np.eye(10)), op.entries / cauchy_normalization(64))

    def test_calibration_constant(self):
        c = calibrate_dense_cauchy(Rng(1), 256, trials=51)
        self.assertGreater(c, .5)
        self.assertLess(c, 2.)
        op = build_dense_cauchy(Rng(2), 256, 5).calibrated(c)
        self.assertAlmostEqual(op.normalization, c * cauchy_normalization(256))

    def test_compose(self):
        first = build_dense_cauchy(Rng(0), 50, 200)
        second = build_msketch(Rng(1), calibrated_config(50, 2, B=4, N0=4, N=64))
        op = compose(first, second)
        self.assertEqual((op.input_dim, op.output_dim), (200, 68))
        A = Rng(2).gen.standard_normal((200, 2))
        np.testing.assert_allclose(op(A), second(first(A)))
        with self.assertRaises(ValueError):
            compose(second, first)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            build_dense_cauchy(Rng(0), 0, 10)
