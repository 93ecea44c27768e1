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
import pandas as pd
from inaL1Sketch.numerics import Rng
from inaL1Sketch.acceptance_suite import run_suite, SUITES, boundary_configs, sample_vector, correlated_stream


class TestSuite(unittest.TestCase):

    def test_exact_suites_pass(self):
        df = run_suite(['no-expansion', 'linearity', 'tensor-consistency'], seed=0, quick=True)
        self.assertEqual(list(df.columns), ['suite', 'case', 'value', 'threshold', 'passed'])
        self.assertTrue(df.passed.all(), df[~df.passed])

    def test_heavy_hitter_suite(self):
        df = run_suite(['heavy-hitter'], seed=1, quick=True)
        self.assertTrue(df.passed.all())

    def test_subspace_rows(self):
        df = run_suite(['subspace'], seed=0, quick=True)
        spread = df[df.case.str.startswith('median distortion N=')]
        self.assertEqual(len(spread), 3)
        self.assertTrue((spread.value >= 1.).all())
        self.assertIn('median distortion non increasing in N', list(df.case))
        self.assertIn('min ratio non decreasing in N', list(df.case))

    def test_boundary_rows(self):
        self.assertEqual(len(boundary_configs()), 20)
        df = run_suite(['boundary-lemma'], quick=True)
        self.assertEqual(len(df), 22)
        self.assertTrue(df[df.case.str.contains('expanding')].passed.all())

    def test_deterministic(self):
        a = run_suite(['linearity', 'boundary-lemma'], seed=3, quick=True)
        b = run_suite(['linearity', 'boundary-lemma'], seed=3, quick=True)
        pd.testing.assert_frame_equal(a, b)

    def test_unknown_suite(self):
        with self.assertRaises(KeyError):
            run_suite(['does-not-exist'])

    def test_suite_names(self):
        for name in ['no-expansion', 'linearity', 'boundary-lemma', 'l1-accuracy', 'bad-mhat',
                     'tensor-consistency', 'independence', 'heavy-hitter', 'subspace', 'iid', 'hard-instance']:
            self.assertIn(name, SUITES)

    def test_generators(self):
        x = sample_vector(Rng(0), 'spiky', 100)
        self.assertEqual(int(np.sum(x == 100.)), 8)
        with self.assertRaises(ValueError):
            sample_vector(Rng(0), 'flat', 100)
        t = correlated_stream(Rng(1), 8, 50)
        np.testing.assert_array_equal(t[:, 0], t[:, 1])
