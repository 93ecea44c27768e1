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


import contextlib
import io
import json
import os
import tempfile
import unittest
from unittest import mock

import numpy as np
import inaL1Sketch
from inaL1Sketch.numerics import write_matrix
from inaL1Sketch.commandline_utils import main, INDEPENDENCE_CSV

SCHEMA = os.path.join(os.path.dirname(inaL1Sketch.__file__), 'schemas', 'report.schema.json')


class TestCommandLine(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = os.path.join(self.tmp.name, 'out.json')

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, name, content):
        path = os.path.join(self.tmp.name, name)
        with open(path, 'wt') as fid:
            fid.write(content)
        return path

    def run_main(self, argv):
        err = io.StringIO()
        with contextlib.redirect_stderr(err), contextlib.redirect_stdout(io.StringIO()):
            ret = main(argv)
        return ret, err.getvalue()

    def read_out(self):
        with open(self.out, 'rt') as fid:
            return fid.read()

    def assert_schema(self, rep):
        """
        Check the root type, command enum and per command required keys of
        the shipped report schema
        """
        with open(SCHEMA) as fid:
            schema = json.load(fid)
        self.assertIsInstance(rep, dict)
        self.assertIn(rep['command'], schema['properties']['command']['enum'])
        for block in schema['allOf']:
            if block['if']['properties']['command']['const'] != rep['command']:
                continue
            then = block['then']
            for k in then['required']:
                self.assertIn(k, rep)
            sub = then.get('properties', {})
            for k in sub.get('params', {}).get('required', []):
                self.assertIn(k, rep['params'])
            for row in rep.get('rows', []):
                for k in sub.get('rows', {}).get('items', {}).get('required', []):
                    self.assertIn(k, row)

    def test_independence_two_pairs(self):
        stream = self.write('pairs.txt', '1 1\n2 2\n')
        ret, _ = self.run_main(['independence', '--stream', stream, '--q', '2', '-o', self.out])
        self.assertEqual(ret, 0)
        rep = json.loads(self.read_out())
        self.assertEqual(rep['oracle'], 1.)
        self.assertEqual(rep['m'], 2)
        self.assertEqual(rep['params']['d'], 2)
        self.assertGreaterEqual(rep['estimate'], 0.)
        self.assert_schema(rep)
        self.assertNotIn('space', rep)

    def test_independence_space_table(self):
        stream = self.write('pairs.txt', '1 1\n2 2\n')
        ret, _ = self.run_main(['independence', '--stream', stream, '--q', '2', '--space', '-o', self.out])
        self.assertEqual(ret, 0)
        rows = json.loads(self.read_out())['space']
        self.assertEqual([r['mode'] for r in rows], [1, 2])
        for r in rows:
            self.assertEqual(r['P_accumulators'], r['S'] * (1 if r['mode'] == 1 else rows[0]['t']))

    def test_independence_csv(self):
        stream = self.write('pairs.txt', '1 1\n2 2\n1 2 3\n')
        ret, _ = self.run_main(['independence', '--stream', stream, '--q', '2', '--format', 'csv',
                                '-o', self.out])
        self.assertEqual(ret, 0)
        lines = self.read_out().strip().split('\n')
        self.assertEqual(lines[0], ','.join(INDEPENDENCE_CSV))
        self.assertEqual(len(lines), 2)

    def test_exit_codes(self):
        bad = self.write('bad.txt', '1 1\n1 x\n')
        ret, err = self.run_main(['independence', '--stream', bad, '--q', '2'])
        self.assertEqual(ret, 3)
        self.assertIn('line 2', err)
        empty = self.write('empty.txt', '# nothing\n')
        self.assertEqual(self.run_main(['independence', '--stream', empty, '--q', '2'])[0], 4)
        missing = os.path.join(self.tmp.name, 'missing.txt')
        self.assertEqual(self.run_main(['independence', '--stream', missing, '--q', '2'])[0], 2)
        self.assertEqual(self.run_main(['independence', '--stream', empty])[0], 2)
        self.assertEqual(self.run_main(['suite', '--only', 'nope'])[0], 2)

    def test_version(self):
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            self.assertEqual(main(['--version']), 0)
        self.assertIn(inaL1Sketch.__version__, out.getvalue())

    def test_subspace_identity(self):
        mat = os.path.join(self.tmp.name, 'a.csv')
        write_matrix(mat, np.arange(16.).reshape(4, 4) + np.eye(4))
        ret, _ = self.run_main(['subspace', '-i', mat, '--sketch', 'identity', '-o', self.out])
        self.assertEqual(ret, 0)
        rep = json.loads(self.read_out())
        self.assertEqual(rep['report']['median_ratio'], 1.)
        self.assertEqual(rep['shape'], [4, 4])

    def test_subspace_reproducible(self):
        mat = os.path.join(self.tmp.name, 'a.bin')
        write_matrix(mat, np.random.default_rng(0).standard_normal((200, 3)))
        sketched = os.path.join(self.tmp.name, 'sa.csv')
        argv = ['subspace', '-i', mat, '--N', '256', '--directions', '10', '--seed', '4',
                '--sketched', sketched, '-o', self.out]
        self.assertEqual(self.run_main(argv)[0], 0)
        first = self.read_out()
        self.assertEqual(self.run_main(argv)[0], 0)
        self.assertEqual(first, self.read_out())
        rep = json.loads(first)
        self.assertEqual(rep['descriptor']['type'], 'msketch')
        self.assertEqual(rep['shape'], [8 + 256, 3])
        self.assertTrue(os.path.exists(sketched))

    def test_env_seed(self):
        mat = os.path.join(self.tmp.name, 'a.csv')
        write_matrix(mat, np.eye(3))
        with mock.patch.dict(os.environ, {'L1SKETCH_SEED': '5'}):
            self.run_main(['subspace', '-i', mat, '--N', '16', '--seed', '1', '-o', self.out])
        self.assertEqual(json.loads(self.read_out())['seed'], 5)

    def test_entrywise(self):
        mat = os.path.join(self.tmp.name, 'a.csv')
        write_matrix(mat, np.random.default_rng(1).standard_normal((64, 2)))
        self.assertEqual(self.run_main(['entrywise', '-i', mat, '-o', self.out])[0], 0)
        rep = json.loads(self.read_out())
        self.assertGreater(rep['estimate'], 0.)
        self.assertEqual(rep['descriptor']['type'], 'entrywise')

    def test_estimate_l1(self):
        stream = self.write('updates.txt', '1 5\n3 -2\n1 1\n8 4\n')
        ret, _ = self.run_main(['estimate-l1', '--stream', stream, '--epsilon', '.2', '-o', self.out])
        self.assertEqual(ret, 0)
        rep = json.loads(self.read_out())
        self.assertEqual(rep['oracle'], 12.)
        self.assertEqual(rep['N'], 8)
        self.assertGreater(rep['M_hat'], 0.)

    def test_bench_iid(self):
        ret, _ = self.run_main(['bench-iid', '--p', '3', '--n', '2000', '--d', '2', '--r', '200',
                                '--trials', '2', '-o', self.out])
        self.assertEqual(ret, 0)
        lines = self.read_out().strip().split('\n')
        self.assertTrue(lines[0].startswith('trial,'))
        self.assertEqual(len(lines), 3)
        ret, _ = self.run_main(['bench-iid', '--p', '3', '--n', '2000', '--d', '2', '--r', '200',
                                '--trials', '2', '--format', 'json', '-o', self.out])
        self.assertEqual(ret, 0)
        rep = json.loads(self.read_out())
        self.assert_schema(rep)
        self.assertEqual(rep['command'], 'bench-iid')
        self.assertEqual(rep['params']['r'], 200)
        self.assertEqual([r['trial'] for r in rep['rows']], [0, 1])

    def test_suite(self):
        ret, _ = self.run_main(['suite', '--only', 'no-expansion', '--quick', '-o', self.out])
        self.assertEqual(ret, 0)
        rep = json.loads(self.read_out())
        self.assert_schema(rep)
        self.assertTrue(rep['passed'])
        self.assertEqual(set(r['suite'] for r in rep['rows']), {'no-expansion'})
