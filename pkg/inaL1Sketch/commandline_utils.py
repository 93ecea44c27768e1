#!/usr/bin/env python
# encoding: utf-8

# The MIT License
# Copyright (c) 2024 Ina (http://www.ina.fr/)
# See the LICENSE file distributed with this work for the full license text.

# Here are defined the argument parsers and the drivers of the ina_l1sketch
# command line program

import json
import sys
import time
from argparse import ArgumentParser, ArgumentDefaultsHelpFormatter

import numpy as np
import pandas as pd

import inaL1Sketch as il1
from .numerics import Rng, env_seed, read_matrix, write_matrix, l1_norm, l1_norm_matrix
from .subspace_embedding import calibrated_config, derive_constants, build_msketch, build_dense_cauchy
from .entrywise_embedding import (calibrated_entrywise, entrywise_constants, build_entrywise,
                                  entrywise_descriptor, estimate_entrywise_norm)
from .l1_estimator import shh_build, BoostedL1Estimator, build_rough_sketch
from .tensor_independence import build_tensor_state, read_stream, StreamParseError
from .oracle_harness import IdentityOp, empirical_distortion, exact_tvd, frequency_tensor
from .iid_design import plan_embedding, trial_ratios
from .acceptance_suite import SUITES, run_suite

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_EMPTY = 4

#: largest d^q for which the exact oracle is co-reported
ORACLE_CAP = 10 ** 6

INDEPENDENCE_CSV = ['estimate', 'oracle', 'm', 'q', 'd', 'eps', 'seed']

epilog = '''
inaL1Sketch %s. Every command is deterministic given --seed and its inputs.
The L1SKETCH_SEED environment variable overrides --seed.
Stream files hold one update per line, indices counted from 1.
''' % il1.__version__


class EmptyInput(Exception):
    pass


def new_parser(description):
    parser = ArgumentParser(description=description,
                            epilog=epilog,
                            formatter_class=ArgumentDefaultsHelpFormatter)
    parser.add_argument('--version', action='version', version='%(prog)s ' + il1.__version__)
    return parser


def add_common(parser, formats=('json', 'csv')):
    parser.add_argument('--seed', type=int, default=0,
                        help='master seed of every random draw, overridden by L1SKETCH_SEED')
    parser.add_argument('--format', choices=list(formats), default=formats[0], help='output format')
    parser.add_argument('-o', '--output', default=None, help='output path, standard output if omitted')


def add_calibration(parser, N=4096):
    g = parser.add_argument_group('calibrated constants')
    g.add_argument('--theoretical', action='store_true',
                   help='use the worst case constants instead of the calibrated ones')
    g.add_argument('--B', type=float, default=4., help='branching factor of the sampling rates')
    g.add_argument('--N0', type=int, default=8, help='buckets of the 0th level')
    g.add_argument('--N', type=int, default=N, help='buckets of every other level')
    g.add_argument('--h_max', type=int, default=None,
                   help='number of subsampled levels, 1 for subspace and ceil(log_B n) for entrywise by default')


def build_parser():
    parser = new_parser('inaL1Sketch: oblivious l1 sketches, streaming l1 estimation and independence testing')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('subspace', help='apply an l1 subspace embedding to a matrix and report its distortion',
                       formatter_class=ArgumentDefaultsHelpFormatter)
    p.add_argument('-i', '--input', required=True, help='matrix file (.csv, .txt or binary)')
    p.add_argument('--sketch', choices=['msketch', 'dense-cauchy', 'identity'], default='msketch')
    p.add_argument('--eps', type=float, default=.5)
    p.add_argument('--delta', type=float, default=.5)
    p.add_argument('--r', type=int, default=64, help='rows of the dense Cauchy embedding')
    p.add_argument('--directions', type=int, default=100)
    p.add_argument('--mode', choices=['gaussian', 'sparse', 'coordinate', 'net_tiny'], default='gaussian')
    p.add_argument('--sketched', default=None, help='path receiving the sketched matrix')
    add_calibration(p)
    add_common(p, ('json',))
    p.set_defaults(func=cmd_subspace)

    p = sub.add_parser('entrywise', help='estimate the entrywise l1 norm of a matrix',
                       formatter_class=ArgumentDefaultsHelpFormatter)
    p.add_argument('-i', '--input', required=True, help='matrix file (.csv, .txt or binary)')
    p.add_argument('--alpha', type=float, default=.5)
    p.add_argument('--delta', type=float, default=.5)
    add_calibration(p, 64)
    add_common(p, ('json',))
    p.set_defaults(func=cmd_entrywise)

    p = sub.add_parser('estimate-l1', help='(1 +/- eps) l1 norm of a turnstile stream of "i delta" lines',
                       formatter_class=ArgumentDefaultsHelpFormatter)
    p.add_argument('--stream', required=True, help='stream file')
    p.add_argument('--N', type=int, default=None, help='dimension, largest index by default')
    p.add_argument('--epsilon', '--eps', dest='eps', type=float, default=.2)
    p.add_argument('--K', type=int, default=4, help='largest ratio between the rough estimate and the norm')
    p.add_argument('--reps', type=int, default=1, help='repetitions per K, > 1 runs the boosted estimator')
    add_common(p, ('json',))
    p.set_defaults(func=cmd_estimate_l1)

    p = sub.add_parser('independence', help='estimate ||P - Q||_1 of a stream of tuples',
                       formatter_class=ArgumentDefaultsHelpFormatter)
    p.add_argument('--stream', required=True, help='stream file of "i_1 ... i_q [delta]" lines')
    p.add_argument('--q', type=int, required=True, help='number of modes')
    p.add_argument('--d', type=int, default=None, help='alphabet size, largest index by default')
    p.add_argument('--eps', type=float, default=.3)
    p.add_argument('--delta', type=float, default=.1)
    p.add_argument('--space', action='store_true', help='add the per mode accumulator table to the JSON report')
    add_common(p)
    p.set_defaults(func=cmd_independence)

    p = sub.add_parser('bench-iid', help='distortion of the i.i.d. power law design embeddings',
                       formatter_class=ArgumentDefaultsHelpFormatter)
    p.add_argument('--p', type=float, required=True, help='tail index')
    p.add_argument('--n', type=int, default=10 ** 5)
    p.add_argument('--d', type=int, default=4)
    p.add_argument('--r', type=int, default=None)
    p.add_argument('--trials', type=int, default=11)
    p.add_argument('--eps', type=float, default=.3)
    add_common(p, ('csv', 'json'))
    p.set_defaults(func=cmd_bench_iid)

    p = sub.add_parser('suite', help='run the Monte Carlo acceptance checks',
                       formatter_class=ArgumentDefaultsHelpFormatter)
    p.add_argument('--only', nargs='+', default=None, help='suite names among: ' + ', '.join(SUITES))
    p.add_argument('--quick', action='store_true', help='reduced sizes')
    p.add_argument('--verbose', action='store_true')
    add_common(p, ('json', 'csv'))
    p.set_defaults(func=cmd_suite)
    return parser


def write_output(args, obj):
    """
    Write a dict as sorted-key JSON or a DataFrame as CSV
    """
    if isinstance(obj, pd.DataFrame):
        txt = obj.to_csv(index=False) if args.format == 'csv' else \
            json.dumps(json.loads(obj.to_json(orient='records')), sort_keys=True, indent=2) + '\n'
    else:
        txt = json.dumps(obj, sort_keys=True, indent=2) + '\n'
    if args.output is None:
        sys.stdout.write(txt)
    else:
        with open(args.output, 'wt') as fid:
            fid.write(txt)


def cmd_subspace(args):
    A = read_matrix(args.input)
    n, d = A.shape
    rng = Rng(args.seed)
    if args.sketch == 'identity':
        op, desc = IdentityOp(n), {'type': 'identity', 'n': n}
    elif args.sketch == 'dense-cauchy':
        op = build_dense_cauchy(rng, args.r, n)
        desc = {'type': 'dense_cauchy', 'r': args.r, 'n': n, 'seed': op.seed, 'stream_id': op.stream_id}
    else:
        if args.theoretical:
            conf = derive_constants(n, d, args.eps, args.delta)
        else:
            conf = calibrated_config(n, d, args.B, args.N0, args.N, 1 if args.h_max is None else args.h_max,
                                     args.eps, args.delta)
        op = build_msketch(rng, conf)
        desc = op.descriptor()
    SA = op(A)
    if args.sketched:
        write_matrix(args.sketched, SA)
    rep = empirical_distortion(op, A, args.directions, args.mode, rng.derive(1))
    write_output(args, {'command': 'subspace', 'seed': args.seed, 'descriptor': desc,
                        'shape': [int(s) for s in np.shape(SA)], 'report': rep.to_dict()})
    return EXIT_OK


def cmd_entrywise(args):
    A = read_matrix(args.input)
    n, d = A.shape
    if args.theoretical:
        conf = entrywise_constants(n, d, args.alpha, args.delta)
    else:
        conf = calibrated_entrywise(n, d, args.B, args.N0, args.N, args.h_max, args.alpha, args.delta)
    op = build_entrywise(Rng(args.seed), conf)
    est = estimate_entrywise_norm(op, A)
    exact = l1_norm_matrix(A)
    write_output(args, {'command': 'entrywise', 'seed': args.seed, 'descriptor': entrywise_descriptor(op),
                        'estimate': est, 'oracle': exact, 'ratio': est / exact if exact else None})
    return EXIT_OK


def _read_stream(path, q):
    with open(path, 'rt') as fid:
        tuples, deltas = read_stream(fid, q)
    if len(tuples) == 0:
        raise EmptyInput('%s holds no update' % path)
    return tuples, deltas


def cmd_estimate_l1(args):
    tuples, deltas = _read_stream(args.stream, 1)
    items = tuples[:, 0]
    N = int(items.max()) + 1 if args.N is None else args.N
    if items.max() >= N:
        raise ValueError('index %d exceeds the dimension N=%d' % (items.max() + 1, N))
    # sketches are linear, the aggregated vector gives the streamed state
    x = np.bincount(items, weights=deltas.astype(np.float64), minlength=N)
    rng = Rng(args.seed)
    rough = build_rough_sketch(rng.derive(0), N)
    rough.load(x)
    M_hat = rough.estimate()
    if args.reps > 1:
        est = BoostedL1Estimator(rng.derive(1), args.eps, args.K, N, args.reps)
    else:
        est = shh_build(rng.derive(1), args.eps, args.K, N)
    est.load(x)
    value = est.estimate(M_hat) if M_hat > 0 else 0.
    write_output(args, {'command': 'estimate-l1', 'seed': args.seed, 'estimate': value, 'M_hat': M_hat,
                        'oracle': l1_norm(x), 'N': N, 'eps': args.eps, 'K': args.K, 'm': len(items)})
    return EXIT_OK


def cmd_independence(args):
    tuples, deltas = _read_stream(args.stream, args.q)
    d = int(tuples.max()) + 1 if args.d is None else args.d
    if tuples.max() >= d:
        raise ValueError('index %d exceeds the alphabet size d=%d' % (tuples.max() + 1, d))
    start = time.time()
    state = build_tensor_state(Rng(args.seed), args.q, max(d, 2), args.eps, args.delta)
    state.ingest(tuples, deltas)
    if state.m == 0:
        raise EmptyInput('stream updates sum to m = 0')
    est = state.estimate_tvd()
    space = {'space': json.loads(state.space_accounting().to_json(orient='records'))} if args.space else {}
    elapsed = int(round(1000 * (time.time() - start)))
    oracle = None
    if max(d, 2) ** args.q <= ORACLE_CAP:
        oracle = exact_tvd(frequency_tensor(tuples, max(d, 2), deltas))
    if args.format == 'csv':
        write_output(args, pd.DataFrame([[est, oracle, state.m, args.q, d, args.eps, args.seed]],
                                        columns=INDEPENDENCE_CSV))
    else:
        write_output(args, {'command': 'independence', 'estimate': est, 'oracle': oracle, 'm': int(state.m),
                            'params': {'q': args.q, 'd': d, 'eps': args.eps, 'delta': args.delta,
                                       'seed': args.seed},
                            'elapsed_ms': elapsed, **space})
    return EXIT_OK


def cmd_bench_iid(args):
    plan = plan_embedding(args.p, args.n, args.d, args.r, args.eps)
    df = trial_ratios(args.p, args.n, args.d, plan.r, args.trials, Rng(args.seed), eps=args.eps)
    if args.format == 'csv':
        write_output(args, df)
    else:
        write_output(args, {'command': 'bench-iid',
                            'params': {'p': args.p, 'n': args.n, 'd': args.d, 'r': plan.r, 'method': plan.method,
                                       'trials': args.trials, 'eps': args.eps, 'seed': args.seed},
                            'rows': json.loads(df.to_json(orient='records'))})
    return EXIT_OK


def cmd_suite(args):
    if args.only:
        unknown = [s for s in args.only if s not in SUITES]
        if unknown:
            sys.stderr.write('unknown suite %s, available: %s\n' % (', '.join(unknown), ', '.join(SUITES)))
            return EXIT_USAGE
    df = run_suite(args.only, args.seed, args.quick, args.verbose)
    passed = bool(df.passed.all())
    if args.format == 'csv':
        write_output(args, df)
    else:
        write_output(args, {'command': 'suite', 'seed': args.seed, 'quick': args.quick, 'passed': passed,
                            'rows': json.loads(df.to_json(orient='records'))})
    return EXIT_OK if passed else EXIT_FAIL


def main(argv=None):
    """
    Parse arguments, run the command and map errors to exit codes:
    0 ok, 1 failed suite, 2 usage or io, 3 parse, 4 empty input
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    args.seed = env_seed(args.seed)
    try:
        return args.func(args)
    except StreamParseError as e:
        sys.stderr.write('%s: parse error %s\n' % (args.command, e))
        return EXIT_PARSE
    except EmptyInput as e:
        sys.stderr.write('%s: empty input, %s\n' % (args.command, e))
        return EXIT_EMPTY
    except (OSError, ValueError, OverflowError) as e:
        sys.stderr.write('%s: %s\n' % (args.command, e))
        return EXIT_USAGE
