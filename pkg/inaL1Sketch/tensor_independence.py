#!/usr/bin/env python
# encoding: utf-8

# The MIT License
# Copyright (c) 2024 Ina (http://www.ina.fr/)
# See the LICENSE file distributed with this work for the full license text.

"""
Streaming independence testing with a tower of tensor-product sketches.

A stream of tuples (i_1, ..., i_q) in [d]^q defines a joint frequency
tensor P^f (m samples) and the product of its marginals Q^f. The distance
||P - Q||_1 is estimated from the sketch of m^q (P - Q).

Each mode i owns R_i subsampling heavy hitter structures over [d]. Their
hash tables define a sparse matrix M_i with S_i = R_i (L_hat+1) R_hh B rows
(one row per bucket). The sketch of the joint tensor is
Pi^(q) P^f = (M_q x ... x M_1) P^f, whose buckets at mode i hold length
t_{i-1} = S_1 ... S_{i-1} sketches of mode i-1. Marginal structures share
the same hashes with scalar buckets, and their tensorization gives
Pi^(q) Q^f without ever visiting [d]^q.

Decoding runs the subsampled recovery at mode q, the value of each bucket
being the recursive decode of its payload at mode q-1.

>>> from inaL1Sketch.numerics import Rng
>>> from inaL1Sketch.tensor_independence import build_tensor_state
>>> state = build_tensor_state(Rng(0), q=2, d=4, eps=.3)
>>> state.update((0, 1))
>>> state.update((1, 1))
>>> state.estimate_tvd() >= 0
True
"""

import math
from typing import NamedTuple

import numpy as np
import pandas as pd
import scipy.sparse as sp

from .heavy_hitter import ExactBase
from .l1_estimator import SubsamplingHHState, shh_sketch, build_rough_sketch

#: accumulator count above which a tower is not built
MAX_ACCUMULATORS = 2 ** 25


class StreamParseError(ValueError):
    """
    Malformed stream line, carries the 1-based line number
    """
    def __init__(self, lineno, line, reason):
        self.lineno = lineno
        super().__init__('line %d: %s (%r)' % (lineno, reason, line.strip()))


class StreamUpdate(NamedTuple):
    indices : tuple
    delta : int = 1


class ModeSchedule(NamedTuple):
    """
    Per mode parameters of the tower, lists are indexed by mode - 1
    """
    q : int
    d : int
    #: eps_q = eps, eps_i = alpha eps_{i+1}
    eps : tuple
    delta : tuple
    #: log(K d / eps_i)
    L : tuple
    #: ratio assumed by sub-decodes, 4^(q^2) log(d)^q rounded to a power of 2
    K : int
    #: repetitions per mode
    R : tuple
    alpha : float
    #: schedule exponent
    c : float
    #: log2 of (L_i/eps_i)^c t_{i-1} log K log(K/delta_i), t_0 = 1
    log2_t_formula : tuple


def mode_schedule(q, d, eps, delta=.1, alpha=.5, c=4, reps=3, K=None):
    """
    Per mode accuracy, failure probability and sketch length recursion.

    Args:
        q (int): number of modes
        d (int): alphabet size of each mode
        eps (float): top-level accuracy
        delta (float): top-level failure probability, lower modes use
            delta_i = min(delta, (L_i/eps_i)^-c)
        alpha (float): accuracy ratio between consecutive modes
        c (float): schedule exponent, c >= 4
        reps (int or sequence): repetitions R_i, a fixed 3 per mode by default
            rather than an odd ceil(c ln(1/delta_i))
        K (int, optional): ratio assumed by sub-decodes

    Returns:
        :class:`ModeSchedule`
    """
    if q < 1 or d < 2:
        raise ValueError('tensor sketch requires q >= 1 and d >= 2, got q=%s d=%s' % (q, d))
    if not 0 < eps < 1 or not 0 < delta < 1:
        raise ValueError('eps=%s and delta=%s should be in (0, 1)' % (eps, delta))
    if not 0 < alpha < 1:
        raise ValueError('alpha=%s should be in (0, 1)' % alpha)
    if K is None:
        K = 2 ** math.ceil(2 * q * q + q * math.log2(max(math.log2(d), 1.)))
    if K < 2 or K & (K - 1):
        raise ValueError('K=%s should be a power of 2, K >= 2' % K)
    if isinstance(reps, int):
        reps = (reps,) * q
    if len(reps) != q or min(reps) < 1:
        raise ValueError('expected %d positive repetition counts, got %s' % (q, reps))
    epsl = [eps * alpha ** (q - 1 - i) for i in range(q)]
    L = [max(1, math.ceil(math.log2(K * d / e))) for e in epsl]
    deltal = [min(delta, (L[i] / epsl[i]) ** -c) for i in range(q - 1)] + [delta]
    logt = []
    acc = 0.
    for i in range(q):
        acc += c * math.log2(L[i] / epsl[i]) + math.log2(math.log2(K)) + math.log2(math.log2(K / deltal[i]))
        logt.append(acc)
    return ModeSchedule(q, d, tuple(epsl), tuple(deltal), tuple(L), int(K), tuple(int(r) for r in reps),
                        alpha, c, tuple(logt))


def mode_matrix(sketches):
    """
    Sparse S x d matrix of the structures of one mode. Row
    ((r (L_hat+1) + l) R_hh + h) B + b is bucket b of repetition h of level l
    of structure r, and coordinate x contributes its sign to the rows of every
    level l <= level(x).
    """
    c = sketches[0].config
    levels = c.L_hat + 1
    rows, cols, vals = [], [], []
    for r, sk in enumerate(sketches):
        for l in range(levels):
            items = sk.members[l]
            for h in range(c.R_hh):
                rows.append(((r * levels + l) * c.R_hh + h) * c.B + sk.hh[l].bucket_of[h, items])
                cols.append(items)
                vals.append(sk.hh[l].sign_of[h, items])
    S = len(sketches) * levels * c.R_hh * c.B
    return sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(S, c.N))


class TensorIndependenceState:
    """
    Joint sketch tower, marginal structures and rough sketch of a stream
    over [d]^q
    """
    def __init__(self, schedule, sketches, q_states, rough, max_accumulators=MAX_ACCUMULATORS):
        self.schedule = schedule
        self.q = schedule.q
        self.d = schedule.d
        #: sketches[i][r]: structure r of mode i + 1, payload length t_i
        self.sketches = sketches
        #: marginal structures, same hashes with scalar payloads
        self.q_states = q_states
        self.matrices = [mode_matrix(lst) for lst in sketches]
        self.S = [M.shape[0] for M in self.matrices]
        self.t = [1]
        for s in self.S:
            self.t.append(self.t[-1] * s)
        assert self.t[-1] <= max_accumulators
        self.P = np.zeros(self.t[-1])
        self.marginals = np.zeros((self.q, self.d))
        self.rough = rough
        self.m = 0
        self.n_updates = 0
        self.ended = False
        self.last_M_hat = None

    def _check(self, indices):
        idx = tuple(int(i) for i in indices)
        if len(idx) != self.q:
            raise ValueError('tuple of length %d, stream has %d modes' % (len(idx), self.q))
        for i in idx:
            if not 0 <= i < self.d:
                raise IndexError('index %d out of range [0, %d)' % (i, self.d))
        return idx

    def _check_open(self):
        if self.ended:
            raise RuntimeError('update after end_stream')

    def flat_index(self, idx):
        """
        Position of a tuple in the flattened [d]^q tensor, i_q major
        """
        return sum(i * self.d ** k for k, i in enumerate(idx))

    def update_P(self, indices, delta=1):
        """
        Add delta Pi^(q) (e_{i_1} x ... x e_{i_q}) to the joint sketch. The
        touched positions are the mixed radix combinations sum slot_i t_{i-1}
        of the buckets receiving i_i at each mode.
        """
        self._check_open()
        idx = self._check(indices)
        pos = np.zeros(1, dtype=np.int64)
        val = np.full(1, float(delta))
        for k, i in enumerate(idx):
            M = self.matrices[k]
            col = slice(M.indptr[i], M.indptr[i + 1])
            slots = M.indices[col].astype(np.int64)
            pos = (slots[:, None] * self.t[k] + pos[None, :]).ravel()
            val = (M.data[col][:, None] * val[None, :]).ravel()
        self.P[pos] += val
        self.rough.update(self.flat_index(idx), delta)

    def update_Q(self, indices, delta=1):
        """
        Add delta to the marginal structures of every mode
        """
        self._check_open()
        idx = self._check(indices)
        for k, i in enumerate(idx):
            self.marginals[k, i] += delta
            for st in self.q_states[k]:
                st.update(i, delta)

    def update(self, indices, delta=1):
        self.update_P(indices, delta)
        self.update_Q(indices, delta)
        self.m += delta
        self.n_updates += 1

    def ingest(self, tuples, deltas=None):
        """
        Process a batch of updates, duplicate tuples being aggregated first.

        Args:
            tuples (array): (n, q) indices
            deltas (array, optional): n increments, 1 by default
        """
        self._check_open()
        tuples = np.asarray(tuples, dtype=np.int64).reshape(-1, self.q)
        if len(tuples) == 0:
            return
        if tuples.min() < 0 or tuples.max() >= self.d:
            raise IndexError('index out of range [0, %d)' % self.d)
        deltas = np.ones(len(tuples)) if deltas is None else np.asarray(deltas, dtype=np.float64)
        uniq, inv = np.unique(tuples, axis=0, return_inverse=True)
        agg = np.bincount(inv.ravel(), weights=deltas, minlength=len(uniq))
        for idx, delta in zip(uniq, agg):
            if delta != 0:
                self.update_P(idx, delta)
        for k in range(self.q):
            np.add.at(self.marginals[k], tuples[:, k], deltas)
            for st in self.q_states[k]:
                st.update_many(tuples[:, k], deltas)
        self.m += int(round(deltas.sum()))
        self.n_updates += len(tuples)

    def end_stream(self):
        self.ended = True

    def marginal_vector(self, mode):
        """
        Scalar buckets of a mode, in the row order of its matrix
        """
        return np.concatenate([st.data.ravel() for st in self.q_states[mode - 1]])

    def tensorize_Q(self):
        """
        Pi^(q) Q^f built from the marginal buckets: v^(1) is the mode 1
        vector, v^(i) = kron(mode i vector, v^(i-1))
        """
        if not self.ended:
            raise RuntimeError('tensorize_Q called before end_stream')
        if self.n_updates == 0:
            raise RuntimeError('tensorize_Q called on an empty stream')
        v = self.marginal_vector(1)
        for mode in range(2, self.q + 1):
            v = np.kron(self.marginal_vector(mode), v)
        return v

    def operator_matrix(self, mode=None):
        """
        Explicit Pi^(mode) = M_mode x ... x M_1 as a scipy.sparse matrix,
        columns follow :meth:`flat_index`
        """
        mode = self.q if mode is None else mode
        ret = self.matrices[0].tocsr()
        for k in range(1, mode):
            ret = sp.kron(self.matrices[k], ret, format='csr')
        return ret

    def product_tensor(self):
        """
        Flattened Q^f = P_1^f x ... x P_q^f
        """
        v = self.marginals[0]
        for k in range(1, self.q):
            v = np.kron(self.marginals[k], v)
        return v

    def combined_sketch(self):
        """
        Sketch of m^q (P - Q): m^(q-1) Pi P^f - Pi Q^f
        """
        return float(self.m) ** (self.q - 1) * self.P - self.tensorize_Q()

    def rough_estimate(self, chunk=2 ** 16):
        """
        M_hat with ||m^q (P - Q)||_1 <= M_hat <= 3 ||m^q (P - Q)||_1 w.h.p.
        The Cauchy columns of Q^f are evaluated chunk by chunk.
        """
        qf = self.product_tensor()
        acc = float(self.m) ** (self.q - 1) * self.rough.acc
        for start in range(0, len(qf), chunk):
            part = qf[start:start + chunk]
            nz = np.flatnonzero(part)
            if len(nz):
                acc = acc - self.rough.columns(nz + start) @ part[nz]
        return self.rough.estimate(acc)

    def decode(self, vectors, mode, M_hat, K=None):
        """
        Recursive decoding of a batch of mode sketches.

        Args:
            vectors (numpy.ndarray): (n, t_mode) sketches
            mode (int): 1..q
            M_hat (float): rough estimate shared by every level. Sub-decodes of
                lower modes reuse this top-level M_hat as their window scale
            K (int, optional): ratio used by the mode recovery, defaults to
                the schedule K. Lower modes always use the schedule K.

        Returns:
            array of n estimates, median over the structures of the mode
        """
        assert 1 <= mode <= self.q
        vectors = np.asarray(vectors, dtype=np.float64)
        n = vectors.shape[0]
        sk0 = self.sketches[mode - 1][0]
        c = sk0.config
        tprev = self.t[mode - 1]
        batch = vectors.reshape(n, len(self.sketches[mode - 1]), c.L_hat + 1, c.R_hh, c.B, tprev)
        if mode == 1:
            recover = None
        else:
            def recover(payloads):
                flat = payloads.reshape(-1, tprev)
                return self.decode(flat, mode - 1, M_hat).reshape(payloads.shape[:-1])
        totals = [sk.recover_batch(batch[:, r], M_hat, recover, K)[0]
                  for r, sk in enumerate(self.sketches[mode - 1])]
        return np.median(np.stack(totals), axis=0)

    def estimate_tvd(self, K_grid=(2, 4)):
        """
        Estimate of ||P - Q||_1 for the normalized distributions: max over
        K_grid of the top-level decode of m^q (P - Q), divided by m^q
        """
        if self.m == 0:
            raise ValueError('estimate requires a non empty stream, m = 0')
        self.end_stream()
        z = self.combined_sketch()
        M_hat = self.rough_estimate()
        self.last_M_hat = M_hat
        if M_hat <= 0:
            return 0.
        est = max(float(self.decode(z[None], self.q, M_hat, K)[0]) for K in K_grid)
        return est / float(self.m) ** self.q

    @property
    def structure_count(self):
        """
        sum over modes of R_i (L_hat + 1)
        """
        return sum(len(lst) * (lst[0].config.L_hat + 1) for lst in self.sketches)

    def space_accounting(self):
        """
        Per mode accumulator counts and schedule values.

        Returns:
            pandas.DataFrame, one row per mode. P accumulators of mode i are
            R_i (L_hat+1) R_hh B t_{i-1}, the last one is the joint sketch
            length. Q accumulators of mode i are S_i.
        """
        rows = []
        sc = self.schedule
        for k, lst in enumerate(self.sketches):
            c = lst[0].config
            rows.append({'mode': k + 1, 'eps': sc.eps[k], 'delta': sc.delta[k], 'L': sc.L[k],
                         'R': len(lst), 'levels': c.L_hat + 1, 'R_hh': c.R_hh, 'B': c.B,
                         'S': self.S[k], 't': self.t[k + 1], 'P_accumulators': self.S[k] * self.t[k],
                         'Q_accumulators': self.S[k], 'log2_t_formula': sc.log2_t_formula[k]})
        return pd.DataFrame(rows)


def build_tensor_state(rng, q, d, eps, delta=.1, K=None, reps=3, R_hh=3, B=None, alpha=.5, c=4,
                       max_accumulators=MAX_ACCUMULATORS, rough_zeta=.01):
    """
    Build an empty tower.

    Args:
        rng (:class:`~inaL1Sketch.numerics.Rng`): random stream, structure r
            of mode i draws from rng.derive(i, r)
        q (int): number of modes
        d (int): alphabet size
        eps (float): accuracy
        delta (float): failure probability
        K (int, optional): ratio assumed by sub-decodes
        reps (int or sequence): structures per mode
        R_hh (int): repetitions inside each heavy hitter structure
        B (int, optional): buckets per heavy hitter repetition, 4 d by default
        alpha (float): accuracy ratio between modes
        c (float): schedule exponent
        max_accumulators (int): largest joint sketch length allowed
        rough_zeta (float): failure probability of the rough sketch

    Raises:
        OverflowError: when the joint sketch length t_q exceeds max_accumulators
    """
    schedule = mode_schedule(q, d, eps, delta, alpha, c, reps, K)
    B = 4 * d if B is None else int(B)
    levels = (math.ceil(math.log2(d)) if d > 1 else 0) + 1
    tq = 1
    for R in schedule.R:
        tq *= R * levels * R_hh * B
    if tq > max_accumulators:
        raise OverflowError('joint sketch length t_q=%d exceeds max_accumulators=%d' % (tq, max_accumulators))
    sketches, q_states = [], []
    tprev = 1
    for i in range(q):
        kw = dict(B=B, R_hh=R_hh, alpha=alpha)
        lst = [shh_sketch(rng.derive(i + 1, r), schedule.eps[i], schedule.K, d, ExactBase(tprev), **kw)
               for r in range(schedule.R[i])]
        mirror = [shh_sketch(rng.derive(i + 1, r), schedule.eps[i], schedule.K, d, **kw)
                  for r in range(schedule.R[i])]
        for sk, mi in zip(lst, mirror):
            assert np.array_equal(sk.level_of, mi.level_of) and sk.zeta == mi.zeta
            for hp, hq in zip(sk.hh, mi.hh):
                assert np.array_equal(hp.bucket_of, hq.bucket_of) and np.array_equal(hp.sign_of, hq.sign_of)
        sketches.append(lst)
        q_states.append([SubsamplingHHState(mi) for mi in mirror])
        tprev *= len(lst) * levels * R_hh * B
    rough = build_rough_sketch(rng.derive(0), d ** q, rough_zeta)
    return TensorIndependenceState(schedule, sketches, q_states, rough, max_accumulators)


def update_P(state, u):
    state.update_P(u.indices, u.delta)


def update_Q(state, u):
    state.update_Q(u.indices, u.delta)


def tensorize_Q(state):
    return state.tensorize_Q()


def decode(state, mode, vector, M_hat, K=None):
    """
    Decode a single mode sketch of length t_mode
    """
    return float(state.decode(np.asarray(vector)[None], mode, M_hat, K)[0])


def estimate_tvd(state, K_grid=(2, 4)):
    return state.estimate_tvd(K_grid)


def read_stream(lines, q, index_base=1):
    """
    Parse "i_1 ... i_q [delta]" lines, indices counted from index_base
    (1 for the alphabet {1..d}). Blank lines and lines starting with
    '#' are skipped.

    Args:
        lines (iterable of str): file object or list of lines
        q (int): number of modes

    Returns:
        (tuples (n, q) int64 array, deltas (n,) int64 array)

    Raises:
        StreamParseError: malformed line
    """
    tuples, deltas = [], []
    for lineno, line in enumerate(lines, 1):
        s = line.strip()
        if not s or s.startswith('#'):
            continue
        tok = s.split()
        if len(tok) not in (q, q + 1):
            raise StreamParseError(lineno, line, 'expected %d or %d fields, got %d' % (q, q + 1, len(tok)))
        try:
            vals = [int(t) for t in tok]
        except ValueError:
            raise StreamParseError(lineno, line, 'non integer field')
        if min(vals[:q]) < index_base:
            raise StreamParseError(lineno, line, 'index below %d' % index_base)
        tuples.append([v - index_base for v in vals[:q]])
        deltas.append(vals[q] if len(vals) > q else 1)
    return np.array(tuples, dtype=np.int64).reshape(-1, q), np.array(deltas, dtype=np.int64)
