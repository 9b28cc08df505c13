"""Acceptance gate: each test is one criterion, with its tolerance and time budget."""

from __future__ import annotations

import itertools
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from ergolab.blockseq import (Classification, PerturbedBlockSequence, decompose_average,
                              elements_upto, perturbation_criterion)
from ergolab.divergence import (K0, GsFunction, construct_divergent_sequence,
                                divergence_precondition_check, example_c_k,
                                example_criterion_series, example_s_k, schedule_from_example)
from ergolab.levelset import (arc_overlap_bits, construct_witness, decompose_level_set,
                              grid_averages, level_set_from_averages, m_lambda, m_lambda_path,
                              sampled_minimum_average, verify_weak_bound)
from ergolab.numerics import constant, identity, power
from ergolab.orlicz import OrliczFunction, luxemburg_norm, membership_integral
from ergolab.rotation import (ONE, CircleArc, CirclePoint, RotationSystem, ergodic_average,
                              orbit_point)

GOLDEN = RotationSystem.golden()
F = power(0.5)
GRID = 10**5
LAMBDAS = [float(v) for v in np.geomspace(1.2, 20, 10)]


@pytest.mark.acceptance(1)
def test_weak_bound_suite():
    t0 = time.perf_counter()
    Ms = m_lambda_path(F, LAMBDAS)
    for N in (1, 10, 100):
        seq = list(range(N))
        avg = grid_averages(GOLDEN, F, seq, GRID)
        for lam, M in zip(LAMBDAS, Ms):
            assert M == pytest.approx(min(1.0, 4 / lam**2), abs=1e-9)
            lvl = level_set_from_averages(avg, lam)
            slack = 2 * (N + len(lvl.arcs)) / GRID
            assert lvl.outer_measure <= M + slack, (N, lam, lvl.outer_measure, M)
            chk = verify_weak_bound(GOLDEN, F, seq, lam, GRID, averages=avg, M=M)
            assert chk.holds
    assert time.perf_counter() - t0 < 30


@pytest.mark.acceptance(2)
def test_decomposition_suite():
    t0 = time.perf_counter()
    for N in (1, 2, 5):
        seq = list(range(N))
        for lam in LAMBDAS:
            res = decompose_level_set(GOLDEN, F, seq, lam, GRID)
            arcs = [a for a in res.s_arcs if a.length_bits > 0]
            for a, b in itertools.combinations(arcs, 2):
                assert arc_overlap_bits(a, b) == 0
            bound = 10 * (N + len(res.level_set.arcs)) / GRID
            assert res.symdiff_vs_levelset <= bound, (N, lam, res.symdiff_vs_levelset, bound)
    assert time.perf_counter() - t0 < 30


@pytest.mark.acceptance(3)
def test_witness_suite():
    t0 = time.perf_counter()
    lam = 2.0
    M = m_lambda(F, lam)
    assert M == 1.0
    for n_start in (1, 10**4):
        w = construct_witness(GOLDEN, F, lam, CircleArc.full(), 0.1, 1e-3, 1e-2, 1e-3,
                              n_start=n_start)
        assert w.certified_measure >= 0.9
        assert min(w.subsequence) >= n_start
        # twice the certification resolution (cells of beta/2, here steps of beta/4)
        again = sampled_minimum_average(GOLDEN, F, w.subsequence, w.certified_arc, w.beta / 4)
        assert again >= lam / 2 - 1e-9
        assert w.min_average_on_arc >= lam / 2 - 1e-9
    assert time.perf_counter() - t0 < 60


@pytest.mark.acceptance(4)
def test_example_family_identities():
    t0 = time.perf_counter()
    for s in (0.5, 1.0, 2.0):
        for k in range(16, 10**5 + 1):
            ll = math.log(math.log(k))
            assert abs(example_c_k(s, k) * example_s_k(s, k) - ll) <= 1e-12 * ll
    f = GsFunction.make(0.5).as_monotone()
    sched = schedule_from_example(0.5, 200, f)
    for k in range(16, 201):
        assert sched.a_at(k) >= 1 / (k * math.log(k)), k
    assert divergence_precondition_check(f, sched).pointwise_ok
    for s in (0.5, 1.0, 2.0):
        for p in (0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5):
            cls = example_criterion_series(s, p, 10**5).classification
            assert (cls is Classification.CONVERGENT) == (p > s), (s, p, cls)
    assert time.perf_counter() - t0 < 20


@pytest.mark.acceptance(5)
def test_construction_suite():
    t0 = time.perf_counter()
    f = GsFunction.make(0.5).as_monotone()
    sched = schedule_from_example(0.5, 20, f)
    seq, reports = construct_divergent_sequence(GOLDEN, f, sched, 20)
    assert [r.k for r in reports] == list(range(16, 21))
    for r in reports:
        assert r.passed and r.sample_points_checked == 100, r
    prev_l, prev_max = None, -1
    for i, ((start, l), d_set) in enumerate(zip(seq.blocks, seq.perturbations)):
        k = K0 + i
        if prev_l is not None:
            assert l >= k * prev_l
        assert start > prev_max and l > prev_max
        assert abs(Fraction(len(d_set)) - Fraction(sched.c_at(k)) * l) <= Fraction(1, 2)
        prev_l, prev_max = l, (d_set[-1] if d_set else start + l - 1)
    assert time.perf_counter() - t0 < 120


@pytest.mark.acceptance(6)
def test_criterion_suite():
    t0 = time.perf_counter()
    K = 30
    conv = perturbation_criterion(OrliczFunction.power(2), [2**k for k in range(1, K + 1)], [2] * K, K)
    assert conv.classification is Classification.CONVERGENT
    ks = list(range(1, K + 1))
    div = perturbation_criterion(OrliczFunction.power(1), ks, ks, K)
    assert div.classification is Classification.DIVERGENT
    rng = random.Random(7)
    blocks, perts, pos = [], [], 0
    for _ in range(40):
        l = rng.randint(1, 20)
        blocks.append((pos, l))
        pos += l
        gap = rng.randint(1, 15)
        perts.append(tuple(sorted(rng.sample(range(pos, pos + gap), rng.randint(0, gap)))))
        pos += gap
    seq = PerturbedBlockSequence(tuple(blocks), tuple(perts))
    f = identity()
    for _ in range(100):
        n = rng.randint(0, seq.max_element)
        x = CirclePoint(rng.getrandbits(128))
        els, _ = elements_upto(seq, n)
        dec = decompose_average(seq, GOLDEN, f, x, n)
        assert abs(dec.A_total - ergodic_average(GOLDEN, f, els, x)) <= 1e-12
        assert abs(dec.A_total - (float(dec.w_B) * dec.A_B + float(dec.w_D) * dec.A_D)) <= 1e-12
    assert time.perf_counter() - t0 < 10


@pytest.mark.acceptance(7)
def test_norm_suite():
    t0 = time.perf_counter()
    funcs = {"const": constant(1.7), "x^-1/4": power(0.25)}
    for p in (1.0, 2.0):
        phi = OrliczFunction.power(p)
        for name, f in funcs.items():
            # closed forms: 1.7 for the constant, (1 / (1 - p/4))^(1/p) for x^-1/4
            classical = 1.7 if name == "const" else (1 / (1 - p / 4)) ** (1 / p)
            norm = luxemburg_norm(phi, f)
            assert norm == pytest.approx(classical, rel=1e-6), (p, name)
    for phi in (OrliczFunction.power(2), OrliczFunction.llog(1)):
        for name, f in funcs.items():
            base = luxemburg_norm(phi, f)
            assert membership_integral(phi, f.scaled(1 / base), 1e-10).value <= 1 + 1e-6
            for c in (0.5, 2.0, 10.0):
                scaled = luxemburg_norm(phi, f.scaled(c))
                assert scaled == pytest.approx(c * base, rel=1e-6), (str(phi), name, c)
    assert time.perf_counter() - t0 < 10


@pytest.mark.acceptance(8)
def test_rotation_exactness():
    t0 = time.perf_counter()
    rng = random.Random(11)
    for _ in range(10**4):
        x = CirclePoint(rng.getrandbits(128))
        n, m = rng.getrandbits(62), rng.getrandbits(62)
        assert orbit_point(GOLDEN, x, n + m) == orbit_point(GOLDEN, orbit_point(GOLDEN, x, m), n)
    x0 = CirclePoint(rng.getrandbits(128))
    y = x0
    for _ in range(10**6):
        y = orbit_point(GOLDEN, y, 10**3)
    assert y == orbit_point(GOLDEN, x0, 10**9)
    avg = ergodic_average(GOLDEN, identity(), range(10**5), CirclePoint(0))
    assert abs(avg - 0.5) <= 1e-3
    assert time.perf_counter() - t0 < 10
