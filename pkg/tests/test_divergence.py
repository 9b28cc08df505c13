from __future__ import annotations

import math
from dataclasses import replace
from decimal import Decimal, localcontext

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergolab.blockseq import Classification, PerturbedBlockSequence
from ergolab.divergence import (EPS_LADDER, K0, ConstructionOptions, GsFunction, Membership,
                                choose_eps_s, construct_divergent_sequence,
                                divergence_precondition_check, example_c_k,
                                example_criterion_series, example_s_k, fit_prefix_mean_exponent,
                                gs_eval, gs_prefix_mean, membership_exponent_classifier,
                                schedule_from_example, schedule_from_sequences,
                                stage_inequality_check, trimmed_arc)
from ergolab.errors import DomainError, ScheduleDegenerate, StageFailed
from ergolab.numerics import MonotoneFunction, constant, integrate_monotone, power
from ergolab.rotation import ONE, RotationSystem

GOLDEN = RotationSystem.golden()


def gs_decimal(s, x):
    # direct evaluation of the g_s formula at 40 digits
    with localcontext() as ctx:
        ctx.prec = 40
        x = Decimal(x)
        L = (Decimal(2) / x).ln()
        LL = L.ln()
        s1 = Decimal(s) + 1
        den = (x / 2) * (L.ln() * s1).exp() * (LL.ln() * s1).exp()
        return float((LL + 1) / den)


@pytest.fixture(scope="module")
def g_half():
    return GsFunction.make(0.5)


@pytest.fixture(scope="module")
def stage16(g_half):
    f = g_half.as_monotone()
    sched = schedule_from_example(0.5, K0, f)
    seq, reps = construct_divergent_sequence(GOLDEN, f, sched, K0)
    return f, sched, seq, reps


class TestGs:
    def test_reference_value(self):
        g = GsFunction.make(1.0)
        assert gs_eval(g, 0.01) == pytest.approx(gs_decimal(1.0, 0.01), rel=1e-13)
        assert gs_eval(g, 0.01) == pytest.approx(6.835439523603538, rel=1e-13)

    def test_zero_beyond_support(self):
        g = GsFunction.make(1.0)
        assert gs_eval(g, g.eps_s * 1.01) == 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            gs_eval(GsFunction.make(1.0), 0.0)

    @pytest.mark.parametrize("s,eps", [(0.25, EPS_LADDER[0]), (0.5, EPS_LADDER[0]), (1.0, 1e-2),
                                       (2.0, 1e-2), (3.0, 1e-3), (4.0, 1e-3)])
    def test_eps_picks(self, s, eps):
        assert choose_eps_s(s) == eps
        assert math.log(math.log(2 / eps)) > 0

    @settings(max_examples=50)
    @given(st.sampled_from([0.25, 0.5, 1.0, 2.0, 3.0]), st.floats(1e-12, 1.0), st.floats(1e-12, 1.0))
    def test_monotone(self, s, u, v):
        g = GsFunction.make(s)
        x1, x2 = sorted((u * g.eps_s, v * g.eps_s))
        assert gs_eval(g, x1) >= gs_eval(g, x2) >= 0

    @given(st.sampled_from([0.5, 1.0, 2.0]), st.floats(1e-8, 1.0))
    def test_matches_decimal_formula(self, s, u):
        g = GsFunction.make(s)
        x = u * g.eps_s
        assert gs_eval(g, x) == pytest.approx(gs_decimal(s, x), rel=1e-11)

    @pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
    def test_primitive_derivative(self, s):
        g = GsFunction.make(s)
        mono = g.as_monotone()
        for x in np.geomspace(1e-6, 0.9, 7) * g.eps_s:
            h = x * 1e-5
            deriv = (mono.primitive(x + h) - mono.primitive(x - h)) / (2 * h)
            assert deriv == pytest.approx(gs_eval(g, x), rel=1e-6)

    @pytest.mark.parametrize("s,lam", [(0.5, 0.05), (1.0, 0.005), (2.0, 0.001)])
    def test_prefix_mean_against_quadrature(self, s, lam):
        g = GsFunction.make(s)
        m = g.as_monotone()
        bare = MonotoneFunction(m.evaluator, support_right_endpoint=m.support_right_endpoint,
                                declared_convex=True)
        # the tail below 1e-300 is closed by the primitive itself; compare on [1e-12, lam]
        part = integrate_monotone(bare, 1e-12, lam, 1e-9).value
        closed = gs_prefix_mean(g, lam) * lam - m.primitive(1e-12)
        assert part == pytest.approx(closed, rel=1e-7)

    def test_prefix_mean_scaling_exponent(self):
        # mean ~ C / (lam (log(2/lam) loglog(2/lam))^s): slope near -1
        g = GsFunction.make(1.0)
        slope = fit_prefix_mean_exponent(g.as_monotone(), np.geomspace(1e-8, 1e-4, 6))
        assert -1.0 < slope < -0.85


class TestSchedule:
    def test_example_values(self):
        assert example_s_k(1.0, 100) == pytest.approx(65.48018, rel=1e-6)
        assert example_c_k(1.0, 100) == pytest.approx(0.0233228, rel=1e-5)

    @given(st.sampled_from([0.5, 1.0, 2.0]), st.integers(16, 10**5))
    def test_product_identity(self, s, k):
        assert example_c_k(s, k) * example_s_k(s, k) == pytest.approx(math.log(math.log(k)), rel=1e-12)

    def test_arcs_chain(self, g_half):
        sched = schedule_from_example(0.5, 40, g_half.as_monotone())
        for k in range(K0, 41):
            J_prev, J_k = sched.J(k - 1), sched.J(k)
            assert J_prev.end == J_k.start
            assert abs(J_k.length - sched.a_at(k + 1)) <= 2.0 ** -100
        assert sched.delta_at(20) == pytest.approx(sched.a_at(21) / 10)
        assert all(b > a for a, b in zip(sched.s, sched.s[1:]))

    def test_precondition_gs(self, g_half):
        sched = schedule_from_example(0.5, 200, g_half.as_monotone())
        rep = divergence_precondition_check(g_half.as_monotone(), sched)
        assert rep.pointwise_ok and rep.diverging_evidence and rep.failures == []

    def test_bounded_function_degenerate(self):
        with pytest.raises(ScheduleDegenerate):
            schedule_from_example(0.5, 30, constant(1.0))
        sched = schedule_from_example(0.5, 30, constant(1.0), allow_degenerate=True)
        rep = divergence_precondition_check(constant(1.0), sched)
        assert not rep.diverging_evidence

    def test_inverse_root_closed_form(self):
        K = 200
        s_vals = [float(k) for k in range(K0, K + 2)]
        sched = schedule_from_sequences(s_vals, [0.1] * len(s_vals), K0, power(0.5))
        for k in range(K0, K + 1):
            assert sched.a_at(k) == pytest.approx(min(1.0, 16 / k**2), abs=1e-9)
        assert not divergence_precondition_check(power(0.5), sched).diverging_evidence


class TestConstruction:
    def test_single_stage(self, stage16):
        f, sched, seq, reps = stage16
        assert len(seq.blocks) == 1 and seq.d[0] > 0
        assert reps[0].passed and reps[0].sample_points_checked == 100

    def test_single_stage_fresh_samples(self, stage16):
        f, sched, seq, _ = stage16
        assert stage_inequality_check(seq, GOLDEN, f, sched, K0, 100, seed=12345).passed

    def test_rounding(self, stage16):
        _, sched, seq, _ = stage16
        l, d = seq.l[0], seq.d[0]
        assert abs(d - sched.c_at(K0) * l) <= 0.5 and d % 2 == 0

    def test_budget_exhausted(self, g_half):
        f = g_half.as_monotone()
        sched = schedule_from_example(0.5, 18, f)
        with pytest.raises(StageFailed) as info:
            construct_divergent_sequence(GOLDEN, f, sched, 18, ConstructionOptions(max_total_elements=10))
        assert info.value.k == K0

    def test_sabotage_fails(self, stage16):
        # every element sends J_15 into (eps_s, 1) where g_s vanishes: the average is 0
        f, sched, _, _ = stage16
        J = sched.J(K0 - 1)
        eps = f.support_right_endpoint
        bad = []
        n = 1
        while len(bad) < 3:
            lo = (J.start.bits + n * GOLDEN.alpha.bits) % ONE
            hi = lo + J.length_bits
            if lo > eps * ONE and hi < ONE:
                bad.append(n)
            n += 1
        seq = PerturbedBlockSequence(((bad[0], 1),), ((bad[1], bad[2]),))
        rep = stage_inequality_check(seq, GOLDEN, f, sched, K0, 100)
        assert rep.lower_bound_lhs == 0.0 and rep.lower_bound_rhs > 0
        assert not rep.passed

    def test_trimmed_arc(self, stage16):
        _, sched, _, _ = stage16
        J = sched.J(K0 - 1)
        T = trimmed_arc(J, 0.01)
        assert T.length == pytest.approx(J.length - 0.01, abs=1e-15)
        assert trimmed_arc(J, 2.0).length_bits == 0


class TestClassifiers:
    @pytest.mark.parametrize("s,p,expect", [(2, 1, Membership.IN_SPACE), (0.5, 0.5, Membership.NOT_IN_SPACE),
                                            (1, 0.5, Membership.IN_SPACE), (2, 2, Membership.IN_SPACE),
                                            (1, 1, Membership.NOT_IN_SPACE)])
    def test_membership(self, s, p, expect):
        assert membership_exponent_classifier(s, p) is expect

    @pytest.mark.parametrize("s,p,expect", [(0.5, 1, Classification.CONVERGENT),
                                            (1, 1, Classification.DIVERGENT),
                                            (2, 1, Classification.DIVERGENT)])
    def test_series(self, s, p, expect):
        assert example_criterion_series(s, p, 10**4).classification is expect

    def test_series_partial_sums(self):
        rep = example_criterion_series(1.0, 2.0, 100)
        k = np.arange(16, 101, dtype=float)
        oracle = np.sum(np.log(np.log(k)) ** 3 / (k * np.log(k) ** 2))
        assert rep.partial_sums[-1] == pytest.approx(oracle, rel=1e-12)

    @given(st.floats(0.1, 4.0), st.floats(0.0, 4.0))
    def test_consistency(self, s, p):
        conv = example_criterion_series(s, p, 100).classification is Classification.CONVERGENT
        assert conv == (p > s)
        if conv:
            # convergent regime lies outside the space the construction targets
            assert membership_exponent_classifier(s, p) is Membership.NOT_IN_SPACE
